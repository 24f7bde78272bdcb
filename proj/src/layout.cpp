#include "flexagg/layout.hpp"

#include <algorithm>
#include <set>

namespace flexagg {

namespace {

struct ProtoEntry {
  DeviceRef dev;
  const std::string* id;
  int bus;
  ConnectionKind conn;
  int slot;
  double power_sign;
};

}  // namespace

int InjectionLayout::index_of(const std::string& device_id, int slot, bool is_q) const {
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    if (e.is_q == is_q && e.slot == slot && e.device_id == device_id) return static_cast<int>(k);
  }
  throw Error("layout: no entry for device '" + device_id + "'");
}

std::vector<int> InjectionLayout::device_columns(const DeviceRef& dev) const {
  std::vector<int> p_cols, q_cols;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (!(entries[k].dev == dev)) continue;
    (entries[k].is_q ? q_cols : p_cols).push_back(static_cast<int>(k));
  }
  p_cols.insert(p_cols.end(), q_cols.begin(), q_cols.end());
  return p_cols;
}

InjectionLayout build_layout(const Fleet& fleet, int horizon, double dt_hours) {
  std::set<std::string> ids;
  auto claim = [&](const std::string& id) {
    if (!ids.insert(id).second) throw Error("layout conflict: duplicate device id '" + id + "'");
  };

  std::vector<ProtoEntry> protos;
  auto add_device = [&](DeviceRef dev, const std::string& id, int bus, const PhaseConnection& conn,
                        double power_sign) {
    claim(id);
    for (int s = 0; s < 3; ++s) {
      if (!conn.slots[static_cast<std::size_t>(s)]) continue;
      protos.push_back({dev, &id, bus, conn.kind, s, power_sign});
    }
  };
  for (std::size_t i = 0; i < fleet.pv.size(); ++i)
    add_device({DeviceRef::Kind::pv, static_cast<int>(i)}, fleet.pv[i].id, fleet.pv[i].bus,
               fleet.pv[i].conn, 1.0);
  for (std::size_t i = 0; i < fleet.storage.size(); ++i)
    add_device({DeviceRef::Kind::storage, static_cast<int>(i)}, fleet.storage[i].id,
               fleet.storage[i].bus, fleet.storage[i].conn, 1.0);
  for (std::size_t i = 0; i < fleet.loads.size(); ++i)
    add_device({DeviceRef::Kind::load, static_cast<int>(i)}, fleet.loads[i].id,
               fleet.loads[i].bus, fleet.loads[i].conn, -1.0);
  for (std::size_t i = 0; i < fleet.hvac.size(); ++i)
    add_device({DeviceRef::Kind::hvac, static_cast<int>(i)}, fleet.hvac[i].id, fleet.hvac[i].bus,
               fleet.hvac[i].conn, -1.0);

  auto order = [](const ProtoEntry& a, const ProtoEntry& b) {
    return std::tie(a.bus, *a.id, a.slot) < std::tie(b.bus, *b.id, b.slot);
  };
  std::stable_sort(protos.begin(), protos.end(), order);

  InjectionLayout layout;
  layout.horizon = horizon;
  layout.dt_hours = dt_hours;
  for (ConnectionKind kind : {ConnectionKind::wye, ConnectionKind::delta}) {
    for (bool is_q : {false, true}) {
      for (const auto& p : protos) {
        if (p.conn != kind) continue;
        LayoutEntry e;
        e.dev = p.dev;
        e.device_id = *p.id;
        e.bus = p.bus;
        e.conn = p.conn;
        e.slot = p.slot;
        e.is_q = is_q;
        e.power_sign = p.power_sign;
        layout.entries.push_back(std::move(e));
      }
    }
  }
  return layout;
}

}  // namespace flexagg
