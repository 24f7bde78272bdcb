#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "flexagg/devices.hpp"

namespace flexagg {

struct DeviceRef {
  enum class Kind { pv, storage, load, hvac } kind = Kind::pv;
  int index = 0;
  bool operator==(const DeviceRef&) const = default;
};

/// One scalar of the per-step decision vector. Entries hold net injections;
/// the device-side power is power_sign * x (-1 for the load classes).
struct LayoutEntry {
  DeviceRef dev;
  std::string device_id;
  int bus = 0;
  ConnectionKind conn = ConnectionKind::wye;
  int slot = 0;
  bool is_q = false;
  double power_sign = 1.0;

  /// Row of this entry in the stacked 12N network injection vector.
  int network_row(int n_buses) const {
    const int base = (conn == ConnectionKind::wye ? 0 : 6 * n_buses) + (is_q ? 3 * n_buses : 0);
    return base + 3 * (bus - 1) + slot;
  }
};

/// Deterministic indexing of the per-step decision vector: wye entries
/// before delta entries, all active-power entries before reactive within
/// each group, each sorted by (bus, device id, slot).
struct InjectionLayout {
  int horizon = 0;
  double dt_hours = 1.0;
  std::vector<LayoutEntry> entries;

  int per_step() const { return static_cast<int>(entries.size()); }

  /// Stacked index of entry k at step t.
  int at(int t, int k) const { return t * per_step() + k; }

  int index_of(const std::string& device_id, int slot, bool is_q) const;

  /// Per-step columns of a device, p entries first.
  std::vector<int> device_columns(const DeviceRef& dev) const;
};

/// Throws Error("layout conflict") on duplicate device ids.
InjectionLayout build_layout(const Fleet& fleet, int horizon, double dt_hours);

}  // namespace flexagg
