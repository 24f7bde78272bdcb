#include "flexagg/compact.hpp"

#include <limits>

namespace flexagg {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* constraint_class_name(ConstraintClass cls) {
  switch (cls) {
    case ConstraintClass::voltage: return "voltage";
    case ConstraintClass::current: return "current";
    case ConstraintClass::device_box: return "device_box";
    case ConstraintClass::disk: return "disk";
    case ConstraintClass::pf_tie: return "pf_tie";
    case ConstraintClass::soc: return "soc";
    case ConstraintClass::comfort: return "comfort";
  }
  return "?";
}

double CompactModel::group_power(const std::vector<int>& cols, double sign,
                                 const Eigen::VectorXd& x_t) {
  double p = 0.0;
  for (int c : cols) p += x_t[c];
  return sign * p;
}

double CompactModel::substation_power(const Eigen::VectorXd& x_t, int t) const {
  if (x_t.size() != vars_per_step()) throw Error("layout mismatch");
  return (vars_per_step() ? p0_sens.dot(x_t) : 0.0) + p0_base[t];
}

Eigen::VectorXd CompactModel::network_x(const Eigen::VectorXd& x_t, int t) const {
  if (x_t.size() != vars_per_step()) throw Error("layout mismatch");
  Eigen::VectorXd x = background_x_pu.col(t);
  for (int k = 0; k < vars_per_step(); ++k)
    x[layout.entries[static_cast<std::size_t>(k)].network_row(lin.n_buses)] += x_t[k];
  return x;
}

CompactModel build_compact_model(const FeederModel& feeder, const LinearPfModel& lin,
                                 const Fleet& fleet_in, const Scenario& scenario) {
  const int horizon = scenario.steps;
  if (horizon <= 0) throw ParseError("scenario", "needs at least one step");

  // Resolve scenario-driven series into a fleet copy.
  Fleet fleet = fleet_in;
  for (auto& pv : fleet.pv) {
    auto it = scenario.pv_available.find(pv.id);
    if (it == scenario.pv_available.end()) continue;
    if (it->second.size() != horizon)
      throw ParseError("pv '" + pv.id + "'", "scenario length mismatch");
    pv.p_upper.resize(horizon, 3);
    pv.p_upper.setZero();
    const double share = 1.0 / pv.conn.count();
    for (int t = 0; t < horizon; ++t)
      for (int s = 0; s < 3; ++s)
        if (pv.conn.slots[static_cast<std::size_t>(s)]) pv.p_upper(t, s) = share * it->second[t];
  }
  for (auto& hv : fleet.hvac) {
    if (hv.f_out.size() != 0) continue;
    if (scenario.temperature_out_c.size() != horizon)
      throw ParseError("hvac '" + hv.id + "'", "scenario length mismatch");
    hv.f_out = scenario.temperature_out_c;
  }
  validate_fleet(fleet, horizon);

  for (const auto& bg : scenario.background) {
    if (bg.p.rows() != horizon || bg.q.rows() != horizon)
      throw ParseError("background bus " + std::to_string(bg.bus), "scenario length mismatch");
    if (bg.bus < 1 || bg.bus > feeder.n_buses)
      throw ParseError("background bus " + std::to_string(bg.bus), "bus id out of range");
  }

  auto check_phases = [&](const std::string& id, int bus, const PhaseConnection& conn) {
    if (bus < 1 || bus > feeder.n_buses)
      throw ParseError("device '" + id + "'", "bus id out of range");
    if (!feeder.supports(bus, conn)) throw ParseError("device '" + id + "'", "phase mismatch");
  };
  for (const auto& u : fleet.pv) check_phases(u.id, u.bus, u.conn);
  for (const auto& u : fleet.storage) check_phases(u.id, u.bus, u.conn);
  for (const auto& u : fleet.loads) check_phases(u.id, u.bus, u.conn);
  for (const auto& u : fleet.hvac) check_phases(u.id, u.bus, u.conn);

  CompactModel m;
  m.layout = build_layout(fleet, horizon, scenario.dt_hours);
  m.lin = lin;
  m.base_kva = feeder.base_kva;
  m.dt_hours = scenario.dt_hours;
  m.horizon = horizon;
  m.v_upper = feeder.v_upper;
  m.v_lower = feeder.v_lower;
  const int nl = static_cast<int>(feeder.lines.size());
  m.i_upper.resize(3 * nl);
  m.i_lower.resize(3 * nl);
  for (int l = 0; l < nl; ++l) {
    m.i_upper.segment<3>(3 * l) = feeder.lines[static_cast<std::size_t>(l)].i_upper;
    m.i_lower.segment<3>(3 * l) = feeder.lines[static_cast<std::size_t>(l)].i_lower;
  }

  const int n = m.layout.per_step();
  const Eigen::RowVectorXd p0_row = lin.p0_coeff.colwise().sum();

  m.v_sens.resize(3 * lin.n_buses, n);
  m.i_sens.resize(3 * nl, n);
  m.p0_sens.resize(n);
  for (int k = 0; k < n; ++k) {
    const int r = m.layout.entries[static_cast<std::size_t>(k)].network_row(lin.n_buses);
    m.v_sens.col(k) = lin.v_coeff.col(r);
    m.i_sens.col(k) = lin.i_coeff.col(r);
    m.p0_sens[k] = p0_row[r];
  }

  m.background_x_pu.resize(12 * lin.n_buses, horizon);
  m.v_base.resize(3 * lin.n_buses, horizon);
  m.i_base.resize(3 * nl, horizon);
  m.p0_base.resize(horizon);
  for (int t = 0; t < horizon; ++t) {
    const Eigen::VectorXd xb = scenario.background_x(t, lin.n_buses);
    m.background_x_pu.col(t) = xb;
    m.v_base.col(t) = lin.v_coeff * xb + lin.v_offset;
    m.i_base.col(t) = lin.i_coeff * xb + lin.i_offset;
    m.p0_base[t] = p0_row.dot(xb) + lin.p0_offset.sum();
  }

  m.box_lo = Eigen::MatrixXd::Constant(n, horizon, -kInf);
  m.box_hi = Eigen::MatrixXd::Constant(n, horizon, kInf);

  std::vector<bool> in_disk(static_cast<std::size_t>(n), false);
  std::vector<bool> in_tie(static_cast<std::size_t>(n), false);

  auto p_col = [&](const std::string& id, int slot) { return m.layout.index_of(id, slot, false); };
  auto q_col = [&](const std::string& id, int slot) { return m.layout.index_of(id, slot, true); };

  std::vector<Eigen::VectorXd> disk_radius_cols;
  for (const auto& u : fleet.pv) {
    for (int s = 0; s < 3; ++s) {
      if (!u.conn.slots[static_cast<std::size_t>(s)]) continue;
      const int cp = p_col(u.id, s), cq = q_col(u.id, s);
      m.box_lo.row(cp) = u.p_lower.col(s).transpose();
      m.box_hi.row(cp) = u.p_upper.col(s).transpose();
      m.disks.push_back({cp, cq, u.id + "." + slot_name(u.conn.kind, s)});
      disk_radius_cols.push_back(u.s_cap.col(s));
      in_disk[static_cast<std::size_t>(cp)] = in_disk[static_cast<std::size_t>(cq)] = true;
    }
  }
  for (const auto& u : fleet.storage) {
    std::vector<int> pcols;
    for (int s = 0; s < 3; ++s) {
      if (!u.conn.slots[static_cast<std::size_t>(s)]) continue;
      const int cp = p_col(u.id, s), cq = q_col(u.id, s);
      pcols.push_back(cp);
      m.box_lo.row(cp) = u.p_lower.col(s).transpose();
      m.box_hi.row(cp) = u.p_upper.col(s).transpose();
      m.disks.push_back({cp, cq, u.id + "." + slot_name(u.conn.kind, s)});
      disk_radius_cols.push_back(u.s_cap.col(s));
      in_disk[static_cast<std::size_t>(cp)] = in_disk[static_cast<std::size_t>(cq)] = true;
    }
    CompactModel::Coupled c;
    c.label = "soc:" + u.id;
    c.device_id = u.id;
    c.cls = ConstraintClass::soc;
    c.cols = pcols;
    c.power_sign = 1.0;
    c.band = cumulative_soc_bounds(u, horizon, scenario.dt_hours);
    c.violation_scale = scenario.dt_hours;  // report energy, not power
    c.free_state.resize(horizon);
    for (int t = 0; t < horizon; ++t) c.free_state[t] = std::pow(u.kappa, t + 1) * u.e_init;
    m.coupled.push_back(std::move(c));
    m.joint_groups.push_back({"joint:" + u.id, pcols});
  }
  for (const auto& u : fleet.loads) {
    for (int s = 0; s < 3; ++s) {
      if (!u.conn.slots[static_cast<std::size_t>(s)]) continue;
      const int cp = p_col(u.id, s), cq = q_col(u.id, s);
      m.box_lo.row(cp) = -u.p_upper.col(s).transpose();
      m.box_hi.row(cp) = -u.p_lower.col(s).transpose();
      m.ties.push_back({cp, cq, u.eta, u.id + "." + slot_name(u.conn.kind, s)});
      in_tie[static_cast<std::size_t>(cq)] = true;
    }
  }
  for (const auto& u : fleet.hvac) {
    std::vector<int> pcols;
    for (int s = 0; s < 3; ++s) {
      if (!u.conn.slots[static_cast<std::size_t>(s)]) continue;
      const int cp = p_col(u.id, s), cq = q_col(u.id, s);
      pcols.push_back(cp);
      m.box_lo.row(cp) = -u.p_upper.col(s).transpose();
      m.box_hi.row(cp).setZero();
      m.ties.push_back({cp, cq, u.eta, u.id + "." + slot_name(u.conn.kind, s)});
      in_tie[static_cast<std::size_t>(cq)] = true;
    }
    CompactModel::Coupled c;
    c.label = "comfort:" + u.id;
    c.device_id = u.id;
    c.cls = ConstraintClass::comfort;
    c.cols = pcols;
    c.power_sign = -1.0;
    c.band = cumulative_comfort_bounds(u, horizon, scenario.dt_hours);
    c.violation_scale = 1.0;  // already in degrees C
    c.free_state = temp_trajectory(u, Eigen::VectorXd::Zero(horizon), scenario.dt_hours);
    c.comfort_target = u.t_comfort;
    m.coupled.push_back(std::move(c));
    m.joint_groups.push_back({"joint:" + u.id, pcols});
  }

  m.disk_radius.resize(static_cast<Eigen::Index>(disk_radius_cols.size()), horizon);
  for (std::size_t d = 0; d < disk_radius_cols.size(); ++d)
    m.disk_radius.row(static_cast<Eigen::Index>(d)) = disk_radius_cols[d].transpose();

  // Every decision entry must be bounded somehow.
  for (int k = 0; k < n; ++k) {
    const bool boxed = std::isfinite(m.box_lo(k, 0)) && std::isfinite(m.box_hi(k, 0));
    if (!boxed && !in_disk[static_cast<std::size_t>(k)] && !in_tie[static_cast<std::size_t>(k)])
      throw Error("entry " + std::to_string(k) + " is unconstrained");
  }
  return m;
}

ConvexityAudit audit_convexity(const CompactModel& model) {
  ConvexityAudit audit;
  const int n = model.vars_per_step();
  if (model.box_lo.rows() != n || model.box_hi.rows() != n ||
      model.box_lo.cols() != model.horizon || model.box_hi.cols() != model.horizon)
    return audit;
  for (int k = 0; k < n; ++k)
    for (int t = 0; t < model.horizon; ++t)
      if (std::isfinite(model.box_lo(k, t)) || std::isfinite(model.box_hi(k, t)))
        ++audit.box_entries;
  for (const auto& tie : model.ties) {
    if (tie.col_p < 0 || tie.col_p >= n || tie.col_q < 0 || tie.col_q >= n) return audit;
    ++audit.tie_rows;
  }
  for (const auto& disk : model.disks) {
    if (disk.col_p < 0 || disk.col_p >= n || disk.col_q < 0 || disk.col_q >= n) return audit;
    ++audit.disk_count;
  }
  if (model.disk_radius.rows() != static_cast<Eigen::Index>(model.disks.size())) return audit;
  if (model.disk_radius.size() > 0 && model.disk_radius.minCoeff() < 0.0) return audit;
  for (const auto& c : model.coupled) {
    if (static_cast<int>(c.band.weights.size()) != model.horizon) return audit;
    for (int t = 0; t < model.horizon; ++t) {
      if (c.band.weights[static_cast<std::size_t>(t)].size() != t + 1) return audit;
      ++audit.coupled_rows;
    }
    for (int col : c.cols)
      if (col < 0 || col >= n) return audit;
  }
  // Walked every constraint container; nothing besides affine rows and
  // disks exists in the model by construction.
  audit.only_linear_and_disks = true;
  return audit;
}

}  // namespace flexagg
