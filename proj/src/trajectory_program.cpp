#include "trajectory_program.hpp"

namespace flexagg::detail {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// limits at or beyond this magnitude act as "no constraint"
constexpr double kWideLimit = 1e8;
}  // namespace

std::vector<DeviceView> device_views(const CompactModel& m) {
  std::vector<DeviceView> views;
  std::map<std::string, std::size_t> by_id;
  for (int k = 0; k < m.vars_per_step(); ++k) {
    const auto& e = m.layout.entries[static_cast<std::size_t>(k)];
    if (!by_id.count(e.device_id)) {
      by_id[e.device_id] = views.size();
      DeviceView dv;
      dv.dev = e.dev;
      dv.id = e.device_id;
      dv.time_coupled =
          e.dev.kind == DeviceRef::Kind::storage || e.dev.kind == DeviceRef::Kind::hvac;
      views.push_back(std::move(dv));
    }
  }
  for (auto& dv : views) {
    dv.cols = m.layout.device_columns(dv.dev);
    for (std::size_t i = 0; i < dv.cols.size(); ++i)
      dv.local[dv.cols[i]] = static_cast<int>(i);
  }
  return views;
}

void append_device_constraints(ProgramBuilder& b, const CompactModel& m, const DeviceView& dv,
                               int n_traj, bool joint_rows, const VarFn& var) {
  const int T = m.horizon;
  for (int traj = 0; traj < n_traj; ++traj) {
    for (int t = 0; t < T; ++t) {
      for (int col : dv.cols) {
        const int local = dv.local.at(col);
        b.add_box(var(traj, t, local), m.box_lo(col, t), m.box_hi(col, t));
      }
    }
  }
  for (std::size_t d = 0; d < m.disks.size(); ++d) {
    const auto& disk = m.disks[d];
    if (!dv.local.count(disk.col_p)) continue;
    for (int traj = 0; traj < n_traj; ++traj)
      for (int t = 0; t < T; ++t)
        b.add_disk(var(traj, t, dv.local.at(disk.col_p)), var(traj, t, dv.local.at(disk.col_q)),
                   m.disk_radius(static_cast<Eigen::Index>(d), t));
  }
  for (const auto& tie : m.ties) {
    if (!dv.local.count(tie.col_p)) continue;
    for (int traj = 0; traj < n_traj; ++traj)
      for (int t = 0; t < T; ++t)
        b.add_eq({{var(traj, t, dv.local.at(tie.col_q)), 1.0},
                  {var(traj, t, dv.local.at(tie.col_p)), -tie.eta}},
                 0.0);
  }
  for (const auto& c : m.coupled) {
    if (c.cols.empty() || !dv.local.count(c.cols[0])) continue;
    for (int traj = 0; traj < n_traj; ++traj) {
      for (int t = 0; t < T; ++t) {
        ProgramBuilder::Terms terms;
        for (int tau = 0; tau <= t; ++tau) {
          const double w = c.band.weights[static_cast<std::size_t>(t)][tau] * c.power_sign;
          for (int col : c.cols) terms.push_back({var(traj, tau, dv.local.at(col)), w});
        }
        b.add_range(terms, c.band.lo[t], c.band.hi[t]);
      }
    }
  }
  if (joint_rows && n_traj >= 2 && dv.time_coupled) {
    // upper-trajectory injections may not exceed lower-trajectory ones
    const int lower = 0, upper = n_traj - 1;
    const int n_p = static_cast<int>(dv.cols.size()) / 2;
    for (int t = 0; t < T; ++t) {
      ProgramBuilder::Terms terms;
      for (int local = 0; local < n_p; ++local) {
        terms.push_back({var(upper, t, local), 1.0});
        terms.push_back({var(lower, t, local), -1.0});
      }
      b.add_le(terms, 0.0);
    }
  }
}

void append_device_cost(ProgramBuilder& b, const CompactModel& m, const DeviceView& dv,
                        const CostConfig& cost, int traj, const VarFn& var) {
  const int T = m.horizon;
  const int n_p = static_cast<int>(dv.cols.size()) / 2;
  switch (dv.dev.kind) {
    case DeviceRef::Kind::storage: {
      const double ce = cost.device_coef(cost.storage_cycle, dv.id);
      if (ce <= 0.0) return;
      for (int t = 0; t < T; ++t) {
        ProgramBuilder::Terms terms;
        for (int local = 0; local < n_p; ++local) terms.push_back({var(traj, t, local), 1.0});
        b.obj_square(terms, 0.0, ce);
      }
      return;
    }
    case DeviceRef::Kind::pv: {
      const double c1 = cost.device_coef(cost.pv_first, dv.id);
      const double c2 = cost.device_coef(cost.pv_curtail, dv.id);
      if (c1 == 0.0 && c2 == 0.0) return;
      for (int t = 0; t < T; ++t) {
        double avail = 0.0;
        ProgramBuilder::Terms terms;
        for (int local = 0; local < n_p; ++local) {
          terms.push_back({var(traj, t, local), 1.0});
          avail += m.box_hi(dv.cols[static_cast<std::size_t>(local)], t);
        }
        for (const auto& [v, coef] : terms) b.obj_lin(v, c1 * coef);
        if (c2 > 0.0) b.obj_square(terms, -avail, c2);
      }
      return;
    }
    case DeviceRef::Kind::hvac: {
      const double ch = cost.device_coef(cost.hvac_discomfort, dv.id);
      if (ch <= 0.0) return;
      const CompactModel::Coupled* comfort = nullptr;
      for (const auto& c : m.coupled)
        if (c.cls == ConstraintClass::comfort && c.device_id == dv.id) comfort = &c;
      if (!comfort) return;
      for (int t = 0; t < T; ++t) {
        ProgramBuilder::Terms terms;
        for (int tau = 0; tau <= t; ++tau) {
          const double w =
              comfort->band.weights[static_cast<std::size_t>(t)][tau] * comfort->power_sign;
          for (int col : comfort->cols) terms.push_back({var(traj, tau, dv.local.at(col)), w});
        }
        b.obj_square(terms, comfort->free_state[t] - comfort->comfort_target, ch);
      }
      return;
    }
    case DeviceRef::Kind::load:
      return;  // no cost terms for directly controllable loads
  }
}

int n_traj_for(ObjectiveSpec::Kind kind) {
  switch (kind) {
    case ObjectiveSpec::Kind::mpa: return 2;
    case ObjectiveSpec::Kind::epa: return 3;
    case ObjectiveSpec::Kind::pd: return 1;
  }
  return 1;
}

int base_traj_for(ObjectiveSpec::Kind kind) {
  return kind == ObjectiveSpec::Kind::epa ? 1 : 0;
}

TrajectoryProgram build_trajectory_program(const CompactModel& m, const ObjectiveSpec& spec,
                                           bool joint_rows) {
  TrajectoryProgram tp;
  tp.n_traj = n_traj_for(spec.kind);
  tp.T = m.horizon;
  tp.n = m.vars_per_step();
  ProgramBuilder b(tp.n_traj * tp.T * tp.n);
  const auto var = [&tp](int traj, int t, int k) { return tp.var(traj, t, k); };

  // network limits with voltages and currents substituted out
  const int n3 = static_cast<int>(m.v_sens.rows());
  const int nl3 = static_cast<int>(m.i_sens.rows());
  for (int traj = 0; traj < tp.n_traj; ++traj) {
    for (int t = 0; t < tp.T; ++t) {
      for (int r = 0; r < n3; ++r) {
        ProgramBuilder::Terms terms;
        for (int k = 0; k < tp.n; ++k)
          if (m.v_sens(r, k) != 0.0) terms.push_back({var(traj, t, k), m.v_sens(r, k)});
        const double base = m.v_base(r, t);
        b.add_range(terms, m.v_lower[r] - base, m.v_upper[r] - base);
      }
      for (int r = 0; r < nl3; ++r) {
        ProgramBuilder::Terms terms;
        for (int k = 0; k < tp.n; ++k)
          if (m.i_sens(r, k) != 0.0) terms.push_back({var(traj, t, k), m.i_sens(r, k)});
        const double base = m.i_base(r, t);
        const double hi = m.i_upper[r] >= kWideLimit ? kInf : m.i_upper[r] - base;
        // the magnitude proxy may legitimately go negative on reversal; a
        // zero lower limit is vacuous for true magnitudes
        const double lo = m.i_lower[r] > 0.0 ? m.i_lower[r] - base : -kInf;
        b.add_range(terms, lo, hi);
      }
    }
  }

  for (const auto& dv : device_views(m)) {
    const VarFn dev_var = [&](int traj, int t, int local) {
      return var(traj, t, dv.cols[static_cast<std::size_t>(local)]);
    };
    append_device_constraints(b, m, dv, tp.n_traj, joint_rows, dev_var);
    if (spec.kind != ObjectiveSpec::Kind::mpa && spec.cost)
      append_device_cost(b, m, dv, *spec.cost, base_traj_for(spec.kind), dev_var);
  }

  // substation ordering chain between consecutive trajectories
  for (int a = 0; a + 1 < tp.n_traj; ++a) {
    for (int t = 0; t < tp.T; ++t) {
      ProgramBuilder::Terms terms;
      for (int k = 0; k < tp.n; ++k) {
        if (m.p0_sens[k] == 0.0) continue;
        terms.push_back({var(a + 1, t, k), m.p0_sens[k]});
        terms.push_back({var(a, t, k), -m.p0_sens[k]});
      }
      b.add_ge(terms, 0.0);
    }
  }

  switch (spec.kind) {
    case ObjectiveSpec::Kind::mpa: {
      // maximize the mean band width
      const double scale = 1.0 / tp.T;
      for (int t = 0; t < tp.T; ++t)
        for (int k = 0; k < tp.n; ++k) {
          if (m.p0_sens[k] == 0.0) continue;
          b.obj_lin(var(1, t, k), -scale * m.p0_sens[k]);
          b.obj_lin(var(0, t, k), scale * m.p0_sens[k]);
        }
      break;
    }
    case ObjectiveSpec::Kind::epa: {
      for (int t = 0; t < tp.T; ++t) {
        const double pt = spec.cost->price_at(t);
        const double ru = spec.cost->reward_up_at(t);
        const double rd = spec.cost->reward_down_at(t);
        for (int k = 0; k < tp.n; ++k) {
          if (m.p0_sens[k] == 0.0) continue;
          b.obj_lin(var(1, t, k), (pt + ru - rd) * m.p0_sens[k]);
          b.obj_lin(var(2, t, k), -ru * m.p0_sens[k]);
          b.obj_lin(var(0, t, k), rd * m.p0_sens[k]);
        }
        b.obj_const(pt * m.p0_base[t]);
      }
      break;
    }
    case ObjectiveSpec::Kind::pd: {
      for (int t = 0; t < tp.T; ++t) {
        const double pt = spec.cost ? spec.cost->price_at(t) : 0.0;
        ProgramBuilder::Terms p0_terms;
        for (int k = 0; k < tp.n; ++k) {
          if (m.p0_sens[k] == 0.0) continue;
          p0_terms.push_back({var(0, t, k), m.p0_sens[k]});
          if (pt != 0.0) b.obj_lin(var(0, t, k), pt * m.p0_sens[k]);
        }
        if (pt != 0.0) b.obj_const(pt * m.p0_base[t]);
        if (spec.rho.size() && spec.rho[t] > 0.0)
          b.obj_square(p0_terms, m.p0_base[t] - spec.p_reg[t], spec.rho[t]);
      }
      break;
    }
  }

  tp.program = b.build();
  return tp;
}

}  // namespace flexagg::detail
