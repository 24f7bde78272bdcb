#include "flexagg/aggregation.hpp"

#include <cmath>
#include <sstream>

#include "flexagg/pcpm.hpp"
#include "trajectory_program.hpp"

namespace flexagg {

double CostConfig::device_coef(const std::map<std::string, double>& m,
                               const std::string& id) const {
  auto it = m.find(id);
  if (it != m.end()) return it->second;
  it = m.find("*");
  return it != m.end() ? it->second : 0.0;
}

void CostConfig::validate(int horizon) const {
  for (const auto* m : {&storage_cycle, &hvac_discomfort, &pv_curtail}) {
    for (const auto& [id, c] : *m)
      if (c < 0.0) throw ParseError("cost '" + id + "'", "quadratic coefficient must be >= 0");
  }
  for (const auto* s : {&price, &reward_up, &reward_down}) {
    if (s->size() != 0 && s->size() != horizon)
      throw ParseError("cost", "series length must be 0 or the horizon");
  }
}

namespace {

Eigen::VectorXd p0_series(const CompactModel& m, const std::vector<Eigen::VectorXd>& x) {
  Eigen::VectorXd p(m.horizon);
  for (int t = 0; t < m.horizon; ++t) p[t] = m.substation_power(x[static_cast<std::size_t>(t)], t);
  return p;
}

struct TrajectorySolution {
  std::vector<std::vector<Eigen::VectorXd>> trajs;  // [traj][t]
  double objective = 0.0;
  int iterations = 0;
};

TrajectorySolution solve_model(const CompactModel& m, const ObjectiveSpec& spec,
                               const AggregationOptions& opts) {
  const int n_traj = detail::n_traj_for(spec.kind);
  const int n = m.vars_per_step();
  TrajectorySolution out;
  out.trajs.assign(static_cast<std::size_t>(n_traj),
                   std::vector<Eigen::VectorXd>(static_cast<std::size_t>(m.horizon),
                                                Eigen::VectorXd::Zero(n)));
  if (n > 0) {
    if (opts.solver == SolverChoice::centralized) {
      const auto tp = detail::build_trajectory_program(m, spec, opts.include_joint_device_rows);
      ConvexSolution sol;
      try {
        sol = solve_convex(tp.program, {opts.solver_tol, opts.solver_max_iter});
      } catch (const InfeasibleError& e) {
        throw InfeasibleError(std::string("no feasible operation: ") + e.what());
      }
      for (int traj = 0; traj < n_traj; ++traj)
        for (int t = 0; t < m.horizon; ++t)
          out.trajs[static_cast<std::size_t>(traj)][static_cast<std::size_t>(t)] =
              sol.x.segment(tp.var(traj, t, 0), n);
      out.iterations = sol.iterations;
    } else {
      try {
        const auto partition = partition_for_pcpm(m, spec, opts.include_joint_device_rows);
        PcpmOptions popts = opts.pcpm;
        popts.subproblem_tol = std::min(popts.subproblem_tol, opts.solver_tol);
        const auto res = pcpm_solve(partition, popts);
        if (opts.pcpm_trace) *opts.pcpm_trace = res.trace;
        out.trajs = assemble_trajectories(partition, res.y_agents);
        out.iterations = res.iterations;
      } catch (const InfeasibleError& e) {
        throw InfeasibleError(std::string("no feasible operation: ") + e.what());
      }
    }
  }
  out.objective = evaluate_model_objective(m, spec, out.trajs);

  for (int traj = 0; traj < n_traj; ++traj) {
    const auto report =
        verify_feasibility(m, out.trajs[static_cast<std::size_t>(traj)], opts.feasibility_tol);
    if (!report.feasible) {
      std::ostringstream msg;
      msg << "solver returned an infeasible trajectory (worst: " << report.worst.id << " by "
          << report.worst.magnitude << ")";
      throw NumericalError(msg.str());
    }
  }
  return out;
}

FlexibilityEnvelope make_envelope(const CompactModel& m, TrajectorySolution&& sol, bool has_base) {
  FlexibilityEnvelope env;
  env.dt_hours = m.dt_hours;
  env.base_kva = m.base_kva;
  const std::size_t upper = sol.trajs.size() - 1;
  env.p_lower = p0_series(m, sol.trajs[0]);
  env.p_upper = p0_series(m, sol.trajs[upper]);
  env.x_lower = std::move(sol.trajs[0]);
  env.x_upper = std::move(sol.trajs[upper]);
  if (has_base) {
    env.p_base = p0_series(m, sol.trajs[1]);
    env.x_base = std::move(sol.trajs[1]);
  }
  if ((env.p_upper - env.p_lower).minCoeff() < -1e-6)
    throw NumericalError("envelope ordering violated beyond solver tolerance");
  env.e_af_kwh = (env.p_upper - env.p_lower).sum() * env.dt_hours * env.base_kva;
  return env;
}

}  // namespace

FlexibilityEnvelope solve_mpa(const CompactModel& model, const AggregationOptions& opts) {
  ObjectiveSpec spec;
  spec.kind = ObjectiveSpec::Kind::mpa;
  return make_envelope(model, solve_model(model, spec, opts), false);
}

FlexibilityEnvelope solve_epa(const CompactModel& model, const CostConfig& cost,
                              const AggregationOptions& opts) {
  cost.validate(model.horizon);
  ObjectiveSpec spec;
  spec.kind = ObjectiveSpec::Kind::epa;
  spec.cost = &cost;
  return make_envelope(model, solve_model(model, spec, opts), true);
}

PdSolution solve_pd(const CompactModel& model, const CostConfig& cost,
                    const Eigen::VectorXd& p_reg, const Eigen::VectorXd& rho,
                    const AggregationOptions& opts) {
  cost.validate(model.horizon);
  if (p_reg.size() != model.horizon || rho.size() != model.horizon)
    throw Error("layout mismatch");
  if (rho.minCoeff() < 0.0) throw Error("tracking penalty must be nonnegative");
  ObjectiveSpec spec;
  spec.kind = ObjectiveSpec::Kind::pd;
  spec.cost = &cost;
  spec.p_reg = p_reg;
  spec.rho = rho;
  auto sol = solve_model(model, spec, opts);
  PdSolution out;
  out.x = std::move(sol.trajs[0]);
  out.achieved_p0 = p0_series(model, out.x);
  out.objective = sol.objective;
  out.iterations = sol.iterations;
  return out;
}

double aggregate_flexibility(const FlexibilityEnvelope& envelope) {
  return (envelope.p_upper - envelope.p_lower).sum() * envelope.dt_hours * envelope.base_kva;
}

DisaggregationSolution disaggregate(const FlexibilityEnvelope& envelope,
                                    const Eigen::VectorXd& p_target) {
  const int T = envelope.steps();
  if (p_target.size() != T) throw Error("layout mismatch");
  constexpr double kSlack = 1e-9;
  DisaggregationSolution sol;
  sol.lambda.resize(T);
  sol.achieved_p0.resize(T);
  sol.x.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    const double lo = envelope.p_lower[t], hi = envelope.p_upper[t];
    if (p_target[t] < lo - kSlack || p_target[t] > hi + kSlack) {
      std::ostringstream msg;
      msg << "target outside envelope at step " << t << " (target " << p_target[t] << ", band ["
          << lo << ", " << hi << "])";
      throw InfeasibleError(msg.str());
    }
    const double width = hi - lo;
    // a degenerate step adopts the lower trajectory
    const double lambda =
        width <= 1e-12 ? 1.0 : std::clamp((hi - p_target[t]) / width, 0.0, 1.0);
    sol.lambda[t] = lambda;
    sol.x[static_cast<std::size_t>(t)] =
        lambda * envelope.x_lower[static_cast<std::size_t>(t)] +
        (1.0 - lambda) * envelope.x_upper[static_cast<std::size_t>(t)];
    sol.achieved_p0[t] = lambda * lo + (1.0 - lambda) * hi;
  }
  return sol;
}

FeasibilityReport verify_feasibility(const CompactModel& model,
                                     const std::vector<Eigen::VectorXd>& x, double tol) {
  if (static_cast<int>(x.size()) != model.horizon) throw Error("layout mismatch");
  const int n = model.vars_per_step();
  FeasibilityReport report;
  report.tol = tol;
  for (ConstraintClass cls :
       {ConstraintClass::voltage, ConstraintClass::current, ConstraintClass::device_box,
        ConstraintClass::disk, ConstraintClass::pf_tie, ConstraintClass::soc,
        ConstraintClass::comfort})
    report.per_class[constraint_class_name(cls)] = 0.0;

  auto record = [&](ConstraintClass cls, const std::string& id, double violation) {
    if (violation <= 0.0) return;
    auto& worst_in_class = report.per_class[constraint_class_name(cls)];
    worst_in_class = std::max(worst_in_class, violation);
    if (violation > report.worst.magnitude) report.worst = {id, violation};
  };

  for (int t = 0; t < model.horizon; ++t) {
    const auto& xt = x[static_cast<std::size_t>(t)];
    if (xt.size() != n) throw Error("layout mismatch");
    const std::string at = "@t" + std::to_string(t);

    const Eigen::VectorXd v = (n ? Eigen::VectorXd(model.v_sens * xt) : Eigen::VectorXd::Zero(model.v_base.rows())) +
                              model.v_base.col(t);
    for (int r = 0; r < v.size(); ++r)
      record(ConstraintClass::voltage, "voltage[" + std::to_string(r) + "]" + at,
             std::max(model.v_lower[r] - v[r], v[r] - model.v_upper[r]));

    const Eigen::VectorXd i = (n ? Eigen::VectorXd(model.i_sens * xt) : Eigen::VectorXd::Zero(model.i_base.rows())) +
                              model.i_base.col(t);
    for (int r = 0; r < i.size(); ++r) {
      double viol = 0.0;
      if (model.i_upper[r] < 1e8) viol = std::max(viol, i[r] - model.i_upper[r]);
      if (model.i_lower[r] > 0.0) viol = std::max(viol, model.i_lower[r] - i[r]);
      record(ConstraintClass::current, "current[" + std::to_string(r) + "]" + at, viol);
    }

    for (int k = 0; k < n; ++k) {
      const auto& e = model.layout.entries[static_cast<std::size_t>(k)];
      const double lo = model.box_lo(k, t), hi = model.box_hi(k, t);
      double viol = 0.0;
      if (std::isfinite(lo)) viol = std::max(viol, lo - xt[k]);
      if (std::isfinite(hi)) viol = std::max(viol, xt[k] - hi);
      record(ConstraintClass::device_box,
             "box:" + e.device_id + "." + slot_name(e.conn, e.slot) + (e.is_q ? ".q" : ".p") + at,
             viol);
    }

    for (std::size_t d = 0; d < model.disks.size(); ++d) {
      const auto& disk = model.disks[d];
      const double mag = std::hypot(xt[disk.col_p], xt[disk.col_q]);
      record(ConstraintClass::disk, "disk:" + disk.label + at,
             mag - model.disk_radius(static_cast<Eigen::Index>(d), t));
    }

    for (const auto& tie : model.ties)
      record(ConstraintClass::pf_tie, "tie:" + tie.label + at,
             std::abs(xt[tie.col_q] - tie.eta * xt[tie.col_p]));
  }

  for (const auto& c : model.coupled) {
    for (int t = 0; t < model.horizon; ++t) {
      double acc = 0.0;
      for (int tau = 0; tau <= t; ++tau) {
        double p = 0.0;
        for (int col : c.cols) p += x[static_cast<std::size_t>(tau)][col];
        acc += c.band.weights[static_cast<std::size_t>(t)][tau] * c.power_sign * p;
      }
      const double viol = std::max(c.band.lo[t] - acc, acc - c.band.hi[t]);
      record(c.cls, c.label + "@t" + std::to_string(t), viol * c.violation_scale);
    }
  }

  report.feasible = report.worst.magnitude <= tol;
  return report;
}

double trajectory_cost(const CompactModel& model, const CostConfig& cost,
                       const std::vector<Eigen::VectorXd>& x) {
  double total = 0.0;
  for (int t = 0; t < model.horizon; ++t)
    total += cost.price_at(t) * model.substation_power(x[static_cast<std::size_t>(t)], t);

  for (const auto& dv : detail::device_views(model)) {
    const int n_p = static_cast<int>(dv.cols.size()) / 2;
    switch (dv.dev.kind) {
      case DeviceRef::Kind::storage: {
        const double ce = cost.device_coef(cost.storage_cycle, dv.id);
        if (ce <= 0.0) break;
        for (int t = 0; t < model.horizon; ++t) {
          double p = 0.0;
          for (int local = 0; local < n_p; ++local)
            p += x[static_cast<std::size_t>(t)][dv.cols[static_cast<std::size_t>(local)]];
          total += ce * p * p;
        }
        break;
      }
      case DeviceRef::Kind::pv: {
        const double c1 = cost.device_coef(cost.pv_first, dv.id);
        const double c2 = cost.device_coef(cost.pv_curtail, dv.id);
        if (c1 == 0.0 && c2 == 0.0) break;
        for (int t = 0; t < model.horizon; ++t) {
          double p = 0.0, avail = 0.0;
          for (int local = 0; local < n_p; ++local) {
            p += x[static_cast<std::size_t>(t)][dv.cols[static_cast<std::size_t>(local)]];
            avail += model.box_hi(dv.cols[static_cast<std::size_t>(local)], t);
          }
          total += c1 * p + c2 * (p - avail) * (p - avail);
        }
        break;
      }
      case DeviceRef::Kind::hvac: {
        const double ch = cost.device_coef(cost.hvac_discomfort, dv.id);
        if (ch <= 0.0) break;
        for (const auto& c : model.coupled) {
          if (c.cls != ConstraintClass::comfort || c.device_id != dv.id) continue;
          for (int t = 0; t < model.horizon; ++t) {
            double f = c.free_state[t];
            for (int tau = 0; tau <= t; ++tau) {
              double p = 0.0;
              for (int col : c.cols) p += x[static_cast<std::size_t>(tau)][col];
              f += c.band.weights[static_cast<std::size_t>(t)][tau] * c.power_sign * p;
            }
            total += ch * (f - c.comfort_target) * (f - c.comfort_target);
          }
        }
        break;
      }
      case DeviceRef::Kind::load:
        break;
    }
  }
  return total;
}

double evaluate_model_objective(const CompactModel& model, const ObjectiveSpec& spec,
                                const std::vector<std::vector<Eigen::VectorXd>>& trajs) {
  switch (spec.kind) {
    case ObjectiveSpec::Kind::mpa: {
      const Eigen::VectorXd lower = p0_series(model, trajs[0]);
      const Eigen::VectorXd upper = p0_series(model, trajs[1]);
      return (lower - upper).sum() / model.horizon;
    }
    case ObjectiveSpec::Kind::epa: {
      const Eigen::VectorXd lower = p0_series(model, trajs[0]);
      const Eigen::VectorXd base = p0_series(model, trajs[1]);
      const Eigen::VectorXd upper = p0_series(model, trajs[2]);
      double obj = trajectory_cost(model, *spec.cost, trajs[1]);
      for (int t = 0; t < model.horizon; ++t)
        obj -= spec.cost->reward_up_at(t) * (upper[t] - base[t]) +
               spec.cost->reward_down_at(t) * (base[t] - lower[t]);
      return obj;
    }
    case ObjectiveSpec::Kind::pd: {
      double obj = spec.cost ? trajectory_cost(model, *spec.cost, trajs[0]) : 0.0;
      const Eigen::VectorXd p0 = p0_series(model, trajs[0]);
      for (int t = 0; t < model.horizon; ++t) {
        const double dev = p0[t] - spec.p_reg[t];
        obj += spec.rho[t] * dev * dev;
      }
      return obj;
    }
  }
  return 0.0;
}

}  // namespace flexagg
