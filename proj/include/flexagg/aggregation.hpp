#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flexagg/compact.hpp"
#include "flexagg/convex.hpp"
#include "flexagg/pcpm_types.hpp"

namespace flexagg {

/// Cost and reward coefficients, acting on per-unit quantities per step.
/// Per-device maps key on the device id; the key "*" supplies a default and
/// missing ids mean zero.
struct CostConfig {
  std::map<std::string, double> storage_cycle;    // on (sum-phase storage power)^2
  std::map<std::string, double> hvac_discomfort;  // on (indoor temp - comfort)^2
  std::map<std::string, double> pv_first;         // linear on PV output
  std::map<std::string, double> pv_curtail;       // on (output - available)^2
  Eigen::VectorXd price;                          // per step; empty = zero
  Eigen::VectorXd reward_up, reward_down;         // per step; empty = zero

  double device_coef(const std::map<std::string, double>& m, const std::string& id) const;
  double price_at(int t) const { return price.size() ? price[t] : 0.0; }
  double reward_up_at(int t) const { return reward_up.size() ? reward_up[t] : 0.0; }
  double reward_down_at(int t) const { return reward_down.size() ? reward_down[t] : 0.0; }

  /// Quadratic coefficients must be nonnegative; series length 0 or horizon.
  void validate(int horizon) const;
};

/// Which model the trajectory program encodes.
struct ObjectiveSpec {
  enum class Kind { mpa, epa, pd } kind = Kind::mpa;
  const CostConfig* cost = nullptr;  // epa and pd
  Eigen::VectorXd p_reg;             // pd: regulation targets (p.u.)
  Eigen::VectorXd rho;               // pd: per-step tracking penalties
};

/// Achievable substation band plus the trajectories realizing it. Substation
/// powers are stored in p.u.; e_af is in kWh via base_kva.
struct FlexibilityEnvelope {
  Eigen::VectorXd p_lower, p_upper;
  std::optional<Eigen::VectorXd> p_base;
  std::vector<Eigen::VectorXd> x_lower, x_upper;
  std::optional<std::vector<Eigen::VectorXd>> x_base;
  double e_af_kwh = 0.0;
  double dt_hours = 1.0;
  double base_kva = 1.0;

  int steps() const { return static_cast<int>(p_lower.size()); }
};

struct DisaggregationSolution {
  std::vector<Eigen::VectorXd> x;
  Eigen::VectorXd lambda;
  Eigen::VectorXd achieved_p0;  // p.u.
};

struct FeasibilityReport {
  bool feasible = true;
  double tol = 1e-6;
  struct Violation {
    std::string id;
    double magnitude = 0.0;
  };
  Violation worst;
  std::map<std::string, double> per_class;  // keyed by constraint class name
};

enum class SolverChoice { centralized, pcpm };

struct AggregationOptions {
  double solver_tol = 1e-8;
  int solver_max_iter = 100;
  double feasibility_tol = 1e-6;
  /// Diagnostic switch: drop the storage/HVAC cross-trajectory rows to
  /// demonstrate they are load-bearing. Never disable in production runs.
  bool include_joint_device_rows = true;
  SolverChoice solver = SolverChoice::centralized;
  PcpmOptions pcpm;
  std::vector<PcpmTraceRow>* pcpm_trace = nullptr;  // filled when solver == pcpm
};

/// Widest substation band: maximizes the summed gap between the upper and
/// lower trajectories subject to each being operable and the
/// cross-trajectory ordering rows.
FlexibilityEnvelope solve_mpa(const CompactModel& model, const AggregationOptions& opts = {});

/// Cost-optimal base trajectory plus reserve band: minimizes operating cost
/// minus reserve rewards, with the base sandwiched inside the band.
FlexibilityEnvelope solve_epa(const CompactModel& model, const CostConfig& cost,
                              const AggregationOptions& opts = {});

struct PdSolution {
  std::vector<Eigen::VectorXd> x;
  Eigen::VectorXd achieved_p0;  // p.u.
  double objective = 0.0;
  int iterations = 0;
};

/// Tracks the regulation series at quadratic penalty rho while minimizing
/// operating cost over the full constraint set.
PdSolution solve_pd(const CompactModel& model, const CostConfig& cost,
                    const Eigen::VectorXd& p_reg, const Eigen::VectorXd& rho,
                    const AggregationOptions& opts = {});

/// Summed band width in kWh.
double aggregate_flexibility(const FlexibilityEnvelope& envelope);

/// Per-step convex combination of the stored trajectories hitting p_target;
/// throws InfeasibleError("target outside envelope ...") when some step
/// lies outside the band. A degenerate step (zero width) takes the lower
/// trajectory.
DisaggregationSolution disaggregate(const FlexibilityEnvelope& envelope,
                                    const Eigen::VectorXd& p_target);

/// Evaluate every constraint of the model on the trajectory and report the
/// worst violation per class. SOC violations are reported in energy units,
/// comfort in degrees C, everything else in p.u.
FeasibilityReport verify_feasibility(const CompactModel& model,
                                     const std::vector<Eigen::VectorXd>& x, double tol = 1e-6);

/// Objective value of the given model family on full trajectories
/// (trajs[traj][t]); trajectory order is lower, base, upper.
double evaluate_model_objective(const CompactModel& model, const ObjectiveSpec& spec,
                                const std::vector<std::vector<Eigen::VectorXd>>& trajs);

/// Operating cost of one trajectory over the horizon (price, storage cycling,
/// PV, HVAC discomfort terms).
double trajectory_cost(const CompactModel& model, const CostConfig& cost,
                       const std::vector<Eigen::VectorXd>& x);

}  // namespace flexagg
