#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flexagg/aggregation.hpp"
#include "flexagg/rng.hpp"

namespace flexagg {

/// How the transmission side turns a reported band into a command.
struct RegulationPolicy {
  enum class Mode { gaussian_around_base, uniform_in_interval, fixed_series };
  Mode mode = Mode::gaussian_around_base;
  /// Gaussian spread in p.u.; negative means 10% of the interval width.
  double sigma = -1.0;
  /// fixed_series: commands per global step (p.u.), clamped to the band.
  Eigen::VectorXd fixed;
};

struct InteractionConfig {
  int t_p = 12;  // planning horizon per round
  int t_d = 1;   // executed steps per round
  /// Executed steps overall; negative means scenario steps minus t_p.
  int total_steps = -1;
  double tracking_rho = 1e6;
  std::uint64_t seed = 0;
  RegulationPolicy policy;
  AggregationOptions agg;
};

struct InteractionRound {
  int round = 0;
  int start_step = 0;
  Eigen::VectorXd price, reward_up, reward_down;          // planning window
  Eigen::VectorXd interval_lower, base, interval_upper;   // reported band (p.u.)
  Eigen::VectorXd command;                                // executed steps (p.u.)
  Eigen::VectorXd executed_p0;                            // achieved (p.u.)
  std::vector<Eigen::VectorXd> executed_x;
  std::map<std::string, double> soc_after;                // p.u.*h per storage
  std::map<std::string, double> temp_after;               // degC per hvac
  double cost = 0.0;    // executed-step operating cost
  double reward = 0.0;  // reserve reward for executed steps only
};

struct InteractionLog {
  std::vector<InteractionRound> rounds;
  double total_cost = 0.0, total_reward = 0.0;
  double dt_hours = 1.0, base_kva = 1.0;

  /// One row per executed step; numbers printed so reruns are byte-equal.
  std::string steps_csv() const;
  /// Per-round terminal device states.
  std::string states_csv() const;
};

/// Receding-horizon loop: per round read the broadcast price/reward window,
/// solve the reserve scheduling over t_p steps from the current device
/// states, receive a command for the first t_d steps inside the reported
/// band, track it with the penalized solve, commit the result, and advance
/// the storage/temperature states by the executed steps.
/// Throws with the round index when a window turns infeasible.
InteractionLog run_interaction(const FeederModel& feeder, const LinearPfModel& lin,
                               const Fleet& fleet, const Scenario& scenario,
                               const CostConfig& cost, const InteractionConfig& config);

/// One command inside [lower, upper]. Gaussian: clamp(base + sigma * z).
/// Uniform: lower + u * (upper - lower). Fixed: clamp(base) where the
/// caller passes the series value as base.
double sample_regulation(double lower, double upper, double base, const RegulationPolicy& policy,
                         Rng& rng);

struct MonteCarloStats {
  int samples = 0;
  int feasible = 0;
  double max_violation = 0.0;
  double seconds = 0.0;

  double feasible_fraction() const {
    return samples ? static_cast<double>(feasible) / samples : 0.0;
  }
};

/// Uniformly sample band-interior trajectories, disaggregate each one and
/// verify every constraint at tolerance 1e-6.
MonteCarloStats monte_carlo_feasibility(const CompactModel& model,
                                        const FlexibilityEnvelope& envelope, int n, Rng& rng);

/// Fleet copy with device series restricted to [start, start+count) and the
/// given initial states.
Fleet slice_fleet(const Fleet& fleet, int start, int count,
                  const std::map<std::string, double>& soc_init,
                  const std::map<std::string, double>& temp_init);

}  // namespace flexagg
