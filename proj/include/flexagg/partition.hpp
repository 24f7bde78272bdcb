#pragma once

#include <Eigen/Sparse>

#include "flexagg/aggregation.hpp"

namespace flexagg {

/// Indexing of the aggregator variable: per (trajectory, step) a block of
/// voltage magnitudes, current magnitudes and the total substation power.
struct Y0Layout {
  int n_traj = 1;
  int T = 0;
  int nv = 0;  // 3N
  int ni = 0;  // 3L

  int block() const { return nv + ni + 1; }
  int dim() const { return n_traj * T * block(); }
  int start(int traj, int t) const { return (traj * T + t) * block(); }
  int v_start(int traj, int t) const { return start(traj, t); }
  int i_start(int traj, int t) const { return start(traj, t) + nv; }
  int p0_index(int traj, int t) const { return start(traj, t) + nv + ni; }
};

/// One DER facility: its feasible set and cost as a local convex program,
/// plus the coupling block mapping its variables into the aggregator state.
struct AgentBlock {
  std::string id;
  DeviceRef dev;
  int nv = 0;  // local variable count (n_traj * T * entries)
  ConvexProgram local;
  Eigen::SparseMatrix<double> coupling;  // dim(y0) x nv
  Eigen::VectorXd y_init;                // feasible starting point
  std::vector<int> cols;                 // compact per-step columns
};

/// Separable rewrite of a trajectory model: aggregator state y0 equals the
/// coupled image of the agent variables plus a fixed offset.
struct AgentPartition {
  ObjectiveSpec::Kind kind = ObjectiveSpec::Kind::mpa;
  const CompactModel* compact = nullptr;
  Y0Layout y0;
  std::vector<AgentBlock> agents;
  Eigen::VectorXd offset;  // w in y0 = sum_k W_k y_k + w

  // aggregator feasible set: boxes on v/i entries (+-inf on p0)
  Eigen::VectorXd y0_lo, y0_hi;
  // aggregator objective: f0(y) = f0_lin . y + sum f0_quad_i (y_i - f0_center_i)^2
  Eigen::VectorXd f0_lin, f0_quad, f0_center;

  /// Per step, the p0 indices that must be nondecreasing (lower[, base],
  /// upper ordering rows live with the aggregator).
  std::vector<std::vector<int>> p0_chains;

  int n_agents() const { return static_cast<int>(agents.size()); }
};

/// Split the model into one agent per device plus the aggregator. Agent
/// sets carry only that device's rows; the aggregator carries the network
/// boxes and the substation ordering; the coupling rows are the linear
/// power-flow maps per trajectory and step.
AgentPartition partition_for_pcpm(const CompactModel& model, const ObjectiveSpec& spec,
                                  bool joint_rows = true);

/// Single monolithic program over [agent variables; y0] with the coupling
/// as equality rows. Solving it centrally must match the substituted
/// trajectory program; used as the oracle for the distributed path.
ConvexProgram reassemble_program(const AgentPartition& partition);

/// Model objective evaluated on a partition solution.
double partition_objective(const AgentPartition& partition,
                           const std::vector<Eigen::VectorXd>& y_agents);

/// Assemble per-trajectory step vectors from agent solutions.
std::vector<std::vector<Eigen::VectorXd>> assemble_trajectories(
    const AgentPartition& partition, const std::vector<Eigen::VectorXd>& y_agents);

}  // namespace flexagg
