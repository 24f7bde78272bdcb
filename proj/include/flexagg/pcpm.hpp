#pragma once

#include "flexagg/partition.hpp"
#include "flexagg/pcpm_types.hpp"

namespace flexagg {

struct PcpmResult {
  Eigen::VectorXd y0;
  std::vector<Eigen::VectorXd> y_agents;
  double objective = 0.0;  // model objective on the assembled trajectories
  int iterations = 0;
  double dual_delta = 0.0;
  double coupling_residual = 0.0;
  std::vector<PcpmTraceRow> trace;
};

/// One proximal round of agent k given the predicted dual.
Eigen::VectorXd pcpm_agent_step(const AgentBlock& agent, const Eigen::VectorXd& y_prev,
                                const Eigen::VectorXd& nu, double rho, double tol);

/// One proximal round of the aggregator (closed form: per-coordinate
/// clamping plus pool-adjacent-violators on each substation ordering chain).
Eigen::VectorXd pcpm_aggregator_step(const AgentPartition& partition,
                                     const Eigen::VectorXd& y0_prev, const Eigen::VectorXd& nu,
                                     double rho);

/// Project a point onto the aggregator feasible set (used for the start).
Eigen::VectorXd pcpm_project_y0(const AgentPartition& partition, const Eigen::VectorXd& y);

/// Predictor-corrector proximal multiplier iteration:
///   nu    = mu + rho (sum W y + w - y0)          (virtual dual prediction)
///   y0,yk = proximal argmins against nu           (in parallel)
///   mu   += rho (sum W y' + w - y0')              (dual correction)
/// stopping when the dual change and the coupling residual are both small.
/// Throws NumericalError("PCPM not converged ...") at the iteration cap and
/// NumericalError("step length too large ...") when halving runs out.
PcpmResult pcpm_solve(const AgentPartition& partition, const PcpmOptions& opts = {});

}  // namespace flexagg
