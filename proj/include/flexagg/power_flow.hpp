#pragma once

#include <Eigen/Dense>

#include "flexagg/admittance.hpp"
#include "flexagg/feeder.hpp"

namespace flexagg {

/// Complex power injections stacked per bus-phase (length 3N each).
/// `wye` entries are phase-to-neutral, `delta` entries phase-to-phase
/// (slot e of bus i bridges phases e and (e+1)%3). Positive = generation.
struct NetworkInjections {
  Eigen::VectorXcd wye;
  Eigen::VectorXcd delta;
};

struct PowerFlowOptions {
  double tol = 1e-10;  // current-balance residual, infinity norm, p.u.
  int max_iter = 100;
};

struct PowerFlowResult {
  Eigen::VectorXcd v;  // 3N complex load-bus voltages
  int iterations = 0;
  double residual = 0.0;
};

/// Solve the exact nonlinear power flow by iterating the fixed-point map
///   v <- Yll^{-1} (conj(s_wye / v) + L^T conj(s_delta / (L v)) - Yl0 v0)
/// from a flat start. Throws NumericalError("power flow diverged ...") when
/// the residual fails to reach tol within max_iter.
PowerFlowResult solve_exact_power_flow(const FeederModel& feeder,
                                       const AdmittanceBlocks& blocks,
                                       const NetworkInjections& inj,
                                       const PowerFlowOptions& opts = {});

/// No-load voltages: the direct solve Yll v = -Yl0 v0.
Eigen::VectorXcd no_load_voltages(const FeederModel& feeder, const AdmittanceBlocks& blocks);

/// Split a stacked real injection vector [p_wye; q_wye; p_delta; q_delta]
/// (length 12N) into complex per-slot injections.
NetworkInjections injections_from_x(const Eigen::VectorXd& x);

/// Apply the phase-to-phase difference map (per-bus [va-vb, vb-vc, vc-va]).
Eigen::VectorXcd phase_differences(const Eigen::VectorXcd& v);

/// Adjoint of phase_differences (branch quantities back onto phases).
Eigen::VectorXcd phase_differences_adjoint(const Eigen::VectorXcd& u);

/// Exact three-phase substation power for a given load-bus voltage solution.
Eigen::Vector3cd substation_power(const FeederModel& feeder, const AdmittanceBlocks& blocks,
                                  const Eigen::VectorXcd& v_load);

}  // namespace flexagg
