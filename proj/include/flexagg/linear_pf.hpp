#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "flexagg/power_flow.hpp"

namespace flexagg {

/// Anchor for the linearization: an exact power-flow solution (complex
/// voltages) together with the stacked real injection vector that produced
/// it (layout [p_wye; q_wye; p_delta; q_delta], length 12N).
struct OperatingPoint {
  Eigen::VectorXcd v_complex;
  Eigen::VectorXd x0;
};

/// Affine model mapping stacked injections x to voltage magnitudes, line
/// current magnitudes and substation power:
///   v  = v_coeff  x + v_offset    (3N)
///   iL = i_coeff  x + i_offset    (3L)
///   p0 = p0_coeff x + p0_offset   (3)
/// Built so that evaluating at the anchor injections reproduces the anchor
/// quantities exactly.
struct LinearPfModel {
  int n_buses = 0;
  int n_lines = 0;
  Eigen::MatrixXd v_coeff, i_coeff, p0_coeff;
  Eigen::VectorXd v_offset, i_offset, p0_offset;
  std::vector<std::string> warnings;

  int dim() const { return 12 * n_buses; }
};

struct LinearPfEval {
  Eigen::VectorXd v;       // 3N
  Eigen::VectorXd i_line;  // 3L
  Eigen::Vector3d p0;
  double p0_total = 0.0;
};

/// Anchor at the no-load solution (zero injections).
OperatingPoint no_load_operating_point(const FeederModel& feeder, const AdmittanceBlocks& blocks);

/// Anchor at the exact solution for the given injections.
OperatingPoint operating_point_at(const FeederModel& feeder, const AdmittanceBlocks& blocks,
                                  const Eigen::VectorXd& x, double tol = 1e-13);

/// Single fixed-point sweep at the anchor voltages, followed by the
/// magnitude derivative rule. Line-current magnitudes whose anchor value is
/// below 1e-6 p.u. are floored there; a warning is recorded when the line
/// carries a meaningfully finite limit.
LinearPfModel linearize(const FeederModel& feeder, const AdmittanceBlocks& blocks,
                        const OperatingPoint& op);

/// Evaluate the affine model; throws Error("layout mismatch") on bad dim(x).
LinearPfEval evaluate_linear_pf(const LinearPfModel& lin, const Eigen::VectorXd& x);

}  // namespace flexagg
