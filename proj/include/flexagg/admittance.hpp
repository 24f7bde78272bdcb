#pragma once

#include <Eigen/Dense>

#include "flexagg/feeder.hpp"

namespace flexagg {

/// Bus admittance matrix partitioned by slack (0) vs. load (L) buses.
struct AdmittanceBlocks {
  Eigen::Matrix3cd y00;
  Eigen::MatrixXcd y0l;  // 3 x 3N
  Eigen::MatrixXcd yl0;  // 3N x 3
  Eigen::MatrixXcd yll;  // 3N x 3N
};

/// Assemble the admittance blocks from the line list. Each line contributes
/// +z^{-1} (restricted to its present phases) to both diagonal blocks and
/// -z^{-1} to the off-diagonal blocks. Bus-phases touched by no line get a
/// unit-admittance tie to the slack so the matrix stays invertible; those
/// slots are decoupled from every real phase and carry no injection.
/// Throws on singular per-line impedance or a disconnected bus graph.
AdmittanceBlocks assemble_admittance(const FeederModel& feeder);

}  // namespace flexagg
