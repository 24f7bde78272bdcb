#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>
#include <vector>

#include "flexagg/errors.hpp"
#include "flexagg/phase.hpp"

namespace flexagg {

using Complex = std::complex<double>;

/// One series branch between two buses. The 3x3 impedance is given in p.u.;
/// rows/columns of absent phases are ignored. Current limits are per-phase
/// magnitudes in p.u.
struct LineSpec {
  int from_bus = 0;
  int to_bus = 0;
  Eigen::Matrix3cd z = Eigen::Matrix3cd::Zero();
  Eigen::Vector3d i_upper = Eigen::Vector3d::Constant(1e9);
  Eigen::Vector3d i_lower = Eigen::Vector3d::Zero();
  std::array<bool, 3> phases{true, true, true};
};

/// Multi-phase feeder: bus 0 is the substation (slack); buses 1..N carry
/// devices. Voltage limits are stacked per bus-phase (length 3N).
struct FeederModel {
  std::string name;
  int n_buses = 0;  // N, excluding the substation
  std::vector<LineSpec> lines;
  Eigen::Vector3cd slack_voltage;
  Eigen::VectorXd v_upper, v_lower;  // 3N
  double base_kv = 1.0;
  double base_kva = 1000.0;

  /// True when some line with that phase touches the bus (bus in 0..N).
  bool bus_phase_present(int bus, int phase) const;

  /// True when every phase needed by the connection exists at the bus.
  /// A delta slot needs both of the phases it bridges.
  bool supports(int bus, const PhaseConnection& conn) const;
};

/// Balanced positive-sequence slack at the given magnitude.
Eigen::Vector3cd balanced_slack(double magnitude = 1.0);

/// Checks limits ordering, slack phasors and line endpoints;
/// throws ParseError naming the offending field.
void validate_feeder(const FeederModel& feeder);

}  // namespace flexagg
