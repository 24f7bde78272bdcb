#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "flexagg/phase.hpp"

namespace flexagg {

/// Fixed (non-dispatchable) power at a bus; consumption positive. Series
/// are horizon x 3, indexed by connection slot, in p.u.
struct UncontrolledInjection {
  int bus = 0;
  PhaseConnection conn;
  Eigen::MatrixXd p, q;
};

/// Exogenous series for one study window: background loads, per-PV available
/// power (total over the device's slots) and outside temperature.
struct Scenario {
  double dt_hours = 1.0;
  int steps = 0;
  std::vector<UncontrolledInjection> background;
  Eigen::VectorXd temperature_out_c;                  // may be empty when no HVAC
  std::map<std::string, Eigen::VectorXd> pv_available;  // p.u. total per step

  /// Stacked 12N network injection vector of the background at step t.
  Eigen::VectorXd background_x(int t, int n_buses) const;

  /// Sub-window [start, start+count).
  Scenario slice(int start, int count) const;
};

}  // namespace flexagg
