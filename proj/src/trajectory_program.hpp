#pragma once

// Internal machinery shared by the centralized solves and the agent
// partition: per-device constraint/cost emission into an arbitrary variable
// numbering, and the stacked multi-trajectory program.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "flexagg/aggregation.hpp"

namespace flexagg::detail {

/// One device's slice of the per-step decision vector.
struct DeviceView {
  DeviceRef dev;
  std::string id;
  std::vector<int> cols;     // compact columns, p entries then q entries
  std::map<int, int> local;  // compact column -> position in cols
  bool time_coupled = false; // storage or hvac
};

std::vector<DeviceView> device_views(const CompactModel& m);

/// Maps (trajectory, step, position-in-device) to a variable index.
using VarFn = std::function<int(int traj, int t, int local)>;

/// Boxes, disks, power-factor ties, cumulative bands, and (for the
/// time-coupled classes) the upper-vs-lower ordering rows.
void append_device_constraints(ProgramBuilder& b, const CompactModel& m, const DeviceView& dv,
                               int n_traj, bool joint_rows, const VarFn& var);

/// Device cost terms on one trajectory.
void append_device_cost(ProgramBuilder& b, const CompactModel& m, const DeviceView& dv,
                        const CostConfig& cost, int traj, const VarFn& var);

int n_traj_for(ObjectiveSpec::Kind kind);
int base_traj_for(ObjectiveSpec::Kind kind);

struct TrajectoryProgram {
  ConvexProgram program;
  int n_traj = 1;
  int T = 0;
  int n = 0;
  int var(int traj, int t, int k) const { return ((traj * T) + t) * n + k; }
};

/// Full stacked program with networks rows substituted in, device rows per
/// trajectory, the substation ordering chain, and the model objective.
TrajectoryProgram build_trajectory_program(const CompactModel& m, const ObjectiveSpec& spec,
                                           bool joint_rows);

}  // namespace flexagg::detail
