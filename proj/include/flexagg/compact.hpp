#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "flexagg/devices.hpp"
#include "flexagg/feeder.hpp"
#include "flexagg/layout.hpp"
#include "flexagg/linear_pf.hpp"
#include "flexagg/scenario.hpp"

namespace flexagg {

enum class ConstraintClass { voltage, current, device_box, disk, pf_tie, soc, comfort };

const char* constraint_class_name(ConstraintClass cls);

/// All operating constraints over the horizon, reduced to the per-step
/// decision vector: network limits with voltages/currents substituted out,
/// device boxes, apparent-power disks, fixed-power-factor ties, and the
/// unrolled storage/comfort bands. Background injections are folded into the
/// per-step offsets. Immutable once built.
struct CompactModel {
  InjectionLayout layout;
  LinearPfModel lin;
  double base_kva = 1000.0;
  double dt_hours = 1.0;
  int horizon = 0;

  Eigen::VectorXd v_upper, v_lower;  // 3N
  Eigen::VectorXd i_upper, i_lower;  // 3L

  // Sensitivities of network quantities to the per-step decision vector.
  Eigen::MatrixXd v_sens;      // 3N x n
  Eigen::MatrixXd i_sens;      // 3L x n
  Eigen::RowVectorXd p0_sens;  // 1 x n (total three-phase substation power)

  // Background injections and the offsets they induce, per step.
  Eigen::MatrixXd background_x_pu;  // 12N x T
  Eigen::MatrixXd v_base;           // 3N x T
  Eigen::MatrixXd i_base;           // 3L x T
  Eigen::VectorXd p0_base;          // T

  // Per-entry bounds per step; +-infinity where a disk or tie bounds the
  // entry instead.
  Eigen::MatrixXd box_lo, box_hi;  // n x T

  struct Disk {
    int col_p = 0, col_q = 0;
    std::string label;
  };
  std::vector<Disk> disks;
  Eigen::MatrixXd disk_radius;  // disks.size() x T

  struct Tie {
    int col_p = 0, col_q = 0;
    double eta = 0.0;
    std::string label;
  };
  std::vector<Tie> ties;

  struct Coupled {
    std::string label;
    std::string device_id;
    ConstraintClass cls = ConstraintClass::soc;
    std::vector<int> cols;        // per-step entry columns of the device
    double power_sign = 1.0;      // device power = power_sign * sum(x[cols])
    CumulativeBand band;
    double violation_scale = 1.0; // converts a row violation to report units
    Eigen::VectorXd free_state;   // state trajectory at zero device power
    double comfort_target = 0.0;  // comfort setpoint (comfort class only)
  };
  std::vector<Coupled> coupled;

  /// Devices whose per-step injections must not cross between the upper and
  /// lower trajectory of an envelope solve: sum(x_upper) <= sum(x_lower).
  struct JointGroup {
    std::string label;
    std::vector<int> cols;
  };
  std::vector<JointGroup> joint_groups;

  int vars_per_step() const { return layout.per_step(); }

  /// Total substation power (p.u.) for the step decision x_t.
  double substation_power(const Eigen::VectorXd& x_t, int t) const;

  /// Full 12N network injection vector (devices + background) at step t.
  Eigen::VectorXd network_x(const Eigen::VectorXd& x_t, int t) const;

  /// Per-step device power (sign-corrected sum over the listed columns).
  static double group_power(const std::vector<int>& cols, double sign,
                            const Eigen::VectorXd& x_t);
};

/// Build the compact model for the fleet on the feeder under the scenario.
/// Throws ParseError("...phase mismatch") for a device on an absent phase
/// and ParseError("...scenario length mismatch") for series of the wrong
/// length.
CompactModel build_compact_model(const FeederModel& feeder, const LinearPfModel& lin,
                                 const Fleet& fleet, const Scenario& scenario);

/// Proof that the built model contains only linear rows and disks.
struct ConvexityAudit {
  int box_entries = 0;
  int tie_rows = 0;
  int coupled_rows = 0;
  int disk_count = 0;
  bool only_linear_and_disks = false;
};
ConvexityAudit audit_convexity(const CompactModel& model);

}  // namespace flexagg
