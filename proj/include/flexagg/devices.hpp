#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "flexagg/phase.hpp"

namespace flexagg {

// Device quantities are per-unit internally (power on base_kva, energy in
// p.u.*h); temperatures stay in degrees C. Files carry kW/kWh and are
// converted at the boundary. Bound matrices are horizon x 3, indexed by the
// connection slot; inactive slots are ignored.

/// Curtailable PV: active power within [p_lower, p_upper], reactive free
/// inside the apparent-power disk.
struct PvUnit {
  std::string id;
  int bus = 0;
  PhaseConnection conn;
  Eigen::MatrixXd p_lower, p_upper, s_cap;
};

/// Storage: positive power = discharge (injection), negative = charge.
/// kappa is the per-step retention factor of the stored energy.
struct StorageUnit {
  std::string id;
  int bus = 0;
  PhaseConnection conn;
  Eigen::MatrixXd p_lower, p_upper, s_cap;
  double e_lower = 0.0, e_upper = 0.0, e_init = 0.0;
  double kappa = 1.0;
};

/// Directly controllable load with a fixed power factor (q = eta * p on the
/// consumption side).
struct ControllableLoad {
  std::string id;
  int bus = 0;
  PhaseConnection conn;
  Eigen::MatrixXd p_lower, p_upper;  // consumption bounds
  double eta = 0.0;
};

/// HVAC load driving first-order indoor temperature dynamics. beta > 0 is
/// heating, beta < 0 cooling; its sign must not change over the horizon.
struct HvacUnit {
  std::string id;
  int bus = 0;
  PhaseConnection conn;
  Eigen::MatrixXd p_upper;  // consumption upper bound; lower bound is 0
  double eta = 0.0;
  double alpha = 0.5;       // in (0,1)
  double beta = 1.0;        // p.u.*h per degC
  Eigen::VectorXd f_out;    // outside temperature per step, degC
  double f_lower = 0.0, f_upper = 0.0, f_init = 0.0;
  double t_comfort = 0.0;
};

struct Fleet {
  std::vector<PvUnit> pv;
  std::vector<StorageUnit> storage;
  std::vector<ControllableLoad> loads;
  std::vector<HvacUnit> hvac;

  int total_devices() const {
    return static_cast<int>(pv.size() + storage.size() + loads.size() + hvac.size());
  }
};

/// Check the per-device invariants for the given horizon; throws ParseError
/// naming the device and field.
void validate_fleet(const Fleet& fleet, int horizon);

/// State of charge after each step: E_t = kappa * E_{t-1} - dt * P_t, with
/// p_total the per-step power summed over the device's phases. No clipping.
Eigen::VectorXd soc_trajectory(const StorageUnit& unit, const Eigen::VectorXd& p_total,
                               double dt_hours);

/// Indoor temperature after each step:
/// F_t = F_{t-1} + alpha * (F_out_t - F_{t-1}) + (dt / beta) * P_t.
Eigen::VectorXd temp_trajectory(const HvacUnit& unit, const Eigen::VectorXd& p_total,
                                double dt_hours);

/// Band constraints on a running state, unrolled per step:
///   lo[t] <= sum_{tau<=t} weights[t][tau] * P_tau <= hi[t]
struct CumulativeBand {
  std::vector<Eigen::VectorXd> weights;  // weights[t] has t+1 entries
  Eigen::VectorXd lo, hi;
};

/// SOC band in power form:
///   (kappa^t E0 - e_upper)/dt <= sum kappa^{t-tau} P_tau <= (kappa^t E0 - e_lower)/dt
CumulativeBand cumulative_soc_bounds(const StorageUnit& unit, int horizon, double dt_hours);

/// Comfort band on the unrolled temperature recursion; weights carry the
/// (dt/beta)(1-alpha)^{t-tau} factor so bounds stay in degrees C.
CumulativeBand cumulative_comfort_bounds(const HvacUnit& unit, int horizon, double dt_hours);

}  // namespace flexagg
