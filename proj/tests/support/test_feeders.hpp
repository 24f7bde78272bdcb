#pragma once

// Shared feeder/fleet builders for the test suites.

#include <Eigen/Dense>

#include "flexagg/feeder.hpp"
#include "flexagg/rng.hpp"

namespace flexagg::testing {

/// Index helper for the stacked network injection vector
/// [p_wye; q_wye; p_delta; q_delta], buses 1-based.
struct XMap {
  int n;  // load buses
  int pw(int bus, int slot) const { return 3 * (bus - 1) + slot; }
  int qw(int bus, int slot) const { return 3 * n + pw(bus, slot); }
  int pd(int bus, int slot) const { return 6 * n + pw(bus, slot); }
  int qd(int bus, int slot) const { return 9 * n + pw(bus, slot); }
  int dim() const { return 12 * n; }
};

inline Eigen::Matrix3cd coupled_z(double self_r, double self_x, double mutual_scale) {
  Eigen::Matrix3cd z;
  const Complex self(self_r, self_x);
  const Complex mut = mutual_scale * self;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) z(r, c) = (r == c) ? self : mut;
  return z;
}

/// Four load buses: three-phase trunk 0-1-2, a two-phase lateral 2-3 (a,b)
/// and a single-phase lateral 1-4 (c). Mutually coupled trunk impedances.
inline FeederModel four_bus_feeder() {
  FeederModel f;
  f.name = "four-bus";
  f.n_buses = 4;
  f.base_kv = 4.16;
  f.base_kva = 1000.0;
  f.slack_voltage = balanced_slack(1.0);
  f.v_upper = Eigen::VectorXd::Constant(12, 1.10);
  f.v_lower = Eigen::VectorXd::Constant(12, 0.90);

  LineSpec l01;
  l01.from_bus = 0;
  l01.to_bus = 1;
  l01.z = coupled_z(0.02, 0.06, 0.25);
  l01.i_upper = Eigen::Vector3d::Constant(5.0);
  f.lines.push_back(l01);

  LineSpec l12;
  l12.from_bus = 1;
  l12.to_bus = 2;
  l12.z = coupled_z(0.025, 0.07, 0.3);
  l12.i_upper = Eigen::Vector3d::Constant(5.0);
  f.lines.push_back(l12);

  LineSpec l23;
  l23.from_bus = 2;
  l23.to_bus = 3;
  l23.phases = {true, true, false};
  l23.z = Eigen::Matrix3cd::Zero();
  l23.z(0, 0) = Complex(0.03, 0.08);
  l23.z(1, 1) = Complex(0.032, 0.082);
  l23.z(0, 1) = l23.z(1, 0) = Complex(0.008, 0.02);
  l23.i_upper = Eigen::Vector3d::Constant(5.0);
  f.lines.push_back(l23);

  LineSpec l14;
  l14.from_bus = 1;
  l14.to_bus = 4;
  l14.phases = {false, false, true};
  l14.z = Eigen::Matrix3cd::Zero();
  l14.z(2, 2) = Complex(0.04, 0.09);
  l14.i_upper = Eigen::Vector3d::Constant(5.0);
  f.lines.push_back(l14);

  return f;
}

/// Mixed wye/delta nominal loading for the four-bus feeder (p.u.).
inline Eigen::VectorXd four_bus_nominal_x() {
  XMap m{4};
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m.dim());
  auto wye_load = [&](int bus, int slot, double p, double q) {
    x[m.pw(bus, slot)] = -p;
    x[m.qw(bus, slot)] = -q;
  };
  wye_load(1, 0, 0.05, 0.015);
  wye_load(2, 0, 0.08, 0.025);
  wye_load(2, 1, 0.07, 0.02);
  wye_load(2, 2, 0.09, 0.03);
  wye_load(3, 0, 0.04, 0.012);
  wye_load(3, 1, 0.03, 0.01);
  wye_load(4, 2, 0.06, 0.02);
  // delta load bridging phases a-b at bus 1
  x[m.pd(1, 0)] = -0.03;
  x[m.qd(1, 0)] = -0.01;
  return x;
}

/// Random radial feeder: N buses, three-phase trunk with random laterals,
/// every line mutually coupled. Used for structural property tests.
inline FeederModel random_radial_feeder(Rng& rng, int n_buses) {
  FeederModel f;
  f.name = "random";
  f.n_buses = n_buses;
  f.base_kv = 4.16;
  f.base_kva = 1000.0;
  f.slack_voltage = balanced_slack(1.0);
  f.v_upper = Eigen::VectorXd::Constant(3 * n_buses, 1.10);
  f.v_lower = Eigen::VectorXd::Constant(3 * n_buses, 0.90);
  for (int b = 1; b <= n_buses; ++b) {
    LineSpec line;
    line.from_bus = b == 1 ? 0 : rng.uniform_int(std::max(1, b - 3), b - 1);
    line.to_bus = b;
    const double r = rng.uniform(0.01, 0.04);
    const double x = rng.uniform(0.03, 0.09);
    const int kind = rng.uniform_int(0, 3);
    if (kind == 0 && b > 1) {
      const int ph = rng.uniform_int(0, 2);
      line.phases = {false, false, false};
      line.phases[static_cast<std::size_t>(ph)] = true;
      line.z = Eigen::Matrix3cd::Zero();
      line.z(ph, ph) = Complex(r, x);
    } else {
      line.z = coupled_z(r, x, rng.uniform(0.1, 0.35));
    }
    line.i_upper = Eigen::Vector3d::Constant(5.0);
    f.lines.push_back(line);
  }
  return f;
}

}  // namespace flexagg::testing
