#include "flexagg/power_flow.hpp"

#include <sstream>

namespace flexagg {

namespace {

/// Current injected at each bus-phase by the given complex powers and
/// voltages: conj(s_wye / v) per slot plus the delta branch currents mapped
/// back onto phases. Slots with zero power contribute nothing.
Eigen::VectorXcd injected_currents(const NetworkInjections& inj, const Eigen::VectorXcd& v) {
  const auto n3 = v.size();
  Eigen::VectorXcd i = Eigen::VectorXcd::Zero(n3);
  for (Eigen::Index k = 0; k < n3; ++k) {
    if (inj.wye[k] != Complex(0.0, 0.0)) i[k] += std::conj(inj.wye[k] / v[k]);
  }
  const Eigen::VectorXcd u = phase_differences(v);
  Eigen::VectorXcd branch = Eigen::VectorXcd::Zero(n3);
  for (Eigen::Index k = 0; k < n3; ++k) {
    if (inj.delta[k] != Complex(0.0, 0.0)) branch[k] = std::conj(inj.delta[k] / u[k]);
  }
  i += phase_differences_adjoint(branch);
  return i;
}

}  // namespace

Eigen::VectorXcd phase_differences(const Eigen::VectorXcd& v) {
  Eigen::VectorXcd u(v.size());
  for (Eigen::Index b = 0; b + 2 < v.size(); b += 3) {
    u[b] = v[b] - v[b + 1];
    u[b + 1] = v[b + 1] - v[b + 2];
    u[b + 2] = v[b + 2] - v[b];
  }
  return u;
}

Eigen::VectorXcd phase_differences_adjoint(const Eigen::VectorXcd& u) {
  Eigen::VectorXcd i(u.size());
  for (Eigen::Index b = 0; b + 2 < u.size(); b += 3) {
    i[b] = u[b] - u[b + 2];
    i[b + 1] = u[b + 1] - u[b];
    i[b + 2] = u[b + 2] - u[b + 1];
  }
  return i;
}

NetworkInjections injections_from_x(const Eigen::VectorXd& x) {
  if (x.size() % 12 != 0) throw Error("layout mismatch");
  const Eigen::Index n3 = x.size() / 4;
  NetworkInjections inj;
  inj.wye.resize(n3);
  inj.delta.resize(n3);
  for (Eigen::Index k = 0; k < n3; ++k) {
    inj.wye[k] = Complex(x[k], x[n3 + k]);
    inj.delta[k] = Complex(x[2 * n3 + k], x[3 * n3 + k]);
  }
  return inj;
}

Eigen::VectorXcd no_load_voltages(const FeederModel& feeder, const AdmittanceBlocks& blocks) {
  return blocks.yll.partialPivLu().solve(-blocks.yl0 * feeder.slack_voltage);
}

PowerFlowResult solve_exact_power_flow(const FeederModel& feeder, const AdmittanceBlocks& blocks,
                                       const NetworkInjections& inj, const PowerFlowOptions& opts) {
  const int n3 = 3 * feeder.n_buses;
  if (inj.wye.size() != n3 || inj.delta.size() != n3) throw Error("layout mismatch");

  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(blocks.yll);
  const Eigen::VectorXcd slack_term = blocks.yl0 * feeder.slack_voltage;

  // Flat start: slack phasors replicated at every bus.
  Eigen::VectorXcd v(n3);
  for (int b = 0; b < feeder.n_buses; ++b)
    for (int p = 0; p < 3; ++p) v[3 * b + p] = feeder.slack_voltage[p];

  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iter; ++it) {
    const Eigen::VectorXcd rhs = injected_currents(inj, v) - slack_term;
    v = lu.solve(rhs);

    if (!v.allFinite() || v.cwiseAbs().minCoeff() < 1e-6) {
      std::ostringstream msg;
      msg << "power flow diverged after " << it << " iterations (voltage collapse)";
      throw NumericalError(msg.str());
    }
    residual = (injected_currents(inj, v) - slack_term - blocks.yll * v).cwiseAbs().maxCoeff();
    if (residual <= opts.tol) return {v, it, residual};
    if (!std::isfinite(residual) || residual > 1e8) break;
  }
  std::ostringstream msg;
  msg << "power flow diverged (residual " << residual << " after " << opts.max_iter
      << " iterations)";
  throw NumericalError(msg.str());
}

Eigen::Vector3cd substation_power(const FeederModel& feeder, const AdmittanceBlocks& blocks,
                                  const Eigen::VectorXcd& v_load) {
  const Eigen::Vector3cd i0 = blocks.y00 * feeder.slack_voltage + blocks.y0l * v_load;
  return feeder.slack_voltage.array() * i0.array().conjugate();
}

}  // namespace flexagg
