#include "flexagg/linear_pf.hpp"

#include <sstream>

namespace flexagg {

namespace {
constexpr double kCurrentFloor = 1e-6;     // p.u., magnitude-derivative denominator
constexpr double kMeaningfulLimit = 1e6;   // limits at/above this count as "no limit"
}  // namespace

OperatingPoint no_load_operating_point(const FeederModel& feeder, const AdmittanceBlocks& blocks) {
  OperatingPoint op;
  op.v_complex = no_load_voltages(feeder, blocks);
  op.x0 = Eigen::VectorXd::Zero(12 * feeder.n_buses);
  return op;
}

OperatingPoint operating_point_at(const FeederModel& feeder, const AdmittanceBlocks& blocks,
                                  const Eigen::VectorXd& x, double tol) {
  PowerFlowOptions opts;
  opts.tol = tol;
  opts.max_iter = 200;
  OperatingPoint op;
  op.v_complex = solve_exact_power_flow(feeder, blocks, injections_from_x(x), opts).v;
  op.x0 = x;
  return op;
}

LinearPfModel linearize(const FeederModel& feeder, const AdmittanceBlocks& blocks,
                        const OperatingPoint& op) {
  const int n = feeder.n_buses;
  const int n3 = 3 * n;
  const int nx = 12 * n;
  const int nl = static_cast<int>(feeder.lines.size());
  if (op.v_complex.size() != n3 || op.x0.size() != nx) throw Error("layout mismatch");
  if (op.v_complex.cwiseAbs().minCoeff() <= 0.0)
    throw Error("operating point has a zero voltage magnitude");

  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(blocks.yll);

  // Complex voltage sensitivity: one sweep of the fixed-point map at the
  // anchor voltages, split into the four injection blocks.
  const Eigen::VectorXcd vconj_inv = op.v_complex.conjugate().cwiseInverse();
  const Eigen::VectorXcd u = phase_differences(op.v_complex);
  const Eigen::VectorXcd uconj_inv = u.conjugate().cwiseInverse();

  Eigen::MatrixXcd vx(n3, nx);  // d v_complex / d x
  {
    const Eigen::MatrixXcd wye_p = lu.solve(Eigen::MatrixXcd(vconj_inv.asDiagonal()));
    Eigen::MatrixXcd lt = Eigen::MatrixXcd::Zero(n3, n3);
    for (int b = 0; b < n; ++b) {
      // adjoint of the per-bus difference map
      const int k = 3 * b;
      lt(k, k) = 1.0;
      lt(k, k + 2) = -1.0;
      lt(k + 1, k + 1) = 1.0;
      lt(k + 1, k) = -1.0;
      lt(k + 2, k + 2) = 1.0;
      lt(k + 2, k + 1) = -1.0;
    }
    const Eigen::MatrixXcd delta_p = lu.solve(Eigen::MatrixXcd(lt * uconj_inv.asDiagonal()));
    const Complex mj(0.0, -1.0);
    vx.block(0, 0, n3, n3) = wye_p;
    vx.block(0, n3, n3, n3) = mj * wye_p;
    vx.block(0, 2 * n3, n3, n3) = delta_p;
    vx.block(0, 3 * n3, n3, n3) = mj * delta_p;
  }
  const Eigen::VectorXcd v_const = lu.solve(-blocks.yl0 * feeder.slack_voltage);

  LinearPfModel lin;
  lin.n_buses = n;
  lin.n_lines = nl;

  // Voltage magnitudes: |f|' = Re(conj(f) f') / |f| applied row-wise.
  const Eigen::VectorXd vmag = op.v_complex.cwiseAbs();
  lin.v_coeff = vmag.cwiseInverse().asDiagonal() *
                (op.v_complex.conjugate().asDiagonal() * vx).real();
  lin.v_offset = vmag - lin.v_coeff * op.x0;

  // Line current magnitudes from the series model i = z^{-1}(v_from - v_to).
  lin.i_coeff = Eigen::MatrixXd::Zero(3 * nl, nx);
  lin.i_offset = Eigen::VectorXd::Zero(3 * nl);
  for (int l = 0; l < nl; ++l) {
    const auto& line = feeder.lines[static_cast<std::size_t>(l)];
    std::vector<int> idx;
    for (int p = 0; p < 3; ++p)
      if (line.phases[static_cast<std::size_t>(p)]) idx.push_back(p);
    Eigen::MatrixXcd zr(idx.size(), idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t c = 0; c < idx.size(); ++c) zr(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = line.z(idx[r], idx[c]);
    const Eigen::MatrixXcd yr = zr.inverse();
    Eigen::Matrix3cd ys = Eigen::Matrix3cd::Zero();
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t c = 0; c < idx.size(); ++c) ys(idx[r], idx[c]) = yr(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));

    auto bus_rows = [&](int bus, Eigen::MatrixXcd& coeff, Eigen::Vector3cd& cnst) {
      if (bus == 0) {
        coeff.setZero();
        cnst = feeder.slack_voltage;
      } else {
        coeff = vx.block(3 * (bus - 1), 0, 3, nx);
        cnst = v_const.segment<3>(3 * (bus - 1));
      }
    };
    Eigen::MatrixXcd ci(3, nx), cj(3, nx);
    Eigen::Vector3cd vi0, vj0;
    bus_rows(line.from_bus, ci, vi0);
    bus_rows(line.to_bus, cj, vj0);
    const Eigen::MatrixXcd ix = ys * (ci - cj);

    Eigen::Vector3cd i_op;
    {
      auto vat = [&](int bus) -> Eigen::Vector3cd {
        return bus == 0 ? feeder.slack_voltage
                        : Eigen::Vector3cd(op.v_complex.segment<3>(3 * (bus - 1)));
      };
      i_op = ys * (vat(line.from_bus) - vat(line.to_bus));
    }
    for (int p = 0; p < 3; ++p) {
      const double mag = std::abs(i_op[p]);
      const double denom = std::max(mag, kCurrentFloor);
      if (mag < kCurrentFloor && line.phases[static_cast<std::size_t>(p)] &&
          line.i_upper[p] < kMeaningfulLimit) {
        std::ostringstream w;
        w << "line " << l << " phase " << slot_name(ConnectionKind::wye, p)
          << ": anchor current magnitude " << mag
          << " p.u. below floor; thermal rows are unreliable near this point";
        lin.warnings.push_back(w.str());
      }
      lin.i_coeff.row(3 * l + p) = (std::conj(i_op[p]) * ix.row(p)).real() / denom;
      lin.i_offset[3 * l + p] = mag;
    }
    lin.i_offset.segment<3>(3 * l) -= lin.i_coeff.block(3 * l, 0, 3, nx) * op.x0;
  }

  // Substation power: exact in the load voltages, which are affine in x.
  const Eigen::Vector3cd v0 = feeder.slack_voltage;
  lin.p0_coeff = (v0.asDiagonal() * (blocks.y0l * vx).conjugate()).real();
  lin.p0_offset =
      (v0.array() * (blocks.y00 * v0 + blocks.y0l * v_const).array().conjugate()).real();

  return lin;
}

LinearPfEval evaluate_linear_pf(const LinearPfModel& lin, const Eigen::VectorXd& x) {
  if (x.size() != lin.dim()) throw Error("layout mismatch");
  LinearPfEval out;
  out.v = lin.v_coeff * x + lin.v_offset;
  out.i_line = lin.i_coeff * x + lin.i_offset;
  out.p0 = lin.p0_coeff * x + lin.p0_offset;
  out.p0_total = out.p0.sum();
  return out;
}

}  // namespace flexagg
