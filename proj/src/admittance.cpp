#include "flexagg/admittance.hpp"

#include <numeric>
#include <vector>

namespace flexagg {

namespace {

/// Invert the line impedance on its present phases; zero elsewhere.
Eigen::Matrix3cd series_admittance(const LineSpec& line, const std::string& where) {
  std::vector<int> idx;
  for (int p = 0; p < 3; ++p)
    if (line.phases[static_cast<std::size_t>(p)]) idx.push_back(p);
  const int k = static_cast<int>(idx.size());
  Eigen::MatrixXcd zr(k, k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) zr(r, c) = line.z(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(zr);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 1e-12 * std::max(1.0, smax)))
    throw ParseError(where, "degenerate line impedance");
  Eigen::MatrixXcd yr = zr.inverse();
  Eigen::Matrix3cd y = Eigen::Matrix3cd::Zero();
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) y(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]) = yr(r, c);
  return y;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  }
  void unite(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

}  // namespace

AdmittanceBlocks assemble_admittance(const FeederModel& feeder) {
  validate_feeder(feeder);
  const int n = feeder.n_buses;
  const int dim = 3 * (n + 1);

  UnionFind uf(n + 1);
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(dim, dim);

  auto block = [&](int bus) { return 3 * bus; };

  for (std::size_t l = 0; l < feeder.lines.size(); ++l) {
    const auto& line = feeder.lines[l];
    const Eigen::Matrix3cd ys = series_admittance(line, "lines[" + std::to_string(l) + "]");
    const int i = block(line.from_bus);
    const int j = block(line.to_bus);
    y.block<3, 3>(i, i) += ys;
    y.block<3, 3>(j, j) += ys;
    y.block<3, 3>(i, j) -= ys;
    y.block<3, 3>(j, i) -= ys;
    uf.unite(line.from_bus, line.to_bus);
  }

  for (int bus = 1; bus <= n; ++bus) {
    if (uf.find(bus) != uf.find(0)) throw ParseError("lines", "disconnected feeder");
  }

  // Unit tie to the slack for bus-phases no line touches. Keeps yll
  // invertible; the tied slots see zero injection and stay decoupled.
  for (int bus = 1; bus <= n; ++bus) {
    for (int p = 0; p < 3; ++p) {
      if (feeder.bus_phase_present(bus, p)) continue;
      const int bi = block(bus) + p;
      const int b0 = p;
      y(bi, bi) += 1.0;
      y(b0, b0) += 1.0;
      y(bi, b0) -= 1.0;
      y(b0, bi) -= 1.0;
    }
  }

  AdmittanceBlocks out;
  out.y00 = y.block<3, 3>(0, 0);
  out.y0l = y.block(0, 3, 3, 3 * n);
  out.yl0 = y.block(3, 0, 3 * n, 3);
  out.yll = y.block(3, 3, 3 * n, 3 * n);
  return out;
}

}  // namespace flexagg
