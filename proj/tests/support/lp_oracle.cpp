#include "lp_oracle.hpp"

#include <vector>

namespace flexagg::testing {

LpResult lp_enumerate_vertices(const Eigen::VectorXd& c, const Eigen::MatrixXd& G,
                               const Eigen::VectorXd& h) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(G.rows());
  LpResult best;
  best.value = -std::numeric_limits<double>::infinity();
  if (m < n) return best;

  std::vector<int> pick(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pick[static_cast<std::size_t>(i)] = i;
  Eigen::MatrixXd sub(n, n);
  Eigen::VectorXd rhs(n);
  while (true) {
    for (int r = 0; r < n; ++r) {
      sub.row(r) = G.row(pick[static_cast<std::size_t>(r)]);
      rhs[r] = h[pick[static_cast<std::size_t>(r)]];
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
    if (lu.isInvertible()) {
      const Eigen::VectorXd x = lu.solve(rhs);
      if (((G * x - h).array() <= 1e-9).all()) {
        best.feasible = true;
        const double value = c.dot(x);
        if (value > best.value) {
          best.value = value;
          best.x = x;
        }
      }
    }
    // next n-combination of {0..m-1}
    int i = n - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == m - n + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j)
      pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

namespace {

constexpr double kEps = 1e-9;

struct Tableau {
  Eigen::MatrixXd a;  // rows x cols, last column is the rhs
  std::vector<int> basis;

  int rows() const { return static_cast<int>(a.rows()); }
  int cols() const { return static_cast<int>(a.cols()) - 1; }

  void pivot(int row, int col) {
    a.row(row) /= a(row, col);
    for (int r = 0; r < rows(); ++r) {
      if (r == row || a(r, col) == 0.0) continue;
      a.row(r) -= a(r, col) * a.row(row);
    }
    basis[static_cast<std::size_t>(row)] = col;
  }
};

/// Minimize cost over the tableau with Bland's rule. banned columns (the
/// artificials in phase two) never enter. Returns false on unboundedness.
bool simplex_min(Tableau& t, const Eigen::VectorXd& cost, const std::vector<bool>& banned) {
  while (true) {
    Eigen::VectorXd cb(t.rows());
    for (int i = 0; i < t.rows(); ++i) cb[i] = cost[t.basis[static_cast<std::size_t>(i)]];
    int enter = -1;
    for (int j = 0; j < t.cols(); ++j) {
      if (banned[static_cast<std::size_t>(j)]) continue;
      const double reduced = cost[j] - cb.dot(t.a.col(j));
      if (reduced < -kEps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return true;
    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < t.rows(); ++i) {
      if (t.a(i, enter) <= kEps) continue;
      const double ratio = t.a(i, t.cols()) / t.a(i, enter);
      if (leave < 0 || ratio < best_ratio - kEps ||
          (ratio <= best_ratio + kEps &&
           t.basis[static_cast<std::size_t>(i)] < t.basis[static_cast<std::size_t>(leave)]))
      {
        leave = i;
        best_ratio = ratio;
      }
    }
    if (leave < 0) return false;
    t.pivot(leave, enter);
  }
}

}  // namespace

LpResult lp_simplex(const Eigen::VectorXd& c, const Eigen::MatrixXd& G,
                    const Eigen::VectorXd& h) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(G.rows());
  // w = [x+ (n); x- (n); slack (m); artificial (<= m)]
  const int n_slack = m;
  int n_art = 0;
  for (int i = 0; i < m; ++i)
    if (h[i] < 0.0) ++n_art;
  const int total = 2 * n + n_slack + n_art;

  Tableau t;
  t.a = Eigen::MatrixXd::Zero(m, total + 1);
  t.basis.assign(static_cast<std::size_t>(m), -1);
  int art = 0;
  for (int i = 0; i < m; ++i) {
    const double sign = h[i] < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) {
      t.a(i, j) = sign * G(i, j);
      t.a(i, n + j) = -sign * G(i, j);
    }
    t.a(i, 2 * n + i) = sign;  // slack (surplus when the row was flipped)
    t.a(i, total) = sign * h[i];
    if (h[i] < 0.0) {
      t.a(i, 2 * n + n_slack + art) = 1.0;
      t.basis[static_cast<std::size_t>(i)] = 2 * n + n_slack + art;
      ++art;
    } else {
      t.basis[static_cast<std::size_t>(i)] = 2 * n + i;
    }
  }

  LpResult out;
  const std::vector<bool> none(static_cast<std::size_t>(total), false);
  if (n_art > 0) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total);
    for (int j = 2 * n + n_slack; j < total; ++j) phase1[j] = 1.0;
    if (!simplex_min(t, phase1, none)) return out;
    double infeas = 0.0;
    for (int i = 0; i < m; ++i)
      if (t.basis[static_cast<std::size_t>(i)] >= 2 * n + n_slack) infeas += t.a(i, total);
    if (infeas > 1e-7) return out;  // infeasible
  }

  std::vector<bool> banned(static_cast<std::size_t>(total), false);
  for (int j = 2 * n + n_slack; j < total; ++j) banned[static_cast<std::size_t>(j)] = true;
  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(total);
  for (int j = 0; j < n; ++j) {
    phase2[j] = -c[j];
    phase2[n + j] = c[j];
  }
  out.feasible = true;
  if (!simplex_min(t, phase2, banned)) {
    out.bounded = false;
    return out;
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(total);
  for (int i = 0; i < m; ++i) w[t.basis[static_cast<std::size_t>(i)]] = t.a(i, total);
  out.x = w.head(n) - w.segment(n, n);
  out.value = c.dot(out.x);
  return out;
}

}  // namespace flexagg::testing
