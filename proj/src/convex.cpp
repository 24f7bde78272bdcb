#include "flexagg/convex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include <Eigen/SparseLU>

namespace flexagg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct DiskCon {
  int ip = 0, iq = 0;
  double r2 = 0.0;
};

/// Inequalities in the form c(x) <= 0. When relax_col >= 0 every constraint
/// is shifted by -x[relax_col] (used by the phase-1 feasibility probe).
struct Constraints {
  Eigen::SparseMatrix<double> g;   // rows of Gx - h
  Eigen::SparseMatrix<double> gt;  // cached transpose
  Eigen::VectorXd h;
  std::vector<DiskCon> disks;
  int relax_col = -1;

  int count() const { return static_cast<int>(g.rows()) + static_cast<int>(disks.size()); }

  Eigen::VectorXd eval(const Eigen::VectorXd& x) const {
    Eigen::VectorXd c(count());
    const int ml = static_cast<int>(g.rows());
    c.head(ml) = g * x - h;
    for (std::size_t d = 0; d < disks.size(); ++d) {
      const auto& k = disks[d];
      c[ml + static_cast<int>(d)] = x[k.ip] * x[k.ip] + x[k.iq] * x[k.iq] - k.r2;
    }
    if (relax_col >= 0) c.array() -= x[relax_col];
    return c;
  }

  /// J(x)^T w for a row-weight vector w.
  Eigen::VectorXd jac_t(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const {
    const int ml = static_cast<int>(g.rows());
    Eigen::VectorXd out = gt * w.head(ml);
    for (std::size_t d = 0; d < disks.size(); ++d) {
      const auto& k = disks[d];
      const double wd = w[ml + static_cast<int>(d)];
      out[k.ip] += 2.0 * x[k.ip] * wd;
      out[k.iq] += 2.0 * x[k.iq] * wd;
    }
    if (relax_col >= 0) out[relax_col] -= w.sum();
    return out;
  }

  /// J(x) dx.
  Eigen::VectorXd jac(const Eigen::VectorXd& x, const Eigen::VectorXd& dx) const {
    const int ml = static_cast<int>(g.rows());
    Eigen::VectorXd out(count());
    out.head(ml) = g * dx;
    for (std::size_t d = 0; d < disks.size(); ++d) {
      const auto& k = disks[d];
      out[ml + static_cast<int>(d)] = 2.0 * x[k.ip] * dx[k.ip] + 2.0 * x[k.iq] * dx[k.iq];
    }
    if (relax_col >= 0) out.array() -= dx[relax_col];
    return out;
  }
};

struct CoreProblem {
  int n = 0;
  Eigen::SparseMatrix<double> quad;
  Eigen::VectorXd lin;
  Eigen::SparseMatrix<double> eq;
  Eigen::VectorXd eq_rhs;
  Constraints con;
};

struct CoreResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double stationarity = 0.0, eq_residual = 0.0, ineq_residual = 0.0, gap = 0.0;
  bool converged = false;
};

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
  return a;
}

/// Interior-point core. Inequality multipliers/slacks are kept strictly
/// positive; equality duals are free. early_stop lets phase-1 bail out as
/// soon as a strictly feasible point appears.
CoreResult run_ipm(const CoreProblem& pr, Eigen::VectorXd x, double tol, int max_iter,
                   const std::function<bool(const Eigen::VectorXd&)>& early_stop = {}) {
  const int n = pr.n;
  const int p = static_cast<int>(pr.eq.rows());
  const int m = pr.con.count();
  const int ml = static_cast<int>(pr.con.g.rows());

  CoreResult res;
  if (m == 0) {
    // Pure (equality-constrained) quadratic program: one KKT solve.
    Eigen::SparseMatrix<double> kkt(n + p, n + p);
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < pr.quad.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pr.quad, k); it; ++it)
        trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, 1e-11);
    for (int k = 0; k < pr.eq.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pr.eq, k); it; ++it) {
        trip.emplace_back(n + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        trip.emplace_back(static_cast<int>(it.col()), n + static_cast<int>(it.row()), it.value());
      }
    for (int i = 0; i < p; ++i) trip.emplace_back(n + i, n + i, -1e-11);
    kkt.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(kkt);
    if (lu.info() != Eigen::Success)
      throw NumericalError("solver stalled: singular KKT system (objective may be unbounded)");
    Eigen::VectorXd rhs(n + p);
    rhs.head(n) = -pr.lin;
    rhs.tail(p) = pr.eq_rhs;
    const Eigen::VectorXd sol = lu.solve(rhs);
    res.x = sol.head(n);
    res.iterations = 1;
    res.stationarity = (pr.quad * res.x + pr.lin +
                        (p ? Eigen::VectorXd(pr.eq.transpose() * sol.tail(p)) : Eigen::VectorXd::Zero(n)))
                           .cwiseAbs()
                           .maxCoeff();
    res.eq_residual = p ? (pr.eq * res.x - pr.eq_rhs).cwiseAbs().maxCoeff() : 0.0;
    res.converged = res.stationarity <= 1e-6 && res.eq_residual <= 1e-6 && res.x.allFinite();
    if (!res.x.allFinite())
      throw NumericalError("solver stalled: KKT solve produced non-finite values");
    return res;
  }

  Eigen::VectorXd c = pr.con.eval(x);
  Eigen::VectorXd s(m), lam = Eigen::VectorXd::Ones(m);
  for (int i = 0; i < m; ++i) s[i] = std::max(1.0, -c[i]);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(p);

  // KKT pattern is constant across iterations; analyze it once.
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool analyzed = false;
  Eigen::SparseMatrix<double> kkt(n + p, n + p);

  int tiny_steps = 0;
  int polish_iters = -1;  // iterations spent past the relative tolerance
  for (int iter = 1; iter <= max_iter; ++iter) {
    c = pr.con.eval(x);
    const Eigen::VectorXd r_ineq = c + s;
    const Eigen::VectorXd r_eq = p ? Eigen::VectorXd(pr.eq * x - pr.eq_rhs) : Eigen::VectorXd();
    const Eigen::VectorXd grad_obj = pr.quad * x + pr.lin;
    const Eigen::VectorXd r_dual =
        grad_obj + (p ? Eigen::VectorXd(pr.eq.transpose() * y) : Eigen::VectorXd::Zero(n)) +
        pr.con.jac_t(x, lam);
    const double mu = lam.dot(s) / m;

    res.x = x;
    res.iterations = iter;
    res.stationarity = r_dual.cwiseAbs().maxCoeff();
    res.eq_residual = p ? r_eq.cwiseAbs().maxCoeff() : 0.0;
    res.ineq_residual = std::max(0.0, c.maxCoeff());
    res.gap = mu;

    const double scale_d = 1.0 + pr.lin.cwiseAbs().maxCoeff() + grad_obj.cwiseAbs().maxCoeff();
    const double scale_g =
        1.0 + std::abs(0.5 * x.dot(pr.quad * x) + pr.lin.dot(x));
    const bool rel_ok = res.stationarity <= tol * scale_d && res.eq_residual <= tol &&
                        res.ineq_residual <= tol && mu <= tol * scale_g;
    if (rel_ok) {
      // Polish toward an absolute gap; badly scaled objectives otherwise
      // stop with x still ~sqrt(tol) away from the active set.
      if (mu <= tol || polish_iters >= 15) {
        res.converged = true;
        return res;
      }
      polish_iters = std::max(polish_iters + 1, 0);
    }
    if (early_stop && early_stop(x)) {
      res.converged = true;
      return res;
    }
    if (x.cwiseAbs().maxCoeff() > 1e10)
      throw NumericalError("solver stalled: iterates diverged (objective may be unbounded)");

    // Assemble the condensed KKT matrix.
    const Eigen::VectorXd w = lam.cwiseQuotient(s);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(pr.quad.nonZeros() + 9 * m + 2 * pr.eq.nonZeros() + n + p));
    for (int k = 0; k < pr.quad.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pr.quad, k); it; ++it)
        trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    {
      // linear rows: G' W G
      Eigen::SparseMatrix<double> gw = pr.con.g;
      for (int k = 0; k < gw.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(gw, k); it; ++it)
          it.valueRef() *= w[it.row()];
      const Eigen::SparseMatrix<double> gtwg = pr.con.gt * gw;
      for (int k = 0; k < gtwg.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(gtwg, k); it; ++it)
          trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
      if (pr.con.relax_col >= 0) {
        // cross terms with the relax column
        const int rc = pr.con.relax_col;
        const Eigen::VectorXd gtw = pr.con.gt * w.head(ml);
        for (int i = 0; i < n; ++i) {
          if (gtw[i] == 0.0 && i != rc) continue;
          trip.emplace_back(i, rc, -gtw[i]);
          trip.emplace_back(rc, i, -gtw[i]);
        }
        trip.emplace_back(rc, rc, w.head(ml).sum());
      }
    }
    for (std::size_t d = 0; d < pr.con.disks.size(); ++d) {
      const auto& k = pr.con.disks[d];
      const int row = ml + static_cast<int>(d);
      const double wd = w[row];
      const double gp = 2.0 * x[k.ip], gq = 2.0 * x[k.iq];
      // curvature of the disk plus its rank-one barrier term
      trip.emplace_back(k.ip, k.ip, 2.0 * lam[row] + wd * gp * gp);
      trip.emplace_back(k.iq, k.iq, 2.0 * lam[row] + wd * gq * gq);
      trip.emplace_back(k.ip, k.iq, wd * gp * gq);
      trip.emplace_back(k.iq, k.ip, wd * gp * gq);
      if (pr.con.relax_col >= 0) {
        const int rc = pr.con.relax_col;
        trip.emplace_back(k.ip, rc, -wd * gp);
        trip.emplace_back(rc, k.ip, -wd * gp);
        trip.emplace_back(k.iq, rc, -wd * gq);
        trip.emplace_back(rc, k.iq, -wd * gq);
        trip.emplace_back(rc, rc, wd);
      }
    }
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, 1e-11);
    for (int k = 0; k < pr.eq.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pr.eq, k); it; ++it) {
        trip.emplace_back(n + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        trip.emplace_back(static_cast<int>(it.col()), n + static_cast<int>(it.row()), it.value());
      }
    for (int i = 0; i < p; ++i) trip.emplace_back(n + i, n + i, -1e-11);
    kkt.setFromTriplets(trip.begin(), trip.end());

    if (!analyzed) {
      lu.analyzePattern(kkt);
      analyzed = true;
    }
    lu.factorize(kkt);
    if (lu.info() != Eigen::Success) throw NumericalError("solver stalled: KKT factorization failed");

    auto solve_step = [&](const Eigen::VectorXd& rc) {
      // rc is the target of lam.*ds + s.*dlam = -rc
      Eigen::VectorXd rhs(n + p);
      rhs.head(n) = -r_dual - pr.con.jac_t(x, (lam.cwiseProduct(r_ineq) - rc).cwiseQuotient(s));
      if (p) rhs.tail(p) = -r_eq;
      const Eigen::VectorXd sol = lu.solve(rhs);
      struct Step {
        Eigen::VectorXd dx, dy, ds, dlam;
      } st;
      st.dx = sol.head(n);
      st.dy = p ? Eigen::VectorXd(sol.tail(p)) : Eigen::VectorXd();
      st.ds = -r_ineq - pr.con.jac(x, st.dx);
      st.dlam = (-rc - lam.cwiseProduct(st.ds)).cwiseQuotient(s);
      return st;
    };

    // predictor
    const auto aff = solve_step(lam.cwiseProduct(s));
    const double ap_aff = max_step(s, aff.ds);
    const double ad_aff = max_step(lam, aff.dlam);
    const double mu_aff =
        (lam + ad_aff * aff.dlam).dot(s + ap_aff * aff.ds) / m;
    double sigma = std::pow(mu_aff / mu, 3);
    sigma = std::min(std::max(sigma, 1e-8), 0.99);

    // corrector
    const Eigen::VectorXd rc = lam.cwiseProduct(s) + aff.dlam.cwiseProduct(aff.ds) -
                               Eigen::VectorXd::Constant(m, sigma * mu);
    const auto st = solve_step(rc);

    const double frac = std::max(0.99, 1.0 - mu);
    const double ap = std::min(1.0, frac * max_step(s, st.ds));
    const double ad = std::min(1.0, frac * max_step(lam, st.dlam));

    x += ap * st.dx;
    s += ap * st.ds;
    lam += ad * st.dlam;
    if (p) y += ad * st.dy;

    if (std::max(ap, ad) < 1e-10) {
      if (++tiny_steps >= 3) break;
    } else {
      tiny_steps = 0;
    }
  }
  return res;
}

Eigen::VectorXd equality_start(const CoreProblem& pr) {
  const int p = static_cast<int>(pr.eq.rows());
  if (p == 0) return Eigen::VectorXd::Zero(pr.n);
  const Eigen::MatrixXd et = Eigen::MatrixXd(pr.eq);
  const Eigen::MatrixXd gram = et * et.transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const Eigen::VectorXd z = ldlt.solve(pr.eq_rhs);
  Eigen::VectorXd x = et.transpose() * z;
  const double res = (et * x - pr.eq_rhs).cwiseAbs().maxCoeff();
  if (res > 1e-7 * (1.0 + pr.eq_rhs.cwiseAbs().maxCoeff()))
    throw InfeasibleError("infeasible: inconsistent equality rows (residual " +
                          std::to_string(res) + ")");
  return x;
}

/// min t s.t. c_i(x) <= t. Returns the best worst-violation found and a
/// witness point.
struct FeasProbe {
  double worst = 0.0;
  Eigen::VectorXd x;
  bool converged = false;
};

FeasProbe phase1(const CoreProblem& pr, double tol) {
  CoreProblem ext;
  ext.n = pr.n + 1;
  ext.quad.resize(ext.n, ext.n);
  ext.lin = Eigen::VectorXd::Zero(ext.n);
  ext.lin[pr.n] = 1.0;
  {
    std::vector<Eigen::Triplet<double>> t;
    t.emplace_back(pr.n, pr.n, 1e-8);  // keeps t from drifting when flat
    ext.quad.setFromTriplets(t.begin(), t.end());
  }
  ext.eq.resize(pr.eq.rows(), ext.n);
  {
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < pr.eq.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pr.eq, k); it; ++it)
        t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    ext.eq.setFromTriplets(t.begin(), t.end());
  }
  ext.eq_rhs = pr.eq_rhs;
  ext.con.relax_col = pr.n;
  ext.con.disks = pr.con.disks;
  ext.con.h = pr.con.h;
  ext.con.g.resize(pr.con.g.rows(), ext.n);
  {
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < pr.con.g.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(pr.con.g, k); it; ++it)
        t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    ext.con.g.setFromTriplets(t.begin(), t.end());
  }
  ext.con.gt = ext.con.g.transpose();

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(ext.n);
  x0.head(pr.n) = equality_start(pr);
  x0[pr.n] = pr.con.eval(x0.head(pr.n)).maxCoeff() + 1.0;

  auto strictly_feasible = [&](const Eigen::VectorXd& xt) {
    return pr.con.eval(xt.head(pr.n)).maxCoeff() < -10.0 * tol;
  };
  const auto r = run_ipm(ext, x0, tol, 200, strictly_feasible);
  FeasProbe probe;
  probe.x = r.x.head(pr.n);
  probe.worst = pr.con.eval(probe.x).maxCoeff();
  probe.converged = r.converged;
  return probe;
}

CoreProblem make_core(const ConvexProgram& program) {
  CoreProblem core;
  core.n = program.n;
  core.quad = program.quad;
  core.lin = program.lin;
  core.eq = program.eq;
  core.eq_rhs = program.eq_rhs;
  core.con.g = program.ineq;
  core.con.gt = program.ineq.transpose();
  core.con.h = program.ineq_rhs;
  for (const auto& d : program.disks) core.con.disks.push_back({d.ip, d.iq, d.radius * d.radius});
  return core;
}

ConvexSolution to_solution(const ConvexProgram& program, const CoreResult& r) {
  ConvexSolution sol;
  sol.x = r.x;
  sol.objective = program.objective_at(r.x);
  sol.iterations = r.iterations;
  sol.stationarity = r.stationarity;
  sol.eq_residual = r.eq_residual;
  sol.ineq_residual = r.ineq_residual;
  sol.gap = r.gap;
  return sol;
}

}  // namespace

void ProgramBuilder::obj_quad(int i, int j, double v) {
  if (i == j) {
    quad_.emplace_back(i, i, 2.0 * v);
  } else {
    quad_.emplace_back(i, j, v);
    quad_.emplace_back(j, i, v);
  }
}

void ProgramBuilder::obj_square(const Terms& terms, double offset, double coef) {
  if (coef == 0.0) return;
  for (std::size_t a = 0; a < terms.size(); ++a) {
    obj_quad(terms[a].first, terms[a].first, coef * terms[a].second * terms[a].second);
    for (std::size_t b = a + 1; b < terms.size(); ++b)
      obj_quad(terms[a].first, terms[b].first, 2.0 * coef * terms[a].second * terms[b].second);
    lin_[terms[a].first] += 2.0 * coef * offset * terms[a].second;
  }
  constant_ += coef * offset * offset;
}

void ProgramBuilder::add_eq(const Terms& terms, double rhs) {
  const int row = static_cast<int>(eq_rhs_.size());
  for (const auto& [i, v] : terms)
    if (v != 0.0) eq_.emplace_back(row, i, v);
  eq_rhs_.push_back(rhs);
}

void ProgramBuilder::add_le(const Terms& terms, double ub) {
  double norm = 0.0;
  for (const auto& [i, v] : terms) norm = std::max(norm, std::abs(v));
  if (norm == 0.0) {
    if (ub < 0.0) throw Error("zero constraint row with negative bound");
    return;
  }
  const int row = static_cast<int>(ineq_rhs_.size());
  for (const auto& [i, v] : terms)
    if (v != 0.0) ineq_.emplace_back(row, i, v / norm);
  ineq_rhs_.push_back(ub / norm);
}

void ProgramBuilder::add_ge(const Terms& terms, double lb) {
  Terms neg = terms;
  for (auto& t : neg) t.second = -t.second;
  add_le(neg, -lb);
}

void ProgramBuilder::add_range(const Terms& terms, double lb, double ub) {
  if (ub < kInf) add_le(terms, ub);
  if (lb > -kInf) add_ge(terms, lb);
}

void ProgramBuilder::add_box(int var, double lo, double hi) {
  if (hi < kInf) add_le({{var, 1.0}}, hi);
  if (lo > -kInf) add_ge({{var, 1.0}}, lo);
}

void ProgramBuilder::add_disk(int ip, int iq, double radius) {
  if (radius < 0.0) throw Error("disk radius must be nonnegative");
  disks_.push_back({ip, iq, radius});
}

ConvexProgram ProgramBuilder::build() {
  ConvexProgram p;
  p.n = n_;
  p.quad.resize(n_, n_);
  p.quad.setFromTriplets(quad_.begin(), quad_.end());
  p.lin = lin_;
  p.constant = constant_;
  p.eq.resize(static_cast<Eigen::Index>(eq_rhs_.size()), n_);
  p.eq.setFromTriplets(eq_.begin(), eq_.end());
  p.eq_rhs = Eigen::Map<Eigen::VectorXd>(eq_rhs_.data(), static_cast<Eigen::Index>(eq_rhs_.size()));
  p.ineq.resize(static_cast<Eigen::Index>(ineq_rhs_.size()), n_);
  p.ineq.setFromTriplets(ineq_.begin(), ineq_.end());
  p.ineq_rhs =
      Eigen::Map<Eigen::VectorXd>(ineq_rhs_.data(), static_cast<Eigen::Index>(ineq_rhs_.size()));
  p.disks = disks_;
  return p;
}

ConvexSolution solve_convex(const ConvexProgram& program, const SolveOptions& opts) {
  if (program.n == 0) {
    ConvexSolution sol;
    sol.x = Eigen::VectorXd();
    sol.objective = program.constant;
    sol.iterations = 0;
    return sol;
  }
  if (program.lin.size() != program.n) throw Error("layout mismatch");

  CoreProblem core = make_core(program);
  Eigen::VectorXd x0 = equality_start(core);
  CoreResult r;
  std::string stall_reason;
  try {
    r = run_ipm(core, x0, opts.tol, opts.max_iter);
    if (r.converged) return to_solution(program, r);
    std::ostringstream msg;
    msg << "solver stalled: stationarity " << r.stationarity << ", equality residual "
        << r.eq_residual << ", inequality violation " << r.ineq_residual << ", gap " << r.gap;
    stall_reason = msg.str();
  } catch (const NumericalError& e) {
    stall_reason = e.what();
  }

  // Could not converge: decide between infeasibility and a genuine stall.
  if (core.con.count() > 0) {
    FeasProbe probe;
    bool probed = false;
    try {
      probe = phase1(core, opts.tol);
      probed = true;
    } catch (const NumericalError&) {
    }
    if (probed && probe.converged && probe.worst > 100.0 * opts.tol) {
      std::ostringstream msg;
      msg << "infeasible: smallest achievable worst constraint violation is " << probe.worst;
      throw InfeasibleError(msg.str());
    }
    if (probed && probe.worst < 0.0) {
      // strictly feasible point found; retry the main solve from it
      try {
        r = run_ipm(core, probe.x, opts.tol, opts.max_iter);
        if (r.converged) return to_solution(program, r);
      } catch (const NumericalError&) {
      }
    }
  }
  throw NumericalError(stall_reason);
}

}  // namespace flexagg
