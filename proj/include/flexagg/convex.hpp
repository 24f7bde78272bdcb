#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <utility>
#include <vector>

#include "flexagg/errors.hpp"

namespace flexagg {

/// Canonical convex program:
///   minimize   1/2 x' quad x + lin' x + constant
///   subject to eq x = eq_rhs
///              ineq x <= ineq_rhs
///              x_ip^2 + x_iq^2 <= radius^2   (disks)
/// quad must be positive semidefinite and radii nonnegative.
struct ConvexProgram {
  int n = 0;
  Eigen::SparseMatrix<double> quad;
  Eigen::VectorXd lin;
  double constant = 0.0;

  Eigen::SparseMatrix<double> eq;
  Eigen::VectorXd eq_rhs;

  Eigen::SparseMatrix<double> ineq;
  Eigen::VectorXd ineq_rhs;

  struct Disk {
    int ip = 0, iq = 0;
    double radius = 0.0;
  };
  std::vector<Disk> disks;

  double objective_at(const Eigen::VectorXd& x) const {
    return 0.5 * x.dot(quad * x) + lin.dot(x) + constant;
  }
};

/// Incremental assembly of a ConvexProgram. Inequality rows are normalized
/// to unit infinity-norm so tolerances mean the same thing across
/// mixed-unit models.
class ProgramBuilder {
 public:
  using Terms = std::vector<std::pair<int, double>>;

  explicit ProgramBuilder(int n) : n_(n), lin_(Eigen::VectorXd::Zero(n)) {}

  int n() const { return n_; }

  void obj_lin(int i, double v) { lin_[i] += v; }
  void obj_quad(int i, int j, double v);  // adds v*x_i*x_j to the objective
  void obj_const(double v) { constant_ += v; }
  /// Adds coef * (terms . x + offset)^2 to the objective.
  void obj_square(const Terms& terms, double offset, double coef);

  void add_eq(const Terms& terms, double rhs);
  void add_le(const Terms& terms, double ub);
  void add_ge(const Terms& terms, double lb);
  void add_range(const Terms& terms, double lb, double ub);
  void add_box(int var, double lo, double hi);  // infinite sides skipped
  void add_disk(int ip, int iq, double radius);

  ConvexProgram build();

 private:
  int n_ = 0;
  std::vector<Eigen::Triplet<double>> quad_, eq_, ineq_;
  Eigen::VectorXd lin_;
  double constant_ = 0.0;
  std::vector<double> eq_rhs_, ineq_rhs_;
  std::vector<ConvexProgram::Disk> disks_;
};

struct SolveOptions {
  double tol = 1e-8;
  int max_iter = 100;
};

struct ConvexSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
  double stationarity = 0.0;   // dual residual, infinity norm
  double eq_residual = 0.0;    // equality violation, infinity norm
  double ineq_residual = 0.0;  // worst inequality/disk violation
  double gap = 0.0;            // mean complementarity
};

/// Primal-dual interior point with a Mehrotra predictor-corrector step.
/// Throws InfeasibleError when a phase-1 solve certifies an empty feasible
/// set, NumericalError("solver stalled ...") when neither convergence nor
/// infeasibility can be established.
ConvexSolution solve_convex(const ConvexProgram& program, const SolveOptions& opts = {});

}  // namespace flexagg
