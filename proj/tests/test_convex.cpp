#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "flexagg/convex.hpp"
#include "flexagg/rng.hpp"

using namespace flexagg;

TEST_CASE("scalar quadratic with an active bound") {
  ProgramBuilder b(1);
  b.obj_quad(0, 0, 1.0);  // x^2
  b.add_ge({{0, 1.0}}, 1.0);
  const auto sol = solve_convex(b.build());
  CHECK(std::abs(sol.x[0] - 1.0) < 1e-6);
  CHECK(sol.stationarity < 1e-6);
  CHECK(sol.gap < 1e-6);
}

TEST_CASE("linear objective on a disk lands on the boundary") {
  ProgramBuilder b(2);
  b.obj_lin(0, -1.0);  // max p
  b.add_disk(0, 1, 1.0);
  const auto sol = solve_convex(b.build());
  CHECK(std::abs(sol.x[0] - 1.0) < 1e-6);
  CHECK(std::abs(sol.x[1]) < 1e-5);
}

TEST_CASE("contradictory linear rows raise the infeasibility signal") {
  ProgramBuilder b(1);
  b.obj_quad(0, 0, 1.0);
  b.add_le({{0, 1.0}}, 0.0);
  b.add_ge({{0, 1.0}}, 1.0);
  CHECK_THROWS_AS(solve_convex(b.build()), InfeasibleError);
}

TEST_CASE("equality-constrained quadratic solves in one shot") {
  ProgramBuilder b(2);
  b.obj_square({{0, 1.0}}, -3.0, 1.0);  // (x-3)^2
  b.obj_square({{1, 1.0}}, -1.0, 2.0);  // 2(y-1)^2
  b.add_eq({{0, 1.0}, {1, 1.0}}, 1.0);
  const auto sol = solve_convex(b.build());
  // stationarity: 2(x-3) = 4(y-1) with x + y = 1 -> x = 1, y = 0
  CHECK(std::abs(sol.x[0] - 1.0) < 1e-7);
  CHECK(std::abs(sol.x[1]) < 1e-7);
}

TEST_CASE("inconsistent equality rows are reported infeasible") {
  ProgramBuilder b(1);
  b.obj_quad(0, 0, 1.0);
  b.add_eq({{0, 1.0}}, 0.0);
  b.add_eq({{0, 1.0}}, 1.0);
  CHECK_THROWS_AS(solve_convex(b.build()), InfeasibleError);
}

TEST_CASE("random separable box quadratics match the clamp oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = rng.uniform_int(1, 12);
    ProgramBuilder b(n);
    Eigen::VectorXd target(n), lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      target[i] = rng.uniform(-3, 3);
      lo[i] = rng.uniform(-2, 0);
      hi[i] = lo[i] + rng.uniform(0.1, 2.5);
      const double w = rng.uniform(0.2, 4.0);
      b.obj_square({{i, 1.0}}, -target[i], w);
      b.add_box(i, lo[i], hi[i]);
    }
    const auto sol = solve_convex(b.build());
    for (int i = 0; i < n; ++i) {
      const double want = std::clamp(target[i], lo[i], hi[i]);
      CHECK(std::abs(sol.x[i] - want) < 1e-6);
    }
  }
}

TEST_CASE("random box LPs match the sign oracle") {
  Rng rng(22);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = rng.uniform_int(1, 10);
    ProgramBuilder b(n);
    Eigen::VectorXd c(n), lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      c[i] = rng.uniform(-1, 1);
      if (std::abs(c[i]) < 0.05) c[i] = 0.1;  // keep the optimum a unique corner
      lo[i] = rng.uniform(-2, 0);
      hi[i] = lo[i] + rng.uniform(0.5, 2.0);
      b.obj_lin(i, c[i]);
      b.add_box(i, lo[i], hi[i]);
    }
    const auto sol = solve_convex(b.build());
    for (int i = 0; i < n; ++i) {
      const double want = c[i] > 0 ? lo[i] : hi[i];
      CHECK(std::abs(sol.x[i] - want) < 1e-6);
    }
  }
}

TEST_CASE("quadratic pulled outside a disk projects onto it") {
  ProgramBuilder b(2);
  b.obj_square({{0, 1.0}}, -2.0, 1.0);  // (p-2)^2
  b.obj_quad(1, 1, 1.0);                // + q^2
  b.add_disk(0, 1, 1.0);
  const auto sol = solve_convex(b.build());
  CHECK(std::abs(sol.x[0] - 1.0) < 1e-6);
  CHECK(std::abs(sol.x[1]) < 1e-6);
}

TEST_CASE("disk combined with an equality row") {
  ProgramBuilder b(2);
  b.obj_lin(1, -1.0);  // max q
  b.add_disk(0, 1, 2.0);
  b.add_eq({{0, 1.0}}, 1.0);
  const auto sol = solve_convex(b.build());
  CHECK(std::abs(sol.x[0] - 1.0) < 1e-7);
  CHECK(std::abs(sol.x[1] - std::sqrt(3.0)) < 1e-6);
}

TEST_CASE("reported residuals certify the returned point") {
  ProgramBuilder b(3);
  b.obj_square({{0, 1.0}, {1, 0.5}}, -1.0, 1.0);
  b.obj_square({{2, 1.0}}, 0.3, 2.0);
  b.add_box(0, -1.0, 1.0);
  b.add_box(1, -1.0, 1.0);
  b.add_box(2, -1.0, 1.0);
  b.add_le({{0, 1.0}, {1, 1.0}, {2, 1.0}}, 1.5);
  b.add_disk(0, 1, 0.9);
  const SolveOptions opts;
  const auto sol = solve_convex(b.build(), opts);
  CHECK(sol.eq_residual <= opts.tol);
  CHECK(sol.ineq_residual <= opts.tol);
  CHECK(sol.gap <= 10 * opts.tol);
  CHECK(sol.iterations > 0);
}

TEST_CASE("unbounded descent is reported as a numerical failure") {
  ProgramBuilder b(1);
  b.obj_lin(0, -1.0);
  b.add_ge({{0, 1.0}}, 1.0);
  CHECK_THROWS_AS(solve_convex(b.build()), NumericalError);
}

TEST_CASE("empty program returns its constant") {
  ProgramBuilder b(0);
  b.obj_const(3.5);
  const auto sol = solve_convex(b.build());
  CHECK(sol.objective == doctest::Approx(3.5));
}
