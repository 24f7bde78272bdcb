#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "flexagg/admittance.hpp"
#include "flexagg/compact.hpp"
#include "flexagg/rng.hpp"
#include "support/test_feeders.hpp"

using namespace flexagg;

namespace {

Eigen::MatrixXd constant_series(int horizon, double value) {
  return Eigen::MatrixXd::Constant(horizon, 3, value);
}

StorageUnit make_storage(const std::string& id, int bus, PhaseConnection conn, int horizon,
                         double p_max, double e_lo, double e_hi, double e_init, double kappa) {
  StorageUnit u;
  u.id = id;
  u.bus = bus;
  u.conn = conn;
  u.p_lower = constant_series(horizon, -p_max);
  u.p_upper = constant_series(horizon, p_max);
  u.s_cap = constant_series(horizon, 4.0 * p_max + 1.0);
  u.e_lower = e_lo;
  u.e_upper = e_hi;
  u.e_init = e_init;
  u.kappa = kappa;
  return u;
}

}  // namespace

TEST_CASE("state of charge recursion") {
  StorageUnit u = make_storage("es", 1, PhaseConnection::wye({0}), 1, 5, 0, 10, 5, 1.0);
  Eigen::VectorXd p(1);
  p << 2.0;
  CHECK(soc_trajectory(u, p, 1.0)[0] == doctest::Approx(3.0));

  u.e_init = 10.0;
  u.kappa = 0.9;
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  const auto e = soc_trajectory(u, zero, 1.0);
  CHECK(e[0] == doctest::Approx(9.0));
  CHECK(e[1] == doctest::Approx(8.1));
}

TEST_CASE("recursion matches the cumulative closed form on random series") {
  Rng rng(11);
  StorageUnit u = make_storage("es", 1, PhaseConnection::wye({0}), 8, 5, 0, 20, 7, 0.95);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd p(8);
    for (int t = 0; t < 8; ++t) p[t] = rng.uniform(-3, 3);
    const auto e = soc_trajectory(u, p, 0.5);
    for (int t = 0; t < 8; ++t) {
      double cum = std::pow(u.kappa, t + 1) * u.e_init;
      for (int tau = 0; tau <= t; ++tau) cum -= 0.5 * std::pow(u.kappa, t - tau) * p[tau];
      CHECK(std::abs(e[t] - cum) < 1e-12);
    }
  }
}

TEST_CASE("cumulative state-of-charge rows") {
  SUBCASE("unit retention") {
    StorageUnit u = make_storage("es", 1, PhaseConnection::wye({0}), 2, 5, 0, 2, 1, 1.0);
    const auto band = cumulative_soc_bounds(u, 2, 1.0);
    CHECK(band.lo[0] == doctest::Approx(-1.0));
    CHECK(band.hi[0] == doctest::Approx(1.0));
    CHECK(band.lo[1] == doctest::Approx(-1.0));
    CHECK(band.hi[1] == doctest::Approx(1.0));
    CHECK(band.weights[1][0] == doctest::Approx(1.0));
    CHECK(band.weights[1][1] == doctest::Approx(1.0));
  }
  SUBCASE("decaying retention") {
    StorageUnit u = make_storage("es", 1, PhaseConnection::wye({0}), 2, 5, 0, 4, 4, 0.5);
    const auto band = cumulative_soc_bounds(u, 2, 1.0);
    CHECK(band.weights[1][0] == doctest::Approx(0.5));
    CHECK(band.weights[1][1] == doctest::Approx(1.0));
    CHECK(band.lo[1] == doctest::Approx(-3.0));
    CHECK(band.hi[1] == doctest::Approx(1.0));
  }
}

TEST_CASE("row violations are exactly the state-of-charge deficits") {
  Rng rng(5);
  StorageUnit u = make_storage("es", 1, PhaseConnection::wye({0}), 6, 5, 1, 6, 3, 0.9);
  const double dt = 0.5;
  const auto band = cumulative_soc_bounds(u, 6, dt);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd p(6);
    for (int t = 0; t < 6; ++t) p[t] = rng.uniform(-4, 4);
    const auto e = soc_trajectory(u, p, dt);
    for (int t = 0; t < 6; ++t) {
      double acc = 0.0;
      for (int tau = 0; tau <= t; ++tau) acc += band.weights[static_cast<std::size_t>(t)][tau] * p[tau];
      const double row_violation =
          std::max({0.0, band.lo[t] - acc, acc - band.hi[t]});
      const double soc_violation =
          std::max({0.0, u.e_lower - e[t], e[t] - u.e_upper});
      CHECK(std::abs(dt * row_violation - soc_violation) < 1e-12);
    }
  }
}

TEST_CASE("indoor temperature recursion") {
  HvacUnit u;
  u.id = "hv";
  u.conn = PhaseConnection::wye({0});
  u.alpha = 0.1;
  u.beta = 2.0;
  u.f_init = 20.0;
  u.f_lower = 15.0;
  u.f_upper = 30.0;
  u.f_out = Eigen::VectorXd::Constant(1, 30.0);
  Eigen::VectorXd p(1);
  p << 1.0;
  CHECK(temp_trajectory(u, p, 1.0)[0] == doctest::Approx(21.5));

  SUBCASE("equilibrium with no drive") {
    u.f_out = Eigen::VectorXd::Constant(5, 20.0);
    const auto f = temp_trajectory(u, Eigen::VectorXd::Zero(5), 1.0);
    for (int t = 0; t < 5; ++t) CHECK(f[t] == doctest::Approx(20.0));
  }
  SUBCASE("cooling mode") {
    u.alpha = 0.2;
    u.beta = -2.0;
    u.f_init = 25.0;
    u.f_out = Eigen::VectorXd::Constant(1, 25.0);
    CHECK(temp_trajectory(u, p, 1.0)[0] == doctest::Approx(24.5));
  }
}

TEST_CASE("comfort rows match the recursion on random series") {
  Rng rng(9);
  HvacUnit u;
  u.id = "hv";
  u.conn = PhaseConnection::wye({1});
  u.alpha = 0.25;
  u.beta = -1.5;
  u.f_init = 22.0;
  u.f_lower = 20.0;
  u.f_upper = 24.0;
  u.f_out.resize(6);
  for (int t = 0; t < 6; ++t) u.f_out[t] = 24.0 + 4.0 * std::sin(0.7 * t);
  const double dt = 1.0 / 3.0;
  const auto band = cumulative_comfort_bounds(u, 6, dt);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd p(6);
    for (int t = 0; t < 6; ++t) p[t] = rng.uniform(0, 3);
    const auto f = temp_trajectory(u, p, dt);
    for (int t = 0; t < 6; ++t) {
      double acc = 0.0;
      for (int tau = 0; tau <= t; ++tau) acc += band.weights[static_cast<std::size_t>(t)][tau] * p[tau];
      // acc is the forced response; lo/hi already subtract the free response
      const double row_violation = std::max({0.0, band.lo[t] - acc, acc - band.hi[t]});
      const double f_violation = std::max({0.0, u.f_lower - f[t], f[t] - u.f_upper});
      CHECK(std::abs(row_violation - f_violation) < 1e-12);
    }
  }
}

TEST_CASE("layout ordering and bijectivity") {
  SUBCASE("single wye PV") {
    Fleet fleet;
    PvUnit pv;
    pv.id = "pv1";
    pv.bus = 1;
    pv.conn = PhaseConnection::wye({0});
    pv.p_lower = constant_series(1, 0);
    pv.p_upper = constant_series(1, 1);
    pv.s_cap = constant_series(1, 2);
    fleet.pv.push_back(pv);
    const auto layout = build_layout(fleet, 1, 1.0);
    CHECK(layout.per_step() == 2);
    CHECK(layout.index_of("pv1", 0, false) == 0);
    CHECK(layout.index_of("pv1", 0, true) == 1);
  }
  SUBCASE("wye block precedes delta block") {
    Fleet fleet;
    PvUnit pv;
    pv.id = "pv1";
    pv.bus = 2;
    pv.conn = PhaseConnection::wye({0});
    pv.p_lower = constant_series(1, 0);
    pv.p_upper = constant_series(1, 1);
    pv.s_cap = constant_series(1, 2);
    fleet.pv.push_back(pv);
    fleet.storage.push_back(
        make_storage("es1", 1, PhaseConnection::delta({0}), 1, 1, 0, 2, 1, 1.0));
    const auto layout = build_layout(fleet, 1, 1.0);
    // wye p, wye q, then delta p, delta q -- despite the smaller bus id of
    // the delta device
    CHECK(layout.entries[0].device_id == "pv1");
    CHECK(layout.entries[1].device_id == "pv1");
    CHECK(layout.entries[2].device_id == "es1");
    CHECK(layout.entries[3].device_id == "es1");
    CHECK_FALSE(layout.entries[0].is_q);
    CHECK(layout.entries[1].is_q);
  }
  SUBCASE("round trip on a random fleet") {
    Rng rng(3);
    Fleet fleet;
    for (int i = 0; i < 6; ++i) {
      StorageUnit u = make_storage("es" + std::to_string(i), rng.uniform_int(1, 4),
                                   rng.uniform01() < 0.5 ? PhaseConnection::wye({rng.uniform_int(0, 2)})
                                                         : PhaseConnection::delta({rng.uniform_int(0, 2)}),
                                   3, 1, 0, 2, 1, 1.0);
      fleet.storage.push_back(u);
    }
    const auto layout = build_layout(fleet, 3, 1.0);
    for (int k = 0; k < layout.per_step(); ++k) {
      const auto& e = layout.entries[static_cast<std::size_t>(k)];
      CHECK(layout.index_of(e.device_id, e.slot, e.is_q) == k);
    }
  }
  SUBCASE("duplicate ids rejected") {
    Fleet fleet;
    fleet.storage.push_back(make_storage("dup", 1, PhaseConnection::wye({0}), 1, 1, 0, 2, 1, 1.0));
    fleet.storage.push_back(make_storage("dup", 2, PhaseConnection::wye({1}), 1, 1, 0, 2, 1, 1.0));
    CHECK_THROWS_WITH_AS(build_layout(fleet, 1, 1.0), doctest::Contains("layout conflict"), Error);
  }
}

namespace {

/// Two-bus feeder plus compact model for a given fleet; wide network limits.
struct DeskRig {
  FeederModel feeder;
  AdmittanceBlocks blocks;
  LinearPfModel lin;
  CompactModel model;
};

DeskRig make_desk(const Fleet& fleet, const Scenario& scenario) {
  DeskRig rig;
  rig.feeder.n_buses = 1;
  rig.feeder.base_kva = 100.0;
  rig.feeder.base_kv = 4.16;
  rig.feeder.slack_voltage = balanced_slack(1.0);
  rig.feeder.v_upper = Eigen::VectorXd::Constant(3, 1.5);
  rig.feeder.v_lower = Eigen::VectorXd::Constant(3, 0.5);
  LineSpec line;
  line.from_bus = 0;
  line.to_bus = 1;
  line.z = Eigen::Matrix3cd::Zero();
  for (int p = 0; p < 3; ++p) line.z(p, p) = Complex(0.0, 0.001);
  rig.feeder.lines.push_back(line);
  rig.blocks = assemble_admittance(rig.feeder);
  rig.lin = linearize(rig.feeder, rig.blocks, no_load_operating_point(rig.feeder, rig.blocks));
  rig.model = build_compact_model(rig.feeder, rig.lin, fleet, scenario);
  return rig;
}

Scenario desk_scenario(int steps, double load_pu) {
  Scenario sc;
  sc.dt_hours = 1.0;
  sc.steps = steps;
  UncontrolledInjection bg;
  bg.bus = 1;
  bg.conn = PhaseConnection::wye({0});
  bg.p = Eigen::MatrixXd::Zero(steps, 3);
  bg.q = Eigen::MatrixXd::Zero(steps, 3);
  bg.p.col(0).setConstant(load_pu);
  sc.background.push_back(bg);
  return sc;
}

}  // namespace

TEST_CASE("compact model: PV feasible region projects to disk intersect box") {
  Fleet fleet;
  PvUnit pv;
  pv.id = "pv1";
  pv.bus = 1;
  pv.conn = PhaseConnection::wye({0});
  pv.p_lower = constant_series(1, 0.0);
  pv.p_upper = constant_series(1, 0.04);
  pv.s_cap = constant_series(1, 0.05);
  fleet.pv.push_back(pv);
  const auto rig = make_desk(fleet, desk_scenario(1, 0.01));
  const auto& m = rig.model;
  REQUIRE(m.vars_per_step() == 2);

  // dense grid membership oracle over the (P,Q) plane
  for (double p = -0.06; p <= 0.0601; p += 0.004) {
    for (double q = -0.06; q <= 0.0601; q += 0.004) {
      Eigen::VectorXd x(2);
      x << p, q;
      bool ok_box = p >= m.box_lo(0, 0) - 1e-12 && p <= m.box_hi(0, 0) + 1e-12;
      bool ok_disk = p * p + q * q <= m.disk_radius(0, 0) * m.disk_radius(0, 0) + 1e-12;
      // network rows are wide by construction; check they never bind
      const Eigen::VectorXd v = m.v_sens * x + m.v_base.col(0);
      const bool ok_v = (v.array() <= m.v_upper.array() + 1e-12).all() &&
                        (v.array() >= m.v_lower.array() - 1e-12).all();
      CHECK(ok_v);
      const bool direct =
          p >= -1e-12 && p <= 0.04 + 1e-12 && p * p + q * q <= 0.05 * 0.05 + 1e-12;
      CHECK((ok_box && ok_disk) == direct);
    }
  }
}

TEST_CASE("compact model: empty fleet leaves only the background trajectory") {
  const auto rig = make_desk(Fleet{}, desk_scenario(3, 0.02));
  CHECK(rig.model.vars_per_step() == 0);
  for (int t = 0; t < 3; ++t) {
    const double p0 = rig.model.substation_power(Eigen::VectorXd::Zero(0), t);
    CHECK(p0 == doctest::Approx(0.02).epsilon(1e-3));  // lossless tiny line
    CHECK(p0 == doctest::Approx(rig.model.p0_base[t]));
  }
}

TEST_CASE("compact model: storage at the lower energy bound cannot discharge at step one") {
  Fleet fleet;
  fleet.storage.push_back(make_storage("es1", 1, PhaseConnection::wye({0}), 2, 0.01, 0.0, 0.02,
                                       /*e_init=*/0.0, 1.0));
  const auto rig = make_desk(fleet, desk_scenario(2, 0.01));
  REQUIRE(rig.model.coupled.size() == 1);
  const auto& band = rig.model.coupled[0].band;
  CHECK(band.hi[0] == doctest::Approx(0.0));  // discharge bounded by zero
  CHECK(band.lo[0] == doctest::Approx(-0.02));
}

TEST_CASE("compact model: devices on absent phases are rejected") {
  FeederModel f = testing::four_bus_feeder();
  const auto blocks = assemble_admittance(f);
  const auto lin = linearize(f, blocks, no_load_operating_point(f, blocks));
  Fleet fleet;
  // bus 4 only has phase c
  fleet.storage.push_back(make_storage("es1", 4, PhaseConnection::wye({0}), 1, 0.01, 0, 0.02, 0.01, 1.0));
  Scenario sc;
  sc.dt_hours = 1.0;
  sc.steps = 1;
  CHECK_THROWS_WITH_AS(build_compact_model(f, lin, fleet, sc), doctest::Contains("phase mismatch"),
                       ParseError);
}

TEST_CASE("compact model: series of the wrong length are rejected") {
  Fleet fleet;
  fleet.storage.push_back(make_storage("es1", 1, PhaseConnection::wye({0}), 3, 0.01, 0, 0.02, 0.01, 1.0));
  Scenario sc = desk_scenario(2, 0.01);  // storage series built for 3 steps
  FeederModel f;
  f.n_buses = 1;
  f.base_kva = 100.0;
  f.slack_voltage = balanced_slack(1.0);
  f.v_upper = Eigen::VectorXd::Constant(3, 1.5);
  f.v_lower = Eigen::VectorXd::Constant(3, 0.5);
  LineSpec line;
  line.from_bus = 0;
  line.to_bus = 1;
  line.z = Eigen::Matrix3cd::Identity() * Complex(0.0, 0.001);
  f.lines.push_back(line);
  const auto blocks = assemble_admittance(f);
  const auto lin = linearize(f, blocks, no_load_operating_point(f, blocks));
  CHECK_THROWS_AS(build_compact_model(f, lin, fleet, sc), ParseError);
}

TEST_CASE("substituted network rows agree with the full linear model") {
  Fleet fleet;
  fleet.storage.push_back(make_storage("es1", 2, PhaseConnection::wye({0, 1, 2}), 2, 0.05, 0, 0.1,
                                       0.05, 0.95));
  ControllableLoad cl;
  cl.id = "cl1";
  cl.bus = 3;
  cl.conn = PhaseConnection::wye({0});
  cl.p_lower = constant_series(2, 0.0);
  cl.p_upper = constant_series(2, 0.03);
  cl.eta = 0.3;
  fleet.loads.push_back(cl);

  FeederModel f = testing::four_bus_feeder();
  const auto blocks = assemble_admittance(f);
  const auto lin = linearize(f, blocks, no_load_operating_point(f, blocks));
  Scenario sc;
  sc.dt_hours = 0.5;
  sc.steps = 2;
  UncontrolledInjection bg;
  bg.bus = 2;
  bg.conn = PhaseConnection::wye({0, 1, 2});
  bg.p = Eigen::MatrixXd::Constant(2, 3, 0.05);
  bg.q = Eigen::MatrixXd::Constant(2, 3, 0.015);
  sc.background.push_back(bg);
  const auto model = build_compact_model(f, lin, fleet, sc);

  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x(model.vars_per_step());
    for (int k = 0; k < x.size(); ++k) x[k] = rng.uniform(-0.03, 0.03);
    for (int t = 0; t < 2; ++t) {
      const auto eval = evaluate_linear_pf(lin, model.network_x(x, t));
      CHECK((model.v_sens * x + model.v_base.col(t) - eval.v).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((model.i_sens * x + model.i_base.col(t) - eval.i_line).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(std::abs(model.substation_power(x, t) - eval.p0_total) < 1e-12);
    }
  }
}

TEST_CASE("convexity audit finds only linear rows and disks") {
  Fleet fleet;
  fleet.storage.push_back(make_storage("es1", 1, PhaseConnection::wye({0}), 2, 0.01, 0, 0.02, 0.01, 1.0));
  HvacUnit hv;
  hv.id = "hv1";
  hv.bus = 1;
  hv.conn = PhaseConnection::wye({0});
  hv.p_upper = constant_series(2, 0.02);
  hv.eta = 0.2;
  hv.alpha = 0.3;
  hv.beta = -1.0;
  hv.f_init = 22.0;
  hv.f_lower = 20.0;
  hv.f_upper = 24.0;
  fleet.hvac.push_back(hv);
  Scenario sc = desk_scenario(2, 0.01);
  sc.temperature_out_c = Eigen::VectorXd::Constant(2, 28.0);
  const auto rig = make_desk(fleet, sc);
  const auto audit = audit_convexity(rig.model);
  CHECK(audit.only_linear_and_disks);
  CHECK(audit.disk_count == 1);
  CHECK(audit.tie_rows == 1);
  CHECK(audit.coupled_rows == 4);  // two steps for the storage, two for the hvac
  CHECK(audit.box_entries > 0);
}
