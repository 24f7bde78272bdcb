#include "flexagg/devices.hpp"

namespace flexagg {

namespace {

void check_series(const Eigen::MatrixXd& m, int horizon, const PhaseConnection& conn,
                  const std::string& where) {
  if (m.rows() != horizon || m.cols() != 3)
    throw ParseError(where, "series must be horizon x 3");
  (void)conn;
}

void require(bool ok, const std::string& where, const std::string& msg) {
  if (!ok) throw ParseError(where, msg);
}

}  // namespace

void validate_fleet(const Fleet& fleet, int horizon) {
  for (const auto& u : fleet.pv) {
    const std::string where = "pv '" + u.id + "'";
    validate_connection(u.conn, where);
    check_series(u.p_lower, horizon, u.conn, where);
    check_series(u.p_upper, horizon, u.conn, where);
    check_series(u.s_cap, horizon, u.conn, where);
    for (int t = 0; t < horizon; ++t)
      for (int s = 0; s < 3; ++s) {
        if (!u.conn.slots[static_cast<std::size_t>(s)]) continue;
        require(u.p_lower(t, s) >= 0.0 && u.p_lower(t, s) <= u.p_upper(t, s) &&
                    u.p_upper(t, s) <= u.s_cap(t, s),
                where, "need 0 <= p_lower <= p_upper <= s_cap");
      }
  }
  for (const auto& u : fleet.storage) {
    const std::string where = "storage '" + u.id + "'";
    validate_connection(u.conn, where);
    check_series(u.p_lower, horizon, u.conn, where);
    check_series(u.p_upper, horizon, u.conn, where);
    check_series(u.s_cap, horizon, u.conn, where);
    require(u.kappa > 0.0 && u.kappa <= 1.0, where, "kappa must lie in (0,1]");
    require(u.e_lower <= u.e_init && u.e_init <= u.e_upper, where,
            "need e_lower <= e_init <= e_upper");
    for (int t = 0; t < horizon; ++t)
      for (int s = 0; s < 3; ++s) {
        if (!u.conn.slots[static_cast<std::size_t>(s)]) continue;
        require(u.p_lower(t, s) <= u.p_upper(t, s), where, "need p_lower <= p_upper");
      }
  }
  for (const auto& u : fleet.loads) {
    const std::string where = "load '" + u.id + "'";
    validate_connection(u.conn, where);
    check_series(u.p_lower, horizon, u.conn, where);
    check_series(u.p_upper, horizon, u.conn, where);
    for (int t = 0; t < horizon; ++t)
      for (int s = 0; s < 3; ++s) {
        if (!u.conn.slots[static_cast<std::size_t>(s)]) continue;
        require(u.p_lower(t, s) >= 0.0 && u.p_lower(t, s) <= u.p_upper(t, s), where,
                "need 0 <= p_lower <= p_upper");
      }
  }
  for (const auto& u : fleet.hvac) {
    const std::string where = "hvac '" + u.id + "'";
    validate_connection(u.conn, where);
    check_series(u.p_upper, horizon, u.conn, where);
    require(u.alpha > 0.0 && u.alpha < 1.0, where, "alpha must lie in (0,1)");
    require(u.beta != 0.0, where, "beta must be nonzero");
    require(u.f_lower <= u.f_init && u.f_init <= u.f_upper, where,
            "need f_lower <= f_init <= f_upper");
    require(u.f_out.size() == horizon, where, "outside temperature series length mismatch");
  }
}

Eigen::VectorXd soc_trajectory(const StorageUnit& unit, const Eigen::VectorXd& p_total,
                               double dt_hours) {
  Eigen::VectorXd e(p_total.size());
  double prev = unit.e_init;
  for (int t = 0; t < p_total.size(); ++t) {
    prev = unit.kappa * prev - dt_hours * p_total[t];
    e[t] = prev;
  }
  return e;
}

Eigen::VectorXd temp_trajectory(const HvacUnit& unit, const Eigen::VectorXd& p_total,
                                double dt_hours) {
  Eigen::VectorXd f(p_total.size());
  double prev = unit.f_init;
  for (int t = 0; t < p_total.size(); ++t) {
    prev = prev + unit.alpha * (unit.f_out[t] - prev) + (dt_hours / unit.beta) * p_total[t];
    f[t] = prev;
  }
  return f;
}

CumulativeBand cumulative_soc_bounds(const StorageUnit& unit, int horizon, double dt_hours) {
  CumulativeBand band;
  band.weights.reserve(static_cast<std::size_t>(horizon));
  band.lo.resize(horizon);
  band.hi.resize(horizon);
  double kpow = 1.0;  // kappa^{t+1} while filling row t (t is 0-based)
  for (int t = 0; t < horizon; ++t) {
    kpow *= unit.kappa;
    Eigen::VectorXd w(t + 1);
    for (int tau = 0; tau <= t; ++tau) w[tau] = std::pow(unit.kappa, t - tau);
    band.weights.push_back(std::move(w));
    band.lo[t] = (kpow * unit.e_init - unit.e_upper) / dt_hours;
    band.hi[t] = (kpow * unit.e_init - unit.e_lower) / dt_hours;
  }
  return band;
}

CumulativeBand cumulative_comfort_bounds(const HvacUnit& unit, int horizon, double dt_hours) {
  CumulativeBand band;
  band.weights.reserve(static_cast<std::size_t>(horizon));
  band.lo.resize(horizon);
  band.hi.resize(horizon);
  const double decay = 1.0 - unit.alpha;
  // free response: state with zero HVAC power
  double base = unit.f_init;
  for (int t = 0; t < horizon; ++t) {
    base = base + unit.alpha * (unit.f_out[t] - base);
    Eigen::VectorXd w(t + 1);
    for (int tau = 0; tau <= t; ++tau)
      w[tau] = (dt_hours / unit.beta) * std::pow(decay, t - tau);
    band.weights.push_back(std::move(w));
    band.lo[t] = unit.f_lower - base;
    band.hi[t] = unit.f_upper - base;
  }
  return band;
}

}  // namespace flexagg
