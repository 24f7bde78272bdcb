#include "flexagg/scenario.hpp"

#include "flexagg/errors.hpp"

namespace flexagg {

Eigen::VectorXd Scenario::background_x(int t, int n_buses) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(12 * n_buses);
  for (const auto& bg : background) {
    const int base = bg.conn.kind == ConnectionKind::wye ? 0 : 6 * n_buses;
    for (int s = 0; s < 3; ++s) {
      if (!bg.conn.slots[static_cast<std::size_t>(s)]) continue;
      const int row = base + 3 * (bg.bus - 1) + s;
      // consumption positive in the series; injections carry the opposite sign
      x[row] -= bg.p(t, s);
      x[row + 3 * n_buses] -= bg.q(t, s);
    }
  }
  return x;
}

Scenario Scenario::slice(int start, int count) const {
  if (start < 0 || count < 0 || start + count > steps)
    throw Error("scenario slice out of range");
  Scenario out;
  out.dt_hours = dt_hours;
  out.steps = count;
  for (const auto& bg : background) {
    UncontrolledInjection w = bg;
    w.p = bg.p.middleRows(start, count);
    w.q = bg.q.middleRows(start, count);
    out.background.push_back(std::move(w));
  }
  if (temperature_out_c.size() > 0) out.temperature_out_c = temperature_out_c.segment(start, count);
  for (const auto& [id, series] : pv_available) out.pv_available[id] = series.segment(start, count);
  return out;
}

}  // namespace flexagg
