#include "flexagg/feeder.hpp"

#include <cmath>

namespace flexagg {

PhaseConnection parse_connection(const std::string& kind, const std::string& phases,
                                 const std::string& where) {
  PhaseConnection c;
  if (kind == "wye") {
    c.kind = ConnectionKind::wye;
  } else if (kind == "delta") {
    c.kind = ConnectionKind::delta;
  } else {
    throw ParseError(where, "connection kind must be 'wye' or 'delta', got '" + kind + "'");
  }

  // Accept "a", "abc", "ab,ca", ... Tokens are split on commas; for wye a
  // token may also pack several single letters ("abc").
  auto mark = [&](const std::string& tok) {
    for (int s = 0; s < 3; ++s) {
      if (tok == slot_name(c.kind, s)) {
        c.slots[static_cast<std::size_t>(s)] = true;
        return;
      }
    }
    if (c.kind == ConnectionKind::wye) {
      for (char ch : tok) {
        if (ch < 'a' || ch > 'c') throw ParseError(where, "unknown wye phase '" + tok + "'");
        c.slots[static_cast<std::size_t>(ch - 'a')] = true;
      }
      return;
    }
    throw ParseError(where, "unknown delta phase pair '" + tok + "'");
  };

  std::string tok;
  for (char ch : phases) {
    if (ch == ',' || ch == ' ') {
      if (!tok.empty()) mark(tok);
      tok.clear();
    } else {
      tok.push_back(ch);
    }
  }
  if (!tok.empty()) mark(tok);
  validate_connection(c, where);
  return c;
}

bool FeederModel::bus_phase_present(int bus, int phase) const {
  for (const auto& line : lines) {
    if ((line.from_bus == bus || line.to_bus == bus) && line.phases[static_cast<std::size_t>(phase)])
      return true;
  }
  return false;
}

bool FeederModel::supports(int bus, const PhaseConnection& conn) const {
  for (int s = 0; s < 3; ++s) {
    if (!conn.slots[static_cast<std::size_t>(s)]) continue;
    if (conn.kind == ConnectionKind::wye) {
      if (!bus_phase_present(bus, s)) return false;
    } else {
      if (!bus_phase_present(bus, s) || !bus_phase_present(bus, (s + 1) % 3)) return false;
    }
  }
  return true;
}

Eigen::Vector3cd balanced_slack(double magnitude) {
  const double ang = 2.0 * M_PI / 3.0;
  Eigen::Vector3cd v;
  v << Complex(magnitude, 0.0), magnitude * std::polar(1.0, -ang), magnitude * std::polar(1.0, ang);
  return v;
}

void validate_feeder(const FeederModel& feeder) {
  if (feeder.n_buses <= 0) throw ParseError("buses", "feeder needs at least one load bus");
  const int n3 = 3 * feeder.n_buses;
  if (feeder.v_upper.size() != n3 || feeder.v_lower.size() != n3)
    throw ParseError("limits", "voltage limit vectors must have length 3N");
  for (int i = 0; i < n3; ++i) {
    if (!(feeder.v_lower[i] > 0.0) || !(feeder.v_lower[i] < feeder.v_upper[i]))
      throw ParseError("limits", "need 0 < v_lower < v_upper at bus-phase index " + std::to_string(i));
  }
  for (int p = 0; p < 3; ++p) {
    if (std::abs(feeder.slack_voltage[p]) <= 0.0)
      throw ParseError("slack_voltage", "slack phasor " + std::string(slot_name(ConnectionKind::wye, p)) +
                                            " must be nonzero");
  }
  for (std::size_t l = 0; l < feeder.lines.size(); ++l) {
    const auto& line = feeder.lines[l];
    const std::string where = "lines[" + std::to_string(l) + "]";
    if (line.from_bus < 0 || line.from_bus > feeder.n_buses || line.to_bus < 0 ||
        line.to_bus > feeder.n_buses)
      throw ParseError(where, "bus id out of range");
    if (line.from_bus == line.to_bus) throw ParseError(where, "line endpoints coincide");
    int present = 0;
    for (int p = 0; p < 3; ++p) present += line.phases[static_cast<std::size_t>(p)] ? 1 : 0;
    if (present == 0) throw ParseError(where, "line has no present phase");
    for (int p = 0; p < 3; ++p) {
      if (!(line.i_lower[p] >= 0.0) || !(line.i_lower[p] <= line.i_upper[p]))
        throw ParseError(where, "need 0 <= i_lower <= i_upper on phase " +
                                    std::string(slot_name(ConnectionKind::wye, p)));
    }
  }
}

}  // namespace flexagg
