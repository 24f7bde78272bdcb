#pragma once

#include <array>
#include <initializer_list>
#include <string>

#include "flexagg/errors.hpp"

namespace flexagg {

enum class ConnectionKind { wye, delta };

/// Which slots of a three-phase quantity a device occupies. Wye slots are
/// the phases a/b/c; delta slots are the phase pairs ab/bc/ca. Delta slot e
/// bridges phases e and (e+1)%3.
struct PhaseConnection {
  ConnectionKind kind = ConnectionKind::wye;
  std::array<bool, 3> slots{false, false, false};

  int count() const { return int(slots[0]) + int(slots[1]) + int(slots[2]); }
  bool empty() const { return count() == 0; }

  static PhaseConnection wye(std::initializer_list<int> idx) {
    PhaseConnection c;
    c.kind = ConnectionKind::wye;
    for (int i : idx) c.slots[static_cast<std::size_t>(i)] = true;
    return c;
  }
  static PhaseConnection delta(std::initializer_list<int> idx) {
    PhaseConnection c;
    c.kind = ConnectionKind::delta;
    for (int i : idx) c.slots[static_cast<std::size_t>(i)] = true;
    return c;
  }
};

inline const char* slot_name(ConnectionKind kind, int slot) {
  static constexpr std::array<const char*, 3> wye{"a", "b", "c"};
  static constexpr std::array<const char*, 3> delta{"ab", "bc", "ca"};
  return kind == ConnectionKind::wye ? wye[static_cast<std::size_t>(slot)]
                                     : delta[static_cast<std::size_t>(slot)];
}

inline void validate_connection(const PhaseConnection& c, const std::string& where) {
  if (c.empty()) throw ParseError(where, "connection occupies no phase slot");
}

/// Parse "wye"/"delta" plus a phase list like "a", "bc", "abc" or "ab,ca".
PhaseConnection parse_connection(const std::string& kind, const std::string& phases,
                                 const std::string& where);

}  // namespace flexagg
