#pragma once

#include <stdexcept>
#include <string>

namespace flexagg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input rejected while reading a file or building a model; `where` names
/// the file/field of the first violation.
class ParseError : public Error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : Error(where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

/// Iterative method failed to converge or produced unusable numbers.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A well-posed problem has an empty feasible set.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// The agent message protocol stalled (lost or out-of-order message).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace flexagg
