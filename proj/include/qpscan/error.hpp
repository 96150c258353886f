#pragma once

#include <stdexcept>
#include <string>

namespace qpscan {

enum class ErrorKind {
  config,      // bad option value or inconsistent configuration
  parse,       // malformed input file
  validation,  // data violates a structural invariant
  singular,    // rank-deficient or ill-conditioned design
  infeasible,  // constraint set cannot be satisfied
  resource,    // memory ceiling exceeded
  io,          // filesystem failure
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return "config";
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::singular: return "singular";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::resource: return "resource";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind k, const std::string& msg) {
  throw Error(k, msg);
}

}  // namespace qpscan
