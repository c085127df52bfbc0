#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace neckcalib {

enum class ErrorKind {
  invalid_argument,
  domain,
  spec_violation,
  numerical_degeneracy,
  state,
  sampling,
  config,
  io,
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::domain: return "domain";
    case ErrorKind::spec_violation: return "spec-violation";
    case ErrorKind::numerical_degeneracy: return "numerical-degeneracy";
    case ErrorKind::state: return "state";
    case ErrorKind::sampling: return "sampling";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

// Single exception type for the core; the C surface maps `kind` to a status code.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

/// Short human-readable rendering of a real for diagnostics.
inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace neckcalib
