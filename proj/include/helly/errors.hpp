#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace helly {

// Scientific-notation formatting for residuals in error messages, which are
// usually far below what std::to_string's fixed six digits can show.
inline std::string fmt_sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", x);
  return buf;
}

enum class Errc {
  schema_error,
  value_error,
  empty_interior,
  unbounded,
  singular_matrix,
  contact_deficit,
  residual_too_large,
  invalid_decomposition,
  barrier_stall,
  not_dominating_identity,
  no_convergence,
  not_in_hull,
  origin_not_interior,
  budget_exceeded,
  mismatched_instance,
  internal_check_failed,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::schema_error: return "schema_error";
    case Errc::value_error: return "value_error";
    case Errc::empty_interior: return "empty_interior";
    case Errc::unbounded: return "unbounded";
    case Errc::singular_matrix: return "singular_matrix";
    case Errc::contact_deficit: return "contact_deficit";
    case Errc::residual_too_large: return "residual_too_large";
    case Errc::invalid_decomposition: return "invalid_decomposition";
    case Errc::barrier_stall: return "barrier_stall";
    case Errc::not_dominating_identity: return "not_dominating_identity";
    case Errc::no_convergence: return "no_convergence";
    case Errc::not_in_hull: return "not_in_hull";
    case Errc::origin_not_interior: return "origin_not_interior";
    case Errc::budget_exceeded: return "budget_exceeded";
    case Errc::mismatched_instance: return "mismatched_instance";
    case Errc::internal_check_failed: return "internal_check_failed";
  }
  return "unknown_error";
}

// All library failures are reported through this exception; code() tells the
// caller which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& detail) {
  throw Error(code, detail);
}

inline void check(bool ok, Errc code, const std::string& detail) {
  if (!ok) fail(code, detail);
}

}  // namespace helly
