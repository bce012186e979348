#pragma once

#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fragkit {

enum class ErrorCode {
  invalid_kernel,
  moment_divergence,
  range,
  domain,
  shape,
  empty_population,
  scheme_failure,
  step_size,
  event_cap,
  population_cap,
  singular_transform,
  degeneracy,
  oracle_size,
  config,
  io,
};

constexpr std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_kernel: return "invalid-kernel";
    case ErrorCode::moment_divergence: return "moment-divergence";
    case ErrorCode::range: return "range";
    case ErrorCode::domain: return "domain";
    case ErrorCode::shape: return "shape";
    case ErrorCode::empty_population: return "empty-population";
    case ErrorCode::scheme_failure: return "scheme-failure";
    case ErrorCode::step_size: return "step-size";
    case ErrorCode::event_cap: return "event-cap";
    case ErrorCode::population_cap: return "population-cap";
    case ErrorCode::singular_transform: return "singular-transform";
    case ErrorCode::degeneracy: return "degeneracy";
    case ErrorCode::oracle_size: return "oracle-size";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void warn(std::string_view message) {
  std::cerr << "[fragkit] warning: " << message << '\n';
}

}  // namespace fragkit
