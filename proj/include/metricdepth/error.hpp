#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace metricdepth {

enum class ErrorCode {
  InvalidDimension,
  InvalidShift,
  ShapeError,
  InvalidConfig,
  InsufficientBatch,
  ContractViolation,
  DomainError,
  EmptyEvaluation,
  NonFinite,
  IoError,
  ParseError,
  Divergence,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the Python bindings) can dispatch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace metricdepth
