#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace regpoison {

enum class ErrorCode {
  MissingFile,
  MissingTargetColumn,
  EmptyAfterFiltering,
  DimensionMismatch,
  ConstantTargetColumn,
  TooFewRows,
  SingularSystem,
  SubstituteTooSmall,
  DegenerateDomain,
  OracleFailure,
  NotPositiveDefinite,
  TooFewRetained,
  LengthMismatch,
  EmptyInput,
  DivisionByZero,
  ConfigInvalid,
  MissingCells,
  DatasetUnavailable,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the harness, the CLI) can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace regpoison
