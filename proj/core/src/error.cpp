#include "regpoison/error.hpp"

namespace regpoison {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MissingTargetColumn: return "MissingTargetColumn";
    case ErrorCode::EmptyAfterFiltering: return "EmptyAfterFiltering";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ConstantTargetColumn: return "ConstantTargetColumn";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::SubstituteTooSmall: return "SubstituteTooSmall";
    case ErrorCode::DegenerateDomain: return "DegenerateDomain";
    case ErrorCode::OracleFailure: return "OracleFailure";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::TooFewRetained: return "TooFewRetained";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::MissingCells: return "MissingCells";
    case ErrorCode::DatasetUnavailable: return "DatasetUnavailable";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace regpoison
