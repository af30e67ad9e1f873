#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace factorlab {

enum class ErrorKind {
  DimensionMismatch,
  RankDeficient,
  DomainError,
  SchemaError,
  ParseError,
  MissingValue,
  EmptyInput,
  UnknownColumn,
  IndexOutOfRange,
  InsufficientRows,
  ConstantPredictor,
  CollinearSingular,
  ZeroVariance,
  LagTooLarge,
  ConfigInvalid,
  KTooLarge,
  InvalidArgument,
  IoError,
  Internal,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingValue: return "MissingValue";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::UnknownColumn: return "UnknownColumn";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::InsufficientRows: return "InsufficientRows";
    case ErrorKind::ConstantPredictor: return "ConstantPredictor";
    case ErrorKind::CollinearSingular: return "CollinearSingular";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::LagTooLarge: return "LagTooLarge";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::Internal: return "Internal";
  }
  return "Internal";
}

/// Broad failure class; the CLI maps it onto its exit code.
enum class ErrorCategory { Input, Numerical, Internal };

constexpr ErrorCategory category_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RankDeficient:
    case ErrorKind::ConstantPredictor:
    case ErrorKind::CollinearSingular:
    case ErrorKind::ZeroVariance:
      return ErrorCategory::Numerical;
    case ErrorKind::Internal:
      return ErrorCategory::Internal;
    default:
      return ErrorCategory::Input;
  }
}

/// Every failure raised by the library. `subject` carries the offending
/// column / predictor name when there is one, `row` a 1-based row number
/// (0 when not applicable).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string subject = {},
        std::size_t row = 0)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        subject_(std::move(subject)),
        row_(row) {}

  ErrorKind kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return category_of(kind_); }
  const std::string& subject() const noexcept { return subject_; }
  std::size_t row() const noexcept { return row_; }

 private:
  ErrorKind kind_;
  std::string subject_;
  std::size_t row_;
};

}  // namespace factorlab
