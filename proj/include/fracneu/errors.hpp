#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fracneu {

enum class ErrorCode {
  NonPositiveSide,
  DimensionTooSmall,
  OrderOutOfRange,
  IndexOutOfRange,
  DimensionMismatch,
  ZeroModeForbidden,
  NonCanonicalRepresentative,
  DuplicateEntry,
  PointOutsideBox,
  ScaleTooSmall,
  InvalidArgument,
  EmptyTestSet,
  GridTooLarge,
  VanishingDenominator,
  DepthOutOfRange,
  BasisTooLarge,
  ModeOutsideBasis,
  ConvergenceFailure,
  NoEigenvalueInWindow,
  NoMatchedEigenpair,
  ParseError,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveSide: return "NonPositiveSide";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::OrderOutOfRange: return "OrderOutOfRange";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroModeForbidden: return "ZeroModeForbidden";
    case ErrorCode::NonCanonicalRepresentative: return "NonCanonicalRepresentative";
    case ErrorCode::DuplicateEntry: return "DuplicateEntry";
    case ErrorCode::PointOutsideBox: return "PointOutsideBox";
    case ErrorCode::ScaleTooSmall: return "ScaleTooSmall";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
    case ErrorCode::VanishingDenominator: return "VanishingDenominator";
    case ErrorCode::DepthOutOfRange: return "DepthOutOfRange";
    case ErrorCode::BasisTooLarge: return "BasisTooLarge";
    case ErrorCode::ModeOutsideBasis: return "ModeOutsideBasis";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::NoEigenvalueInWindow: return "NoEigenvalueInWindow";
    case ErrorCode::NoMatchedEigenpair: return "NoMatchedEigenpair";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fracneu
