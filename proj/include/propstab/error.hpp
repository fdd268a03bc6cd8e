#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace propstab {

enum class ErrorCode {
  DimensionMismatch,
  SingularAtS,
  InvalidArgument,
  InvalidVertex,
  NonPositiveWeight,
  SelfLoop,
  DuplicateEdge,
  NotSeparating,
  TooLarge,
  Unreachable,
  NoIncomingEdges,
  UnstableLoop,
  NotSISO,
  NotPlanarTemplate,
  NotStronglyConnected,
  StepTooLarge,
  SourceVertex,
  SchemaError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularAtS: return "SingularAtS";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidVertex: return "InvalidVertex";
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::NotSeparating: return "NotSeparating";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::NoIncomingEdges: return "NoIncomingEdges";
    case ErrorCode::UnstableLoop: return "UnstableLoop";
    case ErrorCode::NotSISO: return "NotSISO";
    case ErrorCode::NotPlanarTemplate: return "NotPlanarTemplate";
    case ErrorCode::NotStronglyConnected: return "NotStronglyConnected";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::SourceVertex: return "SourceVertex";
    case ErrorCode::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

/// Every library failure is reported through this exception; `code()` names
/// the failure class so callers (and the CLI) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace propstab
