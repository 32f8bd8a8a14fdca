#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sfot {

enum class ErrorCode {
  DuplicateSites,
  EmptyCell,
  DomainError,
  NotInKEps,
  BoundaryDegenerate,
  InitFailed,
  SingularJacobian,
  LineSearchStalled,
  MaxIterations,
  InsufficientTrace,
  MismatchedN,
  GeometryMismatch,
  InvalidInput,
  IOError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateSites: return "DuplicateSites";
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NotInKEps: return "NotInKEps";
    case ErrorCode::BoundaryDegenerate: return "BoundaryDegenerate";
    case ErrorCode::InitFailed: return "InitFailed";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::LineSearchStalled: return "LineSearchStalled";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::InsufficientTrace: return "InsufficientTrace";
    case ErrorCode::MismatchedN: return "MismatchedN";
    case ErrorCode::GeometryMismatch: return "GeometryMismatch";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::IOError: return "IOError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sfot
