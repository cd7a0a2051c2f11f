// l1verify - error type shared by every module
#pragma once

#include <stdexcept>
#include <string>

namespace l1v {

enum class ErrorCode {
  NotSkewSymmetric,
  Degenerate,
  NonFinite,
  DegenerateForce,
  UnknownFamily,
  NonMonotonicTime,
  SimulationDiverged,
  ContainmentViolation,
  DegenerateData,
  ParseError,
  ValidationError,
  IoError,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::NotSkewSymmetric: return "NotSkewSymmetric";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DegenerateForce: return "DegenerateForce";
    case ErrorCode::UnknownFamily: return "UnknownFamily";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::SimulationDiverged: return "SimulationDiverged";
    case ErrorCode::ContainmentViolation: return "ContainmentViolation";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
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

}  // namespace l1v
