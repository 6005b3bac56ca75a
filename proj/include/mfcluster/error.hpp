#pragma once

#include <stdexcept>
#include <string>

namespace mfcluster {

enum class ErrorCode {
  LengthMismatch,
  NegativeWeight,
  WeightSumOutOfTolerance,
  EmptyGrid,
  InvalidArgument,
  NonConvergence,
  BlocksNotSeparated,
  SingularA,
  NotSymmetric,
  NotAFixedPoint,
  Io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::WeightSumOutOfTolerance: return "WeightSumOutOfTolerance";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::BlocksNotSeparated: return "BlocksNotSeparated";
    case ErrorCode::SingularA: return "SingularA";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotAFixedPoint: return "NotAFixedPoint";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mfcluster
