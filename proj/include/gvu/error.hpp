#pragma once

#include <stdexcept>
#include <string>

namespace gvu {

// Every failure the library raises carries one of these codes. The CLI maps
// them onto process exit codes: config/validation -> 2, numeric -> 3, io -> 4.
enum class ErrorCode {
  // validation / configuration
  EmptyTaskSet,
  ScoreOutOfRange,
  NegativeWeight,
  WeightSumMismatch,
  IndexOutOfRange,
  ShapeMismatch,
  UnknownKind,
  MissingParameter,
  BadParamPath,
  ValidationError,
  ParseError,
  EmptyTrajectory,
  WindowTooLarge,
  // numeric
  DegenerateVector,
  DegenerateGradient,
  SingularMetric,
  NumericalOverflow,
  NonFiniteScore,
  NumericFailure,
  // io
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

  // Process exit code class for a given failure.
  static int exit_code(ErrorCode c) {
    switch (c) {
      case ErrorCode::DegenerateVector:
      case ErrorCode::DegenerateGradient:
      case ErrorCode::SingularMetric:
      case ErrorCode::NumericalOverflow:
      case ErrorCode::NonFiniteScore:
      case ErrorCode::NumericFailure:
        return 3;
      case ErrorCode::IoError:
        return 4;
      default:
        return 2;
    }
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

const char* error_name(ErrorCode code);

}  // namespace gvu
