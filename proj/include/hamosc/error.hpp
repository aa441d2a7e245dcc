#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hamosc {

enum class ErrorCode {
  Singular,
  NotHermitian,
  NotPSD,
  UnknownFamily,
  MissingParam,
  NonHermitianSample,
  OutOfDomain,
  ZeroDiagonalB,
  NotDiagonalB,
  NotPositiveB,
  StepUnderflow,
  ConjoinedDrift,
  QuadratureNoConvergence,
  HypothesisViolated,
  CriteriaConflict,
  ResidualTooLarge,
  InvalidInput,
  ParseError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the integrator when the step size collapses; `time` is the last
/// accepted time.
class StepUnderflow : public Error {
 public:
  StepUnderflow(double time, const std::string& detail)
      : Error(ErrorCode::StepUnderflow, detail), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace hamosc
