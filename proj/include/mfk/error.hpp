#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mfk {

enum class ErrorCode {
  InvalidArgument,
  ParseError,
  UnsupportedOrder,
  QuadratureFailure,
  OscillatoryQuadratureFailure,
  Overflow,
  SolverFailure,
  DegenerateMinimum,
  NoDoubleWell,
  MultipleRoots,
  GeometryDegenerate,
  InvalidPoincare,
  NonFinite,
  NumericBlowup,
  InvalidBudget,
  AllTimedOut,
  ConfigInvalid,
  StageFailure,
  IoFailure,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mfk
