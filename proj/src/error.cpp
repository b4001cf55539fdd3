#include "mfk/error.hpp"

namespace mfk {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::OscillatoryQuadratureFailure: return "OscillatoryQuadratureFailure";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::DegenerateMinimum: return "DegenerateMinimum";
    case ErrorCode::NoDoubleWell: return "NoDoubleWell";
    case ErrorCode::MultipleRoots: return "MultipleRoots";
    case ErrorCode::GeometryDegenerate: return "GeometryDegenerate";
    case ErrorCode::InvalidPoincare: return "InvalidPoincare";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NumericBlowup: return "NumericBlowup";
    case ErrorCode::InvalidBudget: return "InvalidBudget";
    case ErrorCode::AllTimedOut: return "AllTimedOut";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::StageFailure: return "StageFailure";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace mfk
