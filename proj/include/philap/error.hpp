#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace philap {

enum class ErrorCode {
  EvaluationDomain,
  OutOfRange,
  SingularIntegrand,
  Construction,
  InvalidOperator,
  InvalidReaction,
  MissingIndices,
  Unclassifiable,
  CaseContradiction,
  CaseMisclassification,
  NonConvergence,
  HypothesisFailure,
  DegenerateReaction,
  ArViolation,
  Config,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EvaluationDomain: return "evaluation-domain";
    case ErrorCode::OutOfRange: return "out-of-range";
    case ErrorCode::SingularIntegrand: return "singular-integrand";
    case ErrorCode::Construction: return "construction";
    case ErrorCode::InvalidOperator: return "invalid-operator";
    case ErrorCode::InvalidReaction: return "invalid-reaction";
    case ErrorCode::MissingIndices: return "missing-indices";
    case ErrorCode::Unclassifiable: return "unclassifiable";
    case ErrorCode::CaseContradiction: return "case-contradiction";
    case ErrorCode::CaseMisclassification: return "case-misclassification";
    case ErrorCode::NonConvergence: return "non-convergence";
    case ErrorCode::HypothesisFailure: return "hypothesis-failure";
    case ErrorCode::DegenerateReaction: return "degenerate-reaction";
    case ErrorCode::ArViolation: return "ar-violation";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

/// Exception carrying a machine-readable category.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace philap
