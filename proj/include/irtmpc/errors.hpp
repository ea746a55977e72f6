#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace irtmpc {

/// Malformed or inconsistent input data (shapes, non-finite entries,
/// zero normals, non-positive offsets, ...).
class DataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solver hit its iteration cap or broke down numerically.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what, int iterations = 0,
                            double primal_residual = 0.0,
                            double dual_residual = 0.0, double gap = 0.0)
      : std::runtime_error(what),
        iterations_(iterations),
        primal_residual_(primal_residual),
        dual_residual_(dual_residual),
        gap_(gap) {}

  int iterations() const { return iterations_; }
  double primal_residual() const { return primal_residual_; }
  double dual_residual() const { return dual_residual_; }
  double gap() const { return gap_; }

 private:
  int iterations_;
  double primal_residual_;
  double dual_residual_;
  double gap_;
};

enum class FailureReason {
  kValidation,
  kContractionCap,
  kAdmissibility,
  kTerminalCost,
  kTerminalCap,
  kRiccati,
};

inline const char* to_string(FailureReason r) {
  switch (r) {
    case FailureReason::kValidation: return "validation";
    case FailureReason::kContractionCap: return "contraction_cap";
    case FailureReason::kAdmissibility: return "admissibility";
    case FailureReason::kTerminalCost: return "terminal_cost";
    case FailureReason::kTerminalCap: return "terminal_cap";
    case FailureReason::kRiccati: return "riccati";
  }
  return "unknown";
}

/// Offline design could not be completed. Carries the stage that failed,
/// the iteration count reached and the offending row indices (if any).
class SynthesisFailure : public std::runtime_error {
 public:
  SynthesisFailure(FailureReason reason, std::string stage,
                   const std::string& what, int iterations = 0,
                   std::vector<int> offending = {})
      : std::runtime_error(what),
        reason_(reason),
        stage_(std::move(stage)),
        iterations_(iterations),
        offending_(std::move(offending)) {}

  FailureReason reason() const { return reason_; }
  const std::string& stage() const { return stage_; }
  int iterations() const { return iterations_; }
  const std::vector<int>& offending() const { return offending_; }

 private:
  FailureReason reason_;
  std::string stage_;
  int iterations_;
  std::vector<int> offending_;
};

/// The tube QP is infeasible at the queried state (x is outside C_T).
class NotInDomain : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace irtmpc
