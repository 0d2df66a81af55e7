#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fbsmp {

enum class SolverErrorKind {
    NumericDivergence,
    ContractionFailure,
    Singularity,
    NoSolution,
    BlowUp,
};

// Runtime failure of a numerical routine. ContractionFailure carries the
// Picard residual history so callers can inspect the empirical contraction
// ratio that caused the divergence.
class SolverError : public std::runtime_error {
  public:
    SolverError(SolverErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    SolverError(SolverErrorKind kind, const std::string& what,
                std::vector<double> residual_history)
        : std::runtime_error(what),
          kind_(kind),
          residual_history_(std::move(residual_history)) {}

    SolverErrorKind kind() const { return kind_; }
    const std::vector<double>& residual_history() const { return residual_history_; }

  private:
    SolverErrorKind kind_;
    std::vector<double> residual_history_;
};

}  // namespace fbsmp
