#pragma once

#include <optional>
#include <string_view>

#include "sparsetune/operators.hpp"
#include "sparsetune/thresholds.hpp"

namespace sparsetune {

/// IST thresholds softly and IHT hard; TST is the two-stage scheme.
enum class Algorithm { IST, IHT, TST };

std::string_view to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view tag);

inline constexpr int kDefaultMaxIter = 300;
inline constexpr double kTransitionResidualStop = 1e-6;
inline constexpr double kTimingResidualStop = 1e-3;

struct SolverConfig {
  Algorithm algo = Algorithm::IHT;
  double kappa = 1.0;
  ThresholdPolicy policy = FarPolicy{};
  int max_iter = kDefaultMaxIter;
  double residual_stop = kTransitionResidualStop;

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

void validate(const SolverConfig& cfg);

struct SolveResult {
  Vector xhat;
  int iterations = 0;
  double final_relative_residual = 0.0;
  bool converged = false;
};

/// Relaxation x <- eta_t(x + kappa * A'(y - A x)) from x = 0, with soft (IST)
/// or hard (IHT) thresholding. Under a FAR policy the threshold is
/// lambda * robust_sigma(kappa * A'r). Stops at max_iter, when the relative
/// residual reaches residual_stop, or at an exact fixed point.
SolveResult run_ist_iht(const SensingOperator& op, const Vector& y, const SolverConfig& cfg);

/// Two-stage thresholding: screen candidates as in IHT, solve least squares on
/// the merged support, threshold again. alpha = beta = 1 is subspace pursuit,
/// alpha = 1, beta = 2 is CoSaMP.
SolveResult run_tst(const SensingOperator& op, const Vector& y, const SolverConfig& cfg);

/// Dispatches on cfg.algo.
SolveResult solve(const SensingOperator& op, const Vector& y, const SolverConfig& cfg);

}  // namespace sparsetune
