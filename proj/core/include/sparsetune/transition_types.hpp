#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "sparsetune/solvers.hpp"
#include "sparsetune/suites.hpp"

namespace sparsetune {

/// Monte Carlo record for one (delta, rho) point: S successes out of M.
struct TransitionCell {
  double delta = 0.0;
  double rho = 0.0;
  Index n = 0;
  Index N = 0;
  Index k = 0;
  int M = 0;
  int S = 0;
  double mean_iterations = 0.0;
  Algorithm algo = Algorithm::IHT;
  std::string policy;
  double kappa = 1.0;
  ProblemSuite suite;
  Seed seed = 0;

  friend bool operator==(const TransitionCell&, const TransitionCell&) = default;
};

enum class FitMethod { logistic, bracket_fallback };

std::string_view to_string(FitMethod m);

struct TransitionEstimate {
  double delta = 0.0;
  double a_hat = 0.0;
  double b_hat = 0.0;
  double rho_star = 0.0;
  FitMethod method = FitMethod::logistic;
  int cells_used = 0;
  /// rho_star was clamped to within one grid step of the sampled range.
  bool extrapolated = false;
};

}  // namespace sparsetune
