#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "sparsetune/transition_types.hpp"

namespace sparsetune {

/// Binomial maximum-likelihood fit of logit(pi) = a + b*rho over one delta
/// row, rho* = -a/b. Falls back to the midpoint of the bracket around the
/// 50% crossing when IRLS separates (|b| > 1e3), stalls, or yields b >= 0.
/// Throws EstimateUndefinedError when no bracket exists.
TransitionEstimate fit_logistic(std::span<const TransitionCell> cells);

}  // namespace sparsetune
