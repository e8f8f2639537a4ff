#pragma once

#include <span>

#include "sparsetune/solvers.hpp"

namespace sparsetune {

/// One tabulated point of a recommended tuning: at indeterminacy delta the
/// tuned algorithm reaches transition rho and uses false-alarm rate far
/// (far is unused for TST).
struct TunedPoint {
  double delta;
  double rho;
  double far;
};

/// The tuned table for an algorithm; fast_ops selects the partial-Fourier
/// tuning for IST and IHT. TST has a single table.
std::span<const TunedPoint> recommended_table(Algorithm algo, bool fast_ops);

/// Piecewise-linear in delta, clamped to the end points outside the table.
double interpolate_far(Algorithm algo, double delta, bool fast_ops);
double interpolate_rho(Algorithm algo, double delta, bool fast_ops);

/// Fully specified configuration with no free parameters. The assumed
/// sparsity for TST is hard-coded from the table, never supplied by the user.
SolverConfig recommended_config(Algorithm algo, double delta, bool fast_ops = false);

}  // namespace sparsetune
