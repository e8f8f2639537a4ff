#include "sparsetune/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <iterator>
#include <string>
#include <vector>

#include "sparsetune/errors.hpp"

namespace sparsetune {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::IST: return "IST";
    case Algorithm::IHT: return "IHT";
    case Algorithm::TST: return "TST";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view tag) {
  std::string lower(tag);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (lower == "ist") return Algorithm::IST;
  if (lower == "iht") return Algorithm::IHT;
  if (lower == "tst") return Algorithm::TST;
  return std::nullopt;
}

void validate(const SolverConfig& cfg) {
  if (!(cfg.kappa > 0.0 && cfg.kappa <= 1.0)) throw ConfigError("kappa must lie in (0,1]");
  if (cfg.max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (!(cfg.residual_stop >= 0.0)) throw ConfigError("residual_stop must be >= 0");
  validate(cfg.policy);
}

namespace {

void check_measurements(const SensingOperator& op, const Vector& y) {
  if (y.size() != op.measurement_size()) {
    throw DimensionError("measurement vector has length " + std::to_string(y.size()) + ", operator expects " +
                         std::to_string(op.measurement_size()));
  }
}

bool all_finite(const Vector& v) { return v.allFinite(); }

SolveResult finish(const SensingOperator& op, const Vector& y, Vector x, int iterations, double ynorm,
                   double stop) {
  SolveResult out;
  out.final_relative_residual = (y - op.forward(x)).norm() / ynorm;
  out.converged = out.final_relative_residual <= stop;
  out.iterations = iterations;
  out.xhat = std::move(x);
  return out;
}

SolveResult zero_measurement_result(Index N) {
  return SolveResult{Vector::Zero(N), 1, 0.0, true};
}

// The false-alarm threshold scales with the spread of the interference term
// kappa*A'r, not of the full candidate: the iterate's own nonzeros would
// inflate the MAD by roughly 15% at rho = 0.25 and push the effective FAR
// well below the tuned value.
double threshold_for(const ThresholdPolicy& policy, Stage stage, const Vector& candidate, const Vector& step,
                     Index n) {
  if (std::holds_alternative<FarPolicy>(policy)) return select_threshold(policy, stage, step, n);
  return select_threshold(policy, stage, candidate, n);
}

std::vector<Index> support_of(const Vector& v) {
  std::vector<Index> s;
  for (Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) s.push_back(i);
  return s;
}

}  // namespace

SolveResult run_ist_iht(const SensingOperator& op, const Vector& y, const SolverConfig& cfg) {
  if (cfg.algo == Algorithm::TST) throw ConfigError("run_ist_iht called with a TST configuration");
  validate(cfg);
  check_measurements(op, y);
  const double ynorm = y.norm();
  if (ynorm == 0.0) return zero_measurement_result(op.cols());

  const bool order_statistic = !std::holds_alternative<FarPolicy>(cfg.policy);
  const bool soft = cfg.algo == Algorithm::IST;
  const Index n = op.rows();

  Vector x = Vector::Zero(op.cols());
  int it = 1;
  for (; it <= cfg.max_iter; ++it) {
    const Vector r = y - op.forward(x);
    if (r.norm() / ynorm <= cfg.residual_stop) break;
    const Vector step = cfg.kappa * op.adjoint(r);
    const Vector c = x + step;
    Vector next;
    if (soft) {
      next = soft_threshold(c, threshold_for(cfg.policy, Stage::single, c, step, n));
    } else if (order_statistic) {
      const Index m = keep_count(cfg.policy, Stage::single, n);
      if (m >= c.size()) throw DegenerateThresholdError(static_cast<std::size_t>(m), c.size());
      next = keep_largest(c, m);
    } else {
      next = hard_threshold(c, threshold_for(cfg.policy, Stage::single, c, step, n));
    }
    if (!all_finite(next)) throw DivergenceError(it);
    const bool fixed_point = next == x;
    x = std::move(next);
    if (fixed_point) break;
  }
  return finish(op, y, std::move(x), std::min(it, cfg.max_iter), ynorm, cfg.residual_stop);
}

SolveResult run_tst(const SensingOperator& op, const Vector& y, const SolverConfig& cfg) {
  if (cfg.algo != Algorithm::TST) throw ConfigError("run_tst called with a non-TST configuration");
  validate(cfg);
  check_measurements(op, y);
  const Index n = op.rows();
  const Index N = op.cols();
  const bool by_far = std::holds_alternative<FarPolicy>(cfg.policy);

  Index keep1 = 0, keep2 = 0;
  if (!by_far) {
    keep1 = keep_count(cfg.policy, Stage::tst_stage1, n);
    keep2 = keep_count(cfg.policy, Stage::tst_stage2, n);
    if (keep1 < 1 || keep2 < 1) throw ConfigError("assumed sparsity rounds to zero kept entries");
    if (keep1 >= N) throw DegenerateThresholdError(static_cast<std::size_t>(keep1), static_cast<std::size_t>(N));
    if (keep2 > n) {
      throw ConfigError("stage-2 keep-count " + std::to_string(keep2) + " exceeds n=" + std::to_string(n));
    }
  }

  const double ynorm = y.norm();
  if (ynorm == 0.0) return zero_measurement_result(N);

  Vector x = Vector::Zero(N);
  int it = 1;
  for (; it <= cfg.max_iter; ++it) {
    const Vector r = y - op.forward(x);
    if (r.norm() / ynorm <= cfg.residual_stop) break;
    const Vector step = cfg.kappa * op.adjoint(r);
    const Vector c = x + step;

    // Stage 1: screen.
    const Vector v = by_far ? hard_threshold(c, threshold_for(cfg.policy, Stage::tst_stage1, c, step, n))
                            : keep_largest(c, keep1);
    std::vector<Index> merged;
    {
      const auto sv = support_of(v);
      const auto sx = support_of(x);
      std::set_union(sv.begin(), sv.end(), sx.begin(), sx.end(), std::back_inserter(merged));
    }
    if (merged.empty()) break;
    if (static_cast<Index>(merged.size()) > n) {
      Vector restricted(static_cast<Index>(merged.size()));
      for (std::size_t i = 0; i < merged.size(); ++i) restricted[static_cast<Index>(i)] = c[merged[i]];
      std::vector<Index> shrunk;
      for (Index j : largest_indices(restricted, n)) shrunk.push_back(merged[static_cast<std::size_t>(j)]);
      merged = std::move(shrunk);
    }

    Vector w;
    try {
      w = least_squares_on_support(op, merged, y);
    } catch (const RankError& e) {
      throw RankError(e.support_size(), it);
    }

    // Stage 2: prune the least-squares coefficients.
    const Vector pruned = by_far ? hard_threshold(w, select_threshold(cfg.policy, Stage::tst_stage2, w, n))
                                 : keep_largest(w, keep2);
    Vector next = Vector::Zero(N);
    for (std::size_t i = 0; i < merged.size(); ++i) next[merged[i]] = pruned[static_cast<Index>(i)];
    if (!all_finite(next)) throw DivergenceError(it);
    const bool fixed_point = next == x;
    x = std::move(next);
    if (fixed_point) break;
  }
  return finish(op, y, std::move(x), std::min(it, cfg.max_iter), ynorm, cfg.residual_stop);
}

SolveResult solve(const SensingOperator& op, const Vector& y, const SolverConfig& cfg) {
  return cfg.algo == Algorithm::TST ? run_tst(op, y, cfg) : run_ist_iht(op, y, cfg);
}

}  // namespace sparsetune
