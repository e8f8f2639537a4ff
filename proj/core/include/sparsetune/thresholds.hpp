#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sparsetune/operators.hpp"

namespace sparsetune {

/// Threshold at lambda * sigma, with lambda set by the false-alarm rate
/// FAR = 2 * Phi(-lambda) and sigma a robust scale estimate of the candidate.
struct FarPolicy {
  double far = 0.01;
  friend bool operator==(const FarPolicy&, const FarPolicy&) = default;
};

/// Keep alpha*k entries in TST stage 1 and beta*k in stage 2, k supplied by
/// an oracle. An empty k is filled with the true sparsity by the experiment
/// harness; solvers reject it.
struct OracleKPolicy {
  std::optional<Index> k;
  double alpha = 1.0;
  double beta = 1.0;
  friend bool operator==(const OracleKPolicy&, const OracleKPolicy&) = default;
};

/// Like OracleKPolicy with the assumed sparsity hard-coded as floor(rho_star*n).
struct FixedRhoPolicy {
  double rho_star = 0.3;
  double alpha = 1.0;
  double beta = 1.0;
  friend bool operator==(const FixedRhoPolicy&, const FixedRhoPolicy&) = default;
};

using ThresholdPolicy = std::variant<FarPolicy, OracleKPolicy, FixedRhoPolicy>;

enum class Stage { single, tst_stage1, tst_stage2 };

/// Throws DomainError / ConfigError if the policy parameters are out of range.
void validate(const ThresholdPolicy& policy);

/// Compact, comma-free description, e.g. "FAR(0.015)" or "FixedRho(0.33;a=1;b=1)".
std::string describe(const ThresholdPolicy& policy);

Vector soft_threshold(const Vector& v, double t);
Vector hard_threshold(const Vector& v, double t);

/// Standard normal distribution function.
double normal_cdf(double x);

/// lambda with FAR = 2 * Phi(-lambda). far = 1 maps to lambda = 0.
double far_to_lambda(double far);

/// Normal-consistent median absolute deviation, MAD / 0.6745.
double robust_sigma(std::span<const double> v);
inline double robust_sigma(const Vector& v) { return robust_sigma(std::span<const double>(v.data(), v.size())); }

/// Assumed sparsity for the order-statistic policies; throws for FarPolicy.
Index effective_k(const ThresholdPolicy& policy, Index n);

/// Number of entries an order-statistic policy keeps at `stage`.
Index keep_count(const ThresholdPolicy& policy, Stage stage, Index n);

/// Threshold for `candidate`. For the order-statistic policies this is the
/// (m+1)-th largest magnitude, so exactly m entries exceed it absent ties.
double select_threshold(const ThresholdPolicy& policy, Stage stage, const Vector& candidate, Index n);

/// Indices of the m largest magnitudes, ordered by (magnitude desc, index asc)
/// and returned sorted ascending. Ties at the cutoff go to lower indices.
std::vector<Index> largest_indices(const Vector& v, Index m);

/// v restricted to largest_indices(v, m).
Vector keep_largest(const Vector& v, Index m);

}  // namespace sparsetune
