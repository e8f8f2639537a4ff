#include "sparsetune/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "sparsetune/errors.hpp"

namespace sparsetune {

namespace {

std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// Acklam's rational approximation to the normal quantile (rel. error < 1.2e-9).
double normal_quantile_approx(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  if (p < plow) {
    const double q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > 1 - plow) {
    const double q = std::sqrt(-2 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

double median_inplace(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// Ordering by (magnitude desc, index asc).
std::vector<Index> magnitude_order(const Vector& v, Index m) {
  std::vector<Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  auto before = [&v](Index a, Index b) {
    const double fa = std::abs(v[a]);
    const double fb = std::abs(v[b]);
    return fa != fb ? fa > fb : a < b;
  };
  const auto cut = std::min<std::size_t>(static_cast<std::size_t>(m) + 1, idx.size());
  const auto mid = idx.begin() + static_cast<std::ptrdiff_t>(cut);
  if (mid != idx.end()) std::nth_element(idx.begin(), mid - 1, idx.end(), before);
  std::sort(idx.begin(), mid, before);
  return idx;
}

}  // namespace

void validate(const ThresholdPolicy& policy) {
  std::visit(overloaded{
                 [](const FarPolicy& p) {
                   if (!(p.far > 0.0 && p.far < 1.0)) throw DomainError("FAR must lie in (0,1), got " + fmt_real(p.far));
                 },
                 [](const OracleKPolicy& p) {
                   if (p.k && *p.k < 1) throw ConfigError("oracle sparsity k must be >= 1");
                   if (!(p.alpha >= 1.0) || !(p.beta >= 1.0)) throw ConfigError("alpha and beta must be >= 1");
                 },
                 [](const FixedRhoPolicy& p) {
                   if (!(p.rho_star > 0.0 && p.rho_star < 1.0)) throw ConfigError("rho_star must lie in (0,1)");
                   if (!(p.alpha >= 1.0) || !(p.beta >= 1.0)) throw ConfigError("alpha and beta must be >= 1");
                 },
             },
             policy);
}

std::string describe(const ThresholdPolicy& policy) {
  return std::visit(overloaded{
                        [](const FarPolicy& p) { return "FAR(" + fmt_real(p.far) + ")"; },
                        [](const OracleKPolicy& p) {
                          return "OracleK(" + (p.k ? std::to_string(*p.k) : std::string("true")) +
                                 ";a=" + fmt_real(p.alpha) + ";b=" + fmt_real(p.beta) + ")";
                        },
                        [](const FixedRhoPolicy& p) {
                          return "FixedRho(" + fmt_real(p.rho_star) + ";a=" + fmt_real(p.alpha) +
                                 ";b=" + fmt_real(p.beta) + ")";
                        },
                    },
                    policy);
}

Vector soft_threshold(const Vector& v, double t) {
  if (t < 0) throw DomainError("threshold must be nonnegative");
  return v.unaryExpr([t](double x) {
    const double mag = std::abs(x) - t;
    return mag > 0 ? std::copysign(mag, x) : 0.0;
  });
}

Vector hard_threshold(const Vector& v, double t) {
  if (t < 0) throw DomainError("threshold must be nonnegative");
  return v.unaryExpr([t](double x) { return std::abs(x) > t ? x : 0.0; });
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double far_to_lambda(double far) {
  if (!(far > 0.0 && far <= 1.0)) throw DomainError("FAR must lie in (0,1), got " + fmt_real(far));
  if (far == 1.0) return 0.0;
  const double p = 0.5 * far;  // Phi(-lambda)
  double x = normal_quantile_approx(p);
  // One Newton step against the erfc-based distribution function.
  const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  x -= (normal_cdf(x) - p) / density;
  return -x;
}

double robust_sigma(std::span<const double> v) {
  if (v.empty()) throw DimensionError("robust_sigma of an empty vector");
  std::vector<double> work(v.begin(), v.end());
  const double med = median_inplace(work);
  for (std::size_t i = 0; i < v.size(); ++i) work[i] = std::abs(v[i] - med);
  return median_inplace(work) / 0.6745;
}

Index effective_k(const ThresholdPolicy& policy, Index n) {
  if (const auto* o = std::get_if<OracleKPolicy>(&policy)) {
    if (!o->k) throw ConfigError("oracle sparsity was not supplied");
    return *o->k;
  }
  if (const auto* f = std::get_if<FixedRhoPolicy>(&policy)) {
    return static_cast<Index>(std::floor(f->rho_star * static_cast<double>(n)));
  }
  throw ConfigError("FAR policy has no assumed sparsity");
}

Index keep_count(const ThresholdPolicy& policy, Stage stage, Index n) {
  const Index k = effective_k(policy, n);
  double alpha = 1.0, beta = 1.0;
  std::visit(overloaded{[](const FarPolicy&) {},
                        [&](const OracleKPolicy& p) { alpha = p.alpha, beta = p.beta; },
                        [&](const FixedRhoPolicy& p) { alpha = p.alpha, beta = p.beta; }},
             policy);
  const auto kd = static_cast<double>(k);
  switch (stage) {
    case Stage::single: return k;
    case Stage::tst_stage1: return static_cast<Index>(std::ceil(alpha * kd));
    case Stage::tst_stage2: return static_cast<Index>(std::ceil(beta * kd));
  }
  return k;
}

double select_threshold(const ThresholdPolicy& policy, Stage stage, const Vector& candidate, Index n) {
  if (candidate.size() == 0) throw DimensionError("empty candidate vector");
  if (const auto* p = std::get_if<FarPolicy>(&policy)) {
    return far_to_lambda(p->far) * robust_sigma(candidate);
  }
  const Index m = keep_count(policy, stage, n);
  if (m < 1) throw ConfigError("assumed sparsity rounds to zero kept entries");
  if (m >= candidate.size()) throw DegenerateThresholdError(static_cast<std::size_t>(m), candidate.size());
  const auto order = magnitude_order(candidate, m);
  return std::abs(candidate[order[static_cast<std::size_t>(m)]]);
}

std::vector<Index> largest_indices(const Vector& v, Index m) {
  m = std::clamp<Index>(m, 0, v.size());
  auto order = magnitude_order(v, m);
  order.resize(static_cast<std::size_t>(m));
  std::sort(order.begin(), order.end());
  return order;
}

Vector keep_largest(const Vector& v, Index m) {
  Vector out = Vector::Zero(v.size());
  for (Index i : largest_indices(v, m)) out[i] = v[i];
  return out;
}

}  // namespace sparsetune
