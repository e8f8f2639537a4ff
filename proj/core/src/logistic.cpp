#include "sparsetune/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "sparsetune/errors.hpp"

namespace sparsetune {

std::string_view to_string(FitMethod m) {
  return m == FitMethod::logistic ? "logistic" : "bracket-fallback";
}

namespace {

constexpr double kCoefficientTol = 1e-8;
constexpr int kMaxIrls = 100;
constexpr double kSeparationSlope = 1e3;
constexpr double kInitialSlope = -10.0;

double softplus(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double log_likelihood(std::span<const TransitionCell> cells, double a, double b) {
  double ll = 0.0;
  for (const auto& c : cells) {
    const double eta = a + b * c.rho;
    ll += c.S * eta - c.M * softplus(eta);
  }
  return ll;
}

struct Bracket {
  std::optional<double> last_above;  // largest rho with S/M > 1/2
  std::optional<double> first_below;  // smallest rho with S/M <= 1/2
};

Bracket find_bracket(std::span<const TransitionCell> cells) {
  Bracket br;
  for (const auto& c : cells) {
    if (2 * c.S > c.M) {
      if (!br.last_above || c.rho > *br.last_above) br.last_above = c.rho;
    } else {
      if (!br.first_below || c.rho < *br.first_below) br.first_below = c.rho;
    }
  }
  return br;
}

struct IrlsOutcome {
  double a = 0.0;
  double b = 0.0;
  bool ok = false;
};

IrlsOutcome irls(std::span<const TransitionCell> cells, double start_rho) {
  IrlsOutcome out{-kInitialSlope * start_rho, kInitialSlope, false};
  double ll = log_likelihood(cells, out.a, out.b);
  for (int it = 0; it < kMaxIrls; ++it) {
    double g0 = 0, g1 = 0, h00 = 0, h01 = 0, h11 = 0;
    for (const auto& c : cells) {
      const double p = sigmoid(out.a + out.b * c.rho);
      const double resid = c.S - c.M * p;
      const double w = c.M * p * (1.0 - p);
      g0 += resid;
      g1 += resid * c.rho;
      h00 += w;
      h01 += w * c.rho;
      h11 += w * c.rho * c.rho;
    }
    const double det = h00 * h11 - h01 * h01;
    if (!(det > 0.0) || !std::isfinite(det)) return out;
    double da = (h11 * g0 - h01 * g1) / det;
    double db = (h00 * g1 - h01 * g0) / det;

    // Step halving keeps the likelihood nondecreasing.
    double step = 1.0;
    double a_next = out.a + da, b_next = out.b + db;
    double ll_next = log_likelihood(cells, a_next, b_next);
    for (int h = 0; h < 30 && !(ll_next >= ll - 1e-12 * std::abs(ll)); ++h) {
      step *= 0.5;
      a_next = out.a + step * da;
      b_next = out.b + step * db;
      ll_next = log_likelihood(cells, a_next, b_next);
    }
    da *= step;
    db *= step;
    out.a = a_next;
    out.b = b_next;
    ll = ll_next;
    if (!std::isfinite(out.a) || !std::isfinite(out.b) || std::abs(out.b) > kSeparationSlope) return out;
    if (std::max(std::abs(da), std::abs(db)) <= kCoefficientTol) {
      out.ok = true;
      return out;
    }
  }
  return out;
}

}  // namespace

TransitionEstimate fit_logistic(std::span<const TransitionCell> cells) {
  if (cells.empty()) throw EstimateUndefinedError(0.0);
  const double delta = cells.front().delta;
  std::vector<double> rhos;
  for (const auto& c : cells) {
    if (c.delta != delta) throw ConfigError("fit_logistic: cells span more than one delta");
    if (c.N != cells.front().N) throw ConfigError("fit_logistic: cells span more than one N");
    if (c.M < 1 || c.S < 0 || c.S > c.M) throw ConfigError("fit_logistic: cell violates 0 <= S <= M, M >= 1");
    rhos.push_back(c.rho);
  }
  std::sort(rhos.begin(), rhos.end());
  rhos.erase(std::unique(rhos.begin(), rhos.end()), rhos.end());
  if (rhos.size() < 2) throw EstimateUndefinedError(delta);

  const bool any_success = std::any_of(cells.begin(), cells.end(), [](const auto& c) { return c.S > 0; });
  const bool any_failure = std::any_of(cells.begin(), cells.end(), [](const auto& c) { return c.S < c.M; });
  const Bracket bracket = find_bracket(cells);
  if (!any_success || !any_failure) throw EstimateUndefinedError(delta);

  double step = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < rhos.size(); ++i) step = std::min(step, rhos[i] - rhos[i - 1]);
  const double lo = rhos.front() - step;
  const double hi = rhos.back() + step;

  const double start = bracket.last_above && bracket.first_below
                           ? 0.5 * (*bracket.last_above + *bracket.first_below)
                           : 0.5 * (rhos.front() + rhos.back());

  TransitionEstimate est;
  est.delta = delta;
  est.cells_used = static_cast<int>(cells.size());

  const IrlsOutcome fit = irls(cells, start);
  est.a_hat = fit.a;
  est.b_hat = fit.b;
  if (fit.ok && fit.b < 0.0) {
    est.method = FitMethod::logistic;
    const double raw = -fit.a / fit.b;
    est.extrapolated = raw < lo || raw > hi;
    est.rho_star = std::clamp(std::clamp(raw, lo, hi), 0.0, 1.0);
    return est;
  }

  if (!bracket.last_above || !bracket.first_below) throw EstimateUndefinedError(delta);
  est.method = FitMethod::bracket_fallback;
  est.rho_star = std::clamp(0.5 * (*bracket.last_above + *bracket.first_below), 0.0, 1.0);
  return est;
}

}  // namespace sparsetune
