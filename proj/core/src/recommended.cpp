#include "sparsetune/recommended.hpp"

#include <algorithm>
#include <array>

namespace sparsetune {

namespace {

// Standard suite (USE matrices, constant-amplitude random-sign coefficients), N = 800.
constexpr std::array<TunedPoint, 10> kIst{{{0.05, 0.124, 0.02},
                                           {0.11, 0.13, 0.037},
                                           {0.21, 0.16, 0.07},
                                           {0.31, 0.18, 0.12},
                                           {0.41, 0.2, 0.16},
                                           {0.5, 0.22, 0.2},
                                           {0.6, 0.23, 0.25},
                                           {0.7, 0.25, 0.32},
                                           {0.8, 0.27, 0.37},
                                           {0.93, 0.29, 0.42}}};

// Published as 100 * FAR; no row at delta = .31.
constexpr std::array<TunedPoint, 9> kIht{{{0.05, 0.12, 0.0015},
                                          {0.11, 0.16, 0.002},
                                          {0.21, 0.18, 0.004},
                                          {0.41, 0.25, 0.011},
                                          {0.5, 0.28, 0.015},
                                          {0.6, 0.31, 0.02},
                                          {0.7, 0.34, 0.027},
                                          {0.8, 0.38, 0.035},
                                          {0.93, 0.41, 0.043}}};

constexpr std::array<TunedPoint, 10> kTst{{{0.05, 0.124, 0.0},
                                           {0.11, 0.17, 0.0},
                                           {0.21, 0.22, 0.0},
                                           {0.31, 0.26, 0.0},
                                           {0.41, 0.30, 0.0},
                                           {0.5, 0.33, 0.0},
                                           {0.6, 0.368, 0.0},
                                           {0.7, 0.4, 0.0},
                                           {0.8, 0.44, 0.0},
                                           {0.93, 0.48, 0.0}}};

// Partial Fourier matrices, kappa = 1.
constexpr std::array<TunedPoint, 9> kIstFourier{{{0.11, 0.092, 0.0209},
                                                 {0.21, 0.16, 0.0736},
                                                 {0.31, 0.21, 0.13},
                                                 {0.41, 0.26, 0.19},
                                                 {0.5, 0.31, 0.26},
                                                 {0.6, 0.37, 0.32},
                                                 {0.7, 0.41, 0.32},
                                                 {0.8, 0.44, 0.32},
                                                 {0.9, 0.48, 0.32}}};

// Published as 1000 * FAR.
constexpr std::array<TunedPoint, 9> kIhtFourier{{{0.05, 0.056, 0.0003},
                                                 {0.11, 0.14, 0.0004},
                                                 {0.21, 0.2, 0.0018},
                                                 {0.31, 0.24, 0.0029},
                                                 {0.41, 0.27, 0.0038},
                                                 {0.5, 0.3, 0.005},
                                                 {0.6, 0.32, 0.005},
                                                 {0.7, 0.34, 0.005},
                                                 {0.8, 0.38, 0.005}}};

template <class Field>
double interpolate(std::span<const TunedPoint> table, double delta, Field field) {
  if (delta <= table.front().delta) return field(table.front());
  if (delta >= table.back().delta) return field(table.back());
  const auto hi = std::upper_bound(table.begin(), table.end(), delta,
                                   [](double d, const TunedPoint& p) { return d < p.delta; });
  const auto lo = hi - 1;
  const double t = (delta - lo->delta) / (hi->delta - lo->delta);
  return field(*lo) + t * (field(*hi) - field(*lo));
}

}  // namespace

std::span<const TunedPoint> recommended_table(Algorithm algo, bool fast_ops) {
  switch (algo) {
    case Algorithm::IST: return fast_ops ? std::span<const TunedPoint>(kIstFourier) : std::span<const TunedPoint>(kIst);
    case Algorithm::IHT: return fast_ops ? std::span<const TunedPoint>(kIhtFourier) : std::span<const TunedPoint>(kIht);
    case Algorithm::TST: return kTst;
  }
  return kTst;
}

double interpolate_far(Algorithm algo, double delta, bool fast_ops) {
  return interpolate(recommended_table(algo, fast_ops), delta, [](const TunedPoint& p) { return p.far; });
}

double interpolate_rho(Algorithm algo, double delta, bool fast_ops) {
  return interpolate(recommended_table(algo, fast_ops), delta, [](const TunedPoint& p) { return p.rho; });
}

SolverConfig recommended_config(Algorithm algo, double delta, bool fast_ops) {
  SolverConfig cfg;
  cfg.algo = algo;
  cfg.max_iter = kDefaultMaxIter;
  cfg.residual_stop = kTransitionResidualStop;
  switch (algo) {
    case Algorithm::IST:
      cfg.kappa = fast_ops ? 1.0 : 0.6;
      cfg.policy = FarPolicy{interpolate_far(algo, delta, fast_ops)};
      break;
    case Algorithm::IHT:
      cfg.kappa = fast_ops ? 1.0 : 0.65;
      cfg.policy = FarPolicy{interpolate_far(algo, delta, fast_ops)};
      break;
    case Algorithm::TST:
      cfg.kappa = 1.0;
      cfg.policy = FixedRhoPolicy{interpolate_rho(algo, delta, fast_ops), 1.0, 1.0};
      break;
  }
  return cfg;
}

}  // namespace sparsetune
