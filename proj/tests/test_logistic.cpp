#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sparsetune/errors.hpp"
#include "sparsetune/logistic.hpp"

using namespace sparsetune;

namespace {

const std::vector<double> kRhos{0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};

TransitionCell cell(double rho, int S, int M) {
  TransitionCell c;
  c.delta = 0.5;
  c.rho = rho;
  c.N = 400;
  c.n = 200;
  c.M = M;
  c.S = S;
  return c;
}

}  // namespace

TEST(Logistic, RecoversKnownCurve) {
  const auto cells = oracle::logistic_cells(6.0, -20.0, kRhos, 500, 1);
  const auto est = fit_logistic(cells);
  EXPECT_EQ(est.method, FitMethod::logistic);
  EXPECT_NEAR(est.rho_star, 0.30, 0.01);
  EXPECT_NEAR(est.a_hat / -est.b_hat, est.rho_star, 1e-12);
  EXPECT_LT(est.b_hat, 0.0);
  EXPECT_FALSE(est.extrapolated);
  EXPECT_EQ(est.cells_used, static_cast<int>(kRhos.size()));
}

TEST(Logistic, ErrorShrinksWithTrials) {
  double err50 = 0, err500 = 0;
  for (unsigned s = 0; s < 40; ++s) {
    err50 += std::abs(fit_logistic(oracle::logistic_cells(6.0, -20.0, kRhos, 50, s)).rho_star - 0.3);
    err500 += std::abs(fit_logistic(oracle::logistic_cells(6.0, -20.0, kRhos, 500, 1000 + s)).rho_star - 0.3);
  }
  EXPECT_LT(err500, err50);
}

TEST(Logistic, BracketFallbackMidpoint) {
  const std::vector<TransitionCell> cells{cell(0.2, 20, 20), cell(0.4, 0, 20)};
  const auto est = fit_logistic(cells);
  EXPECT_EQ(est.method, FitMethod::bracket_fallback);
  EXPECT_DOUBLE_EQ(est.rho_star, 0.3);
}

TEST(Logistic, AllSuccessOrAllFailureUndefined) {
  std::vector<TransitionCell> all_ok, all_bad;
  for (double r : kRhos) {
    all_ok.push_back(cell(r, 20, 20));
    all_bad.push_back(cell(r, 0, 20));
  }
  EXPECT_THROW(fit_logistic(all_ok), EstimateUndefinedError);
  EXPECT_THROW(fit_logistic(all_bad), EstimateUndefinedError);
  EXPECT_THROW(fit_logistic(std::vector<TransitionCell>{cell(0.2, 10, 20)}), EstimateUndefinedError);
}

TEST(Logistic, MixedDeltaRejected) {
  std::vector<TransitionCell> cells{cell(0.2, 15, 20), cell(0.3, 5, 20)};
  cells[1].delta = 0.6;
  EXPECT_THROW(fit_logistic(cells), ConfigError);
}

TEST(Logistic, ClampedWithinOneStep) {
  // Success stays high across the sampled range, so the fitted crossing lies far to the right.
  const std::vector<TransitionCell> cells{cell(0.1, 40, 40), cell(0.2, 40, 40), cell(0.3, 39, 40),
                                          cell(0.4, 38, 40)};
  const auto est = fit_logistic(cells);
  EXPECT_GE(est.rho_star, 0.0);
  EXPECT_LE(est.rho_star, 0.5 + 1e-12);
  if (est.extrapolated) EXPECT_DOUBLE_EQ(est.rho_star, 0.5);
}
