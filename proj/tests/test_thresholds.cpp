#include <gtest/gtest.h>
#include <algorithm>

#include "oracles.hpp"
#include "sparsetune/errors.hpp"
#include "sparsetune/random.hpp"
#include "sparsetune/thresholds.hpp"

using namespace sparsetune;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Vector normals(Index len, Seed seed) {
  Rng rng(seed);
  Vector v(len);
  for (Index i = 0; i < len; ++i) v[i] = rng.normal();
  return v;
}

}  // namespace

TEST(Threshold, SoftExamples) {
  EXPECT_EQ(soft_threshold(vec({3, -0.5, -2}), 1.0), vec({2, 0, -1}));
  const Vector v = vec({0.3, -4, 2});
  EXPECT_EQ(soft_threshold(v, 0.0), v);
}

TEST(Threshold, HardExamples) {
  EXPECT_EQ(hard_threshold(vec({3, -0.5, -2}), 1.0), vec({3, 0, -2}));
  EXPECT_EQ(hard_threshold(vec({1, -1}), 1.0), vec({0, 0}));
}

TEST(Threshold, OddAndContracting) {
  for (Seed s = 0; s < 50; ++s) {
    const Vector v = normals(40, s);
    const double t = 0.05 * static_cast<double>(s);
    EXPECT_EQ(soft_threshold(-v, t), -soft_threshold(v, t));
    EXPECT_EQ(hard_threshold(-v, t), -hard_threshold(v, t));
    EXPECT_LE(soft_threshold(v, t).norm(), v.norm());
  }
}

TEST(FarToLambda, MatchesQuadratureOracle) {
  for (double far : {1e-4, 1e-3, 0.0455, 0.015, 0.1, 0.2, 0.5, 0.9}) {
    EXPECT_NEAR(far_to_lambda(far), oracle::lambda_for_far(far), 1e-6) << far;
  }
}

TEST(FarToLambda, PublishedPoints) {
  EXPECT_NEAR(far_to_lambda(0.0455), 2.000, 1e-3);
  EXPECT_NEAR(far_to_lambda(0.015), 2.432, 1e-3);
  EXPECT_EQ(far_to_lambda(1.0), 0.0);
  EXPECT_LT(far_to_lambda(1.0 - 1e-9), 1e-8);
}

TEST(FarToLambda, Domain) {
  EXPECT_THROW(far_to_lambda(0.0), DomainError);
  EXPECT_THROW(far_to_lambda(-0.1), DomainError);
  EXPECT_THROW(far_to_lambda(1.5), DomainError);
}

TEST(RobustSigma, Constant) { EXPECT_EQ(robust_sigma(Vector::Constant(9, 2.5)), 0.0); }

TEST(RobustSigma, StandardNormal) { EXPECT_NEAR(robust_sigma(normals(100000, 1)), 1.0, 0.02); }

TEST(RobustSigma, OutlierMixture) {
  Vector v = normals(100000, 2);
  Rng rng(3);
  for (Index i = 0; i < v.size(); i += 20) v[i] = rng.coin() ? 100.0 : -100.0;
  EXPECT_NEAR(robust_sigma(v), 1.0, 0.1);
}

TEST(SelectThreshold, FixedRhoKeeps33) {
  const FixedRhoPolicy p{0.33, 1.0, 1.0};
  const Vector c = normals(400, 5);
  const double t = select_threshold(p, Stage::tst_stage1, c, 100);
  EXPECT_EQ((c.array().abs() > t).count(), 33);
}

TEST(SelectThreshold, OracleKStage2) {
  const OracleKPolicy p{2, 1.0, 2.0};
  EXPECT_EQ(keep_count(p, Stage::tst_stage2, 10), 4);
  const Vector c = vec({5, 4, 3, 2, 1});
  const double t = select_threshold(p, Stage::tst_stage2, c, 10);
  EXPECT_EQ(t, 1.0);
  EXPECT_EQ(hard_threshold(c, t), vec({5, 4, 3, 2, 0}));
}

TEST(SelectThreshold, FarHalfOnNormals) {
  const Vector c = normals(100000, 6);
  EXPECT_NEAR(select_threshold(FarPolicy{0.5}, Stage::single, c, 100), 0.674, 0.02);
}

TEST(SelectThreshold, Degenerate) {
  const OracleKPolicy p{5, 1.0, 1.0};
  EXPECT_THROW(select_threshold(p, Stage::tst_stage1, vec({1, 2, 3, 4, 5}), 10), DegenerateThresholdError);
}

TEST(SelectThreshold, TiesKeepLowerIndices) {
  const Vector c = vec({1, 3, 1, 1, 2});
  auto kept = largest_indices(c, 3);
  std::sort(kept.begin(), kept.end());
  EXPECT_EQ(kept, (std::vector<Index>{0, 1, 4}));
  EXPECT_EQ(keep_largest(c, 3), vec({1, 3, 0, 0, 2}));
}

TEST(SelectThreshold, StageOneCountExact) {
  for (Seed s = 0; s < 20; ++s) {
    const FixedRhoPolicy p{0.2, 1.5, 1.0};
    const Vector c = normals(300, s);
    const Index keep = keep_count(p, Stage::tst_stage1, 100);
    EXPECT_EQ(keep, 30);
    EXPECT_EQ((keep_largest(c, keep).array() != 0.0).count(), 30);
  }
}

TEST(Policy, EffectiveKFloorsRho) {
  EXPECT_EQ(effective_k(FixedRhoPolicy{0.33, 1, 1}, 100), 33);
  EXPECT_EQ(effective_k(FixedRhoPolicy{0.339, 1, 1}, 50), 16);
  EXPECT_EQ(effective_k(OracleKPolicy{7, 1, 1}, 50), 7);
}

TEST(Policy, Validation) {
  EXPECT_THROW(validate(FarPolicy{0.0}), DomainError);
  EXPECT_THROW(validate(OracleKPolicy{0, 1, 1}), ConfigError);
  EXPECT_THROW(validate(FixedRhoPolicy{1.2, 1, 1}), ConfigError);
  EXPECT_NO_THROW(validate(FixedRhoPolicy{0.3, 1, 2}));
}

TEST(Policy, Describe) {
  EXPECT_EQ(describe(FarPolicy{0.015}), "FAR(0.015)");
  EXPECT_EQ(describe(FixedRhoPolicy{0.33, 1, 1}), "FixedRho(0.33;a=1;b=1)");
  EXPECT_EQ(describe(OracleKPolicy{std::nullopt, 1, 2}), "OracleK(true;a=1;b=2)");
}
