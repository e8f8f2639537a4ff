#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "sparsetune/errors.hpp"
#include "sparsetune/operators.hpp"
#include "sparsetune/random.hpp"

using namespace sparsetune;

namespace {

constexpr MatrixEnsemble kAll[] = {MatrixEnsemble::USE, MatrixEnsemble::RSE, MatrixEnsemble::URP,
                                   MatrixEnsemble::PartialFourier1D, MatrixEnsemble::PartialHadamard1D};

Vector gaussian(Index len, Seed seed) {
  Rng rng(seed);
  Vector v(len);
  for (Index i = 0; i < len; ++i) v[i] = rng.normal();
  return v;
}

// Direct O(N^2) evaluation of the selected DFT rows, stacked as [re; im].
Matrix dense_fourier(Index N, std::span<const Index> rows) {
  const Index n = static_cast<Index>(rows.size());
  Matrix a(2 * n, N);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index t = 0; t < N; ++t) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((rows[i] * t) % N) / static_cast<double>(N);
      a(i, t) = scale * std::cos(angle);
      a(n + i, t) = scale * std::sin(angle);
    }
  }
  return a;
}

Matrix dense_hadamard(Index N, std::span<const Index> rows) {
  const Index n = static_cast<Index>(rows.size());
  Matrix a(n, N);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Index i = 0; i < n; ++i)
    for (Index t = 0; t < N; ++t)
      a(i, t) = (__builtin_popcountll(static_cast<unsigned long long>(rows[i] & t)) % 2 ? -scale : scale);
  return a;
}

}  // namespace

TEST(Operators, RseEntriesAreHalf) {
  const auto op = sample_operator(MatrixEnsemble::RSE, 4, 8, 11);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 8; ++j) EXPECT_EQ(std::abs(op.matrix()(i, j)), 0.5);
}

TEST(Operators, UseColumnsUnitNorm) {
  const auto op = sample_operator(MatrixEnsemble::USE, 50, 100, 3);
  for (Index j = 0; j < 100; ++j) EXPECT_NEAR(op.matrix().col(j).norm(), 1.0, 1e-12);
}

TEST(Operators, PartialFourierMatchesDenseDft) {
  const auto op = sample_operator(MatrixEnsemble::PartialFourier1D, 16, 64, 5);
  ASSERT_EQ(op.selected_rows().size(), 16u);
  const Matrix want = dense_fourier(64, op.selected_rows());
  const Matrix got = densify(op);
  EXPECT_LE((want - got).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Operators, PartialFourierAdjointMatchesConjugateTranspose) {
  const auto op = sample_operator(MatrixEnsemble::PartialFourier1D, 4, 8, 9);
  const auto rows = op.selected_rows();
  const Vector r = gaussian(8, 1);
  Vector want = Vector::Zero(8);
  for (Index t = 0; t < 8; ++t) {
    std::complex<double> acc = 0;
    for (Index i = 0; i < 4; ++i) {
      const std::complex<double> entry =
          std::polar(0.5, -2.0 * std::numbers::pi * static_cast<double>(rows[i] * t) / 8.0);
      acc += std::conj(entry) * std::complex<double>(r[i], r[4 + i]);
    }
    want[t] = acc.real();
  }
  EXPECT_LE((apply_adjoint(op, r) - want).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Operators, PartialHadamardMatchesSylvesterEntries) {
  const auto op = sample_operator(MatrixEnsemble::PartialHadamard1D, 16, 64, 5);
  const Matrix want = dense_hadamard(64, op.selected_rows());
  EXPECT_LE((want - densify(op)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Operators, ZeroInputsGiveZero) {
  for (auto e : kAll) {
    const auto op = sample_operator(e, 16, 32, 2);
    EXPECT_EQ(apply_forward(op, Vector::Zero(32)).norm(), 0.0) << to_string(e);
    EXPECT_EQ(apply_adjoint(op, Vector::Zero(op.measurement_size())).norm(), 0.0) << to_string(e);
  }
}

TEST(Operators, BasisVectorGivesColumn) {
  const auto op = sample_operator(MatrixEnsemble::USE, 10, 20, 4);
  for (Index j = 0; j < 20; ++j) {
    const Vector col = apply_forward(op, Vector::Unit(20, j));
    EXPECT_EQ(col, op.matrix().col(j));
  }
}

TEST(Operators, LengthMismatchThrows) {
  const auto op = sample_operator(MatrixEnsemble::USE, 10, 20, 4);
  EXPECT_THROW(apply_forward(op, Vector::Zero(19)), DimensionError);
  EXPECT_THROW(apply_adjoint(op, Vector::Zero(11)), DimensionError);
  const auto f = sample_operator(MatrixEnsemble::PartialFourier1D, 10, 20, 4);
  EXPECT_THROW(apply_adjoint(f, Vector::Zero(10)), DimensionError);
}

TEST(Operators, InvalidDimensionsAndHadamardSize) {
  EXPECT_THROW(sample_operator(MatrixEnsemble::USE, 0, 10, 1), DimensionError);
  EXPECT_THROW(sample_operator(MatrixEnsemble::USE, 11, 10, 1), DimensionError);
  EXPECT_THROW(sample_operator(MatrixEnsemble::PartialHadamard1D, 10, 48, 1), EnsembleError);
}

TEST(Operators, AdjointIdentityAllKinds) {
  for (auto e : kAll) {
    for (Seed s = 0; s < 5; ++s) {
      const Index N = 64;
      const auto op = sample_operator(e, 24, N, s);
      const Vector x = gaussian(N, 100 + s);
      const Vector r = gaussian(op.measurement_size(), 200 + s);
      const double lhs = apply_forward(op, x).dot(r);
      const double rhs = x.dot(apply_adjoint(op, r));
      EXPECT_LE(std::abs(lhs - rhs), 1e-10 * x.norm() * r.norm()) << to_string(e);
    }
  }
}

TEST(Operators, DensifiedColumnsUnitNorm) {
  for (auto e : kAll) {
    const auto op = sample_operator(e, 40, 128, 7);
    const Matrix a = densify(op);
    for (Index j = 0; j < a.cols(); ++j) EXPECT_NEAR(a.col(j).norm(), 1.0, 1e-8) << to_string(e) << " col " << j;
  }
}

TEST(Operators, FastMatchesDensifiedOnRandomInputs) {
  for (auto e : {MatrixEnsemble::PartialFourier1D, MatrixEnsemble::PartialHadamard1D}) {
    for (Index N : {8, 32, 128}) {
      const auto op = sample_operator(e, N / 2, N, static_cast<Seed>(N));
      const Matrix a = densify(op);
      const Vector x = gaussian(N, 1);
      const Vector r = gaussian(op.measurement_size(), 2);
      EXPECT_LE((apply_forward(op, x) - a * x).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LE((apply_adjoint(op, r) - a.transpose() * r).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Operators, Deterministic) {
  for (auto e : kAll) {
    const auto a = sample_operator(e, 16, 64, 42);
    const auto b = sample_operator(e, 16, 64, 42);
    EXPECT_EQ(densify(a), densify(b)) << to_string(e);
    const auto c = sample_operator(e, 16, 64, 43);
    EXPECT_NE(densify(a), densify(c)) << to_string(e);
  }
}

TEST(Operators, UrpHasFullRowRank) {
  const auto op = sample_operator(MatrixEnsemble::URP, 20, 60, 8);
  Eigen::ColPivHouseholderQR<Matrix> qr(op.matrix());
  EXPECT_EQ(qr.rank(), 20);
}

TEST(LeastSquares, RecoversRestrictedSignal) {
  const auto op = sample_operator(MatrixEnsemble::USE, 40, 100, 1);
  Vector x0 = Vector::Zero(100);
  std::vector<Index> support{3, 17, 42, 66, 90};
  for (std::size_t i = 0; i < support.size(); ++i) x0[support[i]] = (i % 2 ? -1.0 : 1.5);
  const Vector w = least_squares_on_support(op, support, apply_forward(op, x0));
  for (std::size_t i = 0; i < support.size(); ++i) EXPECT_NEAR(w[static_cast<Index>(i)], x0[support[i]], 1e-8);
}

TEST(LeastSquares, SingletonIsInnerProduct) {
  const auto op = sample_operator(MatrixEnsemble::USE, 30, 60, 2);
  const Vector y = gaussian(30, 5);
  const std::vector<Index> I{7};
  const Vector w = least_squares_on_support(op, I, y);
  ASSERT_EQ(w.size(), 1);
  EXPECT_NEAR(w[0], op.matrix().col(7).dot(y), 1e-12);
}

TEST(LeastSquares, MatchesExplicitGramInverse) {
  const auto op = sample_operator(MatrixEnsemble::USE, 20, 50, 3);
  Rng rng(9);
  std::vector<Index> I;
  while (I.size() < 10) {
    const Index j = static_cast<Index>(rng.below(50));
    if (std::find(I.begin(), I.end(), j) == I.end()) I.push_back(j);
  }
  std::sort(I.begin(), I.end());
  const Vector y = gaussian(20, 4);
  Matrix sub(20, 10);
  for (Index c = 0; c < 10; ++c) sub.col(c) = op.matrix().col(I[static_cast<std::size_t>(c)]);
  const Matrix gram = sub.transpose() * sub;
  const Vector want = gram.inverse() * (sub.transpose() * y);
  EXPECT_LE((least_squares_on_support(op, I, y) - want).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(LeastSquares, FastKindsMatchDense) {
  for (auto e : {MatrixEnsemble::PartialFourier1D, MatrixEnsemble::PartialHadamard1D}) {
    const auto op = sample_operator(e, 32, 128, 6);
    const auto dense = SensingOperator::from_matrix(densify(op));
    const std::vector<Index> I{1, 5, 9, 40, 77, 100};
    const Vector y = gaussian(op.measurement_size(), 3);
    EXPECT_LE((least_squares_on_support(op, I, y) - least_squares_on_support(dense, I, y)).cwiseAbs().maxCoeff(),
              1e-8)
        << to_string(e);
  }
}

TEST(LeastSquares, Errors) {
  const auto op = sample_operator(MatrixEnsemble::USE, 5, 20, 1);
  std::vector<Index> big{0, 1, 2, 3, 4, 5};
  EXPECT_THROW(least_squares_on_support(op, big, Vector::Zero(5)), OverdeterminedSupportError);
  Matrix a = Matrix::Zero(4, 6);
  a.col(0) = Vector::Unit(4, 0);
  a.col(1) = Vector::Unit(4, 0);
  const auto dup = SensingOperator::from_matrix(a);
  const std::vector<Index> I{0, 1};
  try {
    least_squares_on_support(dup, I, Vector::Unit(4, 0));
    FAIL() << "expected a rank error";
  } catch (const RankError& e) {
    EXPECT_EQ(e.support_size(), 2u);
  }
}

TEST(Operators, CheckUnitColumnsReportsWorst) {
  Matrix a = Matrix::Identity(3, 3);
  a(0, 0) = 1.2;
  a(1, 1) = 0.5;
  try {
    check_unit_columns(SensingOperator::from_matrix(a), 1e-6);
    FAIL();
  } catch (const NormalizationError& e) {
    EXPECT_EQ(e.column(), 1u);
    EXPECT_DOUBLE_EQ(e.norm(), 0.5);
  }
}
