#pragma once

#include <optional>
#include <string_view>

#include "sparsetune/operators.hpp"
#include "sparsetune/random.hpp"

namespace sparsetune {

enum class CoefficientEnsemble { CARS, DoubleExponential, Cauchy, UniformSym };

std::string_view to_string(CoefficientEnsemble c);
std::optional<CoefficientEnsemble> parse_coefficient_ensemble(std::string_view tag);

struct ProblemSuite {
  MatrixEnsemble matrix = MatrixEnsemble::USE;
  CoefficientEnsemble coeff = CoefficientEnsemble::CARS;

  friend bool operator==(const ProblemSuite&, const ProblemSuite&) = default;
};

/// (USE, CARS): the suite the recommended parameters were tuned on.
inline constexpr ProblemSuite kStandardSuite{MatrixEnsemble::USE, CoefficientEnsemble::CARS};

struct ProblemInstance {
  SensingOperator op;
  Vector x0;
  Vector y;
  Index k = 0;
  Seed seed = 0;
};

/// k-sparse vector of length N: uniformly random support, iid amplitudes.
/// Exact-zero draws from the continuous ensembles are redrawn.
Vector sample_sparse_vector(Index N, Index k, CoefficientEnsemble coeff, Seed seed);

/// Draws operator and coefficients from seeds derived from `seed`. When
/// `operator_seed` is given the operator comes from it instead, which lets
/// several instances share one matrix.
ProblemInstance generate_instance(const ProblemSuite& suite, Index n, Index N, Index k, Seed seed,
                                  std::optional<Seed> operator_seed = std::nullopt);

/// Relative l2 error of `xhat` against `x0`.
double relative_error(const Vector& x0, const Vector& xhat);

inline constexpr double kDefaultSuccessTol = 1e-2;

/// ||x0 - xhat|| / ||x0|| <= tol.
bool success(const Vector& x0, const Vector& xhat, double tol = kDefaultSuccessTol);

}  // namespace sparsetune
