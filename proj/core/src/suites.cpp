#include "sparsetune/suites.hpp"

#include <numeric>
#include <string>
#include <vector>

#include "sparsetune/errors.hpp"

namespace sparsetune {

std::string_view to_string(CoefficientEnsemble c) {
  switch (c) {
    case CoefficientEnsemble::CARS: return "CARS";
    case CoefficientEnsemble::DoubleExponential: return "DoubleExponential";
    case CoefficientEnsemble::Cauchy: return "Cauchy";
    case CoefficientEnsemble::UniformSym: return "UniformSym";
  }
  return "?";
}

std::optional<CoefficientEnsemble> parse_coefficient_ensemble(std::string_view tag) {
  for (auto c : {CoefficientEnsemble::CARS, CoefficientEnsemble::DoubleExponential, CoefficientEnsemble::Cauchy,
                 CoefficientEnsemble::UniformSym}) {
    if (tag == to_string(c)) return c;
  }
  return std::nullopt;
}

namespace {

double draw_amplitude(CoefficientEnsemble coeff, Rng& rng) {
  switch (coeff) {
    case CoefficientEnsemble::CARS:
      return rng.coin() ? 1.0 : -1.0;
    case CoefficientEnsemble::DoubleExponential:
      for (;;) {
        if (const double v = rng.laplace(); v != 0.0) return v;
      }
    case CoefficientEnsemble::Cauchy:
      for (;;) {
        if (const double v = rng.cauchy(); v != 0.0) return v;
      }
    case CoefficientEnsemble::UniformSym:
      for (;;) {
        if (const double v = 2.0 * rng.uniform() - 1.0; v != 0.0) return v;
      }
  }
  return 0.0;
}

}  // namespace

Vector sample_sparse_vector(Index N, Index k, CoefficientEnsemble coeff, Seed seed) {
  if (k < 0 || N < 0 || k > N) {
    throw DimensionError("need 0 <= k <= N, got k=" + std::to_string(k) + ", N=" + std::to_string(N));
  }
  Vector x = Vector::Zero(N);
  Rng support_rng(derive_seed(seed, "support"));
  Rng amplitude_rng(derive_seed(seed, "amplitudes"));

  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  std::vector<Index> pool(static_cast<std::size_t>(N));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    const auto j = i + static_cast<Index>(support_rng.below(static_cast<std::uint64_t>(N - i)));
    std::swap(pool[i], pool[j]);
    x[pool[i]] = draw_amplitude(coeff, amplitude_rng);
  }
  return x;
}

ProblemInstance generate_instance(const ProblemSuite& suite, Index n, Index N, Index k, Seed seed,
                                  std::optional<Seed> operator_seed) {
  if (k < 1 || k > n || n > N) {
    throw DimensionError("need 1 <= k <= n <= N, got k=" + std::to_string(k) + ", n=" + std::to_string(n) +
                         ", N=" + std::to_string(N));
  }
  const Seed op_seed = operator_seed.value_or(derive_seed(seed, "operator"));
  ProblemInstance inst{sample_operator(suite.matrix, n, N, op_seed),
                       sample_sparse_vector(N, k, suite.coeff, derive_seed(seed, "coefficients")), Vector{}, k,
                       seed};
  inst.y = inst.op.forward(inst.x0);
  return inst;
}

double relative_error(const Vector& x0, const Vector& xhat) {
  if (x0.size() != xhat.size()) throw DimensionError("success: vectors differ in length");
  const double ref = x0.norm();
  if (ref == 0.0) throw UndefinedRatioError();
  return (x0 - xhat).norm() / ref;
}

bool success(const Vector& x0, const Vector& xhat, double tol) { return relative_error(x0, xhat) <= tol; }

}  // namespace sparsetune
