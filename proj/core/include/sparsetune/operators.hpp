#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sparsetune/random.hpp"

namespace sparsetune {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class MatrixEnsemble { USE, RSE, URP, PartialFourier1D, PartialHadamard1D };
enum class OperatorKind { dense, partial_fourier, partial_hadamard };

std::string_view to_string(MatrixEnsemble e);
std::optional<MatrixEnsemble> parse_matrix_ensemble(std::string_view tag);
bool is_fast(MatrixEnsemble e);

namespace detail {
struct FourierPlans;
}

/// An n x N measurement operator with unit-norm columns.
///
/// Dense kinds hold the matrix column-major. Fast kinds hold the sorted row
/// subset of the unitary N-point transform, scaled by sqrt(N/n), and apply it
/// in O(N log N). Measurements of the partial Fourier kind are complex and are
/// stored stacked as [real parts (n); imaginary parts (n)], so every kind
/// exchanges real vectors of length measurement_size() with the solvers.
///
/// Values are immutable and cheap to copy; the payload is shared.
class SensingOperator {
 public:
  /// Wraps an explicit matrix. Column norms are not checked here; see
  /// check_unit_columns.
  static SensingOperator from_matrix(Matrix a);
  static SensingOperator partial_fourier(Index N, std::vector<Index> rows);
  static SensingOperator partial_hadamard(Index N, std::vector<Index> rows);

  Index rows() const noexcept { return n_; }
  Index cols() const noexcept { return N_; }
  OperatorKind kind() const noexcept { return kind_; }
  bool is_complex() const noexcept { return kind_ == OperatorKind::partial_fourier; }
  /// Length of the real measurement vector: n, or 2n for partial Fourier.
  Index measurement_size() const noexcept { return is_complex() ? 2 * n_ : n_; }

  /// Dense payload; empty for fast kinds.
  const Matrix& matrix() const;
  /// Selected transform rows; empty for dense kinds.
  std::span<const Index> selected_rows() const noexcept { return selected_; }

  Vector forward(const Vector& x) const;
  Vector adjoint(const Vector& r) const;

 private:
  SensingOperator() = default;

  Index n_ = 0;
  Index N_ = 0;
  OperatorKind kind_ = OperatorKind::dense;
  std::shared_ptr<const Matrix> dense_;
  std::vector<Index> selected_;
  std::shared_ptr<const detail::FourierPlans> plans_;
};

SensingOperator sample_operator(MatrixEnsemble ensemble, Index n, Index N, Seed seed);

Vector apply_forward(const SensingOperator& op, const Vector& x);
Vector apply_adjoint(const SensingOperator& op, const Vector& r);

/// Forward image of every basis vector, as a measurement_size() x N matrix.
Matrix densify(const SensingOperator& op);

/// Least-squares coefficients on the columns listed in `support` (sorted,
/// distinct). Dense operators use a column-pivoted QR of the submatrix; fast
/// operators run conjugate gradients on the normal equations, stopping at
/// relative residual `tol` or after 4*|support| iterations.
Vector least_squares_on_support(const SensingOperator& op, std::span<const Index> support, const Vector& y,
                                double tol = 1e-10);

/// Throws NormalizationError naming the worst column if any column norm
/// differs from 1 by more than `tol`.
void check_unit_columns(const SensingOperator& op, double tol);

/// Plain-text matrix format: header "n N", then n*N reals in column-major order.
SensingOperator load_dense_matrix(const std::filesystem::path& path);
void save_dense_matrix(const std::filesystem::path& path, const Matrix& a);

/// One real per line.
Vector load_vector(const std::filesystem::path& path);
void save_vector(const std::filesystem::path& path, const Vector& v);

}  // namespace sparsetune
