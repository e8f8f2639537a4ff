#include "sparsetune/operators.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>

#include "sparsetune/errors.hpp"

namespace sparsetune {

std::string_view to_string(MatrixEnsemble e) {
  switch (e) {
    case MatrixEnsemble::USE: return "USE";
    case MatrixEnsemble::RSE: return "RSE";
    case MatrixEnsemble::URP: return "URP";
    case MatrixEnsemble::PartialFourier1D: return "PartialFourier1D";
    case MatrixEnsemble::PartialHadamard1D: return "PartialHadamard1D";
  }
  return "?";
}

std::optional<MatrixEnsemble> parse_matrix_ensemble(std::string_view tag) {
  for (auto e : {MatrixEnsemble::USE, MatrixEnsemble::RSE, MatrixEnsemble::URP, MatrixEnsemble::PartialFourier1D,
                 MatrixEnsemble::PartialHadamard1D}) {
    if (tag == to_string(e)) return e;
  }
  return std::nullopt;
}

bool is_fast(MatrixEnsemble e) {
  return e == MatrixEnsemble::PartialFourier1D || e == MatrixEnsemble::PartialHadamard1D;
}

namespace detail {

// FFTW's planner is not thread-safe; execution on fresh arrays is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FourierPlans {
  Index N = 0;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;

  explicit FourierPlans(Index size) : N(size) {
    double* in = fftw_alloc_real(N);
    fftw_complex* out = fftw_alloc_complex(N / 2 + 1);
    {
      std::lock_guard lock(fftw_planner_mutex());
      r2c = fftw_plan_dft_r2c_1d(static_cast<int>(N), in, out, FFTW_ESTIMATE);
      c2r = fftw_plan_dft_c2r_1d(static_cast<int>(N), out, in, FFTW_ESTIMATE);
    }
    fftw_free(in);
    fftw_free(out);
  }
  FourierPlans(const FourierPlans&) = delete;
  FourierPlans& operator=(const FourierPlans&) = delete;
  ~FourierPlans() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(r2c);
    fftw_destroy_plan(c2r);
  }
};

}  // namespace detail

namespace {

// Per-thread FFTW work arrays, grown on demand and reused across calls.
struct FftwScratch {
  Index capacity = 0;
  double* real = nullptr;
  fftw_complex* spectrum = nullptr;

  FftwScratch() = default;
  FftwScratch(const FftwScratch&) = delete;
  FftwScratch& operator=(const FftwScratch&) = delete;
  ~FftwScratch() {
    fftw_free(real);
    fftw_free(spectrum);
  }

  void reserve(Index N) {
    if (N <= capacity) return;
    fftw_free(real);
    fftw_free(spectrum);
    real = fftw_alloc_real(static_cast<std::size_t>(N));
    spectrum = fftw_alloc_complex(static_cast<std::size_t>(N / 2 + 1));
    capacity = N;
  }
};

FftwScratch& fftw_scratch(Index N) {
  thread_local FftwScratch scratch;
  scratch.reserve(N);
  return scratch;
}

bool is_power_of_two(Index v) { return v > 0 && (v & (v - 1)) == 0; }

// In-place unnormalized Walsh-Hadamard transform, natural (Sylvester) order.
void fwht(Vector& v) {
  const Index N = v.size();
  for (Index h = 1; h < N; h *= 2) {
    for (Index i = 0; i < N; i += 2 * h) {
      for (Index j = i; j < i + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
}

void check_rows(Index n, Index N, const std::vector<Index>& rows) {
  if (static_cast<Index>(rows.size()) != n) throw DimensionError("row subset size does not match n");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= N) throw DimensionError("row index out of range");
    if (i > 0 && rows[i] <= rows[i - 1]) throw DimensionError("row subset must be sorted and distinct");
  }
}

std::vector<Index> random_subset(Index N, Index n, Rng& rng) {
  std::vector<Index> pool(static_cast<std::size_t>(N));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < n; ++i) {
    const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(N - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(n));
  std::sort(pool.begin(), pool.end());
  return pool;
}

void normalize_columns(Matrix& a) {
  for (Index j = 0; j < a.cols(); ++j) a.col(j) /= a.col(j).norm();
}

}  // namespace

SensingOperator SensingOperator::from_matrix(Matrix a) {
  if (a.rows() < 1 || a.rows() > a.cols()) throw DimensionError("need 1 <= n <= N");
  SensingOperator op;
  op.n_ = a.rows();
  op.N_ = a.cols();
  op.kind_ = OperatorKind::dense;
  op.dense_ = std::make_shared<const Matrix>(std::move(a));
  return op;
}

SensingOperator SensingOperator::partial_fourier(Index N, std::vector<Index> rows) {
  if (N < 2) throw EnsembleError("partial Fourier requires N >= 2");
  const auto n = static_cast<Index>(rows.size());
  if (n < 1 || n > N) throw DimensionError("need 1 <= n <= N");
  check_rows(n, N, rows);
  SensingOperator op;
  op.n_ = n;
  op.N_ = N;
  op.kind_ = OperatorKind::partial_fourier;
  op.selected_ = std::move(rows);
  op.plans_ = std::make_shared<const detail::FourierPlans>(N);
  return op;
}

SensingOperator SensingOperator::partial_hadamard(Index N, std::vector<Index> rows) {
  if (!is_power_of_two(N)) throw EnsembleError("partial Hadamard requires N to be a power of two, got " +
                                               std::to_string(N));
  const auto n = static_cast<Index>(rows.size());
  if (n < 1 || n > N) throw DimensionError("need 1 <= n <= N");
  check_rows(n, N, rows);
  SensingOperator op;
  op.n_ = n;
  op.N_ = N;
  op.kind_ = OperatorKind::partial_hadamard;
  op.selected_ = std::move(rows);
  return op;
}

const Matrix& SensingOperator::matrix() const {
  static const Matrix empty;
  return dense_ ? *dense_ : empty;
}

Vector SensingOperator::forward(const Vector& x) const {
  if (x.size() != N_) {
    throw DimensionError("forward: expected vector of length " + std::to_string(N_) + ", got " +
                         std::to_string(x.size()));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
  switch (kind_) {
    case OperatorKind::dense:
      return *dense_ * x;
    case OperatorKind::partial_hadamard: {
      Vector t = x;
      fwht(t);
      Vector y(n_);
      for (Index i = 0; i < n_; ++i) y[i] = scale * t[selected_[i]];
      return y;
    }
    case OperatorKind::partial_fourier: {
      auto& work = fftw_scratch(N_);
      std::copy(x.data(), x.data() + N_, work.real);
      fftw_execute_dft_r2c(plans_->r2c, work.real, work.spectrum);
      const fftw_complex* out = work.spectrum;
      Vector y(2 * n_);
      for (Index i = 0; i < n_; ++i) {
        const Index j = selected_[i];
        double re, im;
        if (j <= N_ / 2) {
          re = out[j][0];
          im = out[j][1];
        } else {
          // Hermitian symmetry of a real input's spectrum.
          re = out[N_ - j][0];
          im = -out[N_ - j][1];
        }
        y[i] = scale * re;
        y[n_ + i] = scale * im;
      }
      return y;
    }
  }
  return {};
}

Vector SensingOperator::adjoint(const Vector& r) const {
  if (r.size() != measurement_size()) {
    throw DimensionError("adjoint: expected vector of length " + std::to_string(measurement_size()) + ", got " +
                         std::to_string(r.size()));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
  switch (kind_) {
    case OperatorKind::dense:
      return dense_->transpose() * r;
    case OperatorKind::partial_hadamard: {
      Vector t = Vector::Zero(N_);
      for (Index i = 0; i < n_; ++i) t[selected_[i]] = r[i];
      fwht(t);
      return scale * t;
    }
    case OperatorKind::partial_fourier: {
      // Re(F^H z) is the inverse transform of the Hermitian part of z.
      const Index half = N_ / 2 + 1;
      auto& work = fftw_scratch(N_);
      fftw_complex* spec = work.spectrum;
      std::fill_n(&spec[0][0], 2 * half, 0.0);
      for (Index i = 0; i < n_; ++i) {
        const Index j = selected_[i];
        const double re = 0.5 * r[i];
        const double im = 0.5 * r[n_ + i];
        if (j < half) {
          spec[j][0] += re;
          spec[j][1] += im;
        }
        const Index m = (N_ - j) % N_;
        if (m < half) {
          spec[m][0] += re;
          spec[m][1] -= im;
        }
      }
      fftw_execute_dft_c2r(plans_->c2r, spec, work.real);
      Vector x(N_);
      for (Index l = 0; l < N_; ++l) x[l] = scale * work.real[l];
      return x;
    }
  }
  return {};
}

SensingOperator sample_operator(MatrixEnsemble ensemble, Index n, Index N, Seed seed) {
  if (n < 1 || n > N) {
    throw DimensionError("need 1 <= n <= N, got n=" + std::to_string(n) + ", N=" + std::to_string(N));
  }
  Rng rng(seed);
  switch (ensemble) {
    case MatrixEnsemble::USE: {
      Matrix a(n, N);
      for (Index j = 0; j < N; ++j)
        for (Index i = 0; i < n; ++i) a(i, j) = rng.normal();
      normalize_columns(a);
      return SensingOperator::from_matrix(std::move(a));
    }
    case MatrixEnsemble::RSE: {
      const double v = 1.0 / std::sqrt(static_cast<double>(n));
      Matrix a(n, N);
      for (Index j = 0; j < N; ++j)
        for (Index i = 0; i < n; ++i) a(i, j) = rng.coin() ? v : -v;
      return SensingOperator::from_matrix(std::move(a));
    }
    case MatrixEnsemble::URP: {
      Matrix g(N, n);
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < N; ++i) g(i, j) = rng.normal();
      Eigen::HouseholderQR<Matrix> qr(g);
      Matrix q = qr.householderQ() * Matrix::Identity(N, n);
      Matrix a = q.transpose();
      normalize_columns(a);
      return SensingOperator::from_matrix(std::move(a));
    }
    case MatrixEnsemble::PartialFourier1D:
      if (N < 2) throw EnsembleError("partial Fourier requires N >= 2");
      return SensingOperator::partial_fourier(N, random_subset(N, n, rng));
    case MatrixEnsemble::PartialHadamard1D:
      if (!is_power_of_two(N)) {
        throw EnsembleError("partial Hadamard requires N to be a power of two, got " + std::to_string(N));
      }
      return SensingOperator::partial_hadamard(N, random_subset(N, n, rng));
  }
  throw EnsembleError("unknown ensemble");
}

Vector apply_forward(const SensingOperator& op, const Vector& x) { return op.forward(x); }

Vector apply_adjoint(const SensingOperator& op, const Vector& r) { return op.adjoint(r); }

Matrix densify(const SensingOperator& op) {
  if (op.kind() == OperatorKind::dense) return op.matrix();
  Matrix d(op.measurement_size(), op.cols());
  Vector e = Vector::Zero(op.cols());
  for (Index j = 0; j < op.cols(); ++j) {
    e[j] = 1.0;
    d.col(j) = op.forward(e);
    e[j] = 0.0;
  }
  return d;
}

namespace {

void check_support(const SensingOperator& op, std::span<const Index> support) {
  if (support.empty()) throw DimensionError("support must be nonempty");
  if (static_cast<Index>(support.size()) > op.rows()) {
    throw OverdeterminedSupportError(support.size(), static_cast<std::size_t>(op.rows()));
  }
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i] < 0 || support[i] >= op.cols()) throw DimensionError("support index out of range");
    if (i > 0 && support[i] <= support[i - 1]) throw DimensionError("support must be sorted and distinct");
  }
}

Vector restricted_normal_product(const SensingOperator& op, std::span<const Index> support, const Vector& w) {
  Vector full = Vector::Zero(op.cols());
  for (std::size_t i = 0; i < support.size(); ++i) full[support[i]] = w[static_cast<Index>(i)];
  const Vector back = op.adjoint(op.forward(full));
  Vector out(static_cast<Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i) out[static_cast<Index>(i)] = back[support[i]];
  return out;
}

}  // namespace

Vector least_squares_on_support(const SensingOperator& op, std::span<const Index> support, const Vector& y,
                                double tol) {
  check_support(op, support);
  if (y.size() != op.measurement_size()) throw DimensionError("measurement length mismatch in support solve");
  const auto m = static_cast<Index>(support.size());

  if (op.kind() == OperatorKind::dense) {
    const Matrix& a = op.matrix();
    Matrix sub(a.rows(), m);
    for (Index i = 0; i < m; ++i) sub.col(i) = a.col(support[static_cast<std::size_t>(i)]);
    Eigen::ColPivHouseholderQR<Matrix> qr(sub);
    if (qr.rank() < m) throw RankError(support.size());
    return qr.solve(y);
  }

  // Conjugate gradients on the normal equations restricted to the support.
  const Vector aty = op.adjoint(y);
  Vector b(m);
  for (Index i = 0; i < m; ++i) b[i] = aty[support[static_cast<std::size_t>(i)]];
  Vector w = Vector::Zero(m);
  const double bnorm = b.norm();
  if (bnorm == 0.0) return w;
  Vector res = b;
  Vector p = res;
  double rr = res.squaredNorm();
  const Index cap = 4 * m;
  for (Index it = 0; it < cap && std::sqrt(rr) > tol * bnorm; ++it) {
    const Vector gp = restricted_normal_product(op, support, p);
    const double curvature = p.dot(gp);
    if (!(curvature > 1e-14 * p.squaredNorm())) throw RankError(support.size());
    const double step = rr / curvature;
    w += step * p;
    res -= step * gp;
    const double rr_next = res.squaredNorm();
    p = res + (rr_next / rr) * p;
    rr = rr_next;
  }
  return w;
}

void check_unit_columns(const SensingOperator& op, double tol) {
  const Matrix d = densify(op);
  std::size_t worst = 0;
  double worst_dev = -1.0;
  double worst_norm = 0.0;
  for (Index j = 0; j < d.cols(); ++j) {
    const double nrm = d.col(j).norm();
    const double dev = std::abs(nrm - 1.0);
    if (!(dev <= worst_dev) || std::isnan(nrm)) {
      worst_dev = std::isnan(nrm) ? INFINITY : dev;
      worst = static_cast<std::size_t>(j);
      worst_norm = nrm;
    }
  }
  if (worst_dev > tol) throw NormalizationError(worst, worst_norm);
}

namespace {

// Whitespace-separated reals with line tracking for error messages.
class TokenReader {
 public:
  explicit TokenReader(const std::filesystem::path& path) : path_(path.string()), in_(path) {
    if (!in_) throw IoError("cannot open " + path_);
  }

  bool next(double& value) {
    std::string tok;
    if (!next_token(tok)) return false;
    const char* first = tok.data();
    const char* last = first + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw ParseError(path_, line_, "not a real number: '" + tok + "'");
    return true;
  }

  std::size_t line() const { return line_; }
  const std::string& path() const { return path_; }

 private:
  bool next_token(std::string& tok) {
    while (!(current_ >> tok)) {
      std::string text;
      if (!std::getline(in_, text)) return false;
      ++line_;
      current_.clear();
      current_.str(text);
    }
    return true;
  }

  std::string path_;
  std::ifstream in_;
  std::istringstream current_;
  std::size_t line_ = 0;
};

void write_real(std::FILE* f, double v) { std::fprintf(f, "%.17g\n", v); }

}  // namespace

SensingOperator load_dense_matrix(const std::filesystem::path& path) {
  TokenReader reader(path);
  double nd = 0, Nd = 0;
  if (!reader.next(nd) || !reader.next(Nd)) throw ParseError(reader.path(), reader.line(), "missing 'n N' header");
  if (nd != std::floor(nd) || Nd != std::floor(Nd) || nd < 1 || Nd < nd) {
    throw ParseError(reader.path(), reader.line(), "header must be two integers with 1 <= n <= N");
  }
  const auto n = static_cast<Index>(nd);
  const auto N = static_cast<Index>(Nd);
  Matrix a(n, N);
  for (Index j = 0; j < N; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (!reader.next(a(i, j))) {
        throw ParseError(reader.path(), reader.line(), "expected " + std::to_string(n * N) + " entries");
      }
    }
  }
  double extra;
  if (reader.next(extra)) throw ParseError(reader.path(), reader.line(), "trailing data after matrix entries");
  return SensingOperator::from_matrix(std::move(a));
}

void save_dense_matrix(const std::filesystem::path& path, const Matrix& a) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot write " + path.string());
  std::fprintf(f, "%lld %lld\n", static_cast<long long>(a.rows()), static_cast<long long>(a.cols()));
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) write_real(f, a(i, j));
  if (std::fclose(f) != 0) throw IoError("failed writing " + path.string());
}

Vector load_vector(const std::filesystem::path& path) {
  TokenReader reader(path);
  std::vector<double> values;
  double v;
  while (reader.next(v)) values.push_back(v);
  return Eigen::Map<Vector>(values.data(), static_cast<Index>(values.size()));
}

void save_vector(const std::filesystem::path& path, const Vector& v) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot write " + path.string());
  for (Index i = 0; i < v.size(); ++i) write_real(f, v[i]);
  if (std::fclose(f) != 0) throw IoError("failed writing " + path.string());
}

}  // namespace sparsetune
