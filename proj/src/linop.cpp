#include "lbreg/linop.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>

#include <fftw3.h>

namespace lbreg {

namespace {

// FFTW's planner and plan destruction are not thread-safe; execution of an
// existing plan through the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void check_rows(Index n, const std::vector<Index>& rows) {
  if (n <= 0) throw std::invalid_argument("transform length must be positive");
  if (rows.empty()) throw std::invalid_argument("row-index set is empty");
  if (static_cast<Index>(rows.size()) > n)
    throw std::invalid_argument("more rows than the transform length");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= n)
      throw std::invalid_argument("row index " + std::to_string(rows[i]) + " outside [0, " +
                                  std::to_string(n) + ")");
    if (i > 0 && rows[i] == rows[i - 1])
      throw std::invalid_argument("duplicate row index " + std::to_string(rows[i]));
  }
}

void check_length(Index got, Index want, const char* what) {
  if (got != want)
    throw std::invalid_argument(std::string(what) + ": expected length " + std::to_string(want) +
                                ", got " + std::to_string(got));
}

}  // namespace

namespace detail {

struct TransformPlans {
  Index n = 0;
  bool complex = false;
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;

  TransformPlans(Index length, bool is_complex) : n(length), complex(is_complex) {
    const int len = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard lock(planner_mutex());
    if (complex) {
      std::vector<Complex> a(n), b(n);
      auto* pa = reinterpret_cast<fftw_complex*>(a.data());
      auto* pb = reinterpret_cast<fftw_complex*>(b.data());
      forward = fftw_plan_dft_1d(len, pa, pb, FFTW_FORWARD, flags);
      inverse = fftw_plan_dft_1d(len, pa, pb, FFTW_BACKWARD, flags);
    } else {
      std::vector<double> a(n), b(n);
      forward = fftw_plan_r2r_1d(len, a.data(), b.data(), FFTW_REDFT10, flags);
      inverse = fftw_plan_r2r_1d(len, a.data(), b.data(), FFTW_REDFT01, flags);
    }
    if (!forward || !inverse) throw std::runtime_error("FFTW planning failed");
  }

  ~TransformPlans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }

  TransformPlans(const TransformPlans&) = delete;
  TransformPlans& operator=(const TransformPlans&) = delete;

  // Orthonormal DCT-II. REDFT10 computes 2 * sum x_j cos(pi (j + 1/2) k / n).
  RealVector dct(const RealVector& x) const {
    RealVector in = x;
    RealVector out(n);
    fftw_execute_r2r(forward, in.data(), out.data());
    out[0] *= std::sqrt(0.25 / static_cast<double>(n));
    out.tail(n - 1) *= std::sqrt(0.5 / static_cast<double>(n));
    return out;
  }

  // Transpose of dct(): orthonormal DCT-III through REDFT01.
  RealVector idct(const RealVector& y) const {
    RealVector in(n);
    in[0] = y[0] / std::sqrt(static_cast<double>(n));
    in.tail(n - 1) = y.tail(n - 1) / std::sqrt(2.0 * static_cast<double>(n));
    RealVector out(n);
    fftw_execute_r2r(inverse, in.data(), out.data());
    return out;
  }

  ComplexVector dft(const ComplexVector& x, bool backward) const {
    ComplexVector in = x;
    ComplexVector out(n);
    fftw_execute_dft(backward ? inverse : forward, reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    out /= std::sqrt(static_cast<double>(n));
    return out;
  }
};

}  // namespace detail

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::DenseReal: return "dense";
    case OperatorKind::PartialDct: return "dct";
    case OperatorKind::PartialInverseFourier: return "fourier";
  }
  return "unknown";
}

OperatorKind operator_kind_from_string(const std::string& name) {
  if (name == "dense" || name == "gaussian") return OperatorKind::DenseReal;
  if (name == "dct") return OperatorKind::PartialDct;
  if (name == "fourier") return OperatorKind::PartialInverseFourier;
  throw std::invalid_argument("unknown operator kind '" + name + "'");
}

LinearOperator LinearOperator::dense(RealMatrix entries) {
  if (entries.rows() <= 0 || entries.cols() <= 0)
    throw std::invalid_argument("dense operator must be non-empty");
  if (entries.rows() > entries.cols())
    throw std::invalid_argument("operator must have m <= n");
  LinearOperator op;
  op.kind_ = OperatorKind::DenseReal;
  op.m_ = entries.rows();
  op.n_ = entries.cols();
  op.entries_ = std::move(entries);
  return op;
}

LinearOperator LinearOperator::partial_dct(Index n, std::vector<Index> rows) {
  std::sort(rows.begin(), rows.end());
  check_rows(n, rows);
  LinearOperator op;
  op.kind_ = OperatorKind::PartialDct;
  op.m_ = static_cast<Index>(rows.size());
  op.n_ = n;
  op.row_indices_ = std::move(rows);
  op.plans_ = std::make_shared<const detail::TransformPlans>(n, false);
  return op;
}

LinearOperator LinearOperator::partial_inverse_fourier(Index n, std::vector<Index> rows) {
  std::sort(rows.begin(), rows.end());
  check_rows(n, rows);
  LinearOperator op;
  op.kind_ = OperatorKind::PartialInverseFourier;
  op.m_ = static_cast<Index>(rows.size());
  op.n_ = n;
  op.row_indices_ = std::move(rows);
  op.plans_ = std::make_shared<const detail::TransformPlans>(n, true);
  return op;
}

const RealMatrix& LinearOperator::dense_entries() const {
  if (kind_ != OperatorKind::DenseReal)
    throw std::logic_error("dense_entries() on a " + to_string(kind_) + " operator");
  return entries_;
}

RealVector LinearOperator::apply(const RealVector& x) const {
  check_length(x.size(), n_, "apply");
  switch (kind_) {
    case OperatorKind::DenseReal: {
      // Iterates are sparse most of the time; skip zero columns when it pays.
      Index nnz = 0;
      for (Index j = 0; j < n_; ++j) nnz += (x[j] != 0.0);
      if (nnz * 4 >= n_) return entries_ * x;
      RealVector y = RealVector::Zero(m_);
      for (Index j = 0; j < n_; ++j)
        if (x[j] != 0.0) y.noalias() += x[j] * entries_.col(j);
      return y;
    }
    case OperatorKind::PartialDct: {
      const RealVector full = plans_->dct(x);
      RealVector y(m_);
      for (Index i = 0; i < m_; ++i) y[i] = full[row_indices_[i]];
      return y;
    }
    case OperatorKind::PartialInverseFourier:
      break;
  }
  throw std::invalid_argument("apply: real input given to a complex operator");
}

ComplexVector LinearOperator::apply(const ComplexVector& x) const {
  if (kind_ != OperatorKind::PartialInverseFourier)
    throw std::invalid_argument("apply: complex input given to a real operator");
  check_length(x.size(), n_, "apply");
  const ComplexVector full = plans_->dft(x, /*backward=*/true);
  ComplexVector y(m_);
  for (Index i = 0; i < m_; ++i) y[i] = full[row_indices_[i]];
  return y;
}

RealVector LinearOperator::adjoint(const RealVector& y) const {
  check_length(y.size(), m_, "adjoint");
  switch (kind_) {
    case OperatorKind::DenseReal:
      return entries_.transpose() * y;
    case OperatorKind::PartialDct: {
      RealVector full = RealVector::Zero(n_);
      for (Index i = 0; i < m_; ++i) full[row_indices_[i]] = y[i];
      return plans_->idct(full);
    }
    case OperatorKind::PartialInverseFourier:
      break;
  }
  throw std::invalid_argument("adjoint: real input given to a complex operator");
}

ComplexVector LinearOperator::adjoint(const ComplexVector& y) const {
  if (kind_ != OperatorKind::PartialInverseFourier)
    throw std::invalid_argument("adjoint: complex input given to a real operator");
  check_length(y.size(), m_, "adjoint");
  ComplexVector full = ComplexVector::Zero(n_);
  for (Index i = 0; i < m_; ++i) full[row_indices_[i]] = y[i];
  return plans_->dft(full, /*backward=*/false);
}

Eigen::MatrixXcd LinearOperator::to_dense_complex() const {
  Eigen::MatrixXcd out(m_, n_);
  for (Index j = 0; j < n_; ++j) {
    if (field() == ScalarField::Real) {
      RealVector e = RealVector::Zero(n_);
      e[j] = 1.0;
      out.col(j) = apply(e).cast<Complex>();
    } else {
      ComplexVector e = ComplexVector::Zero(n_);
      e[j] = 1.0;
      out.col(j) = apply(e);
    }
  }
  return out;
}

LinearOperator make_dense_gaussian(Index m, Index n, Seed seed) {
  if (m <= 0 || n <= 0) throw std::invalid_argument("dimensions must be positive");
  if (m > n) throw std::invalid_argument("make_dense_gaussian: m > n");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RealMatrix a(m, n);
  // Row-major fill order so that a given seed reads like randn(m, n) row by row.
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = normal(rng);
  return LinearOperator::dense(std::move(a));
}

LinearOperator make_partial_dct(Index n, std::vector<Index> rows) {
  return LinearOperator::partial_dct(n, std::move(rows));
}

LinearOperator make_partial_inverse_fourier(Index n, std::vector<Index> rows) {
  return LinearOperator::partial_inverse_fourier(n, std::move(rows));
}

RealVector dct_orthonormal(const RealVector& x) {
  return detail::TransformPlans(x.size(), false).dct(x);
}

RealVector idct_orthonormal(const RealVector& y) {
  return detail::TransformPlans(y.size(), false).idct(y);
}

ComplexVector dft_unitary(const ComplexVector& x) {
  return detail::TransformPlans(x.size(), true).dft(x, false);
}

ComplexVector idft_unitary(const ComplexVector& y) {
  return detail::TransformPlans(y.size(), true).dft(y, true);
}

namespace {

template <typename Scalar>
SpectralNormEstimate power_iteration(const LinearOperator& op, double tol, std::size_t max_iters,
                                     Seed seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector<Scalar> x(op.rows());
  for (Index i = 0; i < x.size(); ++i) {
    if constexpr (std::is_same_v<Scalar, double>) {
      x[i] = normal(rng);
    } else {
      const double re = normal(rng);
      x[i] = Scalar(re, normal(rng));
    }
  }
  x.normalize();

  SpectralNormEstimate est;
  double previous = 0.0;
  for (std::size_t it = 1; it <= max_iters; ++it) {
    const Vector<Scalar> atx = op.adjoint(x);
    const double rayleigh = atx.squaredNorm();
    est.value = std::max(est.value, rayleigh);
    est.iterations = it;
    if (it > 1 && std::abs(rayleigh - previous) <= tol * rayleigh) {
      est.converged = true;
      break;
    }
    previous = rayleigh;
    Vector<Scalar> y = op.apply(atx);
    const double norm = y.norm();
    if (norm == 0.0) {
      // x is in the null space of A^T; A^T has full column rank in practice.
      est.converged = true;
      break;
    }
    x = y / norm;
  }
  return est;
}

}  // namespace

SpectralNormEstimate spectral_norm_sq_estimate(const LinearOperator& op, double tol,
                                               std::size_t max_iters, Seed seed) {
  if (!(tol > 0.0)) throw std::invalid_argument("spectral_norm_sq_estimate: tol must be > 0");
  if (max_iters == 0) throw std::invalid_argument("spectral_norm_sq_estimate: max_iters is 0");
  if (op.field() == ScalarField::Complex)
    return power_iteration<Complex>(op, tol, max_iters, seed);
  return power_iteration<double>(op, tol, max_iters, seed);
}

}  // namespace lbreg
