#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lbreg/types.hpp"

namespace lbreg {

enum class OperatorKind { DenseReal, PartialDct, PartialInverseFourier };
enum class ScalarField { Real, Complex };

std::string to_string(OperatorKind kind);
OperatorKind operator_kind_from_string(const std::string& name);

namespace detail {
struct TransformPlans;
}

// Matrix-free m x n sensing operator.
//
// DenseReal stores its entries. The partial kinds store a sorted row-index set
// into a full n x n unitary transform (orthonormal DCT-II, or the unitary
// inverse DFT) and evaluate products through the fast transform followed by a
// gather (apply) or a scatter followed by the inverse transform (adjoint).
//
// Instances are immutable and may be shared between threads.
class LinearOperator {
 public:
  static LinearOperator dense(RealMatrix entries);
  static LinearOperator partial_dct(Index n, std::vector<Index> rows);
  static LinearOperator partial_inverse_fourier(Index n, std::vector<Index> rows);

  Index rows() const noexcept { return m_; }
  Index cols() const noexcept { return n_; }
  OperatorKind kind() const noexcept { return kind_; }
  ScalarField field() const noexcept {
    return kind_ == OperatorKind::PartialInverseFourier ? ScalarField::Complex : ScalarField::Real;
  }
  // True when A A^T = I, i.e. the rows are orthonormal.
  bool has_orthonormal_rows() const noexcept { return kind_ != OperatorKind::DenseReal; }

  const RealMatrix& dense_entries() const;
  std::span<const Index> row_indices() const noexcept { return row_indices_; }

  RealVector apply(const RealVector& x) const;
  ComplexVector apply(const ComplexVector& x) const;
  RealVector adjoint(const RealVector& y) const;
  ComplexVector adjoint(const ComplexVector& y) const;

  // Explicit m x n matrix; intended for tests and small problems.
  Eigen::MatrixXcd to_dense_complex() const;

 private:
  LinearOperator() = default;

  OperatorKind kind_ = OperatorKind::DenseReal;
  Index m_ = 0;
  Index n_ = 0;
  RealMatrix entries_;
  std::vector<Index> row_indices_;
  std::shared_ptr<const detail::TransformPlans> plans_;
};

LinearOperator make_dense_gaussian(Index m, Index n, Seed seed);
LinearOperator make_partial_dct(Index n, std::vector<Index> rows);
LinearOperator make_partial_inverse_fourier(Index n, std::vector<Index> rows);

// Full orthonormal transforms, exposed for the problem generators and tests.
RealVector dct_orthonormal(const RealVector& x);
RealVector idct_orthonormal(const RealVector& y);
ComplexVector dft_unitary(const ComplexVector& x);
ComplexVector idft_unitary(const ComplexVector& y);

struct SpectralNormEstimate {
  double value = 0.0;  // estimate of ||A A^T||, never above the true value
  std::size_t iterations = 0;
  bool converged = false;
};

// Power iteration on A A^T using the Rayleigh quotient ||A^T x||^2 / ||x||^2,
// which is a lower bound on the largest eigenvalue at every iterate.
SpectralNormEstimate spectral_norm_sq_estimate(const LinearOperator& op, double tol = 1e-4,
                                               std::size_t max_iters = 200,
                                               Seed seed = 0x5eedULL);

}  // namespace lbreg
