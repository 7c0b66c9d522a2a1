#pragma once

#include <Eigen/Dense>

#include <cstddef>

#include "sectlab/bodies.hpp"
#include "sectlab/error.hpp"

namespace sectlab {

/// Orthonormal basis of ker(Gamma).
struct KernelBasis {
  Matrix basis;  // n x m, orthonormal columns
  std::size_t source_rank = 0;
  double tol = 0.0;  // singular values <= tol * sigma_max count as zero

  std::size_t dim() const { return static_cast<std::size_t>(basis.cols()); }
  std::size_t ambient_dim() const { return static_cast<std::size_t>(basis.rows()); }
};

inline constexpr double kDefaultKernelTol = 1e-10;

/// Numerical rank of gamma relative to its largest singular value.
inline std::size_t numerical_rank(const Matrix& gamma, double rel_tol = kDefaultKernelTol) {
  detail::require(gamma.allFinite(), "matrix has non-finite entries");
  if (gamma.size() == 0 || gamma.cwiseAbs().maxCoeff() == 0.0) return 0;
  Eigen::BDCSVD<Matrix> svd(gamma);
  const auto& s = svd.singularValues();
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > rel_tol * s[0]) ++rank;
  }
  return rank;
}

inline KernelBasis kernel_basis(const Matrix& gamma, double rel_tol = kDefaultKernelTol) {
  detail::require(gamma.rows() >= 1 && gamma.cols() >= 1, "kernel_basis needs a nonempty matrix");
  detail::require(gamma.allFinite(), "matrix has non-finite entries");
  detail::require(rel_tol >= 0.0, "rel_tol must be nonnegative");
  const Eigen::Index n = gamma.cols();
  KernelBasis kb;
  kb.tol = rel_tol;
  if (gamma.cwiseAbs().maxCoeff() == 0.0) {
    kb.basis = Matrix::Identity(n, n);
    kb.source_rank = 0;
    return kb;
  }
  Eigen::BDCSVD<Matrix> svd(gamma, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > rel_tol * s[0]) ++rank;
  }
  kb.source_rank = static_cast<std::size_t>(rank);
  kb.basis = svd.matrixV().rightCols(n - rank);
  return kb;
}

/// Orthogonal projection B B^T x onto the kernel.
inline Vector project_kernel(const KernelBasis& kb, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != kb.ambient_dim()) {
    throw InputError("dimension mismatch in project_kernel");
  }
  return kb.basis * (kb.basis.transpose() * x);
}

}  // namespace sectlab
