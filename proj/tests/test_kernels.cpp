#include <gtest/gtest.h>

#include "sectlab/ensembles.hpp"
#include "sectlab/kernels.hpp"

using namespace sectlab;

TEST(Kernel, OrthonormalBasisOfNullSpace) {
  for (std::size_t k : {1u, 3u, 7u, 10u, 14u}) {
    const Matrix g = sample_matrix(Ensemble::gaussian(10), k, RngStream{1, k});
    const auto kb = kernel_basis(g);
    EXPECT_EQ(kb.dim(), k >= 10 ? 0u : 10u - k);
    EXPECT_EQ(kb.source_rank, std::min<std::size_t>(k, 10));
    if (kb.dim() > 0) {
      EXPECT_LE((g * kb.basis).norm(), 1e-10 * g.norm());
      EXPECT_LE((kb.basis.transpose() * kb.basis - Matrix::Identity(kb.basis.cols(), kb.basis.cols())).norm(),
                1e-12);
    }
  }
}

TEST(Kernel, RankDeficientMatrix) {
  Matrix g = sample_matrix(Ensemble::gaussian(8), 3, RngStream{2, 0});
  Matrix dup(5, 8);
  dup << g, g.row(0) * 2.0, g.row(1) - g.row(2);
  const auto kb = kernel_basis(dup);
  EXPECT_EQ(kb.source_rank, 3u);
  EXPECT_EQ(kb.dim(), 5u);
  EXPECT_EQ(numerical_rank(dup), 3u);
  EXPECT_LE((dup * kb.basis).norm(), 1e-10 * dup.norm());
}

TEST(Kernel, ZeroMatrixGivesIdentity) {
  const auto kb = kernel_basis(Matrix::Zero(2, 4));
  EXPECT_EQ(kb.dim(), 4u);
  EXPECT_EQ(kb.basis, Matrix::Identity(4, 4));
  EXPECT_EQ(numerical_rank(Matrix::Zero(2, 4)), 0u);
}

TEST(Kernel, ProjectionIsIdempotent) {
  const Matrix g = sample_matrix(Ensemble::uniform_cube(9), 4, RngStream{3, 3});
  const auto kb = kernel_basis(g);
  const Vector x = sample_vector(Ensemble::gaussian(9), RngStream{3, 4});
  const Vector p = project_kernel(kb, x);
  EXPECT_LE((project_kernel(kb, p) - p).norm(), 1e-12);
  EXPECT_LE((g * p).norm(), 1e-10 * x.norm());
  EXPECT_THROW(project_kernel(kb, Vector::Ones(3)), InputError);
}

TEST(Kernel, RejectsBadInput) {
  Matrix g = Matrix::Ones(2, 3);
  g(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(kernel_basis(g), InputError);
  EXPECT_THROW(kernel_basis(Matrix(0, 3)), InputError);
}
