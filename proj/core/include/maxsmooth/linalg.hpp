#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <vector>

namespace maxsmooth {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// Sparse LL' with an AMD fill-reducing permutation. The symbolic analysis is
/// kept and reused while the sparsity pattern is unchanged.
class SparseCholesky {
 public:
  /// Returns false when the matrix is not numerically positive definite.
  bool factorize(const SpMat& m);

  [[nodiscard]] double log_det() const;
  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  /// P^-1 L^-T z: has covariance m^-1 when z is standard normal.
  [[nodiscard]] Eigen::VectorXd sample_from_noise(const Eigen::VectorXd& z) const;
  [[nodiscard]] int analyses() const { return analyses_; }

 private:
  bool same_pattern(const SpMat& m) const;

  Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
  Eigen::VectorXi outer_;
  Eigen::VectorXi inner_;
  bool analyzed_ = false;
  int analyses_ = 0;
};

/// Block-diagonal sparse matrix from dense blocks laid out block-major:
/// entry (a, b) of block i lands at (offsets[a] + i, offsets[b] + i), i.e. the
/// parameter-major stacking used for site-wise 4x4 (or 3x3) precisions.
SpMat scatter_site_blocks(const std::vector<Eigen::MatrixXd>& blocks, int n_sites);

}  // namespace maxsmooth
