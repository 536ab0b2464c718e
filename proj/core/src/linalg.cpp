#include "maxsmooth/linalg.hpp"

#include <cmath>
#include <vector>

namespace maxsmooth {

bool SparseCholesky::same_pattern(const SpMat& m) const {
  if (!analyzed_ || m.outerSize() != outer_.size() - 1 || m.nonZeros() != inner_.size()) return false;
  for (Eigen::Index i = 0; i < outer_.size(); ++i)
    if (m.outerIndexPtr()[i] != outer_(i)) return false;
  for (Eigen::Index i = 0; i < inner_.size(); ++i)
    if (m.innerIndexPtr()[i] != inner_(i)) return false;
  return true;
}

bool SparseCholesky::factorize(const SpMat& m) {
  if (!m.isCompressed()) {
    SpMat c = m;
    c.makeCompressed();
    return factorize(c);
  }
  if (!same_pattern(m)) {
    llt_.analyzePattern(m);
    outer_ = Eigen::Map<const Eigen::VectorXi>(m.outerIndexPtr(), m.outerSize() + 1);
    inner_ = Eigen::Map<const Eigen::VectorXi>(m.innerIndexPtr(), m.nonZeros());
    analyzed_ = true;
    ++analyses_;
  }
  llt_.factorize(m);
  return llt_.info() == Eigen::Success;
}

double SparseCholesky::log_det() const {
  const auto& l = llt_.matrixL().nestedExpression();
  double s = 0.0;
  for (int j = 0; j < l.outerSize(); ++j) s += std::log(l.coeff(j, j));
  return 2.0 * s;
}

Eigen::VectorXd SparseCholesky::solve(const Eigen::VectorXd& b) const { return llt_.solve(b); }

Eigen::VectorXd SparseCholesky::sample_from_noise(const Eigen::VectorXd& z) const {
  const Eigen::VectorXd w = llt_.matrixU().solve(z);
  return llt_.permutationPinv() * w;
}

SpMat scatter_site_blocks(const std::vector<Eigen::MatrixXd>& blocks, int n_sites) {
  const int d = blocks.empty() ? 0 : static_cast<int>(blocks.front().rows());
  std::vector<Eigen::Triplet<double, int>> t;
  t.reserve(blocks.size() * d * d);
  for (int i = 0; i < static_cast<int>(blocks.size()); ++i)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) t.emplace_back(a * n_sites + i, b * n_sites + i, blocks[i](a, b));
  SpMat m(d * n_sites, d * n_sites);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace maxsmooth
