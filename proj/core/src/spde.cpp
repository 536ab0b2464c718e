#include "maxsmooth/spde.hpp"

#include "maxsmooth/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace maxsmooth {

namespace {

using Trip = Eigen::Triplet<double, int>;

// Values of `m` scattered onto the (superset) pattern `p`.
std::vector<double> on_pattern(const SpMat& m, const SpMat& p) {
  std::vector<double> out(static_cast<std::size_t>(p.nonZeros()), 0.0);
  for (int col = 0; col < p.outerSize(); ++col) {
    SpMat::InnerIterator pit(p, col);
    for (SpMat::InnerIterator it(m, col); it; ++it) {
      while (pit && pit.row() < it.row()) ++pit;
      if (!pit || pit.row() != it.row()) throw NumericalError("FEM term outside the precision pattern");
      out[static_cast<std::size_t>(&pit.valueRef() - p.valuePtr())] = it.value();
    }
  }
  return out;
}

}  // namespace

SpdeField::SpdeField(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh)) {
  const auto n = static_cast<int>(mesh_->n_nodes());
  std::vector<Trip> gt;
  c_ = Eigen::VectorXd::Zero(n);
  for (const auto& t : mesh_->triangles) {
    const Point2& p0 = mesh_->nodes[t[0]];
    const Point2& p1 = mesh_->nodes[t[1]];
    const Point2& p2 = mesh_->nodes[t[2]];
    const Point2 e[3] = {p2 - p1, p0 - p2, p1 - p0};
    const double area = 0.5 * std::abs(e[2].x() * (-e[1].y()) - e[2].y() * (-e[1].x()));
    for (int i = 0; i < 3; ++i) {
      c_(t[i]) += area / 3.0;
      for (int j = 0; j < 3; ++j) gt.emplace_back(t[i], t[j], e[i].dot(e[j]) / (4.0 * area));
    }
  }
  if ((c_.array() <= 0.0).any()) throw InputError("mesh has nodes that belong to no triangle");
  g_.resize(n, n);
  g_.setFromTriplets(gt.begin(), gt.end());
  g_.makeCompressed();

  SpMat cinv(n, n), cm(n, n);
  std::vector<Trip> ct, cit;
  for (int i = 0; i < n; ++i) {
    ct.emplace_back(i, i, c_(i));
    cit.emplace_back(i, i, 1.0 / c_(i));
  }
  cm.setFromTriplets(ct.begin(), ct.end());
  cinv.setFromTriplets(cit.begin(), cit.end());
  SpMat gcg = (g_ * cinv * g_).eval();
  gcg = 0.5 * (gcg + SpMat(gcg.transpose()));

  // Structural union of C, G and G C^-1 G.
  std::vector<Trip> pt;
  for (int col = 0; col < n; ++col) {
    pt.emplace_back(col, col, 0.0);
    for (SpMat::InnerIterator it(g_, col); it; ++it) pt.emplace_back(it.row(), col, 0.0);
    for (SpMat::InnerIterator it(gcg, col); it; ++it) pt.emplace_back(it.row(), col, 0.0);
  }
  pattern_.resize(n, n);
  pattern_.setFromTriplets(pt.begin(), pt.end());
  pattern_.makeCompressed();
  c_vals_ = on_pattern(cm, pattern_);
  g_vals_ = on_pattern(g_, pattern_);
  gcg_vals_ = on_pattern(gcg, pattern_);
}

double SpdeField::log_tau2(double range, double sd) {
  const double kappa = std::sqrt(8.0) / range;
  return -std::log(4.0 * std::numbers::pi * kappa * kappa * sd * sd);
}

void SpdeField::precision_values(double range, double sd, std::span<double> out) const {
  if (!(range > 0.0) || !(sd > 0.0)) throw InputError("SPDE range and standard deviation must be positive");
  const double kappa2 = 8.0 / (range * range);
  const double tau2 = std::exp(log_tau2(range, sd));
  const double a = tau2 * kappa2 * kappa2;
  const double b = tau2 * 2.0 * kappa2;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * c_vals_[i] + b * g_vals_[i] + tau2 * gcg_vals_[i];
}

SpMat SpdeField::precision(double range, double sd) const {
  SpMat q = pattern_;
  precision_values(range, sd, std::span<double>(q.valuePtr(), static_cast<std::size_t>(q.nonZeros())));
  return q;
}

SpMat spde_precision(const SpdeField& f, double range, double sd) { return f.precision(range, sd); }

SpMat make_projector(const Mesh& mesh, std::span<const Point2> locations) {
  std::vector<Trip> t;
  for (std::size_t i = 0; i < locations.size(); ++i) {
    const auto loc = locate(mesh, locations[i]);
    if (!loc) throw InputError("location " + std::to_string(i) + " lies outside the mesh");
    for (int k = 0; k < 3; ++k) {
      if (loc->weights[k] > 0.0) t.emplace_back(static_cast<int>(i), loc->nodes[k], loc->weights[k]);
    }
  }
  SpMat a(static_cast<int>(locations.size()), static_cast<int>(mesh.n_nodes()));
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  return a;
}

PcPrior pc_lambdas(double s0, double rho0, double eps0) {
  if (!(s0 > 0.0) || !(rho0 > 0.0) || !(eps0 > 0.0)) throw InputError("PC prior thresholds must be positive");
  const double l05 = -std::log(0.05);
  return PcPrior{l05 / s0, l05 * rho0, l05 / eps0};
}

double pc_logdensity(double s, double rho, const PcPrior& pc) {
  if (!(s > 0.0) || !(rho > 0.0)) return -std::numeric_limits<double>::infinity();
  return std::log(pc.lambda_rho) + std::log(pc.lambda_s) - 2.0 * std::log(rho) - pc.lambda_rho / rho -
         pc.lambda_s * s;
}

double exp_logdensity(double sigma, const PcPrior& pc) {
  if (!(sigma > 0.0)) return -std::numeric_limits<double>::infinity();
  return std::log(pc.lambda_eps) - pc.lambda_eps * sigma;
}

}  // namespace maxsmooth
