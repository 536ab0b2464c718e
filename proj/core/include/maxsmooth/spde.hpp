#pragma once

#include "maxsmooth/mesh.hpp"

#include <Eigen/SparseCore>

#include <memory>
#include <span>

namespace maxsmooth {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// Finite-element matrices for a Matern (nu = 1) field on a mesh.
///   G stiffness (row sums zero), C lumped mass (diagonal, positive).
/// All three terms of the precision are stored on the pattern of G C^-1 G so
/// that the precision for new (range, sd) is a linear combination of value arrays.
class SpdeField {
 public:
  explicit SpdeField(std::shared_ptr<const Mesh> mesh);

  [[nodiscard]] const Mesh& mesh() const { return *mesh_; }
  [[nodiscard]] std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  [[nodiscard]] Eigen::Index n_nodes() const { return static_cast<Eigen::Index>(mesh_->n_nodes()); }
  [[nodiscard]] const SpMat& stiffness() const { return g_; }
  [[nodiscard]] const Eigen::VectorXd& mass() const { return c_; }

  /// Q = tau^2 (kappa^4 C + 2 kappa^2 G + G C^-1 G), kappa = sqrt(8)/range,
  /// tau^2 = 1 / (4 pi kappa^2 sd^2). Throws InputError for nonpositive inputs.
  [[nodiscard]] SpMat precision(double range, double sd) const;

  /// Same values written into `out`, which must carry the precision pattern.
  void precision_values(double range, double sd, std::span<double> out) const;
  /// log|Q| is n log tau^2 + log|K(kappa)|; exposed for the determinant split.
  [[nodiscard]] static double log_tau2(double range, double sd);
  [[nodiscard]] const SpMat& pattern() const { return pattern_; }

 private:
  std::shared_ptr<const Mesh> mesh_;
  SpMat g_;
  Eigen::VectorXd c_;
  SpMat pattern_;
  std::vector<double> c_vals_, g_vals_, gcg_vals_;
};

/// Standalone builder matching the operation name used across the library.
SpMat spde_precision(const SpdeField& f, double range, double sd);

/// Barycentric projection from mesh nodes to point locations. Throws InputError
/// for any location outside the mesh.
SpMat make_projector(const Mesh& mesh, std::span<const Point2> locations);

/// Penalized-complexity prior rates for one spatial component and its nugget.
struct PcPrior {
  double lambda_s = 1.0;
  double lambda_rho = 1.0;
  double lambda_eps = 1.0;
};

/// P(s > s0) = 0.05, P(rho < rho0) = 0.05, P(sigma_eps > eps0) = 0.05.
PcPrior pc_lambdas(double s0, double rho0, double eps0);

/// log(lambda_rho lambda_s rho^-2 exp(-lambda_rho / rho - lambda_s s)); -inf off the domain.
double pc_logdensity(double s, double rho, const PcPrior& pc);
/// log(lambda exp(-lambda sigma)) with lambda = pc.lambda_eps.
double exp_logdensity(double sigma, const PcPrior& pc);

}  // namespace maxsmooth
