#pragma once

#include "maxsmooth/latent_model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

namespace maxsmooth::testing {

// Five sites, three parameters, psi spatial with one covariate, tau with one
// covariate, phi intercept only. Site precisions are random SPD 3 x 3 blocks.
struct SmallModel {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const Design> design;
  std::shared_ptr<const PseudoData> pd;
  Eigen::VectorXd theta;
};

inline SmallModel small_model(std::uint64_t seed, bool spatial = true, int n_sites = 5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 100.0);

  std::vector<Point2> xy;
  for (int i = 0; i < n_sites; ++i) xy.emplace_back(u(rng), u(rng));
  SmallModel m;
  MeshOptions mo;
  mo.refine_interior = false;
  m.mesh = std::make_shared<const Mesh>(build_mesh(xy, mo));

  ModelSpec spec;
  spec.trend = false;
  spec[Param::kPsi] = {{"x1"}, spatial};
  spec[Param::kTau] = {{"x2"}, false};
  spec[Param::kPhi] = {{}, false};
  spec.beta_sd = 3.0;

  CovariateTable cov;
  cov.names = {"x1", "x2"};
  cov.values.resize(n_sites, 2);
  for (int i = 0; i < n_sites; ++i) {
    cov.values(i, 0) = z(rng);
    cov.values(i, 1) = z(rng);
  }
  std::shared_ptr<const SpdeField> field;
  SpMat a;
  if (spatial) {
    field = std::make_shared<const SpdeField>(m.mesh);
    a = make_projector(*m.mesh, xy);
  }
  m.design = std::make_shared<const Design>(assemble_design(spec, cov, field, a));

  auto pd = std::make_shared<PseudoData>();
  pd->params = {Param::kPsi, Param::kTau, Param::kPhi};
  pd->eta_hat.resize(3 * n_sites);
  for (int i = 0; i < n_sites; ++i) {
    pd->site_ids.push_back("S" + std::to_string(i));
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(3, 3);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c <= r; ++c) l(r, c) = r == c ? 2.0 + std::abs(z(rng)) : 0.5 * z(rng);
    pd->blocks.push_back(l * l.transpose() * 20.0);
  }
  for (int k = 0; k < 3 * n_sites; ++k) pd->eta_hat(k) = (k < n_sites ? 4.0 : k < 2 * n_sites ? -1.0 : 0.0) + 0.4 * z(rng);
  m.pd = pd;

  m.theta.resize(m.design->n_theta());
  const auto names = m.design->theta_names();
  for (int k = 0; k < m.theta.size(); ++k) {
    const auto& n = names[static_cast<std::size_t>(k)];
    m.theta(k) = n.rfind("sigma_eps", 0) == 0 ? 0.2 + 0.05 * k : n.rfind("s_", 0) == 0 ? 0.3 : 40.0;
  }
  return m;
}

// Covariance-form oracle for the pseudo model, built without any precision-matrix shortcuts.
struct DenseOracle {
  Eigen::MatrixXd z;
  Eigen::MatrixXd cov_nu;
  Eigen::MatrixXd d;      // nugget covariance
  Eigen::MatrixXd noise;  // inverse site precisions
  Eigen::VectorXd m;

  DenseOracle(const Design& design, const PseudoData& pd, const Eigen::VectorXd& theta) {
    z = Eigen::MatrixXd(design.z);
    const int n_nu = design.n_nu, n = design.n_rows(), j = design.n_sites;
    Eigen::MatrixXd q_nu = Eigen::MatrixXd::Zero(n_nu, n_nu);
    d = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < design.sub.size(); ++k) {
      const auto& s = design.sub[k];
      const int o = design.theta_offset(static_cast<int>(k));
      for (int b = 0; b < s.n_beta(); ++b) q_nu(s.beta_offset + b, s.beta_offset + b) = 1.0 / (design.beta_sd * design.beta_sd);
      if (s.spatial) {
        const Eigen::MatrixXd qf(design.field->precision(theta(o + 2), theta(o + 1)));
        q_nu.block(s.u_offset, s.u_offset, qf.rows(), qf.cols()) = qf;
      }
      for (int i = 0; i < j; ++i) d(static_cast<int>(k) * j + i, static_cast<int>(k) * j + i) = theta(o) * theta(o);
    }
    cov_nu = q_nu.inverse();
    noise = Eigen::MatrixXd::Zero(n, n);
    const int p = pd.n_params();
    for (int i = 0; i < j; ++i) {
      const Eigen::MatrixXd c = pd.blocks[static_cast<std::size_t>(i)].inverse();
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) noise(a * j + i, b * j + i) = c(a, b);
    }
    m = design.prior_mean.size() ? design.prior_mean : Eigen::VectorXd::Zero(n_nu);
  }

  [[nodiscard]] Eigen::MatrixXd cov_eta() const { return z * cov_nu * z.transpose() + d; }

  [[nodiscard]] double log_likelihood(const Eigen::VectorXd& y) const {
    const Eigen::MatrixXd s = cov_eta() + noise;
    const Eigen::LLT<Eigen::MatrixXd> llt(s);
    const Eigen::VectorXd r = y - z * m;
    const double ld = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    return -0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi) - 0.5 * ld - 0.5 * r.dot(llt.solve(r));
  }

  // Conditional mean and covariance of (eta, nu) given the estimates.
  void conditional(const Eigen::VectorXd& y, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) const {
    const int n = static_cast<int>(z.rows()), k = static_cast<int>(z.cols());
    Eigen::MatrixXd cx(n + k, n + k);
    cx.topLeftCorner(n, n) = cov_eta();
    cx.topRightCorner(n, k) = z * cov_nu;
    cx.bottomLeftCorner(k, n) = cov_nu * z.transpose();
    cx.bottomRightCorner(k, k) = cov_nu;
    const Eigen::MatrixXd cxy = cx.leftCols(n);  // Cov(x, y) = Cov(x, eta)
    Eigen::VectorXd mx(n + k);
    mx << z * m, m;
    const Eigen::LLT<Eigen::MatrixXd> s(cov_eta() + noise);
    mean = mx + cxy * s.solve(y - z * m);
    cov = cx - cxy * s.solve(cxy.transpose());
  }
};

}  // namespace maxsmooth::testing
