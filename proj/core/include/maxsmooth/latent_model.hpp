#pragma once

#include "maxsmooth/gev.hpp"
#include "maxsmooth/linalg.hpp"
#include "maxsmooth/mcmc.hpp"
#include "maxsmooth/mesh.hpp"
#include "maxsmooth/site_ml.hpp"
#include "maxsmooth/spde.hpp"

#include <Eigen/Core>

#include <array>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace maxsmooth {

enum class Param { kPsi = 0, kTau = 1, kPhi = 2, kGamma = 3 };

const char* param_name(Param p);
/// Accepts "psi", "tau", "phi", "gamma"; throws InputError otherwise.
Param param_from_name(std::string_view name);

struct SubModelSpec {
  std::vector<std::string> covariates;  // intercept is implicit
  bool spatial = false;
};

/// Penalized-complexity thresholds: P(s > s0) = P(rho < rho0) = P(sigma_eps > eps0) = 0.05.
struct PcThresholds {
  double s0 = 1.0;
  double rho0 = 0.0;  // <= 0: one tenth of the mesh diameter
  double eps0 = 1.0;
};

struct ModelSpec {
  std::array<SubModelSpec, 4> sub;  // indexed by Param
  bool trend = true;
  PcThresholds pc;
  double beta_sd = 10.0;

  SubModelSpec& operator[](Param p) { return sub[static_cast<std::size_t>(p)]; }
  const SubModelSpec& operator[](Param p) const { return sub[static_cast<std::size_t>(p)]; }
  /// psi, tau, phi and, with the trend, gamma.
  [[nodiscard]] std::vector<Param> params() const;
  [[nodiscard]] bool any_spatial() const;
  /// Throws InputError for repeated covariates or nonpositive thresholds.
  void validate() const;
};

/// Standardized covariate columns, one row per site.
struct CovariateTable {
  std::vector<std::string> names;
  Eigen::MatrixXd values;

  [[nodiscard]] int column(const std::string& name) const;  // throws InputError when absent
  [[nodiscard]] CovariateTable rows(std::span<const int> idx) const;
};

/// Column centring and scaling estimated once (on training rows) and reused.
struct Standardizer {
  std::vector<std::string> names;
  Eigen::VectorXd center;
  Eigen::VectorXd scale;

  /// Constant columns get scale 1.
  static Standardizer fit(const CovariateTable& raw);
  [[nodiscard]] CovariateTable apply(const CovariateTable& raw) const;
  [[nodiscard]] Eigen::VectorXd apply_row(const std::vector<std::string>& names, const Eigen::VectorXd& raw) const;
};

/// Site-wise estimates treated as data, stacked parameter-major
/// (all sites' first parameter, then the second, ...).
struct PseudoData {
  std::vector<std::string> site_ids;
  std::vector<Param> params;
  Eigen::VectorXd eta_hat;
  std::vector<Eigen::MatrixXd> blocks;  // per-site precision in `params` order
  std::vector<std::string> excluded;    // "site: reason"

  [[nodiscard]] int n_sites() const { return static_cast<int>(site_ids.size()); }
  [[nodiscard]] int n_params() const { return static_cast<int>(params.size()); }
  [[nodiscard]] double value(int param_block, int site) const { return eta_hat(param_block * n_sites() + site); }
  [[nodiscard]] SpMat q_eta() const;
  void validate() const;
  [[nodiscard]] PseudoData subset(std::span<const int> sites) const;
};

/// Converged fits become pseudo data; the rest are listed in `excluded`.
/// `kept` (optional) receives the indices of the retained fits.
PseudoData make_pseudo_data(const std::vector<SiteFit>& fits, bool trend, std::vector<int>* kept = nullptr);

struct SubDesign {
  Param param = Param::kPsi;
  Eigen::MatrixXd x;                 // sites x columns, intercept first
  std::vector<std::string> columns;  // "intercept" then covariate names
  bool spatial = false;
  int beta_offset = 0;
  int u_offset = -1;
  PcPrior prior;
  [[nodiscard]] int n_beta() const { return static_cast<int>(x.cols()); }
};

/// eta = Z nu + eps with nu = (beta_1, u_1, beta_2, u_2, ...).
struct Design {
  int n_sites = 0;
  std::vector<SubDesign> sub;
  std::shared_ptr<const SpdeField> field;  // null when nothing is spatial
  SpMat projector;                          // sites x mesh nodes
  SpMat z;
  int n_nu = 0;
  double beta_sd = 10.0;
  Eigen::VectorXd prior_mean;  // prior mean of nu (zero by default)

  [[nodiscard]] int n_rows() const { return n_sites * static_cast<int>(sub.size()); }
  [[nodiscard]] int n_theta() const;
  [[nodiscard]] std::vector<std::string> theta_names() const;
  [[nodiscard]] std::vector<std::string> nu_names() const;
  /// Offset of sub-model k's sigma_eps in theta; s and rho follow when spatial.
  [[nodiscard]] int theta_offset(int k) const;
  [[nodiscard]] int sub_index(Param p) const;  // -1 when absent
};

/// Z and the prior layout for the given sub-models. `field` and `projector`
/// are needed only when some sub-model is spatial.
Design assemble_design(std::span<const Param> params, std::span<const SubModelSpec> subs,
                       const CovariateTable& covariates, std::shared_ptr<const SpdeField> field,
                       const SpMat& projector, double beta_sd, const PcThresholds& pc);
Design assemble_design(const ModelSpec& spec, const CovariateTable& covariates,
                       std::shared_ptr<const SpdeField> field, const SpMat& projector);

/// Conjugate Gaussian pseudo model for fixed design and pseudo data. Holds
/// factorization caches, so each thread needs its own copy.
class LatentModel {
 public:
  LatentModel(std::shared_ptr<const Design> design, std::shared_ptr<const PseudoData> pd);
  LatentModel(const LatentModel& o) : LatentModel(o.design_, o.pd_) {}
  LatentModel& operator=(const LatentModel&) = delete;

  [[nodiscard]] const Design& design() const { return *design_; }
  [[nodiscard]] const PseudoData& pseudo_data() const { return *pd_; }

  /// Prior density of theta: exponential on each sigma_eps, PC prior on (s, rho).
  [[nodiscard]] double log_prior(const Eigen::VectorXd& theta) const;
  /// log p(eta_hat | theta) with nu marginalized analytically; -inf on a failed factorization.
  double log_likelihood(const Eigen::VectorXd& theta);
  /// Same quantity through the joint precision of (eta, nu).
  double log_likelihood_joint(const Eigen::VectorXd& theta);
  double marginal_log_posterior(const Eigen::VectorXd& theta) { return log_prior(theta) + log_likelihood(theta); }

  /// Prior precision of nu and its log-determinant.
  SpMat q_nu(const Eigen::VectorXd& theta, double* log_det);
  SpMat joint_precision(const Eigen::VectorXd& theta);
  /// Conditional mean of (eta, nu) stacked.
  Eigen::VectorXd conditional_mean(const Eigen::VectorXd& theta);
  /// Conditional mean of nu only, through the smaller nu system.
  Eigen::VectorXd nu_mean(const Eigen::VectorXd& theta);
  /// `n` exact draws of (eta, nu), one per column. Throws NumericalError when
  /// the joint precision is not positive definite.
  Eigen::MatrixXd sample_latent(const Eigen::VectorXd& theta, int n, std::mt19937_64& rng);

  [[nodiscard]] int failures() const { return failures_; }

 private:
  struct Parts;
  bool unpack(const Eigen::VectorXd& theta, Parts& p) const;
  bool factor_joint(const Eigen::VectorXd& theta, Eigen::VectorXd* rhs);

  std::shared_ptr<const Design> design_;
  std::shared_ptr<const PseudoData> pd_;
  SpMat q_eta_;
  SpMat w_pattern_;
  std::vector<Eigen::MatrixXd> site_cov_;  // Q_i^-1
  double log_det_q_eta_ = 0.0;
  SparseCholesky chol_field_;
  SparseCholesky chol_post_;
  SparseCholesky chol_joint_;
  int failures_ = 0;
};

/// Posterior sample of the latent model, one kept draw per row.
struct PosteriorDraws {
  std::vector<std::string> site_ids;
  std::vector<Param> params;
  std::vector<std::string> theta_names;
  std::vector<std::string> nu_names;
  Eigen::MatrixXd theta;
  Eigen::MatrixXd nu;
  Eigen::MatrixXd eta;  // columns in the pseudo-data stacking
  std::vector<int> chain;
  std::vector<int> iteration;
  int n_chains = 0;
  int iterations = 0;
  int burn_in = 0;
  std::uint64_t seed = 0;
  std::vector<double> rhat;
  std::vector<double> ess;
  std::vector<double> acceptance;
  bool rhat_warning = false;
  int rejected = 0;

  [[nodiscard]] int n_draws() const { return static_cast<int>(theta.rows()); }
  [[nodiscard]] int n_sites() const { return static_cast<int>(site_ids.size()); }
  [[nodiscard]] int site_index(const std::string& id) const;  // throws InputError
  [[nodiscard]] int param_index(Param p) const;                // -1 when absent
  [[nodiscard]] std::vector<std::string> eta_names() const;
  /// Link-space parameters of a site in one draw; gamma is 0 without the trend.
  [[nodiscard]] LinkedParams linked(int draw, int site) const;
  [[nodiscard]] int theta_column(const std::string& name) const;  // -1 when absent
  [[nodiscard]] int nu_column(const std::string& name) const;     // -1 when absent
  [[nodiscard]] const char* status() const { return rhat_warning ? "rhat_warning" : "ok"; }
};

/// Crude moment-based starting point for the hyperparameters.
Eigen::VectorXd initial_theta(const Design& design, const PseudoData& pd);

/// Metropolis on log theta against marginal_log_posterior.
mcmc::Result sample_theta(const LatentModel& model, const mcmc::Options& opts);

/// Hyperparameter chains followed by one latent draw per kept theta.
PosteriorDraws sample_posterior(const LatentModel& model, const mcmc::Options& opts);

struct InferenceInput {
  ModelSpec spec;
  std::vector<SiteFit> fits;
  CovariateTable covariates;    // rows aligned with `fits`
  std::vector<Point2> coords;   // aligned with `fits`
  std::shared_ptr<const Mesh> mesh;  // built from `coords` when null and needed
  MeshOptions mesh_options;
};

struct FittedModel {
  ModelSpec spec;
  std::shared_ptr<const Design> design;
  std::shared_ptr<const PseudoData> pseudo;
  std::shared_ptr<const Mesh> mesh;
  std::vector<int> kept;  // indices into the input fits
  PosteriorDraws draws;
};

/// Non-converged fits are dropped (listed in pseudo->excluded).
FittedModel run_inference(const InferenceInput& in, const mcmc::Options& opts);

}  // namespace maxsmooth
