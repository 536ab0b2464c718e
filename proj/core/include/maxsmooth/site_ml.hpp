#pragma once

#include "maxsmooth/gev.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace maxsmooth {

/// Annual maxima for one station. Years strictly increasing, maxima finite and positive.
struct SiteData {
  std::string site_id;
  std::vector<int> years;
  std::vector<double> maxima;

  [[nodiscard]] std::size_t size() const { return maxima.size(); }
  /// Throws InputError when the invariants above are violated.
  void validate() const;
};

enum class FitStatus {
  kConverged,
  kNotConverged,
  kDegenerate,  // e.g. constant record: scale collapses to zero
  kTooShort,    // fewer than the minimum record length
};

const char* to_string(FitStatus s);

/// Site-wise generalized-ML mode and observed information in link space.
/// `eta_hat` has 4 entries (psi, tau, phi, gamma) or 3 when the trend is off.
struct SiteFit {
  std::string site_id;
  Eigen::VectorXd eta_hat;
  Eigen::MatrixXd precision;
  FitStatus status = FitStatus::kNotConverged;
  std::size_t n_obs = 0;
  double log_lik = 0.0;          // generalized log-likelihood at the mode
  double grad_sup_norm = 0.0;    // finite-difference gradient at the mode
  bool precision_repaired = false;
  int restarts = 0;
  std::string message;

  [[nodiscard]] bool converged() const { return status == FitStatus::kConverged; }
};

struct SiteFitOptions {
  bool trend = true;
  double g_tol = 1e-6;
  double eig_floor = 1e-8;
  double hessian_rel_step = 1e-4;
  int max_restarts = 5;
  std::size_t n_min_trend = 10;
  std::size_t n_min_stationary = 5;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  LinkConstants link = link_constants();
};

/// Sum of GEV log-densities plus the site-level shape prior and, when `trend`
/// is set, the trend prior. -inf when an observation leaves the support.
double generalized_loglik(const LinkedParams& lp, const SiteData& d, bool trend,
                          const LinkConstants& k = link_constants());

/// Moment-style starting point used by fit_site.
Eigen::VectorXd initial_eta(const SiteData& d, bool trend);

SiteFit fit_site(const SiteData& d, const SiteFitOptions& opts = {});

/// Fits every site independently; output is aligned with the input order.
/// Failures are recorded per site in the returned status, never thrown.
std::vector<SiteFit> fit_all_sites(const std::vector<SiteData>& data, const SiteFitOptions& opts = {});

}  // namespace maxsmooth
