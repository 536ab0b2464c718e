#pragma once

#include <Eigen/Core>

#include <random>

namespace maxsmooth {

/// Constants of the multivariate link. `a_phi` and `b_phi` follow from `c_phi`
/// so that the shape link satisfies h(0) = 0 and h'(0) = 1.
struct LinkConstants {
  double c_phi;
  double b_phi;
  double a_phi;
  double delta0;
  double t0;

  static LinkConstants make(double c_phi = 0.8, double delta0 = 0.008, double t0 = 1975.0);
};

/// Process-wide default constants (c_phi = 0.8, delta0 = 0.008, t0 = 1975).
const LinkConstants& link_constants();

/// Natural-scale GEV quantities for one site.
///   mu    location intercept at the reference year
///   sigma scale
///   xi    shape, restricted to (-0.5, 0.5)
///   delta relative trend per year, restricted to (-delta0, delta0)
struct GevParams {
  double mu = 0.0;
  double sigma = 1.0;
  double xi = 0.0;
  double delta = 0.0;

  /// mu * (1 + delta * (year - t0))
  [[nodiscard]] double location_at(double year, const LinkConstants& k = link_constants()) const {
    return mu * (1.0 + delta * (year - k.t0));
  }
};

/// Link-space coordinates (psi, tau, phi, gamma).
struct LinkedParams {
  double psi = 0.0;
  double tau = 0.0;
  double phi = 0.0;
  double gamma = 0.0;

  [[nodiscard]] Eigen::Vector4d vec() const { return {psi, tau, phi, gamma}; }
  static LinkedParams from(const Eigen::Ref<const Eigen::VectorXd>& v);
};

// Below this |xi| the Gumbel branch with second-order Taylor terms is used.
inline constexpr double kXiSwitch = 1e-7;

// --- three-parameter GEV (location, scale, shape) -----------------------------

/// Log-density; -inf outside the support. Throws InputError for non-finite y.
double gev_log_pdf(double y, double loc, double scale, double shape);
double gev_cdf(double y, double loc, double scale, double shape);
/// Throws InputError unless prob is in (0, 1).
double gev_quantile(double prob, double loc, double scale, double shape);

// --- trend-aware overloads: the location is mu_t = mu (1 + delta (year - t0)) ----

/// Returns -inf when mu_t <= 0 (such parameter points are rejected).
double gev_log_pdf(double y, const GevParams& p, double year,
                   const LinkConstants& k = link_constants());
double gev_cdf(double y, const GevParams& p, double year,
               const LinkConstants& k = link_constants());
double gev_quantile(double prob, const GevParams& p, double year,
                    const LinkConstants& k = link_constants());

template <class Urng>
double gev_sample(Urng& rng, double loc, double scale, double shape) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  while (u <= 0.0) u = unif(rng);
  return gev_quantile(u, loc, scale, shape);
}

template <class Urng>
double gev_sample(Urng& rng, const GevParams& p, double year,
                  const LinkConstants& k = link_constants()) {
  return gev_sample(rng, p.location_at(year, k), p.sigma, p.xi);
}

// --- link components ------------------------------------------------------------

/// phi = a + b log(-log(1 - (xi + 1/2)^c)). DomainError unless |xi| < 0.5.
double shape_link_h(double xi, const LinkConstants& k = link_constants());
/// Inverse of shape_link_h, defined on the whole real line.
double shape_link_g(double phi, const LinkConstants& k = link_constants());
/// log g'(phi), analytic.
double shape_link_log_dg(double phi, const LinkConstants& k = link_constants());

/// gamma = delta0 * atanh(delta / delta0). DomainError unless |delta| < delta0.
double trend_link_d(double delta, const LinkConstants& k = link_constants());
double trend_link_d_inv(double gamma, const LinkConstants& k = link_constants());

LinkedParams link_forward(const GevParams& p, const LinkConstants& k = link_constants());
GevParams link_inverse(const LinkedParams& lp, const LinkConstants& k = link_constants());

// --- site-level priors in the generalized likelihood ----------------------------

/// Beta(4, 4) shifted to (-0.5, 0.5), on the xi scale.
double shape_prior_logdensity_xi(double xi);
/// Shape prior pushed through the link: log beta(g(phi)) + log g'(phi).
double shape_prior_logdensity(double phi, const LinkConstants& k = link_constants());
/// N(0, (delta0 / 2)^2) on gamma.
double trend_prior_logdensity(double gamma, const LinkConstants& k = link_constants());

}  // namespace maxsmooth
