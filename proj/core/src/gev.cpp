#include "maxsmooth/gev.hpp"

#include "maxsmooth/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace maxsmooth {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_finite(double y) {
  if (!std::isfinite(y)) throw InputError("GEV evaluated at a non-finite value");
}

void require_scale(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InputError("GEV scale must be positive");
}

// Exponent -log(-log F(y)) with the Taylor expansion near xi = 0:
//   (1/xi) log(1 + xi z) = z - xi z^2/2 + xi^2 z^3/3 + O(xi^3)
double reduced_exponent(double z, double shape) {
  if (std::abs(shape) < kXiSwitch) {
    return z - shape * z * z / 2.0 + shape * shape * z * z * z / 3.0;
  }
  return std::log1p(shape * z) / shape;
}

}  // namespace

LinkConstants LinkConstants::make(double c_phi, double delta0, double t0) {
  const double half_c = std::pow(0.5, c_phi);
  const double b = -std::log1p(-half_c) * (1.0 - half_c) * std::pow(2.0, c_phi - 1.0) / c_phi;
  const double a = -b * std::log(-std::log1p(-half_c));
  return LinkConstants{c_phi, b, a, delta0, t0};
}

const LinkConstants& link_constants() {
  static const LinkConstants k = LinkConstants::make();
  return k;
}

LinkedParams LinkedParams::from(const Eigen::Ref<const Eigen::VectorXd>& v) {
  LinkedParams lp;
  lp.psi = v(0);
  lp.tau = v(1);
  lp.phi = v(2);
  lp.gamma = v.size() > 3 ? v(3) : 0.0;
  return lp;
}

double gev_log_pdf(double y, double loc, double scale, double shape) {
  require_finite(y);
  require_scale(scale);
  const double z = (y - loc) / scale;
  if (1.0 + shape * z <= 0.0) return kNegInf;
  if (std::abs(shape) < kXiSwitch) {
    const double z2 = z * z;
    const double lin = z + shape * (z - z2 / 2.0) + shape * shape * (-z2 / 2.0 + z2 * z / 3.0);
    return -std::log(scale) - lin - std::exp(-reduced_exponent(z, shape));
  }
  const double l = std::log1p(shape * z);
  return -std::log(scale) - (1.0 + 1.0 / shape) * l - std::exp(-l / shape);
}

double gev_cdf(double y, double loc, double scale, double shape) {
  require_finite(y);
  require_scale(scale);
  const double z = (y - loc) / scale;
  if (1.0 + shape * z <= 0.0) return shape > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::exp(-reduced_exponent(z, shape)));
}

double gev_quantile(double prob, double loc, double scale, double shape) {
  if (!(prob > 0.0 && prob < 1.0)) throw InputError("quantile probability must lie in (0, 1)");
  require_scale(scale);
  const double log_l = std::log(-std::log(prob));
  if (std::abs(shape) < kXiSwitch) {
    // (L^-xi - 1)/xi = -log L + xi (log L)^2 / 2 - xi^2 (log L)^3 / 6
    const double ll2 = log_l * log_l;
    return loc + scale * (-log_l + shape * ll2 / 2.0 - shape * shape * ll2 * log_l / 6.0);
  }
  return loc + scale * std::expm1(-shape * log_l) / shape;
}

double gev_log_pdf(double y, const GevParams& p, double year, const LinkConstants& k) {
  require_finite(y);
  const double loc = p.location_at(year, k);
  if (!(loc > 0.0)) return kNegInf;
  return gev_log_pdf(y, loc, p.sigma, p.xi);
}

double gev_cdf(double y, const GevParams& p, double year, const LinkConstants& k) {
  return gev_cdf(y, p.location_at(year, k), p.sigma, p.xi);
}

double gev_quantile(double prob, const GevParams& p, double year, const LinkConstants& k) {
  return gev_quantile(prob, p.location_at(year, k), p.sigma, p.xi);
}

double shape_link_h(double xi, const LinkConstants& k) {
  if (!(std::abs(xi) < 0.5)) throw DomainError("shape parameter must lie strictly inside (-0.5, 0.5)");
  return k.a_phi + k.b_phi * std::log(-std::log1p(-std::pow(xi + 0.5, k.c_phi)));
}

double shape_link_g(double phi, const LinkConstants& k) {
  const double e = std::exp((phi - k.a_phi) / k.b_phi);
  const double w = -std::expm1(-e);
  return std::pow(w, 1.0 / k.c_phi) - 0.5;
}

double shape_link_log_dg(double phi, const LinkConstants& k) {
  const double s = (phi - k.a_phi) / k.b_phi;
  const double e = std::exp(s);
  const double log_w = std::log(-std::expm1(-e));
  return -std::log(k.c_phi) - std::log(k.b_phi) + (1.0 / k.c_phi - 1.0) * log_w - e + s;
}

double trend_link_d(double delta, const LinkConstants& k) {
  if (!(std::abs(delta) < k.delta0)) throw DomainError("trend parameter must lie strictly inside (-delta0, delta0)");
  return k.delta0 * std::atanh(delta / k.delta0);
}

double trend_link_d_inv(double gamma, const LinkConstants& k) {
  return k.delta0 * std::tanh(gamma / k.delta0);
}

LinkedParams link_forward(const GevParams& p, const LinkConstants& k) {
  if (!(p.mu > 0.0) || !(p.sigma > 0.0)) throw DomainError("location and scale must be positive");
  return LinkedParams{std::log(p.mu), std::log(p.sigma / p.mu), shape_link_h(p.xi, k),
                      trend_link_d(p.delta, k)};
}

GevParams link_inverse(const LinkedParams& lp, const LinkConstants& k) {
  return GevParams{std::exp(lp.psi), std::exp(lp.psi + lp.tau), shape_link_g(lp.phi, k),
                   trend_link_d_inv(lp.gamma, k)};
}

double shape_prior_logdensity_xi(double xi) {
  if (!(std::abs(xi) < 0.5)) return kNegInf;
  // 1 / B(4, 4) = 140
  return std::log(140.0) + 3.0 * std::log(xi + 0.5) + 3.0 * std::log(0.5 - xi);
}

double shape_prior_logdensity(double phi, const LinkConstants& k) {
  const double e = std::exp((phi - k.a_phi) / k.b_phi);
  const double log_w = std::log(-std::expm1(-e));
  // xi + 1/2 = w^(1/c); 1/2 - xi = 1 - w^(1/c)
  const double log_lo = log_w / k.c_phi;
  const double log_hi = std::log(-std::expm1(log_w / k.c_phi));
  return std::log(140.0) + 3.0 * log_lo + 3.0 * log_hi + shape_link_log_dg(phi, k);
}

double trend_prior_logdensity(double gamma, const LinkConstants& k) {
  const double sd = 0.5 * k.delta0;
  const double z = gamma / sd;
  return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(sd) - 0.5 * z * z;
}

}  // namespace maxsmooth
