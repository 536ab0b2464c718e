#include "maxsmooth/prediction.hpp"

#include "maxsmooth/error.hpp"
#include "maxsmooth/stats.hpp"

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace maxsmooth {

double return_period_prob(double period) {
  if (!(period > 1.0) || !std::isfinite(period)) throw InputError("return period must exceed one year");
  return 1.0 - 1.0 / period;
}

Summary summarize(std::span<const double> draws, double level) {
  if (draws.empty()) throw InputError("cannot summarize an empty sample");
  const double a = 0.5 * (1.0 - level);
  return Summary{stats::mean(draws), stats::quantile(draws, a), stats::quantile(draws, 1.0 - a)};
}

std::vector<LinkedParams> site_draws(const PosteriorDraws& draws, int site) {
  if (site < 0 || site >= draws.n_sites()) throw InputError("site index out of range");
  std::vector<LinkedParams> out;
  out.reserve(static_cast<std::size_t>(draws.n_draws()));
  for (int d = 0; d < draws.n_draws(); ++d) out.push_back(draws.linked(d, site));
  return out;
}

std::vector<double> return_level_draws(std::span<const LinkedParams> lp, double period, double year) {
  const double prob = return_period_prob(period);
  std::vector<double> out;
  out.reserve(lp.size());
  for (const auto& l : lp) out.push_back(gev_quantile(prob, link_inverse(l), year));
  return out;
}

Summary return_level(const PosteriorDraws& draws, const std::string& site, double period, double year) {
  const auto lp = site_draws(draws, draws.site_index(site));
  return summarize(return_level_draws(lp, period, year));
}

ReturnLevelCurve return_level_curve(std::span<const LinkedParams> lp, std::span<const double> periods, double year) {
  ReturnLevelCurve c;
  c.year = year;
  for (double t : periods) {
    const auto s = summarize(return_level_draws(lp, t, year));
    c.periods.push_back(t);
    c.mean.push_back(s.mean);
    c.lower.push_back(s.lower);
    c.upper.push_back(s.upper);
  }
  return c;
}

ReturnLevelCurve return_level_curve(const PosteriorDraws& draws, const std::string& site,
                                    std::span<const double> periods, double year) {
  const auto lp = site_draws(draws, draws.site_index(site));
  auto c = return_level_curve(lp, periods, year);
  c.site = site;
  return c;
}

std::vector<EffectRow> effect_table(const PosteriorDraws& draws, const Design& design, double period, double year) {
  if (draws.n_draws() == 0) throw InputError("effect table needs posterior draws");
  if (draws.nu.cols() != design.n_nu) throw InputError("draws do not match the design");
  const double prob = return_period_prob(period);
  const Eigen::VectorXd nu = draws.nu.colwise().mean().transpose();

  // Covariates in order of first appearance, with their site values.
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
  for (const auto& s : design.sub)
    for (std::size_t c = 1; c < s.columns.size(); ++c)
      if (std::find(names.begin(), names.end(), s.columns[c]) == names.end()) {
        names.push_back(s.columns[c]);
        const Eigen::VectorXd col = s.x.col(static_cast<Eigen::Index>(c));
        values.emplace_back(col.data(), col.data() + col.size());
      }

  Eigen::Vector4d base = Eigen::Vector4d::Zero();
  std::vector<double> med(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) med[i] = stats::median(values[i]);
  for (const auto& s : design.sub) {
    double v = nu(s.beta_offset);
    for (std::size_t c = 1; c < s.columns.size(); ++c) {
      const auto i = std::find(names.begin(), names.end(), s.columns[c]) - names.begin();
      v += nu(s.beta_offset + static_cast<int>(c)) * med[static_cast<std::size_t>(i)];
    }
    base(static_cast<int>(s.param)) = v;
  }
  auto level = [&](const Eigen::Vector4d& eta) {
    return gev_quantile(prob, link_inverse(LinkedParams::from(eta)), year);
  };

  std::vector<EffectRow> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double q1 = stats::quantile(values[i], 0.25);
    const double q3 = stats::quantile(values[i], 0.75);
    Eigen::Vector4d e1 = base, e3 = base;
    for (const auto& s : design.sub)
      for (std::size_t c = 1; c < s.columns.size(); ++c)
        if (s.columns[c] == names[i]) {
          const double b = nu(s.beta_offset + static_cast<int>(c));
          e1(static_cast<int>(s.param)) += b * (q1 - med[i]);
          e3(static_cast<int>(s.param)) += b * (q3 - med[i]);
        }
    const double l0 = level(base);
    out.push_back(EffectRow{names[i], level(e1) / l0, level(e3) / l0});
  }
  for (const auto& s : design.sub) {
    if (!s.spatial) continue;
    const Eigen::VectorXd at_sites = design.projector * nu.segment(s.u_offset, design.field->n_nodes());
    const std::vector<double> v(at_sites.data(), at_sites.data() + at_sites.size());
    const double m = stats::median(v);
    Eigen::Vector4d e0 = base, e1 = base, e3 = base;
    const int p = static_cast<int>(s.param);
    e0(p) += m;
    e1(p) += stats::quantile(v, 0.25);
    e3(p) += stats::quantile(v, 0.75);
    const double l0 = level(e0);
    out.push_back(EffectRow{std::string("spatial_") + param_name(s.param), level(e1) / l0, level(e3) / l0});
  }
  return out;
}

std::vector<LinkedParams> predict_ungauged(const PosteriorDraws& draws, const Design& design,
                                           const UngaugedSite& site, std::uint64_t seed) {
  if (draws.nu.cols() != design.n_nu || draws.theta.cols() != design.n_theta())
    throw InputError("draws do not match the design");
  if (site.covariates.size() != static_cast<Eigen::Index>(site.names.size()))
    throw InputError("ungauged site " + site.id + ": covariate names and values differ in number");

  struct Term {
    int param;
    int beta_offset;
    Eigen::VectorXd x;
    int u_offset;
    int sigma_col;
  };
  std::vector<Term> terms;
  std::optional<Location> loc;
  for (std::size_t k = 0; k < design.sub.size(); ++k) {
    const auto& s = design.sub[k];
    Term t{static_cast<int>(s.param), s.beta_offset, Eigen::VectorXd(s.n_beta()), s.spatial ? s.u_offset : -1,
           design.theta_offset(static_cast<int>(k))};
    t.x(0) = 1.0;
    for (std::size_t c = 1; c < s.columns.size(); ++c) {
      const auto it = std::find(site.names.begin(), site.names.end(), s.columns[c]);
      if (it == site.names.end()) throw InputError("ungauged site " + site.id + " lacks covariate " + s.columns[c]);
      t.x(static_cast<Eigen::Index>(c)) = site.covariates(it - site.names.begin());
    }
    if (s.spatial && !loc) {
      loc = locate(design.field->mesh(), site.coords);
      if (!loc) throw InputError("ungauged site " + site.id + " lies outside the mesh");
    }
    terms.push_back(std::move(t));
  }

  std::mt19937_64 rng(stats::mix_seed(seed, stats::hash_string(site.id)));
  std::normal_distribution<double> norm(0.0, 1.0);
  std::vector<LinkedParams> out;
  out.reserve(static_cast<std::size_t>(draws.n_draws()));
  for (int d = 0; d < draws.n_draws(); ++d) {
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(4);
    for (const auto& t : terms) {
      double v = draws.nu.row(d).segment(t.beta_offset, t.x.size()).dot(t.x);
      if (t.u_offset >= 0)
        for (int j = 0; j < 3; ++j) v += loc->weights[j] * draws.nu(d, t.u_offset + loc->nodes[j]);
      v += draws.theta(d, t.sigma_col) * norm(rng);
      eta(t.param) = v;
    }
    out.push_back(LinkedParams::from(eta));
  }
  return out;
}

std::vector<double> posterior_predictive(std::span<const LinkedParams> lp, double year, int n_per_draw,
                                         std::uint64_t seed) {
  if (n_per_draw < 1) throw InputError("need at least one predictive sample per draw");
  std::mt19937_64 rng(stats::mix_seed(seed, 0x9e3dULL));
  std::vector<double> out;
  out.reserve(lp.size() * static_cast<std::size_t>(n_per_draw));
  for (const auto& l : lp) {
    const GevParams p = link_inverse(l);
    for (int i = 0; i < n_per_draw; ++i) out.push_back(gev_sample(rng, p, year));
  }
  return out;
}

std::vector<Band> order_stat_band(int n, const GevParams& p, double year, double level) {
  if (n < 1) throw InputError("order statistics need n >= 1");
  const double a = 0.5 * (1.0 - level);
  std::vector<Band> out;
  for (int k = 1; k <= n; ++k) {
    const double lo = gsl_cdf_beta_Pinv(a, k, n + 1 - k);
    const double hi = gsl_cdf_beta_Pinv(1.0 - a, k, n + 1 - k);
    out.push_back(Band{gev_quantile(lo, p, year), gev_quantile(hi, p, year)});
  }
  return out;
}

std::vector<double> detrend(const SiteData& d, double delta, const LinkConstants& k) {
  std::vector<double> out;
  for (std::size_t i = 0; i < d.size(); ++i) out.push_back(d.maxima[i] / (1.0 + delta * (d.years[i] - k.t0)));
  return out;
}

}  // namespace maxsmooth
