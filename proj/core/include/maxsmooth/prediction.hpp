#pragma once

#include "maxsmooth/latent_model.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace maxsmooth {

/// 1 - 1/T; throws InputError unless T > 1.
double return_period_prob(double period);

struct Summary {
  double mean = 0.0;
  double lower = 0.0;  // 2.5% point
  double upper = 0.0;  // 97.5% point
};

Summary summarize(std::span<const double> draws, double level = 0.95);

/// Latent draws of one gauged site, in draw order.
std::vector<LinkedParams> site_draws(const PosteriorDraws& draws, int site);

/// Per-draw (1 - 1/T) quantiles at `year`.
std::vector<double> return_level_draws(std::span<const LinkedParams> lp, double period, double year);

Summary return_level(const PosteriorDraws& draws, const std::string& site, double period, double year);

struct ReturnLevelCurve {
  std::string site;
  double year = 0.0;
  std::vector<double> periods;
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
};

ReturnLevelCurve return_level_curve(std::span<const LinkedParams> lp, std::span<const double> periods, double year);
ReturnLevelCurve return_level_curve(const PosteriorDraws& draws, const std::string& site,
                                    std::span<const double> periods, double year);

struct EffectRow {
  std::string name;    // covariate name or "spatial_<param>"
  double q1 = 1.0;     // level ratio with the term at its first quartile
  double q3 = 1.0;     // level ratio with the term at its third quartile
};

/// Multiplicative effect on the T-year event of moving one covariate (or one
/// spatial component) from its median to its quartiles across the design sites,
/// others at their medians, nuggets and spatial terms zeroed, coefficients at
/// posterior means.
std::vector<EffectRow> effect_table(const PosteriorDraws& draws, const Design& design, double period = 100.0,
                                    double year = 1975.0);

/// A location without observations; covariates already standardized with the
/// training statistics.
struct UngaugedSite {
  std::string id;
  Point2 coords = Point2::Zero();
  std::vector<std::string> names;
  Eigen::VectorXd covariates;
};

/// x'beta + a'u + eps_new per posterior draw, eps_new ~ N(0, sigma_eps^2)
/// drawn afresh for each draw. Throws InputError outside the mesh.
std::vector<LinkedParams> predict_ungauged(const PosteriorDraws& draws, const Design& design,
                                           const UngaugedSite& site, std::uint64_t seed);

/// `n_per_draw` GEV variates per latent draw at `year`, draw-major.
std::vector<double> posterior_predictive(std::span<const LinkedParams> lp, double year, int n_per_draw,
                                         std::uint64_t seed);

struct Band {
  double lower = 0.0;
  double upper = 0.0;
};

/// 95% intervals of the ascending order statistics of a record of length n.
std::vector<Band> order_stat_band(int n, const GevParams& p, double year = 1975.0, double level = 0.95);

/// y_t / (1 + delta (t - t0)).
std::vector<double> detrend(const SiteData& d, double delta, const LinkConstants& k = link_constants());

}  // namespace maxsmooth
