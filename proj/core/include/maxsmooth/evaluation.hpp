#pragma once

#include "maxsmooth/latent_model.hpp"
#include "maxsmooth/site_ml.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace maxsmooth {

/// Densities below 2^-50 are not scored.
inline constexpr double kMinScoredDensity = 8.881784197001252e-16;

struct LogScore {
  double bits = 0.0;
  bool excluded = false;
};

/// -log2(p); InputError for negative or non-finite p.
LogScore log_score(double p);

/// 0.9 min(sd, IQR / 1.34) n^(-1/5). InputError when the spread is zero.
double kde_bandwidth(std::span<const double> samples);

/// Gaussian kernel density estimate with the automatic bandwidth above.
class Kde {
 public:
  explicit Kde(std::vector<double> samples);
  [[nodiscard]] double bandwidth() const { return h_; }
  [[nodiscard]] double density(double y) const;

 private:
  std::vector<double> x_;  // sorted
  double h_ = 0.0;
};

double kde_density(std::span<const double> samples, double y);

/// sd(diffs) / sqrt(n_eff_time * n_eff_space).
double se_of_mean_diff(std::span<const double> diffs, double n_eff_time = 13.0, double n_eff_space = 50.0);

/// One stationary GEV by generalized ML on all maxima pooled.
GevParams fit_const(std::span<const SiteData> sites, const SiteFitOptions& opts = {});

struct RsmOptions {
  std::array<int, 3> order{2, 2, 1};                  // coordinate polynomial order for psi, tau, phi
  std::array<std::vector<std::string>, 3> covariates;  // per parameter
  SiteFitOptions site;                                 // prior constants and tolerances
};

/// Joint generalized ML over all sites: psi, tau and phi linear in covariates
/// and coordinate polynomials, no random effects, no trend.
struct RsmFit {
  std::array<std::vector<std::string>, 3> columns;
  std::array<Eigen::VectorXd, 3> coef;
  std::array<int, 3> order{2, 2, 1};
  Point2 center = Point2::Zero();
  double scale = 1.0;
  bool converged = false;
  double log_lik = 0.0;
  std::string message;

  [[nodiscard]] LinkedParams predict(const CovariateTable& covariates, int row, const Point2& coords) const;
};

RsmFit fit_rsm(std::span<const SiteData> sites, const CovariateTable& covariates, std::span<const Point2> coords,
               const RsmOptions& opts = {});

enum class CvMode { kWithinSite, kOutOfSite };
enum class Variant { kConst, kMle, kRsm, kIid, kCov, kFull, kFullTrend };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct CvPlan {
  CvMode mode = CvMode::kWithinSite;
  int train_last_year = 2000;
  int test_first_year = 2001;
  int test_last_year = 2013;
  /// Out-of-site cells: each group is held out once. Ignored within-site.
  std::vector<std::vector<std::string>> held_out;
  /// Station filter: training data starting no later than this year and
  /// complete test years.
  int max_first_year = 1979;
  bool require_complete_test = true;
};

struct CvInput {
  std::vector<SiteData> sites;
  std::vector<Point2> coords;
  CovariateTable covariates;  // transformed, not yet standardized
  ModelSpec full;             // covariates and spatial flags of the FULL variants
  MeshOptions mesh;
  mcmc::Options mcmc;
  SiteFitOptions site;
  int samples = 32000;
  int samples_trend = 3200;
  double n_eff_time = 13.0;
  double n_eff_space = 50.0;
  std::uint64_t seed = 1;
};

struct ScoreTable {
  std::vector<std::string> models;
  std::vector<double> mean_score;  // bits per observation
  std::vector<int> n_scored;
  std::vector<int> n_excluded;
  Eigen::MatrixXd diff;  // diff(a, b) = mean(score_a - score_b) over shared observations
  Eigen::MatrixXd se;
  std::vector<std::string> notes;
  std::vector<int> max_train_year;  // per plan cell, for the leakage audit
  int test_first_year = 0;

  [[nodiscard]] int index(const std::string& model) const;  // -1 when absent
  /// Rows and columns by model name, "mean (se)" cells.
  [[nodiscard]] std::string to_text(char delim = ',') const;
};

/// Per-observation scores of each model; NaN where a model gives no prediction.
struct ScoreMatrix {
  std::vector<std::string> models;
  std::vector<std::string> site;
  std::vector<int> year;
  Eigen::MatrixXd bits;  // observations x models
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> excluded;
};

ScoreTable score_table(const ScoreMatrix& m, double n_eff_time, double n_eff_space);

ScoreTable run_cv(const CvPlan& plan, std::span<const Variant> variants, const CvInput& input,
                  ScoreMatrix* raw = nullptr);

/// Sites passing the station filter of `plan`.
std::vector<int> cv_eligible_sites(const CvPlan& plan, std::span<const SiteData> sites);

struct AndersonDarling {
  double a2 = 0.0;
  bool clamped = false;
};

/// Classical 5% critical value of A^2 for a fully specified distribution.
inline constexpr double kAd5Percent = 2.492;

AndersonDarling anderson_darling(std::span<const double> pit);

struct VariogramBin {
  double lower = 0.0;
  double upper = 0.0;
  double gamma = 0.0;  // NaN when empty
  int pairs = 0;
};

/// Half the mean squared difference of values per distance bin; `edges` are
/// increasing bin boundaries starting at 0.
std::vector<VariogramBin> empirical_variogram(std::span<const double> values, std::span<const Point2> coords,
                                              std::span<const double> edges);

}  // namespace maxsmooth
