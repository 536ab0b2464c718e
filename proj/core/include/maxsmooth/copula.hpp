#pragma once

#include "maxsmooth/site_ml.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace maxsmooth {

/// Complete L x M block of historical maxima (sites by years). Ranks within a
/// site are 0-based; ties go to the earlier year.
struct HistoricalBlock {
  std::vector<std::string> site_ids;
  std::vector<int> years;
  Eigen::MatrixXd values;
  Eigen::MatrixXi ranks;

  [[nodiscard]] int n_sites() const { return static_cast<int>(values.rows()); }
  [[nodiscard]] int n_years() const { return static_cast<int>(values.cols()); }
  static constexpr const char* kTieRule = "ties broken by year order, earliest year gets the lower rank";
};

/// Block from a value matrix whose columns are in year order.
HistoricalBlock make_historical_block(std::vector<std::string> site_ids, std::vector<int> years, Eigen::MatrixXd values);

/// Sites with a maximum in every year of [first_year, last_year]; the others
/// are listed in `excluded` rather than imputed.
HistoricalBlock build_historical_block(std::span<const SiteData> sites, std::span<const std::string> wanted,
                                       int first_year, int last_year, std::vector<std::string>* excluded = nullptr);

/// Per site, the sorted samples placed so that their ranks equal the historical ranks.
Eigen::MatrixXd rank_reorder(const HistoricalBlock& hist, const Eigen::MatrixXd& samples);

/// Draws `m` independent predictive values for site `l`.
using SiteSampler = std::function<std::vector<double>(int l, int m, std::mt19937_64& rng)>;

/// n_blocks independent L x M draws, each reordered; blocks concatenated
/// column-wise in block order. With `reorder` off the draws are left independent.
Eigen::MatrixXd grow_samples(const HistoricalBlock& hist, const SiteSampler& sampler, int n_blocks,
                             std::uint64_t seed, bool reorder = true);

struct AggregatePoint {
  double period = 0.0;
  double level = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Weighted sums across sites (one per column) and their empirical (1 - 1/T)
/// quantiles with percentile-bootstrap 95% intervals.
std::vector<AggregatePoint> aggregate_return_levels(const Eigen::MatrixXd& samples, std::span<const double> weights,
                                                    std::span<const double> periods, int n_boot = 200,
                                                    std::uint64_t seed = 1);

}  // namespace maxsmooth
