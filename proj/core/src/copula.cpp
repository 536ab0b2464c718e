#include "maxsmooth/copula.hpp"

#include "maxsmooth/error.hpp"
#include "maxsmooth/prediction.hpp"
#include "maxsmooth/stats.hpp"

#include <algorithm>

namespace maxsmooth {

HistoricalBlock make_historical_block(std::vector<std::string> site_ids, std::vector<int> years, Eigen::MatrixXd values) {
  if (values.rows() != static_cast<Eigen::Index>(site_ids.size()) || values.cols() != static_cast<Eigen::Index>(years.size()))
    throw InputError("historical block dimensions do not match its labels");
  if (values.cols() < 2) throw InputError("historical block needs at least two years");
  if (!values.allFinite()) throw InputError("historical block has missing values");
  HistoricalBlock h;
  h.site_ids = std::move(site_ids);
  h.years = std::move(years);
  h.values = std::move(values);
  h.ranks.resize(h.values.rows(), h.values.cols());
  for (Eigen::Index l = 0; l < h.values.rows(); ++l) {
    const Eigen::VectorXd row = h.values.row(l).transpose();
    const auto r = stats::ordinal_ranks(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    for (Eigen::Index j = 0; j < h.values.cols(); ++j) h.ranks(l, j) = static_cast<int>(r[static_cast<std::size_t>(j)]);
  }
  return h;
}

HistoricalBlock build_historical_block(std::span<const SiteData> sites, std::span<const std::string> wanted,
                                       int first_year, int last_year, std::vector<std::string>* excluded) {
  if (last_year <= first_year) throw InputError("historical window needs at least two years");
  const int m = last_year - first_year + 1;
  std::vector<std::string> ids;
  std::vector<Eigen::VectorXd> rows;
  for (const auto& id : wanted) {
    const auto it = std::find_if(sites.begin(), sites.end(), [&](const SiteData& s) { return s.site_id == id; });
    if (it == sites.end()) throw InputError("unknown site '" + id + "' in the historical block");
    Eigen::VectorXd v = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t t = 0; t < it->size(); ++t)
      if (it->years[t] >= first_year && it->years[t] <= last_year) v(it->years[t] - first_year) = it->maxima[t];
    if (!v.allFinite()) {
      if (excluded) excluded->push_back(id);
      continue;
    }
    ids.push_back(id);
    rows.push_back(std::move(v));
  }
  if (rows.empty()) throw InputError("no site has complete data in the historical window");
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), m);
  for (std::size_t l = 0; l < rows.size(); ++l) values.row(static_cast<Eigen::Index>(l)) = rows[l].transpose();
  std::vector<int> years(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) years[static_cast<std::size_t>(j)] = first_year + j;
  return make_historical_block(std::move(ids), std::move(years), std::move(values));
}

Eigen::MatrixXd rank_reorder(const HistoricalBlock& hist, const Eigen::MatrixXd& samples) {
  if (samples.rows() != hist.values.rows() || samples.cols() != hist.values.cols())
    throw InputError("sample block and historical block differ in shape");
  Eigen::MatrixXd out(samples.rows(), samples.cols());
  std::vector<double> row(static_cast<std::size_t>(samples.cols()));
  for (Eigen::Index l = 0; l < samples.rows(); ++l) {
    for (Eigen::Index j = 0; j < samples.cols(); ++j) row[static_cast<std::size_t>(j)] = samples(l, j);
    std::sort(row.begin(), row.end());
    for (Eigen::Index j = 0; j < samples.cols(); ++j) out(l, j) = row[static_cast<std::size_t>(hist.ranks(l, j))];
  }
  return out;
}

Eigen::MatrixXd grow_samples(const HistoricalBlock& hist, const SiteSampler& sampler, int n_blocks,
                             std::uint64_t seed, bool reorder) {
  if (n_blocks < 1) throw InputError("need at least one block");
  const Eigen::Index l = hist.values.rows();
  const Eigen::Index m = hist.values.cols();
  Eigen::MatrixXd out(l, m * n_blocks);
  for (int b = 0; b < n_blocks; ++b) {
    std::mt19937_64 rng(stats::mix_seed(seed, static_cast<std::uint64_t>(b)));
    Eigen::MatrixXd block(l, m);
    for (Eigen::Index s = 0; s < l; ++s) {
      const auto v = sampler(static_cast<int>(s), static_cast<int>(m), rng);
      if (static_cast<Eigen::Index>(v.size()) != m) throw InputError("sampler returned the wrong number of values");
      for (Eigen::Index j = 0; j < m; ++j) block(s, j) = v[static_cast<std::size_t>(j)];
    }
    out.middleCols(b * m, m) = reorder ? rank_reorder(hist, block) : block;
  }
  return out;
}

std::vector<AggregatePoint> aggregate_return_levels(const Eigen::MatrixXd& samples, std::span<const double> weights,
                                                    std::span<const double> periods, int n_boot, std::uint64_t seed) {
  if (static_cast<Eigen::Index>(weights.size()) != samples.rows()) throw InputError("one weight per site is required");
  for (double w : weights)
    if (!(w >= 0.0)) throw InputError("aggregate weights must be nonnegative");
  if (samples.cols() < 2) throw InputError("aggregate needs at least two columns");
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  const Eigen::VectorXd agg = samples.transpose() * w;
  const std::vector<double> a(agg.data(), agg.data() + agg.size());

  std::mt19937_64 rng(stats::mix_seed(seed, 0xa66ULL));
  std::uniform_int_distribution<std::size_t> pick(0, a.size() - 1);
  std::vector<std::vector<double>> boot(periods.size());
  std::vector<double> resample(a.size());
  for (int b = 0; b < n_boot; ++b) {
    for (auto& v : resample) v = a[pick(rng)];
    std::sort(resample.begin(), resample.end());
    for (std::size_t k = 0; k < periods.size(); ++k)
      boot[k].push_back(stats::quantile(resample, return_period_prob(periods[k])));
  }
  std::vector<AggregatePoint> out;
  for (std::size_t k = 0; k < periods.size(); ++k) {
    AggregatePoint p;
    p.period = periods[k];
    p.level = stats::quantile(a, return_period_prob(periods[k]));
    if (n_boot > 1) {
      p.lower = stats::quantile(boot[k], 0.025);
      p.upper = stats::quantile(boot[k], 0.975);
    } else {
      p.lower = p.upper = p.level;
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace maxsmooth
