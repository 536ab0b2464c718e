#include "maxsmooth/evaluation.hpp"

#include "maxsmooth/error.hpp"
#include "maxsmooth/optimize.hpp"
#include "maxsmooth/prediction.hpp"
#include "maxsmooth/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace maxsmooth {

LogScore log_score(double p) {
  if (!(p >= 0.0) || !std::isfinite(p)) throw InputError("log score needs a finite nonnegative density");
  return LogScore{-std::log2(p), p < kMinScoredDensity};
}

double kde_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) throw InputError("kernel density needs at least two samples");
  const double sd = stats::sd(samples);
  if (!(sd > 0.0)) throw InputError("kernel density of a degenerate sample");
  double lo = std::min(sd, stats::iqr(samples) / 1.34);
  if (!(lo > 0.0)) lo = sd;
  return 0.9 * lo * std::pow(static_cast<double>(samples.size()), -0.2);
}

Kde::Kde(std::vector<double> samples) : x_(std::move(samples)) {
  h_ = kde_bandwidth(x_);
  std::sort(x_.begin(), x_.end());
}

double Kde::density(double y) const {
  const auto lo = std::lower_bound(x_.begin(), x_.end(), y - 9.0 * h_);
  const auto hi = std::upper_bound(lo, x_.end(), y + 9.0 * h_);
  double s = 0.0;
  for (auto it = lo; it != hi; ++it) {
    const double z = (y - *it) / h_;
    s += std::exp(-0.5 * z * z);
  }
  return s / (static_cast<double>(x_.size()) * h_ * std::sqrt(2.0 * std::numbers::pi));
}

double kde_density(std::span<const double> samples, double y) {
  return Kde(std::vector<double>(samples.begin(), samples.end())).density(y);
}

double se_of_mean_diff(std::span<const double> diffs, double n_eff_time, double n_eff_space) {
  if (diffs.empty()) throw InputError("standard error of an empty set of differences");
  if (!(n_eff_time > 0.0) || !(n_eff_space > 0.0)) throw InputError("effective sample sizes must be positive");
  if (diffs.size() < 2) return 0.0;
  return stats::sd(diffs) / std::sqrt(n_eff_time * n_eff_space);
}

GevParams fit_const(std::span<const SiteData> sites, const SiteFitOptions& opts) {
  SiteData pooled;
  pooled.site_id = "pooled";
  int t = 0;
  for (const auto& s : sites)
    for (double y : s.maxima) {
      pooled.years.push_back(t++);
      pooled.maxima.push_back(y);
    }
  SiteFitOptions o = opts;
  o.trend = false;
  const SiteFit f = fit_site(pooled, o);
  if (!f.converged()) throw NumericalError("pooled GEV fit failed: " + f.message);
  return link_inverse(LinkedParams::from(f.eta_hat), o.link);
}

namespace {

void poly_names(int order, std::vector<std::string>& out) {
  if (order >= 1) {
    out.emplace_back("x");
    out.emplace_back("y");
  }
  if (order >= 2) {
    out.emplace_back("x2");
    out.emplace_back("xy");
    out.emplace_back("y2");
  }
}

void poly_terms(int order, double x, double y, std::vector<double>& out) {
  if (order >= 1) {
    out.push_back(x);
    out.push_back(y);
  }
  if (order >= 2) {
    out.push_back(x * x);
    out.push_back(x * y);
    out.push_back(y * y);
  }
}

Eigen::VectorXd rsm_row(const RsmFit& f, int k, const CovariateTable& cov, int row, const Point2& p) {
  std::vector<double> v{1.0};
  for (std::size_t c = 1; c < f.columns[k].size(); ++c) {
    const auto& name = f.columns[k][c];
    if (name == "x" || name == "y" || name == "x2" || name == "xy" || name == "y2") break;
    v.push_back(cov.values(row, cov.column(name)));
  }
  poly_terms(f.order[k], (p.x() - f.center.x()) / f.scale, (p.y() - f.center.y()) / f.scale, v);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

LinkedParams RsmFit::predict(const CovariateTable& covariates, int row, const Point2& coords) const {
  LinkedParams lp;
  lp.psi = rsm_row(*this, 0, covariates, row, coords).dot(coef[0]);
  lp.tau = rsm_row(*this, 1, covariates, row, coords).dot(coef[1]);
  lp.phi = rsm_row(*this, 2, covariates, row, coords).dot(coef[2]);
  return lp;
}

RsmFit fit_rsm(std::span<const SiteData> sites, const CovariateTable& covariates, std::span<const Point2> coords,
               const RsmOptions& opts) {
  const auto j = static_cast<int>(sites.size());
  if (j == 0) throw InputError("response surface fit needs sites");
  if (covariates.values.rows() != j || static_cast<int>(coords.size()) != j)
    throw InputError("response surface inputs differ in number of sites");
  RsmFit fit;
  fit.order = opts.order;
  Point2 c = Point2::Zero();
  for (const auto& p : coords) c += p;
  fit.center = c / j;
  double s = 0.0;
  for (const auto& p : coords) s = std::max(s, (p - fit.center).cwiseAbs().maxCoeff());
  fit.scale = s > 0.0 ? s : 1.0;

  std::array<Eigen::MatrixXd, 3> x;
  int n_par = 0;
  std::array<int, 3> offset{};
  for (int k = 0; k < 3; ++k) {
    if (opts.order[k] < 0 || opts.order[k] > 2) throw InputError("polynomial order must be 0, 1 or 2");
    fit.columns[k] = {"intercept"};
    for (const auto& n : opts.covariates[k]) fit.columns[k].push_back(n);
    poly_names(opts.order[k], fit.columns[k]);
    x[k].resize(j, static_cast<Eigen::Index>(fit.columns[k].size()));
    for (int i = 0; i < j; ++i) x[k].row(i) = rsm_row(fit, k, covariates, i, coords[i]).transpose();
    offset[k] = n_par;
    n_par += static_cast<int>(x[k].cols());
  }

  const LinkConstants& lk = opts.site.link;
  const optimize::Objective neg = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd psi = x[0] * b.segment(offset[0], x[0].cols());
    const Eigen::VectorXd tau = x[1] * b.segment(offset[1], x[1].cols());
    const Eigen::VectorXd phi = x[2] * b.segment(offset[2], x[2].cols());
    double ll = 0.0;
    for (int i = 0; i < j; ++i) {
      ll += generalized_loglik(LinkedParams{psi(i), tau(i), phi(i), 0.0}, sites[i], false, lk);
      if (!std::isfinite(ll)) return std::numeric_limits<double>::infinity();
    }
    return -ll;
  };

  const LinkedParams start = link_forward(fit_const(sites, opts.site), lk);
  Eigen::VectorXd b0 = Eigen::VectorXd::Zero(n_par);
  b0(offset[0]) = start.psi;
  b0(offset[1]) = start.tau;
  b0(offset[2]) = start.phi;

  optimize::NewtonOptions no;
  no.max_iter = 100;
  no.g_tol = 1e-3;
  const auto res = optimize::newton_polish(neg, b0, Eigen::VectorXd::Ones(n_par), no);
  for (int k = 0; k < 3; ++k) fit.coef[k] = res.x.segment(offset[k], x[k].cols());
  fit.converged = res.converged;
  fit.log_lik = -res.value;
  if (!res.converged) fit.message = "response surface optimizer stopped before the gradient tolerance";
  return fit;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kConst: return "CONST";
    case Variant::kMle: return "MLE";
    case Variant::kRsm: return "RSM";
    case Variant::kIid: return "IID";
    case Variant::kCov: return "COV";
    case Variant::kFull: return "FULL";
    case Variant::kFullTrend: return "FULL+T";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  for (Variant v : {Variant::kConst, Variant::kMle, Variant::kRsm, Variant::kIid, Variant::kCov, Variant::kFull,
                    Variant::kFullTrend})
    if (name == variant_name(v)) return v;
  throw InputError("unknown model variant '" + name + "'");
}

int ScoreTable::index(const std::string& model) const {
  for (std::size_t i = 0; i < models.size(); ++i)
    if (models[i] == model) return static_cast<int>(i);
  return -1;
}

std::string ScoreTable::to_text(char delim) const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "model" << delim << "mean_score" << delim << "n_scored" << delim << "n_excluded";
  for (const auto& m : models) os << delim << m;
  os << '\n';
  for (std::size_t a = 0; a < models.size(); ++a) {
    os << models[a] << delim << mean_score[a] << delim << n_scored[a] << delim << n_excluded[a];
    for (std::size_t b = 0; b < models.size(); ++b) {
      const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
      os << delim;
      if (a == b || !std::isfinite(diff(ia, ib))) continue;
      os << diff(ia, ib) << " (" << se(ia, ib) << ")";
    }
    os << '\n';
  }
  for (const auto& n : notes) os << "# " << n << '\n';
  return os.str();
}

ScoreTable score_table(const ScoreMatrix& m, double n_eff_time, double n_eff_space) {
  ScoreTable t;
  t.models = m.models;
  const auto nm = static_cast<Eigen::Index>(m.models.size());
  const auto no = m.bits.rows();
  auto valid = [&](Eigen::Index o, Eigen::Index a) { return std::isfinite(m.bits(o, a)) && !m.excluded(o, a); };
  for (Eigen::Index a = 0; a < nm; ++a) {
    double s = 0.0;
    int n = 0, ex = 0;
    for (Eigen::Index o = 0; o < no; ++o) {
      if (m.excluded(o, a)) ++ex;
      if (valid(o, a)) {
        s += m.bits(o, a);
        ++n;
      }
    }
    t.mean_score.push_back(n > 0 ? s / n : std::numeric_limits<double>::quiet_NaN());
    t.n_scored.push_back(n);
    t.n_excluded.push_back(ex);
  }
  t.diff = Eigen::MatrixXd::Zero(nm, nm);
  t.se = Eigen::MatrixXd::Zero(nm, nm);
  for (Eigen::Index a = 0; a < nm; ++a)
    for (Eigen::Index b = a + 1; b < nm; ++b) {
      std::vector<double> d;
      for (Eigen::Index o = 0; o < no; ++o)
        if (valid(o, a) && valid(o, b)) d.push_back(m.bits(o, a) - m.bits(o, b));
      if (d.empty()) {
        t.diff(a, b) = t.diff(b, a) = std::numeric_limits<double>::quiet_NaN();
        t.se(a, b) = t.se(b, a) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      t.diff(a, b) = stats::mean(d);
      t.diff(b, a) = -t.diff(a, b);
      t.se(a, b) = t.se(b, a) = se_of_mean_diff(d, n_eff_time, n_eff_space);
    }
  return t;
}

std::vector<int> cv_eligible_sites(const CvPlan& plan, std::span<const SiteData> sites) {
  std::vector<int> out;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto& s = sites[i];
    if (s.years.empty() || s.years.front() > plan.max_first_year) continue;
    if (s.years.front() > plan.train_last_year) continue;
    if (plan.require_complete_test) {
      int have = 0;
      for (int y : s.years)
        if (y >= plan.test_first_year && y <= plan.test_last_year) ++have;
      if (have != plan.test_last_year - plan.test_first_year + 1) continue;
    }
    out.push_back(static_cast<int>(i));
  }
  return out;
}

namespace {

SiteData truncate(const SiteData& s, int last_year) {
  SiteData t;
  t.site_id = s.site_id;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.years[i] <= last_year) {
      t.years.push_back(s.years[i]);
      t.maxima.push_back(s.maxima[i]);
    }
  return t;
}

ModelSpec variant_spec(Variant v, const ModelSpec& full) {
  ModelSpec s = full;
  s.trend = v == Variant::kFullTrend;
  for (auto& sub : s.sub) {
    if (v == Variant::kIid) sub.covariates.clear();
    if (v == Variant::kIid || v == Variant::kCov) sub.spatial = false;
  }
  return s;
}

double gev_density(double y, const GevParams& p, double year) { return std::exp(gev_log_pdf(y, p, year)); }

}  // namespace

ScoreTable run_cv(const CvPlan& plan, std::span<const Variant> variants, const CvInput& input, ScoreMatrix* raw) {
  if (variants.empty()) throw ConfigError("cross-validation needs at least one model variant");
  if (plan.test_first_year <= plan.train_last_year || plan.test_last_year < plan.test_first_year)
    throw ConfigError("test years must follow the training years");
  const auto n_sites = input.sites.size();
  if (input.coords.size() != n_sites || static_cast<std::size_t>(input.covariates.values.rows()) != n_sites)
    throw InputError("cross-validation inputs differ in number of sites");

  std::vector<std::string> notes;
  std::vector<Variant> use;
  for (Variant v : variants) {
    if (std::find(use.begin(), use.end(), v) != use.end()) throw ConfigError(std::string("variant listed twice: ") + variant_name(v));
    if (v == Variant::kMle && plan.mode == CvMode::kOutOfSite) {
      notes.emplace_back("MLE is not applicable to out-of-site prediction");
      continue;
    }
    use.push_back(v);
  }

  const std::vector<int> eligible = cv_eligible_sites(plan, input.sites);
  if (eligible.size() < 3) throw InputError("fewer than three sites pass the station filter");
  std::map<std::string, int> by_id;
  for (int i : eligible) by_id[input.sites[static_cast<std::size_t>(i)].site_id] = i;

  // Plan cells: (training sites, test sites).
  std::vector<std::pair<std::vector<int>, std::vector<int>>> cells;
  if (plan.mode == CvMode::kWithinSite) {
    cells.emplace_back(eligible, eligible);
  } else {
    if (plan.held_out.empty()) throw ConfigError("out-of-site cross-validation needs held-out site groups");
    for (const auto& g : plan.held_out) {
      std::set<int> test;
      for (const auto& id : g) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) {
          notes.push_back("held-out site " + id + " does not pass the station filter");
          continue;
        }
        test.insert(it->second);
      }
      if (test.empty()) continue;
      std::vector<int> train;
      for (int i : eligible)
        if (!test.count(i)) train.push_back(i);
      cells.emplace_back(train, std::vector<int>(test.begin(), test.end()));
    }
    if (cells.empty()) throw ConfigError("no usable held-out group");
  }

  // Shared mesh over every eligible site keeps held-out sites inside it.
  std::shared_ptr<const Mesh> mesh;
  bool need_mesh = false;
  for (Variant v : use) need_mesh = need_mesh || variant_spec(v, input.full).any_spatial();
  if (need_mesh) {
    std::vector<Point2> all;
    for (int i : eligible) all.push_back(input.coords[static_cast<std::size_t>(i)]);
    mesh = std::make_shared<const Mesh>(build_mesh(all, input.mesh));
  }

  ScoreMatrix m;
  for (Variant v : use) m.models.emplace_back(variant_name(v));
  std::vector<std::vector<double>> bits(use.size());
  std::vector<std::vector<char>> excl(use.size());
  ScoreTable table;

  for (std::size_t cell = 0; cell < cells.size(); ++cell) {
    const auto& [train_idx, test_idx] = cells[cell];
    std::vector<SiteData> train;
    std::vector<Point2> train_xy;
    int max_year = std::numeric_limits<int>::min();
    for (int i : train_idx) {
      train.push_back(truncate(input.sites[static_cast<std::size_t>(i)], plan.train_last_year));
      train_xy.push_back(input.coords[static_cast<std::size_t>(i)]);
      if (!train.back().years.empty()) max_year = std::max(max_year, train.back().years.back());
    }
    table.max_train_year.push_back(max_year);
    if (max_year >= plan.test_first_year) throw NumericalError("test years leaked into the training data");

    const Standardizer st = Standardizer::fit(input.covariates.rows(train_idx));
    const CovariateTable cov_train = st.apply(input.covariates.rows(train_idx));
    const CovariateTable cov_test = st.apply(input.covariates.rows(test_idx));

    struct Obs {
      int test_row;
      int year;
      double y;
    };
    std::vector<Obs> obs;
    for (std::size_t r = 0; r < test_idx.size(); ++r) {
      const auto& s = input.sites[static_cast<std::size_t>(test_idx[r])];
      for (std::size_t t = 0; t < s.size(); ++t)
        if (s.years[t] >= plan.test_first_year && s.years[t] <= plan.test_last_year)
          obs.push_back(Obs{static_cast<int>(r), s.years[t], s.maxima[t]});
    }
    const std::size_t base = m.site.size();
    for (const auto& o : obs) {
      m.site.push_back(input.sites[static_cast<std::size_t>(test_idx[static_cast<std::size_t>(o.test_row)])].site_id);
      m.year.push_back(o.year);
    }
    for (auto& b : bits) b.resize(base + obs.size(), std::numeric_limits<double>::quiet_NaN());
    for (auto& e : excl) e.resize(base + obs.size(), 0);

    auto score = [&](std::size_t vi, std::size_t oi, double density) {
      const LogScore ls = log_score(density);
      bits[vi][base + oi] = ls.bits;
      excl[vi][base + oi] = ls.excluded ? 1 : 0;
    };

    for (std::size_t vi = 0; vi < use.size(); ++vi) {
      const Variant v = use[vi];
      const std::string tag = std::string(variant_name(v)) + " (cell " + std::to_string(cell) + "): ";
      try {
        if (v == Variant::kConst) {
          const GevParams p = fit_const(train, input.site);
          for (std::size_t oi = 0; oi < obs.size(); ++oi) score(vi, oi, gev_density(obs[oi].y, p, obs[oi].year));
        } else if (v == Variant::kMle) {
          SiteFitOptions so = input.site;
          so.trend = false;
          for (std::size_t r = 0; r < test_idx.size(); ++r) {
            const auto pos = std::find(train_idx.begin(), train_idx.end(), test_idx[r]) - train_idx.begin();
            const SiteFit f = fit_site(train[static_cast<std::size_t>(pos)], so);
            if (!f.converged()) {
              notes.push_back(tag + "no site fit for " + f.site_id);
              continue;
            }
            const GevParams p = link_inverse(LinkedParams::from(f.eta_hat), so.link);
            for (std::size_t oi = 0; oi < obs.size(); ++oi)
              if (obs[oi].test_row == static_cast<int>(r)) score(vi, oi, gev_density(obs[oi].y, p, obs[oi].year));
          }
        } else if (v == Variant::kRsm) {
          RsmOptions ro;
          ro.site = input.site;
          for (int k = 0; k < 3; ++k) ro.covariates[static_cast<std::size_t>(k)] = input.full.sub[static_cast<std::size_t>(k)].covariates;
          const RsmFit f = fit_rsm(train, cov_train, train_xy, ro);
          if (!f.converged) notes.push_back(tag + f.message);
          for (std::size_t oi = 0; oi < obs.size(); ++oi) {
            const int r = obs[oi].test_row;
            const GevParams p = link_inverse(f.predict(cov_test, r, input.coords[static_cast<std::size_t>(test_idx[static_cast<std::size_t>(r)])]));
            score(vi, oi, gev_density(obs[oi].y, p, obs[oi].year));
          }
        } else {
          InferenceInput in;
          in.spec = variant_spec(v, input.full);
          SiteFitOptions so = input.site;
          so.trend = in.spec.trend;
          in.fits = fit_all_sites(train, so);
          in.covariates = cov_train;
          in.coords = train_xy;
          in.mesh = mesh;
          in.mesh_options = input.mesh;
          mcmc::Options mo = input.mcmc;
          mo.seed = stats::mix_seed(input.seed, 0xc0000ULL + 16 * cell + vi);
          const FittedModel fm = run_inference(in, mo);
          if (!fm.pseudo->excluded.empty())
            notes.push_back(tag + std::to_string(fm.pseudo->excluded.size()) + " training sites dropped");
          if (fm.draws.rhat_warning) notes.push_back(tag + "R-hat above 1.05");

          const int n_draws = fm.draws.n_draws();
          for (std::size_t r = 0; r < test_idx.size(); ++r) {
            std::vector<LinkedParams> lp;
            const std::string& id = input.sites[static_cast<std::size_t>(test_idx[r])].site_id;
            if (plan.mode == CvMode::kWithinSite) {
              const auto it = std::find(fm.draws.site_ids.begin(), fm.draws.site_ids.end(), id);
              if (it == fm.draws.site_ids.end()) {
                notes.push_back(tag + "no posterior for " + id);
                continue;
              }
              lp = site_draws(fm.draws, static_cast<int>(it - fm.draws.site_ids.begin()));
            } else {
              UngaugedSite u;
              u.id = id;
              u.coords = input.coords[static_cast<std::size_t>(test_idx[r])];
              u.names = cov_test.names;
              u.covariates = cov_test.values.row(static_cast<Eigen::Index>(r)).transpose();
              lp = predict_ungauged(fm.draws, *fm.design, u, stats::mix_seed(mo.seed, r));
            }
            const std::uint64_t seed = stats::mix_seed(mo.seed, 0x5a3e0000ULL + r);
            if (!in.spec.trend) {
              const int per = (input.samples + n_draws - 1) / n_draws;
              const Kde kde(posterior_predictive(lp, link_constants().t0, per, seed));
              for (std::size_t oi = 0; oi < obs.size(); ++oi)
                if (obs[oi].test_row == static_cast<int>(r)) score(vi, oi, kde.density(obs[oi].y));
            } else {
              const int per = (input.samples_trend + n_draws - 1) / n_draws;
              for (std::size_t oi = 0; oi < obs.size(); ++oi) {
                if (obs[oi].test_row != static_cast<int>(r)) continue;
                const Kde kde(posterior_predictive(lp, obs[oi].year, per, stats::mix_seed(seed, obs[oi].year)));
                score(vi, oi, kde.density(obs[oi].y));
              }
            }
          }
        }
      } catch (const std::exception& e) {
        notes.push_back(tag + "failed: " + e.what());
        for (std::size_t oi = 0; oi < obs.size(); ++oi) bits[vi][base + oi] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }

  const auto n_obs = static_cast<Eigen::Index>(m.site.size());
  m.bits.resize(n_obs, static_cast<Eigen::Index>(use.size()));
  m.excluded.resize(n_obs, static_cast<Eigen::Index>(use.size()));
  for (std::size_t vi = 0; vi < use.size(); ++vi)
    for (Eigen::Index o = 0; o < n_obs; ++o) {
      m.bits(o, static_cast<Eigen::Index>(vi)) = bits[vi][static_cast<std::size_t>(o)];
      m.excluded(o, static_cast<Eigen::Index>(vi)) = excl[vi][static_cast<std::size_t>(o)] != 0;
    }
  ScoreTable t = score_table(m, input.n_eff_time, input.n_eff_space);
  t.notes = notes;
  t.max_train_year = table.max_train_year;
  t.test_first_year = plan.test_first_year;
  if (raw) *raw = std::move(m);
  return t;
}

AndersonDarling anderson_darling(std::span<const double> pit) {
  if (pit.empty()) throw InputError("Anderson-Darling needs at least one value");
  AndersonDarling r;
  std::vector<double> u(pit.begin(), pit.end());
  for (double& v : u) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw InputError("PIT values must lie in [0, 1]");
    if (v < 1e-12 || v > 1.0 - 1e-12) {
      v = std::clamp(v, 1e-12, 1.0 - 1e-12);
      r.clamped = true;
    }
  }
  std::sort(u.begin(), u.end());
  const auto n = u.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    s += (2.0 * static_cast<double>(i) + 1.0) * (std::log(u[i]) + std::log1p(-u[n - 1 - i]));
  r.a2 = -static_cast<double>(n) - s / static_cast<double>(n);
  return r;
}

std::vector<VariogramBin> empirical_variogram(std::span<const double> values, std::span<const Point2> coords,
                                              std::span<const double> edges) {
  if (values.size() != coords.size()) throw InputError("variogram values and coordinates differ in number");
  if (values.size() < 2) throw InputError("variogram needs at least two sites");
  if (edges.size() < 2 || edges.front() != 0.0) throw InputError("variogram bin edges must start at 0");
  for (std::size_t b = 1; b < edges.size(); ++b)
    if (!(edges[b] > edges[b - 1])) throw InputError("variogram bin edges must increase");
  std::vector<VariogramBin> bins(edges.size() - 1);
  std::vector<double> sum(bins.size(), 0.0);
  for (std::size_t b = 0; b < bins.size(); ++b) {
    bins[b].lower = edges[b];
    bins[b].upper = edges[b + 1];
  }
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t k = i + 1; k < values.size(); ++k) {
      const double d = (coords[i] - coords[k]).norm();
      const auto it = std::upper_bound(edges.begin(), edges.end(), d);
      if (it == edges.end()) continue;
      const auto b = static_cast<std::size_t>(it - edges.begin()) - 1;
      const double diff = values[i] - values[k];
      sum[b] += diff * diff;
      ++bins[b].pairs;
    }
  for (std::size_t b = 0; b < bins.size(); ++b)
    bins[b].gamma = bins[b].pairs > 0 ? 0.5 * sum[b] / bins[b].pairs : std::numeric_limits<double>::quiet_NaN();
  return bins;
}

}  // namespace maxsmooth
