#include "maxsmooth/site_ml.hpp"

#include "maxsmooth/error.hpp"
#include "maxsmooth/optimize.hpp"
#include "maxsmooth/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace maxsmooth {

void SiteData::validate() const {
  if (years.size() != maxima.size()) throw InputError("site " + site_id + ": years and maxima differ in length");
  if (maxima.empty()) throw InputError("site " + site_id + ": no observations");
  for (std::size_t i = 0; i < maxima.size(); ++i) {
    if (!std::isfinite(maxima[i]) || maxima[i] <= 0.0)
      throw InputError("site " + site_id + ": maxima must be finite and positive");
    if (i > 0 && years[i] <= years[i - 1])
      throw InputError("site " + site_id + ": years must be strictly increasing");
  }
}

const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::kConverged: return "converged";
    case FitStatus::kNotConverged: return "not_converged";
    case FitStatus::kDegenerate: return "degenerate";
    case FitStatus::kTooShort: return "too_short";
  }
  return "unknown";
}

double generalized_loglik(const LinkedParams& lp, const SiteData& d, bool trend, const LinkConstants& k) {
  if (d.maxima.empty()) throw InputError("generalized likelihood of an empty record");
  LinkedParams use = lp;
  if (!trend) use.gamma = 0.0;
  const GevParams p = link_inverse(use, k);
  if (!(p.sigma > 0.0) || !std::isfinite(p.mu) || !std::isfinite(p.sigma)) {
    return -std::numeric_limits<double>::infinity();
  }
  double ll = shape_prior_logdensity(use.phi, k);
  if (trend) ll += trend_prior_logdensity(use.gamma, k);
  for (std::size_t t = 0; t < d.maxima.size(); ++t) {
    ll += gev_log_pdf(d.maxima[t], p, static_cast<double>(d.years[t]), k);
    if (!std::isfinite(ll)) return -std::numeric_limits<double>::infinity();
  }
  return ll;
}

Eigen::VectorXd initial_eta(const SiteData& d, bool trend) {
  const double med = stats::median(d.maxima);
  double spread = d.maxima.size() >= 2 ? stats::iqr(d.maxima) : 0.0;
  if (!(spread > 0.0) && d.maxima.size() >= 2) spread = stats::sd(d.maxima);
  double tau0 = spread > 0.0 ? std::log(0.78 * spread / med) : -1.0;
  tau0 = std::clamp(tau0, -6.0, 2.0);
  Eigen::VectorXd x(trend ? 4 : 3);
  x(0) = std::log(med);
  x(1) = tau0;
  x(2) = 0.0;
  if (trend) x(3) = 0.0;
  return x;
}

SiteFit fit_site(const SiteData& d, const SiteFitOptions& opts) {
  SiteFit fit;
  fit.site_id = d.site_id;
  fit.n_obs = d.size();
  const int dim = opts.trend ? 4 : 3;
  fit.eta_hat = Eigen::VectorXd::Zero(dim);
  fit.precision = Eigen::MatrixXd::Zero(dim, dim);

  const std::size_t n_min = opts.trend ? opts.n_min_trend : opts.n_min_stationary;
  if (d.size() < n_min) {
    fit.status = FitStatus::kTooShort;
    fit.message = "record has " + std::to_string(d.size()) + " maxima, minimum is " + std::to_string(n_min);
    return fit;
  }
  d.validate();

  const auto [lo, hi] = std::minmax_element(d.maxima.begin(), d.maxima.end());
  if (*hi - *lo <= 1e-12 * std::abs(*hi)) {
    fit.status = FitStatus::kDegenerate;
    fit.message = "constant record: scale collapses to zero";
    return fit;
  }

  const LinkConstants& k = opts.link;
  const optimize::Objective neg_ll = [&](const Eigen::VectorXd& x) {
    return -generalized_loglik(LinkedParams::from(x), d, opts.trend, k);
  };

  Eigen::VectorXd typical = Eigen::VectorXd::Ones(dim);
  Eigen::VectorXd step = Eigen::VectorXd::Constant(dim, 0.1);
  if (opts.trend) {
    typical(3) = k.delta0;
    step(3) = k.delta0 / 4.0;
  }

  const Eigen::VectorXd x0 = initial_eta(d, opts.trend);
  std::mt19937_64 rng(stats::mix_seed(opts.seed, stats::hash_string(d.site_id)));
  std::normal_distribution<double> jitter(0.0, 1.0);

  optimize::NewtonOptions nopts;
  nopts.g_tol = opts.g_tol;
  nopts.hess_rel_step = opts.hessian_rel_step;

  optimize::Result best;
  best.value = std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (int attempt = 0; attempt <= opts.max_restarts; ++attempt) {
    Eigen::VectorXd start = x0;
    if (attempt > 0) {
      for (int i = 0; i < dim; ++i) start(i) += 2.0 * step(i) * jitter(rng);
    }
    if (!std::isfinite(neg_ll(start))) {
      fit.restarts = attempt;
      continue;
    }
    const auto simplex = optimize::nelder_mead(neg_ll, start, step);
    const auto polished = optimize::newton_polish(neg_ll, simplex.x, typical, nopts);
    if (!have_best || polished.value < best.value || (polished.converged && !best.converged)) {
      best = polished;
      have_best = true;
    }
    fit.restarts = attempt;
    if (polished.converged) {
      best = polished;
      break;
    }
  }

  if (!have_best) {
    fit.status = FitStatus::kNotConverged;
    fit.message = "no starting point inside the support";
    return fit;
  }

  fit.eta_hat = best.x;
  fit.log_lik = -best.value;
  const Eigen::VectorXd g = optimize::fd_gradient(neg_ll, best.x, optimize::fd_steps(best.x, typical, nopts.grad_rel_step));
  fit.grad_sup_norm = g.cwiseAbs().maxCoeff();
  Eigen::MatrixXd H = optimize::fd_hessian(neg_ll, best.x, optimize::fd_steps(best.x, typical, opts.hessian_rel_step));
  if (!H.allFinite()) {
    fit.status = FitStatus::kNotConverged;
    fit.message = "non-finite Hessian at the mode";
    return fit;
  }
  fit.precision_repaired = optimize::clip_to_pd(H, opts.eig_floor);
  fit.precision = H;

  if (best.x(1) < -20.0) {
    fit.status = FitStatus::kDegenerate;
    fit.message = "scale collapsed towards zero";
  } else if (best.converged && fit.grad_sup_norm < opts.g_tol) {
    fit.status = FitStatus::kConverged;
  } else {
    fit.status = FitStatus::kNotConverged;
    fit.message = "gradient sup-norm " + std::to_string(fit.grad_sup_norm) + " after restarts";
  }
  return fit;
}

std::vector<SiteFit> fit_all_sites(const std::vector<SiteData>& data, const SiteFitOptions& opts) {
  std::vector<SiteFit> out(data.size());
  auto run_one = [&](std::size_t i) {
    try {
      out[i] = fit_site(data[i], opts);
    } catch (const std::exception& e) {
      SiteFit f;
      f.site_id = data[i].site_id;
      f.n_obs = data[i].size();
      f.status = FitStatus::kNotConverged;
      f.message = e.what();
      const int dim = opts.trend ? 4 : 3;
      f.eta_hat = Eigen::VectorXd::Zero(dim);
      f.precision = Eigen::MatrixXd::Zero(dim, dim);
      out[i] = std::move(f);
    }
  };

  const unsigned n_threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(data.size())));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < data.size(); ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < data.size(); i = next++) run_one(i);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace maxsmooth
