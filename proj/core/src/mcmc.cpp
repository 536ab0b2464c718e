#include "maxsmooth/mcmc.hpp"

#include "maxsmooth/error.hpp"
#include "maxsmooth/stats.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace maxsmooth::mcmc {

void Options::validate() const {
  if (chains < 1) throw InputError("mcmc: at least one chain is required");
  if (iterations < 2) throw InputError("mcmc: iterations must be at least 2");
  const int burn = effective_burn_in();
  if (burn < 0 || burn >= iterations) throw InputError("mcmc: burn-in must lie in [0, iterations)");
  if (keep_per_chain < 1) throw InputError("mcmc: keep_per_chain must be positive");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw InputError("mcmc: target acceptance must lie in (0, 1)");
  if (!(initial_step > 0.0)) throw InputError("mcmc: initial step must be positive");
}

namespace {

Chain run_chain(const LogTarget& f, const Eigen::VectorXd& x0, const Options& opts, std::uint64_t seed) {
  const auto d = x0.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Eigen::VectorXd x = x0;
  double lp = f(x);
  if (!std::isfinite(lp)) throw NumericalError("mcmc: starting point has zero posterior density");

  const int burn = opts.effective_burn_in();
  const int n_post = opts.iterations - burn;
  const int keep = std::min(opts.keep_per_chain, n_post);
  const int thin = n_post / keep;
  const int first_kept = n_post - thin * keep;

  Chain ch;
  ch.draws.resize(keep, d);
  ch.iterations.reserve(keep);
  ch.log_target.reserve(keep);

  Eigen::MatrixXd chol = opts.initial_step * Eigen::MatrixXd::Identity(d, d);
  double log_scale = 0.0;
  bool adapted = false;
  Eigen::VectorXd w_mean = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd w_m2 = Eigen::MatrixXd::Zero(d, d);
  long w_n = 0;
  int accepted_post = 0;
  Eigen::VectorXd z(d), prop(d);

  for (int it = 0; it < opts.iterations; ++it) {
    for (Eigen::Index i = 0; i < d; ++i) z(i) = norm(rng);
    prop = x + std::exp(log_scale) * (chol * z);
    const double lp_prop = f(prop);
    double alpha = 0.0;
    if (!std::isfinite(lp_prop)) {
      ++ch.rejected;
    } else {
      alpha = lp_prop >= lp ? 1.0 : std::exp(lp_prop - lp);
    }
    const bool accept = unif(rng) < alpha;
    if (accept) {
      x = prop;
      lp = lp_prop;
    }

    if (it < burn) {
      log_scale += (alpha - opts.target_accept) / std::pow(1.0 + it / 10.0, 0.6);
      log_scale = std::clamp(log_scale, -20.0, 5.0);
      // Forget the approach to the mode once a first covariance is in place.
      if (it == burn / 4 && adapted) {
        w_n = 0;
        w_mean.setZero();
        w_m2.setZero();
      }
      ++w_n;
      const Eigen::VectorXd delta = x - w_mean;
      w_mean += delta / static_cast<double>(w_n);
      w_m2 += delta * (x - w_mean).transpose();
      if (w_n >= 200 + 20 * d && it % 100 == 0) {
        Eigen::MatrixXd cov = w_m2 / static_cast<double>(w_n - 1);
        cov *= 2.38 * 2.38 / static_cast<double>(d);
        cov.diagonal().array() += 1e-10;
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() == Eigen::Success) {
          chol = llt.matrixL();
          if (!adapted) log_scale = 0.0;
          adapted = true;
        }
      }
    } else {
      if (accept) ++accepted_post;
      const int j = it - burn;
      if (j >= first_kept && (j - first_kept + 1) % thin == 0) {
        ch.draws.row(static_cast<Eigen::Index>(ch.iterations.size())) = x.transpose();
        ch.iterations.push_back(it);
        ch.log_target.push_back(lp);
      }
    }
  }
  ch.acceptance = static_cast<double>(accepted_post) / static_cast<double>(n_post);
  return ch;
}

}  // namespace

Result adaptive_metropolis(const TargetFactory& make_target, const std::vector<Eigen::VectorXd>& inits,
                           const Options& opts) {
  opts.validate();
  if (static_cast<int>(inits.size()) != opts.chains) throw InputError("mcmc: one starting point per chain is required");
  for (const auto& v : inits)
    if (v.size() != inits.front().size() || v.size() == 0) throw InputError("mcmc: starting points differ in dimension");

  Result res;
  res.chains.resize(static_cast<std::size_t>(opts.chains));
  std::vector<std::exception_ptr> errors(res.chains.size());
  auto run = [&](std::size_t c) {
    try {
      const LogTarget f = make_target();
      res.chains[c] = run_chain(f, inits[c], opts, stats::mix_seed(opts.seed, 0x5eed0000ULL + c));
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(opts.chains)));
  if (n_threads == 1) {
    for (std::size_t c = 0; c < res.chains.size(); ++c) run(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < res.chains.size(); c = next++) run(c);
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const auto d = inits.front().size();
  res.rhat.resize(d);
  res.ess.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    std::vector<Eigen::VectorXd> cols;
    for (const auto& ch : res.chains) cols.emplace_back(ch.draws.col(k));
    res.rhat(k) = split_rhat(cols);
    res.ess(k) = effective_sample_size(cols);
    if (!(res.rhat(k) <= 1.05)) res.rhat_warning = true;
  }
  return res;
}

double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  std::vector<Eigen::VectorXd> halves;
  for (const auto& c : chains) {
    const Eigen::Index h = c.size() / 2;
    if (h < 2) continue;
    halves.emplace_back(c.head(h));
    halves.emplace_back(c.tail(h));
  }
  if (halves.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::Index n = std::min_element(halves.begin(), halves.end(), [](const auto& a, const auto& b) {
                           return a.size() < b.size();
                         })->size();
  std::vector<double> means, vars;
  for (auto& h : halves) {
    const Eigen::VectorXd v = h.head(n);
    const double m = v.mean();
    means.push_back(m);
    vars.push_back((v.array() - m).square().sum() / static_cast<double>(n - 1));
  }
  const double w = stats::mean(vars);
  const double b = static_cast<double>(n) * stats::variance(means);
  if (!(w > 0.0)) return b > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double var_plus = (static_cast<double>(n) - 1.0) / static_cast<double>(n) * w + b / static_cast<double>(n);
  return std::sqrt(var_plus / w);
}

double effective_sample_size(const std::vector<Eigen::VectorXd>& chains) {
  if (chains.empty()) return 0.0;
  Eigen::Index n = chains.front().size();
  for (const auto& c : chains) n = std::min(n, c.size());
  const auto m = static_cast<double>(chains.size());
  if (n < 4) return m * static_cast<double>(n);

  std::vector<Eigen::VectorXd> acov;
  std::vector<double> means;
  for (const auto& c : chains) {
    const Eigen::VectorXd v = c.head(n);
    const double mu = v.mean();
    means.push_back(mu);
    const Eigen::VectorXd dv = v.array() - mu;
    Eigen::VectorXd a(n);
    for (Eigen::Index t = 0; t < n; ++t)
      a(t) = dv.head(n - t).dot(dv.tail(n - t)) / static_cast<double>(n);
    acov.push_back(std::move(a));
  }
  const double dn = static_cast<double>(n);
  double w = 0.0;
  for (const auto& a : acov) w += a(0) * dn / (dn - 1.0);
  w /= m;
  double var_plus = w * (dn - 1.0) / dn;
  if (chains.size() > 1) var_plus += stats::variance(means);
  if (!(var_plus > 0.0)) return m * dn;

  auto rho = [&](Eigen::Index t) {
    double s = 0.0;
    for (const auto& a : acov) s += a(t);
    return 1.0 - (w - s / m) / var_plus;
  };
  double sum = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    sum += pair;
  }
  const double tau = std::max(-1.0 + 2.0 * sum, 1.0 / std::log10(m * dn));
  return m * dn / tau;
}

}  // namespace maxsmooth::mcmc
