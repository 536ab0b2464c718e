#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

namespace maxsmooth::mcmc {

struct Options {
  int chains = 4;
  int iterations = 12500;
  int burn_in = -1;          // negative: half of `iterations`
  int keep_per_chain = 1000;
  double target_accept = 0.234;
  double initial_step = 0.1;  // proposal sd per coordinate before adaptation
  std::uint64_t seed = 1;
  unsigned threads = 1;

  [[nodiscard]] int effective_burn_in() const { return burn_in < 0 ? iterations / 2 : burn_in; }
  void validate() const;
};

using LogTarget = std::function<double(const Eigen::VectorXd&)>;
/// Called once per chain so that each chain owns its evaluation state.
using TargetFactory = std::function<LogTarget()>;

struct Chain {
  Eigen::MatrixXd draws;  // kept draws, one per row
  std::vector<int> iterations;
  std::vector<double> log_target;
  double acceptance = 0.0;  // post-burn-in acceptance rate
  int rejected = 0;         // proposals with a non-finite target
};

struct Result {
  std::vector<Chain> chains;
  Eigen::VectorXd rhat;
  Eigen::VectorXd ess;
  bool rhat_warning = false;  // any coordinate above 1.05
};

/// Random-walk Metropolis with an adapted proposal covariance (empirical
/// covariance of the chain so far) and a scale tuned towards the target
/// acceptance rate. Adaptation stops at the end of burn-in.
Result adaptive_metropolis(const TargetFactory& make_target, const std::vector<Eigen::VectorXd>& inits,
                           const Options& opts);

/// Split R-hat of one coordinate; each vector is one chain.
double split_rhat(const std::vector<Eigen::VectorXd>& chains);
/// Multi-chain effective sample size with Geyer's initial monotone sequence.
double effective_sample_size(const std::vector<Eigen::VectorXd>& chains);

}  // namespace maxsmooth::mcmc
