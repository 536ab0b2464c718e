#include "maxsmooth/error.hpp"
#include "maxsmooth/latent_model.hpp"
#include "maxsmooth/mcmc.hpp"
#include "small_model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace maxsmooth;

TEST_CASE("adaptive Metropolis samples a correlated Gaussian") {
  Eigen::Matrix2d cov;
  cov << 1.0, 0.8, 0.8, 1.0;
  const Eigen::Matrix2d prec = cov.inverse();
  const mcmc::TargetFactory factory = [&] {
    return mcmc::LogTarget([&](const Eigen::VectorXd& x) { return -0.5 * x.dot(prec * x); });
  };
  mcmc::Options o;
  o.chains = 4;
  o.iterations = 20000;
  o.keep_per_chain = 2000;
  o.seed = 3;
  const std::vector<Eigen::VectorXd> inits(4, Eigen::Vector2d(2.0, -2.0));
  const auto r = mcmc::adaptive_metropolis(factory, inits, o);
  REQUIRE(r.chains.size() == 4);
  Eigen::MatrixXd all(8000, 2);
  for (int c = 0; c < 4; ++c) {
    CHECK(r.chains[static_cast<std::size_t>(c)].draws.rows() == 2000);
    all.middleRows(c * 2000, 2000) = r.chains[static_cast<std::size_t>(c)].draws;
    CHECK(r.chains[static_cast<std::size_t>(c)].acceptance == doctest::Approx(0.234).epsilon(0.35));
  }
  const Eigen::RowVector2d m = all.colwise().mean();
  const Eigen::MatrixXd centred = all.rowwise() - m;
  const Eigen::Matrix2d s = centred.transpose() * centred / 7999.0;
  CHECK(std::abs(m(0)) < 0.15);
  CHECK(s(0, 0) == doctest::Approx(1.0).epsilon(0.15));
  CHECK(s(0, 1) == doctest::Approx(0.8).epsilon(0.15));
  CHECK(r.rhat.maxCoeff() < 1.05);
  CHECK_FALSE(r.rhat_warning);
  CHECK(r.ess.minCoeff() > 200.0);
}

TEST_CASE("chains are reproducible and independent of threads") {
  const mcmc::TargetFactory factory = [] {
    return mcmc::LogTarget([](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); });
  };
  mcmc::Options o;
  o.chains = 3;
  o.iterations = 600;
  o.keep_per_chain = 100;
  o.seed = 9;
  const std::vector<Eigen::VectorXd> inits(3, Eigen::VectorXd::Zero(3));
  const auto a = mcmc::adaptive_metropolis(factory, inits, o);
  o.threads = 3;
  const auto b = mcmc::adaptive_metropolis(factory, inits, o);
  for (int c = 0; c < 3; ++c) CHECK(a.chains[static_cast<std::size_t>(c)].draws == b.chains[static_cast<std::size_t>(c)].draws);
  CHECK(a.chains[0].draws != a.chains[1].draws);
}

TEST_CASE("non-finite targets are rejected and counted") {
  const mcmc::TargetFactory factory = [] {
    return mcmc::LogTarget([](const Eigen::VectorXd& x) {
      return x(0) > 1.0 ? -std::numeric_limits<double>::infinity() : -0.5 * x.squaredNorm();
    });
  };
  mcmc::Options o;
  o.chains = 1;
  o.iterations = 2000;
  o.keep_per_chain = 500;
  const auto r = mcmc::adaptive_metropolis(factory, {Eigen::VectorXd::Zero(1)}, o);
  CHECK(r.chains[0].draws.maxCoeff() <= 1.0);
  CHECK(r.chains[0].rejected > 0);
}

TEST_CASE("split R-hat and effective sample size") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Eigen::VectorXd> iid(4, Eigen::VectorXd(1000));
  for (auto& c : iid)
    for (int i = 0; i < 1000; ++i) c(i) = z(rng);
  CHECK(mcmc::split_rhat(iid) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(mcmc::effective_sample_size(iid) == doctest::Approx(4000.0).epsilon(0.15));

  std::vector<Eigen::VectorXd> shifted = iid;
  shifted[0].array() += 3.0;
  CHECK(mcmc::split_rhat(shifted) > 1.1);

  // AR(1) with coefficient 0.9: ESS near n (1 - 0.9) / (1 + 0.9).
  std::vector<Eigen::VectorXd> ar(4, Eigen::VectorXd(5000));
  for (auto& c : ar) {
    double x = 0.0;
    for (int i = 0; i < 5000; ++i) c(i) = x = 0.9 * x + std::sqrt(1 - 0.81) * z(rng);
  }
  CHECK(mcmc::effective_sample_size(ar) == doctest::Approx(20000.0 * 0.1 / 1.9).epsilon(0.25));
}

TEST_CASE("option validation") {
  mcmc::Options o;
  o.burn_in = o.iterations;
  CHECK_THROWS_AS(o.validate(), InputError);
  mcmc::Options p;
  p.chains = 0;
  CHECK_THROWS_AS(p.validate(), InputError);
  CHECK(mcmc::Options{}.effective_burn_in() == 6250);
}

TEST_CASE("posterior sampling of the small model") {
  const auto sm = maxsmooth::testing::small_model(8, false, 12);
  const LatentModel model(sm.design, sm.pd);
  mcmc::Options o;
  o.chains = 2;
  o.iterations = 2000;
  o.keep_per_chain = 100;
  o.seed = 4;
  const PosteriorDraws d = sample_posterior(model, o);
  CHECK(d.n_draws() == 200);
  CHECK(d.theta.cols() == sm.design->n_theta());
  CHECK(d.nu.cols() == sm.design->n_nu);
  CHECK(d.eta.cols() == sm.design->n_rows());
  CHECK(d.theta.minCoeff() > 0.0);
  CHECK(d.chain.front() == 0);
  CHECK(d.chain.back() == 1);
  CHECK(d.iteration.back() == 1999);
  CHECK(d.rhat.size() == static_cast<std::size_t>(sm.design->n_theta()));
  const LinkedParams lp = d.linked(0, 3);
  CHECK(lp.psi == d.eta(0, 3));
  CHECK(lp.gamma == 0.0);
  const PosteriorDraws again = sample_posterior(model, o);
  CHECK(again.eta == d.eta);
}
