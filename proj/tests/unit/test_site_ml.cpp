#include "maxsmooth/error.hpp"
#include "maxsmooth/optimize.hpp"
#include "maxsmooth/site_ml.hpp"
#include "records.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

using namespace maxsmooth;
using maxsmooth::testing::gev_record;

TEST_CASE("fit recovers the generating parameters") {
  const GevParams truth{100.0, 30.0, 0.1, 0.002};
  const SiteData d = gev_record("A", truth, 400, 1900, 17);
  const SiteFit f = fit_site(d);
  REQUIRE(f.converged());
  const GevParams est = link_inverse(LinkedParams::from(f.eta_hat));
  CHECK(est.mu == doctest::Approx(truth.mu).epsilon(0.08));
  CHECK(est.sigma == doctest::Approx(truth.sigma).epsilon(0.12));
  CHECK(std::abs(est.xi - truth.xi) < 0.1);
  CHECK(std::abs(est.delta - truth.delta) < 0.001);
  CHECK(f.precision.rows() == 4);
  CHECK(f.grad_sup_norm < 1e-6);
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(f.precision).eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("the mode is a local maximum of the generalized likelihood") {
  const SiteData d = gev_record("B", GevParams{50.0, 10.0, -0.05, 0.0}, 60, 1950, 3);
  const SiteFit f = fit_site(d);
  REQUIRE(f.converged());
  const double at = generalized_loglik(LinkedParams::from(f.eta_hat), d, true);
  CHECK(at == doctest::Approx(f.log_lik).epsilon(1e-12));
  for (int k = 0; k < 4; ++k) {
    Eigen::VectorXd x = f.eta_hat;
    x(k) += k == 3 ? 1e-4 : 1e-2;
    CHECK(generalized_loglik(LinkedParams::from(x), d, true) < at);
  }
}

TEST_CASE("stationary fits have three parameters") {
  const SiteData d = gev_record("C", GevParams{20.0, 5.0, 0.0, 0.0}, 50, 1960, 8);
  SiteFitOptions o;
  o.trend = false;
  const SiteFit f = fit_site(d, o);
  REQUIRE(f.converged());
  CHECK(f.eta_hat.size() == 3);
  CHECK(f.precision.rows() == 3);
}

TEST_CASE("short and constant records are flagged, not thrown") {
  const SiteData shortrec = gev_record("S", GevParams{20.0, 5.0, 0.0, 0.0}, 6, 1960, 1);
  CHECK(fit_site(shortrec).status == FitStatus::kTooShort);

  SiteData flat;
  flat.site_id = "F";
  for (int t = 0; t < 30; ++t) {
    flat.years.push_back(1970 + t);
    flat.maxima.push_back(12.5);
  }
  const SiteFit f = fit_site(flat);
  CHECK(f.status == FitStatus::kDegenerate);
  CHECK_FALSE(f.message.empty());
}

TEST_CASE("generalized likelihood leaves the support as -inf") {
  const SiteData d = gev_record("D", GevParams{20.0, 5.0, 0.0, 0.0}, 30, 1960, 2);
  // Strongly negative shape puts an upper end point below the largest maximum.
  const LinkedParams lp{std::log(20.0), std::log(0.05), shape_link_h(-0.45), 0.0};
  CHECK(generalized_loglik(lp, d, true) == -std::numeric_limits<double>::infinity());
  SiteData bad = d;
  bad.maxima[3] = -1.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("fits are deterministic and independent of the thread count") {
  std::vector<SiteData> sites;
  for (int i = 0; i < 8; ++i)
    sites.push_back(gev_record("S" + std::to_string(i), GevParams{30.0 + i, 8.0, 0.05, 0.001}, 40, 1970, 100 + i));
  SiteFitOptions one, many;
  many.threads = 3;
  const auto a = fit_all_sites(sites, one);
  const auto b = fit_all_sites(sites, many);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    CHECK(a[i].site_id == sites[i].site_id);
    CHECK(a[i].eta_hat == b[i].eta_hat);
    CHECK(a[i].precision == b[i].precision);
  }
}

TEST_CASE("eigenvalue clipping repairs an indefinite Hessian") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 2.0, 2.0, 1.0;
  CHECK(optimize::clip_to_pd(m, 1e-6));
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff() >= 1e-6 * 0.999);
  Eigen::MatrixXd ok = Eigen::MatrixXd::Identity(3, 3);
  CHECK_FALSE(optimize::clip_to_pd(ok, 1e-6));
}

TEST_CASE("Nelder-Mead and Newton find a quadratic minimum") {
  const optimize::Objective f = [](const Eigen::VectorXd& x) {
    return (x(0) - 1.0) * (x(0) - 1.0) + 10.0 * (x(1) + 2.0) * (x(1) + 2.0);
  };
  const auto r = optimize::nelder_mead(f, Eigen::Vector2d(0, 0), Eigen::Vector2d(0.5, 0.5));
  const auto p = optimize::newton_polish(f, r.x, Eigen::Vector2d(1, 1));
  CHECK(p.converged);
  CHECK(p.x(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(p.x(1) == doctest::Approx(-2.0).epsilon(1e-8));
  const Eigen::MatrixXd h = optimize::fd_hessian(f, p.x, Eigen::Vector2d(1e-4, 1e-4));
  CHECK(h(0, 0) == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(h(1, 1) == doctest::Approx(20.0).epsilon(1e-5));
  CHECK(std::abs(h(0, 1)) < 1e-5);
}
