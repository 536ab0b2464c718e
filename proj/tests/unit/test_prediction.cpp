#include "maxsmooth/error.hpp"
#include "maxsmooth/prediction.hpp"
#include "records.hpp"
#include "small_model.hpp"

#include <doctest.h>

#include <cmath>

using namespace maxsmooth;

TEST_CASE("return period probability") {
  CHECK(return_period_prob(100.0) == doctest::Approx(0.99));
  CHECK(return_period_prob(2.0) == 0.5);
  CHECK_THROWS_AS((void)return_period_prob(1.0), InputError);
}

TEST_CASE("summaries") {
  std::vector<double> x;
  for (int i = 0; i <= 1000; ++i) x.push_back(i);
  const Summary s = summarize(x);
  CHECK(s.mean == doctest::Approx(500.0));
  CHECK(s.lower == doctest::Approx(25.0));
  CHECK(s.upper == doctest::Approx(975.0));
}

TEST_CASE("return levels are per-draw quantiles") {
  const LinkedParams a = link_forward(GevParams{100.0, 30.0, 0.1, 0.0});
  const LinkedParams b = link_forward(GevParams{120.0, 20.0, -0.1, 0.004});
  const std::vector<LinkedParams> lp{a, b};
  const auto q = return_level_draws(lp, 100.0, 1975.0);
  CHECK(q[0] == doctest::Approx(275.2292871388969).epsilon(1e-10));
  CHECK(q[1] == doctest::Approx(gev_quantile(0.99, 120.0, 20.0, -0.1)).epsilon(1e-10));
  const auto later = return_level_draws(lp, 100.0, 2000.0);
  CHECK(later[1] == doctest::Approx(gev_quantile(0.99, 132.0, 20.0, -0.1)).epsilon(1e-10));

  const std::vector<double> periods{2.0, 10.0, 100.0};
  const ReturnLevelCurve c = return_level_curve(lp, periods, 1975.0);
  CHECK(c.mean.size() == 3);
  CHECK(c.mean[0] < c.mean[1]);
  CHECK(c.mean[1] < c.mean[2]);
  CHECK(c.mean[2] == doctest::Approx(0.5 * (q[0] + q[1])));
}

TEST_CASE("order statistic band contains the expected quantiles") {
  const GevParams p{100.0, 30.0, 0.1, 0.0};
  const auto band = order_stat_band(50, p);
  REQUIRE(band.size() == 50);
  for (int k = 0; k < 50; ++k) {
    const double mid = gev_quantile((k + 1.0) / 51.0, 100.0, 30.0, 0.1);
    CHECK(band[static_cast<std::size_t>(k)].lower < mid);
    CHECK(band[static_cast<std::size_t>(k)].upper > mid);
    if (k > 0) CHECK(band[static_cast<std::size_t>(k)].lower > band[static_cast<std::size_t>(k - 1)].lower);
  }
}

TEST_CASE("detrending divides by the trend factor") {
  SiteData d;
  d.site_id = "A";
  d.years = {1975, 2000};
  d.maxima = {10.0, 22.0};
  const auto y = detrend(d, 0.004);
  CHECK(y[0] == 10.0);
  CHECK(y[1] == doctest::Approx(20.0));
}

TEST_CASE("ungauged prediction and effects on a fitted small model") {
  const auto sm = maxsmooth::testing::small_model(2, true, 12);
  const LatentModel model(sm.design, sm.pd);
  mcmc::Options o;
  o.chains = 1;
  o.iterations = 1000;
  o.keep_per_chain = 200;
  const PosteriorDraws d = sample_posterior(model, o);

  UngaugedSite u;
  u.id = "U";
  u.coords = sm.mesh->nodes[0] * 0.5 + sm.mesh->nodes[1] * 0.5;
  u.names = {"x1", "x2"};
  u.covariates = Eigen::Vector2d(0.5, -0.5);
  const auto lp = predict_ungauged(d, *sm.design, u, 3);
  REQUIRE(lp.size() == 200u);
  CHECK(predict_ungauged(d, *sm.design, u, 3)[7].psi == lp[7].psi);
  // Mean of psi tracks the linear predictor plus the projected field.
  double m = 0.0;
  for (const auto& p : lp) m += p.psi / 200.0;
  CHECK(std::isfinite(m));

  u.coords = Point2(1e6, 1e6);
  CHECK_THROWS_AS(predict_ungauged(d, *sm.design, u, 3), InputError);

  const auto eff = effect_table(d, *sm.design, 100.0, 1975.0);
  REQUIRE(eff.size() == 3);  // x1, x2, spatial_psi
  CHECK(eff[0].name == "x1");
  CHECK(eff[2].name == "spatial_psi");
  for (const auto& e : eff) {
    CHECK(e.q1 > 0.0);
    CHECK(e.q3 > 0.0);
  }
}

TEST_CASE("posterior predictive draws follow the GEV") {
  const std::vector<LinkedParams> lp(10, link_forward(GevParams{50.0, 10.0, 0.0, 0.0}));
  const auto y = posterior_predictive(lp, 1975.0, 2000, 1);
  REQUIRE(y.size() == 20000u);
  int below = 0;
  const double med = gev_quantile(0.5, 50.0, 10.0, 0.0);
  for (double v : y) below += v < med;
  CHECK(below / 20000.0 == doctest::Approx(0.5).epsilon(0.03));
  CHECK(posterior_predictive(lp, 1975.0, 2000, 1) == y);
}
