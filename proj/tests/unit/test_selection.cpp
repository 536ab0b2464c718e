#include "maxsmooth/error.hpp"
#include "maxsmooth/selection.hpp"
#include "small_model.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace maxsmooth;

namespace {

// Scalar pseudo data psi_i = 1 + 0.8 x1 + 0.3 x2 + noise; x3 is pure noise.
struct Linear {
  PseudoData pd;
  CovariateTable cov;
  std::vector<Point2> xy;
};

Linear linear_data(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  Linear l;
  l.cov.names = {"x1", "x2", "x3"};
  l.cov.values.resize(n, 3);
  l.pd.params = {Param::kPsi};
  l.pd.eta_hat.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) l.cov.values(i, c) = z(rng);
    l.pd.site_ids.push_back("S" + std::to_string(i));
    l.pd.blocks.push_back(Eigen::MatrixXd::Constant(1, 1, 400.0));
    l.pd.eta_hat(i) = 1.0 + 0.8 * l.cov.values(i, 0) + 0.3 * l.cov.values(i, 1) + 0.1 * z(rng);
    l.xy.emplace_back(u(rng), u(rng));
  }
  return l;
}

}  // namespace

TEST_CASE("diagonalize keeps marginal variances") {
  PseudoData pd;
  pd.params = {Param::kPsi, Param::kTau};
  pd.site_ids = {"A", "B"};
  Eigen::Matrix2d q;
  q << 4.0, 1.0, 1.0, 2.0;
  pd.blocks = {q, Eigen::Matrix2d::Identity()};
  pd.eta_hat = Eigen::Vector4d(1, 2, 3, 4);
  const PseudoData tau = diagonalize(pd, Param::kTau);
  CHECK(tau.params == std::vector<Param>{Param::kTau});
  CHECK(tau.eta_hat(0) == 3.0);
  CHECK(tau.eta_hat(1) == 4.0);
  // (Q^-1)_22 = 4 / 7.
  CHECK(tau.blocks[0](0, 0) == doctest::Approx(7.0 / 4.0));
  CHECK(tau.blocks[1](0, 0) == doctest::Approx(1.0));
  CHECK(block_marginal_variances(q)(0) == doctest::Approx(2.0 / 7.0));
}

TEST_CASE("balanced folds") {
  const auto f = assign_folds(23, 5, 1);
  std::vector<int> count(5, 0);
  for (int k : f) ++count[static_cast<std::size_t>(k)];
  CHECK(*std::max_element(count.begin(), count.end()) - *std::min_element(count.begin(), count.end()) <= 1);
  CHECK(assign_folds(23, 5, 1) == f);
  CHECK(assign_folds(23, 5, 2) != f);
}

TEST_CASE("single-parameter fit recovers coefficients") {
  const Linear l = linear_data(80, 3);
  SubModelSpec sub{{"x1", "x2"}, false};
  SingleFitOptions o;
  o.seed = 5;
  const SingleFit f = fit_single_param(l.pd, l.cov, sub, nullptr, SpMat(), o);
  CHECK(f.columns == std::vector<std::string>{"intercept", "x1", "x2"});
  CHECK(f.beta(0) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(f.beta(1) == doctest::Approx(0.8).epsilon(0.05));
  CHECK(f.beta(2) == doctest::Approx(0.3).epsilon(0.15));
}

TEST_CASE("forward selection orders covariates by strength") {
  const Linear l = linear_data(80, 4);
  SelectionTask t;
  t.candidates = {"x3", "x2", "x1"};
  t.tracks = {false};
  t.n_folds = 5;
  t.fit.iterations = 600;
  t.fit.keep = 30;
  const SelectionTrace trace = forward_select(t, l.pd, l.cov, l.xy, nullptr);
  REQUIRE(trace.tracks.size() == 1);
  const auto& steps = trace.tracks[0].steps;
  REQUIRE(steps.size() == 4);
  CHECK(steps[0].added.empty());
  CHECK(steps[1].added == "x1");
  CHECK(steps[2].added == "x2");
  CHECK(steps[1].error < steps[0].error);
  CHECK(steps[2].error < steps[1].error);
  CHECK(steps[1].fold_errors.size() == 5);
  const SelectionChoice c = choose_model(trace);
  CHECK(c.covariates == std::vector<std::string>{"x1", "x2"});
  CHECK_FALSE(c.spatial);
}

TEST_CASE("choice rule: smallest model within tolerance, spatial only for a clear gain") {
  SelectionTrace tr;
  SelectionTrack iid{false, {}}, sp{true, {}};
  iid.steps = {{0, "", 1.0, 0.1, {}}, {1, "a", 0.500, 0.1, {}}, {2, "b", 0.498, 0.1, {}}};
  sp.steps = {{0, "", 0.9, 0.1, {}}, {1, "a", 0.490, 0.1, {}}};
  tr.tracks = {iid, sp};
  SelectionChoice c = choose_model(tr, 0.01, 0.03);
  CHECK(c.covariates == std::vector<std::string>{"a"});
  CHECK_FALSE(c.spatial);
  tr.tracks[1].steps[1].error = 0.40;
  c = choose_model(tr, 0.01, 0.03);
  CHECK(c.spatial);
}

TEST_CASE("selection input errors") {
  const Linear l = linear_data(10, 1);
  SelectionTask t;
  t.candidates = {};
  CHECK_THROWS_AS(forward_select(t, l.pd, l.cov, l.xy, nullptr), ConfigError);
  t.candidates = {"x1", "x1"};
  CHECK_THROWS_AS(forward_select(t, l.pd, l.cov, l.xy, nullptr), ConfigError);
  t.candidates = {"x1"};
  t.n_folds = 8;
  t.tracks = {false};
  CHECK_THROWS_AS(forward_select(t, l.pd, l.cov, l.xy, nullptr), ConfigError);
}
