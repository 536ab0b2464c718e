#include "maxsmooth/copula.hpp"
#include "maxsmooth/latent_model.hpp"
#include "maxsmooth/simulator.hpp"
#include "maxsmooth/site_ml.hpp"
#include "maxsmooth/spde.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace maxsmooth;

namespace {

// One paper-like data set shared by every benchmark.
const SimulatedData& data() {
  static const SimulatedData d = simulate_scenario(paper_like_scenario(2021));
  return d;
}

struct Prepared {
  FittedModel fitted;
  Eigen::VectorXd theta;
};

const Prepared& prepared() {
  static const Prepared p = [] {
    const auto& d = data();
    InferenceInput in;
    in.spec.trend = true;
    in.spec[Param::kPsi] = {{"AREA", "SAAR", "BFIHOST"}, true};
    in.spec[Param::kTau] = {{"SAAR", "BFIHOST"}, true};
    in.spec[Param::kPhi] = {{}, false};
    in.spec[Param::kGamma] = {{}, false};
    in.fits = fit_all_sites(d.sites);
    in.covariates = d.covariates;
    in.coords = d.descriptors.coords;
    in.mesh = d.mesh;
    mcmc::Options o;
    o.chains = 1;
    o.iterations = 200;
    o.keep_per_chain = 10;
    Prepared out{run_inference(in, o), {}};
    out.theta = initial_theta(*out.fitted.design, *out.fitted.pseudo);
    return out;
  }();
  return p;
}

void BM_GevLogPdf(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<double> y(1000);
  for (auto& v : y) v = gev_sample(rng, 100.0, 30.0, 0.1);
  for (auto _ : state) {
    double s = 0.0;
    for (double v : y) s += gev_log_pdf(v, 100.0, 30.0, 0.1);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(y.size()));
}
BENCHMARK(BM_GevLogPdf);

void BM_FitSite(benchmark::State& state) {
  const SiteData& s = data().sites[0];
  SiteFitOptions o;
  o.trend = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(fit_site(s, o));
}
BENCHMARK(BM_FitSite)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SpdePrecision(benchmark::State& state) {
  const SpdeField f(data().mesh);
  for (auto _ : state) benchmark::DoNotOptimize(spde_precision(f, 200.0, 0.3));
}
BENCHMARK(BM_SpdePrecision)->Unit(benchmark::kMicrosecond);

void BM_MarginalLikelihood(benchmark::State& state) {
  const auto& p = prepared();
  LatentModel model(p.fitted.design, p.fitted.pseudo);
  for (auto _ : state) benchmark::DoNotOptimize(model.log_likelihood(p.theta));
}
BENCHMARK(BM_MarginalLikelihood)->Unit(benchmark::kMillisecond);

void BM_MarginalLikelihoodJoint(benchmark::State& state) {
  const auto& p = prepared();
  LatentModel model(p.fitted.design, p.fitted.pseudo);
  for (auto _ : state) benchmark::DoNotOptimize(model.log_likelihood_joint(p.theta));
}
BENCHMARK(BM_MarginalLikelihoodJoint)->Unit(benchmark::kMillisecond);

void BM_SampleLatent(benchmark::State& state) {
  const auto& p = prepared();
  LatentModel model(p.fitted.design, p.fitted.pseudo);
  std::mt19937_64 rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(model.sample_latent(p.theta, 100, rng));
}
BENCHMARK(BM_SampleLatent)->Unit(benchmark::kMillisecond);

void BM_RankReorder(benchmark::State& state) {
  const int sites = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  Eigen::MatrixXd h(sites, 34), s(sites, 34);
  for (Eigen::Index k = 0; k < h.size(); ++k) {
    h(k) = z(rng);
    s(k) = z(rng);
  }
  const HistoricalBlock hist = make_historical_block(std::vector<std::string>(static_cast<std::size_t>(sites), "S"),
                                                     std::vector<int>(34, 0), h);
  for (auto _ : state) benchmark::DoNotOptimize(rank_reorder(hist, s));
}
BENCHMARK(BM_RankReorder)->Arg(10)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
