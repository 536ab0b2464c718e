#include "maxsmooth/simulator.hpp"

#include "maxsmooth/error.hpp"
#include "maxsmooth/stats.hpp"

#include <cmath>
#include <ostream>
#include <random>

namespace maxsmooth {

void Scenario::validate() const {
  if (n_sites < 3) throw InputError("scenario needs at least three sites");
  if (!(width > 0.0) || !(height > 0.0)) throw InputError("scenario box must have positive size");
  if (min_length < 1 || max_length < min_length) throw InputError("scenario record lengths are invalid");
  const auto n_beta = covariates.size() + 1;
  for (int k = 0; k < 4; ++k) {
    const auto& t = truth[static_cast<std::size_t>(k)];
    if (k == 3 && !trend) continue;
    if (t.beta.size() != n_beta)
      throw InputError(std::string("scenario ") + param_name(static_cast<Param>(k)) +
                       " needs an intercept and one coefficient per covariate");
    if (!(t.sigma_eps >= 0.0)) throw InputError("nugget sd must be nonnegative");
    if (t.spatial && (!(t.s >= 0.0) || !(t.rho > 0.0))) throw InputError("spatial truth needs s >= 0 and rho > 0");
  }
}

namespace {

double raw_descriptor(const std::string& name, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (name == "AREA") return std::clamp(std::exp(4.5 + 1.3 * n(rng)), 1.63, 9930.8);
  if (name == "SAAR") return std::exp(7.0 + 0.3 * n(rng));
  if (name == "FARL") return 0.8 + 0.2 * u(rng);
  if (name == "BFIHOST") return 0.2 + 0.75 * u(rng);
  if (name == "FPEXT") return 0.01 + 0.19 * u(rng);
  if (name == "URBEXT") return std::exp(-4.0 + 1.2 * n(rng));
  if (name == "ASPBAR") return 360.0 * u(rng);
  if (name == "SPRHOST") return 10.0 + 45.0 * u(rng);
  if (name == "PROPWET") return 0.25 + 0.45 * u(rng);
  if (name == "ASPVAR") return 0.05 + 0.45 * u(rng);
  return std::exp(n(rng));
}

}  // namespace

SimulatedData simulate_scenario(const Scenario& s) {
  s.validate();
  SimulatedData d;
  d.scenario = s;
  std::mt19937_64 rng(stats::mix_seed(s.seed, 0x51aULL));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> norm(0.0, 1.0);
  const int j = s.n_sites;

  // Site layout with a minimum spacing.
  const double min_gap = 0.01 * std::sqrt(s.width * s.height / j);
  std::vector<Point2> xy;
  while (static_cast<int>(xy.size()) < j) {
    const Point2 p(s.width * unif(rng), s.height * unif(rng));
    bool ok = true;
    for (const auto& q : xy) ok = ok && (p - q).norm() > min_gap;
    if (ok) xy.push_back(p);
  }

  d.descriptors.names = s.covariates;
  d.descriptors.coords = xy;
  d.descriptors.values.resize(j, static_cast<Eigen::Index>(s.covariates.size()));
  for (int i = 0; i < j; ++i) {
    d.descriptors.site_ids.push_back("S" + std::string(i < 9 ? "00" : (i < 99 ? "0" : "")) + std::to_string(i + 1));
    for (std::size_t c = 0; c < s.covariates.size(); ++c)
      d.descriptors.values(i, static_cast<Eigen::Index>(c)) = raw_descriptor(s.covariates[c], rng);
  }
  if (!s.covariates.empty()) {
    const CovariateTable tr = transform_descriptors(d.descriptors);
    d.covariates = Standardizer::fit(tr).apply(tr);
  } else {
    d.covariates.values.resize(j, 0);
  }

  bool spatial = false;
  for (int k = 0; k < 4; ++k) spatial = spatial || (s.truth[static_cast<std::size_t>(k)].spatial && (k < 3 || s.trend));
  SpMat projector;
  if (spatial) {
    d.mesh = std::make_shared<const Mesh>(build_mesh(xy, s.mesh));
    projector = make_projector(*d.mesh, xy);
  }

  d.eta = Eigen::MatrixXd::Zero(j, 4);
  d.eps = Eigen::MatrixXd::Zero(j, 4);
  for (int k = 0; k < 4; ++k) {
    if (k == 3 && !s.trend) continue;
    const auto& t = s.truth[static_cast<std::size_t>(k)];
    Eigen::VectorXd v = Eigen::VectorXd::Constant(j, t.beta[0]);
    for (std::size_t c = 0; c < s.covariates.size(); ++c)
      v += t.beta[c + 1] * d.covariates.values.col(static_cast<Eigen::Index>(c));
    if (t.spatial && t.s > 0.0) {
      const SpdeField field(d.mesh);
      SparseCholesky chol;
      if (!chol.factorize(field.precision(t.rho, t.s))) throw NumericalError("field precision is not positive definite");
      Eigen::VectorXd z(field.n_nodes());
      for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = norm(rng);
      d.fields[static_cast<std::size_t>(k)] = chol.sample_from_noise(z);
      v += projector * d.fields[static_cast<std::size_t>(k)];
    } else if (t.spatial) {
      d.fields[static_cast<std::size_t>(k)] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.mesh->n_nodes()));
    }
    for (int i = 0; i < j; ++i) d.eps(i, k) = t.sigma_eps * norm(rng);
    d.eta.col(k) = v + d.eps.col(k);
  }

  std::uniform_int_distribution<int> len(s.min_length, s.max_length);
  for (int i = 0; i < j; ++i) {
    const LinkedParams lp = LinkedParams::from(d.eta.row(i).transpose());
    const GevParams p = link_inverse(lp);
    d.params.push_back(p);
    SiteData site;
    site.site_id = d.descriptors.site_ids[static_cast<std::size_t>(i)];
    const int n = len(rng);
    for (int y = s.last_year - n + 1; y <= s.last_year; ++y) {
      double v = gev_sample(rng, p, y);
      for (int tries = 0; v <= 0.0 && tries < 1000; ++tries) v = gev_sample(rng, p, y);
      if (v <= 0.0) throw NumericalError("scenario generates nonpositive maxima at " + site.site_id);
      site.years.push_back(y);
      site.maxima.push_back(v);
    }
    d.sites.push_back(std::move(site));
  }
  return d;
}

Scenario paper_like_scenario(std::uint64_t seed) {
  Scenario s;
  s.name = "paper_like";
  s.seed = seed;
  s.covariates = {"AREA", "SAAR", "BFIHOST", "URBEXT"};
  s.truth[0] = SubTruth{{4.0, 0.9, 0.35, -0.2, 0.0}, 0.247, true, 0.311, 250.0};
  s.truth[1] = SubTruth{{-1.2, -0.05, -0.1, 0.08, 0.0}, 0.133, true, 0.182, 500.0};
  s.truth[2] = SubTruth{{0.0, 0.0, 0.0, 0.0, 0.0}, 0.05, false, 0.0, 1.0};
  s.truth[3] = SubTruth{{trend_link_d(0.0015), 0.0, 0.0, 0.0, 0.0}, 0.0005, false, 0.0, 1.0};
  return s;
}

void write_truth(std::ostream& os, const SimulatedData& d) {
  os << "station,x,y,mu,sigma,xi,delta,psi,tau,phi,gamma,eps_psi,eps_tau,eps_phi,eps_gamma\n";
  for (std::size_t i = 0; i < d.sites.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto& p = d.params[i];
    os << d.sites[i].site_id << ',' << format_double(d.descriptors.coords[i].x()) << ','
       << format_double(d.descriptors.coords[i].y()) << ',' << format_double(p.mu) << ',' << format_double(p.sigma) << ','
       << format_double(p.xi) << ',' << format_double(p.delta);
    for (int k = 0; k < 4; ++k) os << ',' << format_double(d.eta(r, k));
    for (int k = 0; k < 4; ++k) os << ',' << format_double(d.eps(r, k));
    os << '\n';
  }
}

}  // namespace maxsmooth
