#include "run.hpp"

#include "maxsmooth/copula.hpp"
#include "maxsmooth/error.hpp"
#include "maxsmooth/evaluation.hpp"
#include "maxsmooth/io.hpp"
#include "maxsmooth/prediction.hpp"
#include "maxsmooth/selection.hpp"
#include "maxsmooth/simulator.hpp"
#include "maxsmooth/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace maxsmooth::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string need(const std::string& path, const char* key) {
  if (path.empty()) throw ConfigError(std::string("data.") + key + " is required for this command");
  return path;
}

template <class F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

std::string fmt(double v) { return format_double(v); }

std::vector<std::string> ids_of(const std::vector<SiteFit>& fits) {
  std::vector<std::string> ids;
  for (const auto& f : fits) ids.push_back(f.site_id);
  return ids;
}

std::vector<std::string> model_columns(const ModelSpec& spec) {
  std::vector<std::string> cols;
  for (Param p : spec.params())
    for (const auto& c : spec[p].covariates)
      if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
  return cols;
}

// Empty `columns` gives a table without columns (the library reads empty as "all").
CovariateTable transformed(const DescriptorTable& t, const std::vector<std::string>& columns) {
  if (!columns.empty()) return transform_descriptors(t, columns);
  CovariateTable c;
  c.values.resize(static_cast<Eigen::Index>(t.site_ids.size()), 0);
  return c;
}

DescriptorTable load_checked_descriptors(Run& run, const std::string& path) {
  run.input(path);
  DescriptorTable t = load_descriptors(path);
  t.validate();
  return t;
}

// Converged fits only; the others go to the manifest notes.
std::vector<SiteFit> load_converged_fits(Run& run) {
  const fs::path p = run.config().site_fits_path();
  run.input(p);
  std::ifstream is(p);
  if (!is) throw DataError("cannot open " + p.string());
  std::vector<SiteFit> out;
  for (auto& f : parse_site_fits(is, p.string())) {
    if (f.converged()) {
      out.push_back(std::move(f));
    } else {
      run.note("excluded " + f.site_id + ": " + to_string(f.status) + (f.message.empty() ? "" : " (" + f.message + ")"));
    }
  }
  if (out.size() < 3) throw DataError("fewer than three converged site fits in " + p.string());
  return out;
}

std::shared_ptr<const Mesh> read_mesh_file(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw DataError("cannot open " + p.string());
  return std::make_shared<const Mesh>(read_mesh(is));
}

// Everything `fit` leaves behind, with the design rebuilt from it.
struct FitArtifacts {
  ModelSpec spec;
  PosteriorDraws draws;
  Standardizer standardizer;
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const Design> design;
};

FitArtifacts load_fit(Run& run) {
  const RunConfig& cfg = run.config();
  const fs::path dir = cfg.fit_dir();
  FitArtifacts a;

  const fs::path model_path = dir / "model.json";
  run.input(model_path);
  json model;
  try {
    model = json::parse(read_file(model_path.string()));
    a.spec = model_from_json(model.at("model"));
  } catch (const json::exception& e) {
    throw DataError(model_path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw DataError(model_path.string() + ": " + e.what());
  }

  const fs::path draws_path = dir / "draws.csv";
  run.input(draws_path);
  {
    std::ifstream is(draws_path);
    if (!is) throw DataError("cannot open " + draws_path.string());
    a.draws = parse_draws(is, draws_path.string());
  }
  const fs::path std_path = dir / "standardizer.csv";
  run.input(std_path);
  {
    std::ifstream is(std_path);
    if (!is) throw DataError("cannot open " + std_path.string());
    a.standardizer = parse_standardizer(is, std_path.string());
  }

  const DescriptorTable desc = load_checked_descriptors(run, need(cfg.data.descriptors, "descriptors")).select(a.draws.site_ids);
  const CovariateTable cov = a.standardizer.apply(transformed(desc, a.standardizer.names));
  std::shared_ptr<const SpdeField> field;
  SpMat projector;
  if (a.spec.any_spatial()) {
    run.input(dir / "mesh.txt");
    a.mesh = read_mesh_file(dir / "mesh.txt");
    field = std::make_shared<const SpdeField>(a.mesh);
    projector = make_projector(*a.mesh, desc.coords);
  }
  a.design = std::make_shared<const Design>(assemble_design(a.spec, cov, field, projector));
  if (a.design->nu_names() != a.draws.nu_names || a.design->theta_names() != a.draws.theta_names)
    throw DataError("draws in " + dir.string() + " do not match the rebuilt design");
  return a;
}

struct Target {
  std::string id;
  bool gauged = true;
  std::vector<LinkedParams> lp;
};

std::vector<Target> prediction_targets(Run& run, const FitArtifacts& a) {
  const RunConfig& cfg = run.config();
  std::vector<Target> out;
  const auto& wanted = cfg.prediction.sites.empty() ? a.draws.site_ids : cfg.prediction.sites;
  for (const auto& id : wanted) {
    int idx;
    try {
      idx = a.draws.site_index(id);
    } catch (const InputError&) {
      throw ConfigError("prediction.sites: " + id + " is not a gauged site of the fit");
    }
    out.push_back({id, true, site_draws(a.draws, idx)});
  }
  if (!cfg.data.ungauged.empty()) {
    const DescriptorTable u = load_checked_descriptors(run, cfg.data.ungauged);
    const CovariateTable cov = a.standardizer.apply(transformed(u, a.standardizer.names));
    for (std::size_t i = 0; i < u.site_ids.size(); ++i) {
      UngaugedSite s;
      s.id = u.site_ids[i];
      s.coords = u.coords[i];
      s.names = cov.names;
      s.covariates = cov.values.row(static_cast<Eigen::Index>(i)).transpose();
      out.push_back({s.id, false, predict_ungauged(a.draws, *a.design, s, cfg.seed)});
    }
  }
  return out;
}

std::string theta_summary(const PosteriorDraws& d) {
  std::ostringstream os;
  os << "name,mean,median,lower,upper,rhat,ess\n";
  for (int k = 0; k < static_cast<int>(d.theta_names.size()); ++k) {
    std::vector<double> col(d.theta.col(k).data(), d.theta.col(k).data() + d.theta.rows());
    const Summary s = summarize(col);
    os << d.theta_names[static_cast<std::size_t>(k)] << ',' << fmt(s.mean) << ',' << fmt(stats::median(col)) << ','
       << fmt(s.lower) << ',' << fmt(s.upper) << ',' << fmt(d.rhat[static_cast<std::size_t>(k)]) << ','
       << fmt(d.ess[static_cast<std::size_t>(k)]) << '\n';
  }
  return os.str();
}

}  // namespace

int cmd_simulate(Run& run) {
  const RunConfig& cfg = run.config();
  Scenario sc = paper_like_scenario(cfg.seed);
  sc.n_sites = cfg.simulate.n_sites;
  sc.trend = cfg.simulate.trend;
  run.progress("simulating " + std::to_string(sc.n_sites) + " sites");
  const SimulatedData sim = simulate_scenario(sc);
  run.write_table("maxima.csv", render([&](std::ostream& os) { write_maxima(os, sim.sites); }));
  run.write_table("descriptors.csv", render([&](std::ostream& os) { write_descriptors(os, sim.descriptors); }));
  run.write_table("truth.csv", render([&](std::ostream& os) { write_truth(os, sim); }));
  run.finish();
  return 0;
}

int cmd_fit_sites(Run& run) {
  const RunConfig& cfg = run.config();
  const std::string path = need(cfg.data.maxima, "maxima");
  run.input(path);
  const auto sites = load_maxima(path);
  run.progress("fitting " + std::to_string(sites.size()) + " sites");
  const auto fits = fit_all_sites(sites, cfg.site_fit);
  int ok = 0;
  for (const auto& f : fits) {
    if (f.converged()) {
      ++ok;
    } else {
      run.note(f.site_id + ": " + to_string(f.status) + (f.message.empty() ? "" : " (" + f.message + ")"));
    }
  }
  run.note(std::to_string(ok) + " of " + std::to_string(fits.size()) + " site fits converged");
  run.write_table("site_fits.csv", render([&](std::ostream& os) { write_site_fits(os, fits); }));
  run.finish();
  return 0;
}

int cmd_select(Run& run) {
  const RunConfig& cfg = run.config();
  const auto fits = load_converged_fits(run);
  const PseudoData pd = make_pseudo_data(fits, cfg.site_fit.trend);
  const DescriptorTable all = load_checked_descriptors(run, need(cfg.data.descriptors, "descriptors"));
  const auto candidates = cfg.selection.candidates.empty() ? all.names : cfg.selection.candidates;

  std::ostringstream trace_os;
  trace_os << "target,track,step,added,covariates,error,se\n";
  json choice;
  choice["config_hash"] = cfg.hash;
  choice["seed"] = cfg.seed;
  for (Param target : cfg.selection.targets) {
    if (std::find(pd.params.begin(), pd.params.end(), target) == pd.params.end())
      throw ConfigError(std::string("selection target ") + param_name(target) + " is not in the site fits");
    const PseudoData single = diagonalize(pd, target);
    for (const auto& e : single.excluded) run.note(std::string(param_name(target)) + " excluded " + e);
    const DescriptorTable desc = all.select(single.site_ids);
    const CovariateTable raw = transformed(desc, candidates);
    const CovariateTable cov = Standardizer::fit(raw).apply(raw);

    SelectionTask task;
    task.target = target;
    task.candidates = candidates;
    task.tracks = cfg.selection.tracks;
    task.n_folds = cfg.selection.folds;
    task.max_steps = cfg.selection.max_steps;
    task.seed = cfg.seed;
    task.threads = cfg.threads;
    task.fit.iterations = cfg.selection.iterations;
    task.fit.keep = cfg.selection.keep;
    task.fit.seed = cfg.seed;
    task.fit.beta_sd = cfg.model.beta_sd;
    task.fit.pc = cfg.model.pc;
    std::shared_ptr<const Mesh> mesh;
    if (std::find(task.tracks.begin(), task.tracks.end(), true) != task.tracks.end())
      mesh = std::make_shared<const Mesh>(build_mesh(desc.coords, cfg.mesh));
    run.progress(std::string("forward selection for ") + param_name(target));
    const SelectionTrace trace = forward_select(task, single, cov, desc.coords, mesh);
    for (const auto& track : trace.tracks) {
      for (const auto& st : track.steps) {
        std::string joined;
        for (const auto& c : track.covariates_at(st.step)) joined += (joined.empty() ? "" : ";") + c;
        trace_os << param_name(target) << ',' << (track.spatial ? "spatial" : "iid") << ',' << st.step << ','
                 << st.added << ',' << joined << ',' << fmt(st.error) << ',' << fmt(st.se) << '\n';
      }
    }
    const SelectionChoice c = choose_model(trace, cfg.selection.tolerance, cfg.selection.spatial_gain);
    choice["choices"][param_name(target)] = {{"covariates", c.covariates}, {"spatial", c.spatial}, {"error", c.error}};
  }
  run.write_table("selection_trace.csv", trace_os.str());
  run.write("selection.json", choice.dump(2) + "\n");
  run.finish();
  return 0;
}

int cmd_fit(Run& run) {
  const RunConfig& cfg = run.config();
  if (cfg.model.trend != cfg.site_fit.trend) throw ConfigError("model.trend and site_fit.trend must agree");
  const auto fits = load_converged_fits(run);
  const DescriptorTable desc =
      load_checked_descriptors(run, need(cfg.data.descriptors, "descriptors")).select(ids_of(fits));
  const CovariateTable raw = transformed(desc, model_columns(cfg.model));
  const Standardizer standardizer = Standardizer::fit(raw);

  InferenceInput in;
  in.spec = cfg.model;
  in.fits = fits;
  in.covariates = standardizer.apply(raw);
  in.coords = desc.coords;
  in.mesh_options = cfg.mesh;
  std::string mesh_text;
  if (cfg.model.any_spatial()) {
    // The mesh is read back from its text form so that later commands rebuild the same design.
    mesh_text = render([&](std::ostream& os) { write_mesh(os, build_mesh(desc.coords, cfg.mesh)); });
    std::istringstream is(mesh_text);
    in.mesh = std::make_shared<const Mesh>(read_mesh(is));
    run.progress("mesh with " + std::to_string(in.mesh->n_nodes()) + " nodes");
  }
  run.progress("sampling " + std::to_string(cfg.mcmc.chains) + " chains of " + std::to_string(cfg.mcmc.iterations) +
               " iterations");
  const FittedModel fm = run_inference(in, cfg.mcmc);
  if (fm.draws.rhat_warning) run.note("split R-hat above 1.05 for at least one hyperparameter");
  for (std::size_t k = 0; k < fm.draws.acceptance.size(); ++k)
    run.note("chain " + std::to_string(k) + " acceptance " + fmt(fm.draws.acceptance[k]));

  json model;
  model["config_hash"] = cfg.hash;
  model["seed"] = cfg.seed;
  model["model"] = model_to_json(cfg.model);
  model["sites"] = fm.draws.site_ids;
  model["status"] = fm.draws.status();

  run.write("model.json", model.dump(2) + "\n");
  if (!mesh_text.empty()) run.write_table("mesh.txt", mesh_text);
  run.write_table("standardizer.csv", render([&](std::ostream& os) { write_standardizer(os, standardizer); }));
  run.write_table("theta_summary.csv", theta_summary(fm.draws));
  run.write_table("draws.csv", render([&](std::ostream& os) { write_draws(os, fm.draws); }));
  run.finish();
  return 0;
}

int cmd_predict(Run& run) {
  const RunConfig& cfg = run.config();
  const FitArtifacts a = load_fit(run);
  std::ostringstream os;
  os << "station,gauged,parameter,mean,lower,upper\n";
  for (const auto& t : prediction_targets(run, a)) {
    std::array<std::vector<double>, 8> v;
    for (const auto& lp : t.lp) {
      const GevParams g = link_inverse(lp);
      const double vals[8] = {lp.psi, lp.tau, lp.phi, lp.gamma, g.mu, g.sigma, g.xi, g.delta};
      for (int k = 0; k < 8; ++k) v[static_cast<std::size_t>(k)].push_back(vals[k]);
    }
    static const char* names[8] = {"psi", "tau", "phi", "gamma", "mu", "sigma", "xi", "delta"};
    for (int k = 0; k < 8; ++k) {
      if (!a.spec.trend && (k == 3 || k == 7)) continue;
      const Summary s = summarize(v[static_cast<std::size_t>(k)]);
      os << t.id << ',' << (t.gauged ? 1 : 0) << ',' << names[k] << ',' << fmt(s.mean) << ',' << fmt(s.lower) << ','
         << fmt(s.upper) << '\n';
    }
  }
  std::ostringstream eff;
  eff << "term,q1,q3\n";
  for (const auto& e : effect_table(a.draws, *a.design, cfg.prediction.effect_period, cfg.prediction.year))
    eff << e.name << ',' << fmt(e.q1) << ',' << fmt(e.q3) << '\n';
  run.write_table("site_parameters.csv", os.str());
  run.write_table("effects.csv", eff.str());
  run.finish();
  return 0;
}

int cmd_return_levels(Run& run) {
  const RunConfig& cfg = run.config();
  const FitArtifacts a = load_fit(run);
  std::ostringstream os;
  os << "station,gauged,year,period,mean,lower,upper\n";
  for (const auto& t : prediction_targets(run, a)) {
    const ReturnLevelCurve c = return_level_curve(t.lp, cfg.prediction.periods, cfg.prediction.year);
    for (std::size_t k = 0; k < c.periods.size(); ++k) {
      os << t.id << ',' << (t.gauged ? 1 : 0) << ',' << fmt(c.year) << ',' << fmt(c.periods[k]) << ','
         << fmt(c.mean[k]) << ',' << fmt(c.lower[k]) << ',' << fmt(c.upper[k]) << '\n';
    }
  }
  run.write_table("return_levels.csv", os.str());
  run.finish();
  return 0;
}

int cmd_cv(Run& run) {
  const RunConfig& cfg = run.config();
  if (cfg.cv.variants.empty()) throw ConfigError("cv.variants is empty");
  const std::string mpath = need(cfg.data.maxima, "maxima");
  run.input(mpath);
  CvInput in;
  in.sites = load_maxima(mpath);
  std::vector<std::string> ids;
  for (const auto& s : in.sites) ids.push_back(s.site_id);
  const DescriptorTable desc = load_checked_descriptors(run, need(cfg.data.descriptors, "descriptors")).select(ids);
  in.coords = desc.coords;
  in.covariates = transformed(desc, model_columns(cfg.model));
  in.full = cfg.model;
  in.mesh = cfg.mesh;
  in.mcmc = cfg.cv.mcmc;
  in.site = cfg.site_fit;
  in.samples = cfg.cv.samples;
  in.samples_trend = cfg.cv.samples_trend;
  in.n_eff_time = cfg.cv.n_eff_time;
  in.n_eff_space = cfg.cv.n_eff_space;
  in.seed = cfg.seed;
  run.progress("cross-validating " + std::to_string(cfg.cv.variants.size()) + " variants");
  ScoreMatrix raw;
  const ScoreTable table = run_cv(cfg.cv.plan, cfg.cv.variants, in, &raw);
  for (const auto& n : table.notes) run.note(n);

  std::ostringstream means;
  means << "model,mean_bits,n_scored,n_excluded\n";
  for (std::size_t m = 0; m < table.models.size(); ++m)
    means << table.models[m] << ',' << fmt(table.mean_score[m]) << ',' << table.n_scored[m] << ','
          << table.n_excluded[m] << '\n';
  std::ostringstream obs;
  obs << "station,year";
  for (const auto& m : raw.models) obs << ',' << m;
  obs << '\n';
  for (Eigen::Index r = 0; r < raw.bits.rows(); ++r) {
    obs << raw.site[static_cast<std::size_t>(r)] << ',' << raw.year[static_cast<std::size_t>(r)];
    for (Eigen::Index m = 0; m < raw.bits.cols(); ++m) {
      const double b = raw.bits(r, m);
      obs << ',' << (std::isnan(b) ? std::string("NA") : raw.excluded(r, m) ? std::string("excluded") : fmt(b));
    }
    obs << '\n';
  }
  run.write_table("cv_scores.csv", means.str());
  run.write_table("cv_differences.csv", table.to_text());
  run.write_table("cv_observations.csv", obs.str());
  run.finish();
  return 0;
}

int cmd_aggregate(Run& run) {
  const RunConfig& cfg = run.config();
  const AggregateConfig& ag = cfg.aggregate;
  const FitArtifacts a = load_fit(run);
  const std::string mpath = need(cfg.data.maxima, "maxima");
  run.input(mpath);
  const auto sites = load_maxima(mpath);
  const auto& wanted = ag.sites.empty() ? a.draws.site_ids : ag.sites;
  for (const auto& id : wanted) {
    if (std::find(a.draws.site_ids.begin(), a.draws.site_ids.end(), id) == a.draws.site_ids.end())
      throw ConfigError("aggregate.sites: " + id + " is not a gauged site of the fit");
  }
  std::vector<std::string> excluded;
  const HistoricalBlock hist = build_historical_block(sites, wanted, ag.first_year, ag.last_year, &excluded);
  for (const auto& e : excluded) run.note("aggregate excludes " + e + ": incomplete record");
  if (hist.n_sites() < 2) throw DataError("aggregation needs at least two sites with complete records");

  std::vector<std::vector<LinkedParams>> lp;
  std::vector<double> weights;
  for (const auto& id : hist.site_ids) {
    lp.push_back(site_draws(a.draws, a.draws.site_index(id)));
    const auto it = std::find(wanted.begin(), wanted.end(), id);
    weights.push_back(ag.weights.empty() ? 1.0 : ag.weights[static_cast<std::size_t>(it - wanted.begin())]);
  }
  const SiteSampler sampler = [&](int l, int m, std::mt19937_64& rng) {
    const auto& d = lp[static_cast<std::size_t>(l)];
    std::uniform_int_distribution<std::size_t> pick(0, d.size() - 1);
    std::vector<double> out(static_cast<std::size_t>(m));
    for (auto& v : out) v = gev_sample(rng, link_inverse(d[pick(rng)]), ag.year);
    return out;
  };
  run.progress("growing " + std::to_string(ag.blocks) + " blocks of " + std::to_string(hist.n_years()) + " years");
  const Eigen::MatrixXd reordered = grow_samples(hist, sampler, ag.blocks, cfg.seed, true);
  const Eigen::MatrixXd independent = grow_samples(hist, sampler, ag.blocks, cfg.seed, false);

  std::ostringstream os;
  os << "method,period,level,lower,upper\n";
  const std::pair<const char*, const Eigen::MatrixXd*> methods[2] = {{"reordered", &reordered},
                                                                     {"independent", &independent}};
  for (const auto& [name, m] : methods) {
    for (const auto& p : aggregate_return_levels(*m, weights, ag.periods, ag.bootstrap, cfg.seed))
      os << name << ',' << fmt(p.period) << ',' << fmt(p.level) << ',' << fmt(p.lower) << ',' << fmt(p.upper) << '\n';
  }
  run.write_table("aggregate.csv", os.str());
  run.finish();
  return 0;
}

}  // namespace maxsmooth::cli
