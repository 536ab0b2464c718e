#include "config.hpp"

#include "maxsmooth/error.hpp"
#include "maxsmooth/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <set>
#include <type_traits>

namespace maxsmooth::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Strict view of one object: typed lookups, and a final check that every key was consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  [[nodiscard]] bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    out = convert<T>(j_.at(key), where(key));
  }

  Section sub(const char* key) {
    seen_.insert(key);
    return Section(j_.contains(key) ? j_.at(key) : empty(), path_.empty() ? key : path_ + "." + key);
  }

  const json* raw(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key '" + where(k.c_str()) + "'");
    }
  }

  [[nodiscard]] std::string where(const char* key = nullptr) const {
    std::string p = path_.empty() ? "config" : path_;
    if (key) p = path_.empty() ? std::string(key) : path_ + "." + key;
    return p;
  }

  template <class T>
  static T convert(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where + " must be a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where + " must be a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(where + " must be a number");
      return v.get<T>();
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
        throw ConfigError(where + " must be a nonnegative integer");
      return v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
      return v.get<T>();
    } else {
      if (!v.is_array()) throw ConfigError(where + " must be an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<typename T::value_type>(v[i], where + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

 private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

std::string resolve(const std::string& p, const fs::path& base) {
  if (p.empty()) return p;
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

void read_mcmc(Section s, mcmc::Options& o) {
  s.get("chains", o.chains);
  s.get("iterations", o.iterations);
  s.get("burn_in", o.burn_in);
  s.get("keep_per_chain", o.keep_per_chain);
  s.get("target_accept", o.target_accept);
  s.get("initial_step", o.initial_step);
  s.finish();
  try {
    o.validate();
  } catch (const InputError& e) {
    throw ConfigError(s.where() + ": " + e.what());
  }
}

void read_sub(Section s, SubModelSpec& sub) {
  s.get("covariates", sub.covariates);
  s.get("spatial", sub.spatial);
  s.finish();
}

std::vector<double> periods_checked(const std::vector<double>& p, const std::string& where) {
  require(!p.empty(), where + " must not be empty");
  for (double t : p) require(t > 1.0, where + " entries must exceed 1");
  return p;
}

}  // namespace

fs::path RunConfig::site_fits_path() const {
  return data.site_fits.empty() ? output / "site_fits.csv" : fs::path(data.site_fits);
}

fs::path RunConfig::fit_dir() const { return data.fit_dir.empty() ? output : fs::path(data.fit_dir); }

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("SHA-256 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

json model_to_json(const ModelSpec& spec) {
  json j;
  j["trend"] = spec.trend;
  j["beta_sd"] = spec.beta_sd;
  j["pc"] = {{"s0", spec.pc.s0}, {"rho0", spec.pc.rho0}, {"eps0", spec.pc.eps0}};
  for (int p = 0; p < 4; ++p) {
    const auto& sub = spec.sub[static_cast<std::size_t>(p)];
    j[param_name(static_cast<Param>(p))] = {{"covariates", sub.covariates}, {"spatial", sub.spatial}};
  }
  return j;
}

ModelSpec model_from_json(const json& j) {
  ModelSpec spec;
  Section s(j, "model");
  s.get("trend", spec.trend);
  s.get("beta_sd", spec.beta_sd);
  {
    Section pc = s.sub("pc");
    pc.get("s0", spec.pc.s0);
    pc.get("rho0", spec.pc.rho0);
    pc.get("eps0", spec.pc.eps0);
    pc.finish();
  }
  for (int p = 0; p < 4; ++p) {
    const char* name = param_name(static_cast<Param>(p));
    if (s.has(name)) read_sub(s.sub(name), spec.sub[static_cast<std::size_t>(p)]);
  }
  s.finish();
  require(spec.beta_sd > 0.0, "model.beta_sd must be positive");
  require(spec.pc.s0 > 0.0 && spec.pc.eps0 > 0.0 && spec.pc.rho0 >= 0.0, "model.pc thresholds must be positive");
  if (!spec.trend) {
    const auto& g = spec[Param::kGamma];
    require(g.covariates.empty() && !g.spatial, "model.gamma terms need model.trend");
  }
  try {
    spec.validate();
  } catch (const InputError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return spec;
}

RunConfig parse_config(const json& j, const fs::path& base) {
  RunConfig c;
  Section top(j, "");
  top.get("seed", c.seed);
  top.get("threads", c.threads);
  require(c.threads >= 1, "threads must be at least 1");
  std::string out = c.output.string();
  top.get("output", out);
  require(!out.empty(), "output must not be empty");
  c.output = resolve(out, base);

  {
    Section d = top.sub("data");
    d.get("maxima", c.data.maxima);
    d.get("descriptors", c.data.descriptors);
    d.get("ungauged", c.data.ungauged);
    d.get("site_fits", c.data.site_fits);
    d.get("fit_dir", c.data.fit_dir);
    d.finish();
    for (std::string* p : {&c.data.maxima, &c.data.descriptors, &c.data.ungauged, &c.data.site_fits, &c.data.fit_dir})
      *p = resolve(*p, base);
  }
  {
    Section s = top.sub("site_fit");
    s.get("trend", c.site_fit.trend);
    s.get("g_tol", c.site_fit.g_tol);
    s.get("max_restarts", c.site_fit.max_restarts);
    s.get("n_min_trend", c.site_fit.n_min_trend);
    s.get("n_min_stationary", c.site_fit.n_min_stationary);
    s.finish();
    require(c.site_fit.g_tol > 0.0, "site_fit.g_tol must be positive");
    require(c.site_fit.max_restarts >= 0, "site_fit.max_restarts must be nonnegative");
  }
  if (const json* m = top.raw("model")) c.model = model_from_json(*m);
  {
    Section s = top.sub("mesh");
    s.get("buffer_fraction", c.mesh.buffer_fraction);
    s.get("interior_divisor", c.mesh.interior_divisor);
    s.get("buffer_divisor", c.mesh.buffer_divisor);
    s.get("refine_interior", c.mesh.refine_interior);
    s.finish();
    require(c.mesh.buffer_fraction > 0.0 && c.mesh.interior_divisor > 0.0 && c.mesh.buffer_divisor > 0.0,
            "mesh settings must be positive");
  }
  read_mcmc(top.sub("mcmc"), c.mcmc);
  {
    Section s = top.sub("simulate");
    s.get("scenario", c.simulate.scenario);
    s.get("n_sites", c.simulate.n_sites);
    s.get("trend", c.simulate.trend);
    s.finish();
    require(c.simulate.scenario == "paper_like", "simulate.scenario must be \"paper_like\"");
    require(c.simulate.n_sites >= 3, "simulate.n_sites must be at least 3");
  }
  {
    Section s = top.sub("selection");
    std::vector<std::string> targets;
    if (s.has("targets")) {
      s.get("targets", targets);
      require(!targets.empty(), "selection.targets must not be empty");
      c.selection.targets.clear();
      for (const auto& t : targets) {
        try {
          c.selection.targets.push_back(param_from_name(t));
        } catch (const InputError&) {
          throw ConfigError("selection.targets: unknown parameter '" + t + "'");
        }
      }
    }
    s.get("candidates", c.selection.candidates);
    if (s.has("tracks")) {
      std::vector<std::string> tracks;
      s.get("tracks", tracks);
      c.selection.tracks.clear();
      for (const auto& t : tracks) {
        require(t == "iid" || t == "spatial", "selection.tracks entries are \"iid\" or \"spatial\"");
        c.selection.tracks.push_back(t == "spatial");
      }
      require(!c.selection.tracks.empty(), "selection.tracks must not be empty");
    }
    s.get("folds", c.selection.folds);
    s.get("max_steps", c.selection.max_steps);
    s.get("iterations", c.selection.iterations);
    s.get("keep", c.selection.keep);
    s.get("tolerance", c.selection.tolerance);
    s.get("spatial_gain", c.selection.spatial_gain);
    s.finish();
    require(c.selection.folds >= 2, "selection.folds must be at least 2");
    require(c.selection.iterations >= 10 && c.selection.keep >= 1, "selection.iterations and keep must be positive");
    require(c.selection.tolerance >= 0.0 && c.selection.spatial_gain >= 0.0, "selection tolerances must be nonnegative");
  }
  {
    Section s = top.sub("prediction");
    s.get("periods", c.prediction.periods);
    s.get("year", c.prediction.year);
    s.get("sites", c.prediction.sites);
    s.get("effect_period", c.prediction.effect_period);
    s.finish();
    c.prediction.periods = periods_checked(c.prediction.periods, "prediction.periods");
    require(c.prediction.effect_period > 1.0, "prediction.effect_period must exceed 1");
  }
  {
    Section s = top.sub("cv");
    std::string mode = "within_site";
    s.get("mode", mode);
    require(mode == "within_site" || mode == "out_of_site", "cv.mode must be \"within_site\" or \"out_of_site\"");
    c.cv.plan.mode = mode == "within_site" ? CvMode::kWithinSite : CvMode::kOutOfSite;
    std::vector<std::string> variants;
    s.get("variants", variants);
    for (const auto& v : variants) {
      try {
        c.cv.variants.push_back(variant_from_name(v));
      } catch (const InputError&) {
        throw ConfigError("cv.variants: unknown variant '" + v + "'");
      }
    }
    s.get("train_last_year", c.cv.plan.train_last_year);
    s.get("test_first_year", c.cv.plan.test_first_year);
    s.get("test_last_year", c.cv.plan.test_last_year);
    s.get("held_out", c.cv.plan.held_out);
    s.get("max_first_year", c.cv.plan.max_first_year);
    s.get("require_complete_test", c.cv.plan.require_complete_test);
    c.cv.mcmc = c.mcmc;
    if (s.has("mcmc")) read_mcmc(s.sub("mcmc"), c.cv.mcmc);
    s.get("samples", c.cv.samples);
    s.get("samples_trend", c.cv.samples_trend);
    s.get("n_eff_time", c.cv.n_eff_time);
    s.get("n_eff_space", c.cv.n_eff_space);
    s.finish();
    require(c.cv.plan.train_last_year < c.cv.plan.test_first_year, "cv.train_last_year must precede cv.test_first_year");
    require(c.cv.plan.test_first_year <= c.cv.plan.test_last_year, "cv test years are empty");
    require(c.cv.samples >= 10 && c.cv.samples_trend >= 10, "cv sample counts must be at least 10");
    require(c.cv.n_eff_time > 0.0 && c.cv.n_eff_space > 0.0, "cv effective sizes must be positive");
  }
  {
    Section s = top.sub("aggregate");
    s.get("sites", c.aggregate.sites);
    s.get("weights", c.aggregate.weights);
    s.get("first_year", c.aggregate.first_year);
    s.get("last_year", c.aggregate.last_year);
    s.get("blocks", c.aggregate.blocks);
    s.get("year", c.aggregate.year);
    s.get("periods", c.aggregate.periods);
    s.get("bootstrap", c.aggregate.bootstrap);
    s.finish();
    require(c.aggregate.weights.empty() || c.aggregate.weights.size() == c.aggregate.sites.size(),
            "aggregate.weights must match aggregate.sites");
    require(c.aggregate.first_year <= c.aggregate.last_year, "aggregate years are empty");
    require(c.aggregate.blocks >= 1 && c.aggregate.bootstrap >= 1, "aggregate.blocks and bootstrap must be positive");
    c.aggregate.periods = periods_checked(c.aggregate.periods, "aggregate.periods");
  }
  top.finish();

  c.site_fit.seed = c.seed;
  c.site_fit.threads = c.threads;
  c.mcmc.seed = c.seed;
  c.mcmc.threads = c.threads;
  c.cv.mcmc.seed = c.seed;
  c.cv.mcmc.threads = c.threads;
  c.canonical = j;
  c.hash = sha256_hex(j.dump());
  return c;
}

RunConfig load_config(const fs::path& path, const json& overrides) {
  json j;
  try {
    j = json::parse(read_file(path.string()), nullptr, true, false);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  if (!j.is_object()) throw ConfigError(path.string() + ": top level must be an object");
  for (const auto& [k, v] : overrides.items()) j[k] = v;
  return parse_config(j, path.parent_path());
}

}  // namespace maxsmooth::cli
