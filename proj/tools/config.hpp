#pragma once

#include "maxsmooth/evaluation.hpp"
#include "maxsmooth/latent_model.hpp"
#include "maxsmooth/mcmc.hpp"
#include "maxsmooth/mesh.hpp"
#include "maxsmooth/site_ml.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace maxsmooth::cli {

struct DataPaths {
  std::string maxima;
  std::string descriptors;
  std::string ungauged;   // descriptor table of sites without records
  std::string site_fits;  // empty: <output>/site_fits.csv
  std::string fit_dir;    // empty: <output>
};

struct SimulateConfig {
  std::string scenario = "paper_like";
  int n_sites = 60;
  bool trend = true;
};

struct SelectionConfig {
  std::vector<Param> targets{Param::kPsi};
  std::vector<std::string> candidates;
  std::vector<bool> tracks{false, true};
  int folds = 10;
  int max_steps = -1;
  int iterations = 2000;
  int keep = 100;
  double tolerance = 0.01;
  double spatial_gain = 0.03;
};

struct PredictionConfig {
  std::vector<double> periods{2, 5, 10, 20, 50, 100, 200};
  double year = 1975.0;
  std::vector<std::string> sites;  // empty: every gauged site
  double effect_period = 100.0;
};

struct CvConfig {
  CvPlan plan;
  std::vector<Variant> variants;
  mcmc::Options mcmc;
  int samples = 32000;
  int samples_trend = 3200;
  double n_eff_time = 13.0;
  double n_eff_space = 50.0;
};

struct AggregateConfig {
  std::vector<std::string> sites;
  std::vector<double> weights;  // empty: all ones
  int first_year = 1980;
  int last_year = 2013;
  int blocks = 50;
  double year = 1975.0;
  std::vector<double> periods{2, 5, 10, 20, 50, 100};
  int bootstrap = 200;
};

struct RunConfig {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::filesystem::path output = "out";
  DataPaths data;
  SiteFitOptions site_fit;
  ModelSpec model;
  MeshOptions mesh;
  mcmc::Options mcmc;
  SimulateConfig simulate;
  SelectionConfig selection;
  PredictionConfig prediction;
  CvConfig cv;
  AggregateConfig aggregate;

  std::string hash;  // SHA-256 of the canonical JSON text
  nlohmann::json canonical;

  [[nodiscard]] std::filesystem::path site_fits_path() const;
  [[nodiscard]] std::filesystem::path fit_dir() const;
};

/// Validates every section against the schema and rejects unknown keys.
/// Relative paths are resolved against `base`. Throws ConfigError.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base);
RunConfig load_config(const std::filesystem::path& path, const nlohmann::json& overrides = nlohmann::json::object());

std::string sha256_hex(const std::string& bytes);

nlohmann::json model_to_json(const ModelSpec& spec);
ModelSpec model_from_json(const nlohmann::json& j);

}  // namespace maxsmooth::cli
