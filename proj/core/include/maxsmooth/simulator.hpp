#pragma once

#include "maxsmooth/io.hpp"
#include "maxsmooth/latent_model.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace maxsmooth {

/// Generating values for one link parameter. `beta` holds the intercept and
/// one coefficient per scenario covariate (standardized scale).
struct SubTruth {
  std::vector<double> beta;
  double sigma_eps = 0.0;
  bool spatial = false;
  double s = 0.0;
  double rho = 1.0;
};

struct Scenario {
  std::string name = "custom";
  int n_sites = 60;
  double width = 700.0;   // km
  double height = 1200.0;  // km
  std::vector<std::string> covariates;  // descriptor names (Table 1 style transforms apply)
  std::array<SubTruth, 4> truth;        // psi, tau, phi, gamma
  bool trend = true;
  int min_length = 30;
  int max_length = 80;
  int last_year = 2013;
  std::uint64_t seed = 1;
  MeshOptions mesh;

  /// Throws InputError for inconsistent or invalid settings.
  void validate() const;
};

struct SimulatedData {
  Scenario scenario;
  std::vector<SiteData> sites;
  DescriptorTable descriptors;  // raw values
  CovariateTable covariates;    // transformed and standardized
  std::shared_ptr<const Mesh> mesh;
  std::array<Eigen::VectorXd, 4> fields;  // node values; empty when not spatial
  Eigen::MatrixXd eta;                    // sites x 4, true link values
  Eigen::MatrixXd eps;                    // sites x 4, nugget draws
  std::vector<GevParams> params;
};

SimulatedData simulate_scenario(const Scenario& s);

/// 60 sites in a 700 x 1200 km box, records of 30 to 80 years, four
/// covariates (AREA, SAAR, BFIHOST, URBEXT), spatial terms in psi and tau,
/// trend with median near 1.5% per decade.
Scenario paper_like_scenario(std::uint64_t seed = 2021);

/// Truth sidecar: one row per site with natural and link-scale values.
void write_truth(std::ostream& os, const SimulatedData& d);

}  // namespace maxsmooth
