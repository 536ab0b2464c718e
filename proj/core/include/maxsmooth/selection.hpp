#pragma once

#include "maxsmooth/latent_model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace maxsmooth {

/// Marginal variances of each parameter: diagonal of the inverted block.
Eigen::VectorXd block_marginal_variances(const Eigen::MatrixXd& precision_block);

/// Single-parameter pseudo data with scalar precision 1 / (Q_i^-1)_kk per site.
/// Sites whose block is not positive definite are dropped and listed in `excluded`.
PseudoData diagonalize(const PseudoData& pd, Param target);

struct SingleFitOptions {
  int iterations = 2000;
  int burn_in = -1;  // negative: half of `iterations`
  int keep = 100;    // theta draws averaged over for the posterior means
  std::uint64_t seed = 1;
  double beta_sd = 10.0;
  PcThresholds pc;
};

struct SingleFit {
  std::vector<std::string> columns;  // "intercept" then covariates
  Eigen::VectorXd beta;
  Eigen::VectorXd u;  // mesh-node values; empty without the spatial term
  Eigen::VectorXd theta_mean;
  double acceptance = 0.0;

  /// X beta + A u for new rows.
  [[nodiscard]] Eigen::VectorXd predict(const Eigen::MatrixXd& x, const SpMat* projector) const;
};

/// Posterior means of (beta, u) for one parameter, averaging the conditional
/// means over a short hyperparameter chain.
SingleFit fit_single_param(const PseudoData& single, const CovariateTable& covariates, const SubModelSpec& sub,
                           std::shared_ptr<const SpdeField> field, const SpMat& projector,
                           const SingleFitOptions& opts = {});

/// Random balanced assignment of sites to folds.
std::vector<int> assign_folds(int n_sites, int n_folds, std::uint64_t seed);

struct SelectionTask {
  Param target = Param::kPsi;
  std::vector<std::string> candidates;
  std::vector<bool> tracks{false, true};  // spatial off / on
  int n_folds = 10;
  std::vector<int> folds;  // per site; empty: assign_folds(seed)
  int max_steps = -1;      // negative: until the candidates run out
  std::uint64_t seed = 1;
  SingleFitOptions fit;
  unsigned threads = 1;
};

struct TraceStep {
  int step = 0;
  std::string added;  // empty at step 0 (intercept only)
  double error = 0.0;
  double se = 0.0;    // standard error of the fold average
  std::vector<double> fold_errors;
};

struct SelectionTrack {
  bool spatial = false;
  std::vector<TraceStep> steps;
  [[nodiscard]] std::vector<std::string> covariates_at(int step) const;
  [[nodiscard]] double min_error() const;
};

struct SelectionTrace {
  Param target = Param::kPsi;
  std::vector<SelectionTrack> tracks;
  [[nodiscard]] double min_error() const;
  [[nodiscard]] const SelectionTrack* track(bool spatial) const;
};

/// Forward selection by fold-averaged RMSE of held-out estimates. `coords`
/// and `mesh` are needed only for the spatial track.
SelectionTrace forward_select(const SelectionTask& task, const PseudoData& single, const CovariateTable& covariates,
                              const std::vector<Point2>& coords, std::shared_ptr<const Mesh> mesh);

struct SelectionChoice {
  std::vector<std::string> covariates;
  bool spatial = false;
  double error = 0.0;
};

/// Smallest model within `tolerance` of its track minimum; the spatial track is
/// used only when it lowers the minimum by more than `spatial_gain`.
SelectionChoice choose_model(const SelectionTrace& trace, double tolerance = 0.01, double spatial_gain = 0.03);

}  // namespace maxsmooth
