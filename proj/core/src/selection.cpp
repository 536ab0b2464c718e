#include "maxsmooth/selection.hpp"

#include "maxsmooth/error.hpp"
#include "maxsmooth/stats.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <thread>

namespace maxsmooth {

namespace {

SpMat select_rows(const SpMat& a, std::span<const int> rows) {
  std::vector<Eigen::Triplet<double, int>> t;
  for (std::size_t i = 0; i < rows.size(); ++i) t.emplace_back(static_cast<int>(i), rows[i], 1.0);
  SpMat s(static_cast<int>(rows.size()), static_cast<int>(a.rows()));
  s.setFromTriplets(t.begin(), t.end());
  SpMat out = s * a;
  out.makeCompressed();
  return out;
}

Eigen::MatrixXd design_rows(const CovariateTable& cov, const std::vector<std::string>& cols, std::span<const int> rows) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()) + 1);
  x.col(0).setOnes();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const int k = cov.column(cols[c]);
    for (std::size_t i = 0; i < rows.size(); ++i) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c) + 1) = cov.values(rows[i], k);
  }
  return x;
}

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  const unsigned nt = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      f(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) guarded(i);
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

Eigen::VectorXd block_marginal_variances(const Eigen::MatrixXd& precision_block) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision_block);
  if (llt.info() != Eigen::Success) throw NumericalError("precision block is not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(precision_block.rows(), precision_block.cols())).diagonal();
}

PseudoData diagonalize(const PseudoData& pd, Param target) {
  int k = -1;
  for (int i = 0; i < pd.n_params(); ++i)
    if (pd.params[i] == target) k = i;
  if (k < 0) throw InputError(std::string("pseudo data has no ") + param_name(target) + " component");
  PseudoData out;
  out.params = {target};
  out.excluded = pd.excluded;
  std::vector<double> values;
  for (int i = 0; i < pd.n_sites(); ++i) {
    Eigen::VectorXd v;
    try {
      v = block_marginal_variances(pd.blocks[i]);
    } catch (const NumericalError&) {
      out.excluded.push_back(pd.site_ids[i] + ": precision block not positive definite");
      continue;
    }
    out.site_ids.push_back(pd.site_ids[i]);
    out.blocks.push_back(Eigen::MatrixXd::Constant(1, 1, 1.0 / v(k)));
    values.push_back(pd.value(k, i));
  }
  out.eta_hat = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return out;
}

Eigen::VectorXd SingleFit::predict(const Eigen::MatrixXd& x, const SpMat* projector) const {
  Eigen::VectorXd out = x * beta;
  if (u.size() > 0) {
    if (!projector) throw InputError("spatial prediction needs a projector");
    out += *projector * u;
  }
  return out;
}

SingleFit fit_single_param(const PseudoData& single, const CovariateTable& covariates, const SubModelSpec& sub,
                           std::shared_ptr<const SpdeField> field, const SpMat& projector,
                           const SingleFitOptions& opts) {
  if (single.n_params() != 1) throw InputError("fit_single_param expects single-parameter pseudo data");
  const std::vector<Param> params{single.params.front()};
  const std::vector<SubModelSpec> subs{sub};
  auto design = std::make_shared<const Design>(
      assemble_design(params, subs, covariates, std::move(field), projector, opts.beta_sd, opts.pc));
  auto pd = std::make_shared<const PseudoData>(single);
  LatentModel model(design, pd);

  mcmc::Options mo;
  mo.chains = 1;
  mo.iterations = opts.iterations;
  mo.burn_in = opts.burn_in;
  mo.keep_per_chain = opts.keep;
  mo.seed = opts.seed;
  const mcmc::Result res = sample_theta(model, mo);
  const auto& ch = res.chains.front();

  Eigen::VectorXd nu = Eigen::VectorXd::Zero(design->n_nu);
  Eigen::VectorXd th = Eigen::VectorXd::Zero(design->n_theta());
  for (Eigen::Index r = 0; r < ch.draws.rows(); ++r) {
    const Eigen::VectorXd theta = ch.draws.row(r).transpose().array().exp();
    nu += model.nu_mean(theta);
    th += theta;
  }
  nu /= static_cast<double>(ch.draws.rows());
  th /= static_cast<double>(ch.draws.rows());

  const auto& s = design->sub.front();
  SingleFit fit;
  fit.columns = s.columns;
  fit.beta = nu.segment(s.beta_offset, s.n_beta());
  if (s.spatial) fit.u = nu.segment(s.u_offset, design->field->n_nodes());
  fit.theta_mean = th;
  fit.acceptance = ch.acceptance;
  return fit;
}

std::vector<int> assign_folds(int n_sites, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw ConfigError("at least two folds are required");
  std::vector<int> order(static_cast<std::size_t>(n_sites));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(stats::mix_seed(seed, 0xf01dULL));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> folds(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) folds[static_cast<std::size_t>(order[i])] = static_cast<int>(i) % n_folds;
  return folds;
}

std::vector<std::string> SelectionTrack::covariates_at(int step) const {
  std::vector<std::string> out;
  for (int s = 1; s <= step && s < static_cast<int>(steps.size()); ++s) out.push_back(steps[s].added);
  return out;
}

double SelectionTrack::min_error() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : steps) m = std::min(m, s.error);
  return m;
}

double SelectionTrace::min_error() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& t : tracks) m = std::min(m, t.min_error());
  return m;
}

const SelectionTrack* SelectionTrace::track(bool spatial) const {
  for (const auto& t : tracks)
    if (t.spatial == spatial) return &t;
  return nullptr;
}

SelectionTrace forward_select(const SelectionTask& task, const PseudoData& single, const CovariateTable& covariates,
                              const std::vector<Point2>& coords, std::shared_ptr<const Mesh> mesh) {
  if (single.n_params() != 1 || single.params.front() != task.target)
    throw InputError("selection pseudo data does not match the target parameter");
  const int j = single.n_sites();
  if (covariates.values.rows() != j) throw InputError("covariate rows do not match the selection sites");
  if (task.candidates.empty()) throw ConfigError("selection needs at least one candidate covariate");
  if (task.tracks.empty()) throw ConfigError("selection needs at least one track");
  {
    std::set<std::string> seen;
    for (const auto& c : task.candidates) {
      (void)covariates.column(c);
      if (!seen.insert(c).second) throw ConfigError("candidate " + c + " listed twice");
    }
  }

  const std::vector<int> folds = task.folds.empty() ? assign_folds(j, task.n_folds, task.seed) : task.folds;
  if (static_cast<int>(folds.size()) != j) throw ConfigError("fold assignment does not cover every site");
  const int n_folds = *std::max_element(folds.begin(), folds.end()) + 1;
  std::vector<std::vector<int>> test(static_cast<std::size_t>(n_folds)), train(static_cast<std::size_t>(n_folds));
  for (int i = 0; i < j; ++i) {
    if (folds[i] < 0) throw ConfigError("negative fold index");
    for (int f = 0; f < n_folds; ++f) (f == folds[i] ? test : train)[static_cast<std::size_t>(f)].push_back(i);
  }
  for (int f = 0; f < n_folds; ++f)
    if (test[static_cast<std::size_t>(f)].size() < 2) throw ConfigError("fold " + std::to_string(f) + " has fewer than 2 sites");

  std::shared_ptr<const SpdeField> field;
  SpMat a_full;
  if (std::find(task.tracks.begin(), task.tracks.end(), true) != task.tracks.end()) {
    if (static_cast<int>(coords.size()) != j) throw InputError("spatial selection needs coordinates for every site");
    if (!mesh) mesh = std::make_shared<const Mesh>(build_mesh(coords));
    field = std::make_shared<const SpdeField>(mesh);
    a_full = make_projector(*mesh, coords);
  }

  auto evaluate = [&](const std::vector<std::string>& cols, bool spatial) {
    TraceStep st;
    st.fold_errors.assign(static_cast<std::size_t>(n_folds), 0.0);
    SubModelSpec sub{cols, spatial};
    parallel_for(static_cast<std::size_t>(n_folds), task.threads, [&](std::size_t f) {
      const auto& tr = train[f];
      const auto& te = test[f];
      SpMat a_tr, a_te;
      if (spatial) {
        a_tr = select_rows(a_full, tr);
        a_te = select_rows(a_full, te);
      }
      SingleFitOptions fo = task.fit;
      fo.seed = stats::mix_seed(task.fit.seed, f);
      const SingleFit fit = fit_single_param(single.subset(tr), covariates.rows(tr), sub, field, a_tr, fo);
      const Eigen::VectorXd pred = fit.predict(design_rows(covariates, cols, te), spatial ? &a_te : nullptr);
      double ss = 0.0;
      for (std::size_t i = 0; i < te.size(); ++i) {
        const double r = single.eta_hat(te[i]) - pred(static_cast<Eigen::Index>(i));
        ss += r * r;
      }
      st.fold_errors[f] = std::sqrt(ss / static_cast<double>(te.size()));
    });
    st.error = stats::mean(st.fold_errors);
    st.se = stats::sd(st.fold_errors) / std::sqrt(static_cast<double>(n_folds));
    return st;
  };

  SelectionTrace trace;
  trace.target = task.target;
  const int max_steps = task.max_steps < 0 ? static_cast<int>(task.candidates.size())
                                           : std::min<int>(task.max_steps, static_cast<int>(task.candidates.size()));
  for (bool spatial : task.tracks) {
    SelectionTrack track;
    track.spatial = spatial;
    std::vector<std::string> selected;
    track.steps.push_back(evaluate(selected, spatial));
    std::vector<std::string> remaining = task.candidates;
    std::sort(remaining.begin(), remaining.end());
    for (int step = 1; step <= max_steps; ++step) {
      TraceStep best;
      bool have = false;
      for (const auto& c : remaining) {
        auto cols = selected;
        cols.push_back(c);
        TraceStep st = evaluate(cols, spatial);
        if (!std::isfinite(st.error)) throw NumericalError("non-finite test error for covariate " + c);
        if (!have || st.error < best.error) {
          best = std::move(st);
          best.added = c;
          have = true;
        }
      }
      best.step = step;
      selected.push_back(best.added);
      remaining.erase(std::find(remaining.begin(), remaining.end(), best.added));
      track.steps.push_back(std::move(best));
    }
    trace.tracks.push_back(std::move(track));
  }
  return trace;
}

SelectionChoice choose_model(const SelectionTrace& trace, double tolerance, double spatial_gain) {
  if (trace.tracks.empty()) throw InputError("empty selection trace");
  const SelectionTrack* off = trace.track(false);
  const SelectionTrack* on = trace.track(true);
  const SelectionTrack* use = off ? off : on;
  if (off && on && on->min_error() < (1.0 - spatial_gain) * off->min_error()) use = on;
  const double m = use->min_error();
  SelectionChoice c;
  c.spatial = use->spatial;
  for (const auto& st : use->steps) {
    if (st.error <= (1.0 + tolerance) * m) {
      c.covariates = use->covariates_at(st.step);
      c.error = st.error;
      break;
    }
  }
  return c;
}

}  // namespace maxsmooth
