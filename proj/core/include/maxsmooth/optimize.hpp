#pragma once

#include <Eigen/Core>

#include <functional>

namespace maxsmooth::optimize {

/// Scalar objective to be minimized. May return +inf to reject a point.
using Objective = std::function<double(const Eigen::VectorXd&)>;

struct Result {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SimplexOptions {
  int max_iter = 2000;
  double size_tol = 1e-7;
};

/// Derivative-free Nelder-Mead (GSL nmsimplex2). `step` sets the initial simplex.
Result nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                   const SimplexOptions& opts = {});

/// Per-coordinate finite-difference steps: rel * max(|x_i|, typical_i).
Eigen::VectorXd fd_steps(const Eigen::VectorXd& x, const Eigen::VectorXd& typical, double rel);

/// Five-point central-difference gradient.
Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x, const Eigen::VectorXd& h);

/// Central-difference Hessian (symmetric by construction).
Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x, const Eigen::VectorXd& h);

/// Eigenvalue clipping at `floor`. Returns true when any eigenvalue was raised.
bool clip_to_pd(Eigen::MatrixXd& m, double floor);

struct NewtonOptions {
  int max_iter = 50;
  double g_tol = 1e-6;
  double grad_rel_step = 1e-3;
  double hess_rel_step = 1e-4;
};

/// Newton iterations with finite-difference derivatives and backtracking.
/// `converged` means the gradient sup-norm fell below g_tol.
Result newton_polish(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& typical,
                     const NewtonOptions& opts = {});

}  // namespace maxsmooth::optimize
