#include "maxsmooth/optimize.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <cmath>
#include <limits>
#include <mutex>

namespace maxsmooth::optimize {

namespace {

// nmsimplex2 rejects non-finite values outright; a large finite penalty keeps
// the simplex moving away from rejected points instead.
constexpr double kPenalty = 1e100;

void disable_gsl_abort() {
  static std::once_flag once;
  std::call_once(once, [] { gsl_set_error_handler_off(); });
}

struct SimplexBridge {
  const Objective* f;
  Eigen::VectorXd buf;
};

double simplex_eval(const gsl_vector* v, void* params) {
  auto* b = static_cast<SimplexBridge*>(params);
  for (Eigen::Index i = 0; i < b->buf.size(); ++i) b->buf(i) = gsl_vector_get(v, static_cast<size_t>(i));
  const double val = (*b->f)(b->buf);
  return std::isfinite(val) ? val : kPenalty;
}

}  // namespace

Result nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                   const SimplexOptions& opts) {
  disable_gsl_abort();
  const auto n = static_cast<size_t>(x0.size());
  SimplexBridge bridge{&f, Eigen::VectorXd(x0.size())};
  gsl_multimin_function fn{&simplex_eval, n, &bridge};

  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* ss = gsl_vector_alloc(n);
  for (size_t i = 0; i < n; ++i) {
    gsl_vector_set(x, i, x0(static_cast<Eigen::Index>(i)));
    gsl_vector_set(ss, i, step(static_cast<Eigen::Index>(i)));
  }
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);

  Result res;
  res.x = x0;
  res.value = f(x0);
  if (gsl_multimin_fminimizer_set(s, &fn, x, ss) == GSL_SUCCESS) {
    int status = GSL_CONTINUE;
    int iter = 0;
    while (status == GSL_CONTINUE && iter < opts.max_iter) {
      ++iter;
      if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
      status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), opts.size_tol);
    }
    res.iterations = iter;
    res.converged = status == GSL_SUCCESS;
    const gsl_vector* xb = gsl_multimin_fminimizer_x(s);
    for (size_t i = 0; i < n; ++i) res.x(static_cast<Eigen::Index>(i)) = gsl_vector_get(xb, i);
    res.value = f(res.x);
  }
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(ss);
  gsl_vector_free(x);
  return res;
}

Eigen::VectorXd fd_steps(const Eigen::VectorXd& x, const Eigen::VectorXd& typical, double rel) {
  Eigen::VectorXd h(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) h(i) = rel * std::max(std::abs(x(i)), typical(i));
  return h;
}

Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x, const Eigen::VectorXd& h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double hi = h(i);
    y(i) = x(i) + 2 * hi;
    const double f2p = f(y);
    y(i) = x(i) + hi;
    const double f1p = f(y);
    y(i) = x(i) - hi;
    const double f1m = f(y);
    y(i) = x(i) - 2 * hi;
    const double f2m = f(y);
    y(i) = x(i);
    g(i) = (f2m - 8.0 * f1m + 8.0 * f1p - f2p) / (12.0 * hi);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x, const Eigen::VectorXd& h) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd H(n, n);
  const double f0 = f(x);
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = x(i) + h(i);
    const double fp = f(y);
    y(i) = x(i) - h(i);
    const double fm = f(y);
    y(i) = x(i);
    H(i, i) = (fp - 2.0 * f0 + fm) / (h(i) * h(i));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          y(i) = x(i) + si * h(i);
          y(j) = x(j) + sj * h(j);
          acc += si * sj * f(y);
        }
      }
      y(i) = x(i);
      y(j) = x(j);
      H(i, j) = H(j, i) = acc / (4.0 * h(i) * h(j));
    }
  }
  return H;
}

bool clip_to_pd(Eigen::MatrixXd& m, double floor) {
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() >= floor) return false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::max(ev(i), floor);
  m = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  m = 0.5 * (m + m.transpose());
  return true;
}

Result newton_polish(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& typical,
                     const NewtonOptions& opts) {
  Result res;
  res.x = x0;
  res.value = f(x0);
  if (!std::isfinite(res.value)) return res;

  for (int it = 0; it < opts.max_iter; ++it) {
    res.iterations = it;
    const Eigen::VectorXd g = fd_gradient(f, res.x, fd_steps(res.x, typical, opts.grad_rel_step));
    if (!g.allFinite()) return res;
    if (g.cwiseAbs().maxCoeff() < opts.g_tol) {
      res.converged = true;
      return res;
    }
    Eigen::MatrixXd H = fd_hessian(f, res.x, fd_steps(res.x, typical, opts.hess_rel_step));
    if (!H.allFinite()) return res;
    const double scale = std::max(H.cwiseAbs().maxCoeff(), 1.0);
    clip_to_pd(H, 1e-10 * scale);
    const Eigen::VectorXd p = -H.ldlt().solve(g);
    const double slope = g.dot(p);

    double t = 1.0;
    bool moved = false;
    const double noise = 1e-13 * std::max(1.0, std::abs(res.value));
    while (t > 1e-12) {
      const Eigen::VectorXd xn = res.x + t * p;
      const double fn = f(xn);
      if (std::isfinite(fn) && fn <= res.value + 1e-4 * t * slope + noise) {
        moved = (xn - res.x).cwiseAbs().maxCoeff() > 0.0;
        res.x = xn;
        res.value = std::min(res.value, fn);
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      const Eigen::VectorXd gf = fd_gradient(f, res.x, fd_steps(res.x, typical, opts.grad_rel_step));
      res.converged = gf.cwiseAbs().maxCoeff() < opts.g_tol;
      return res;
    }
  }
  const Eigen::VectorXd g = fd_gradient(f, res.x, fd_steps(res.x, typical, opts.grad_rel_step));
  res.converged = g.allFinite() && g.cwiseAbs().maxCoeff() < opts.g_tol;
  return res;
}

}  // namespace maxsmooth::optimize
