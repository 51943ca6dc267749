#pragma once

// Small dense L-BFGS minimizer with a weak-Wolfe line search. Used by the
// MCEM M step on the unconstrained scale.

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <functional>

#include "scr/common.hpp"

namespace scr {

struct OptimOptions {
  int max_iters = 200;
  int history = 8;
  double grad_tol = 1e-7;
  double f_tol = 1e-12;  // relative objective change
};

struct OptimResult {
  Eigen::VectorXd x;
  double f = kNaN;
  int iters = 0;
  bool converged = false;
};

// objective(x, grad) -> f, filling grad; minimized.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

inline OptimResult lbfgs_minimize(const Objective& objective, Eigen::VectorXd x0,
                                  const OptimOptions& opts = {}) {
  const int dim = static_cast<int>(x0.size());
  OptimResult res;
  res.x = std::move(x0);

  Eigen::VectorXd grad(dim), new_grad(dim);
  double f = objective(res.x, grad);
  if (!std::isfinite(f)) throw NumericalError("optimizer started at a non-finite point");

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int it = 0; it < opts.max_iters; ++it) {
    res.iters = it + 1;
    if (grad.norm() <= opts.grad_tol * std::max(1.0, res.x.norm())) {
      res.converged = true;
      break;
    }

    // two-loop recursion
    Eigen::VectorXd q = grad;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[static_cast<std::size_t>(i)] =
          rho_hist[static_cast<std::size_t>(i)] *
          s_hist[static_cast<std::size_t>(i)].dot(q);
      q -= alpha[static_cast<std::size_t>(i)] * y_hist[static_cast<std::size_t>(i)];
    }
    if (!s_hist.empty()) {
      const auto& s = s_hist.back();
      const auto& y = y_hist.back();
      q *= s.dot(y) / y.squaredNorm();
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd dir = -q;
    double dg = dir.dot(grad);
    if (!(dg < 0.0)) {  // not a descent direction; fall back to steepest descent
      dir = -grad;
      dg = -grad.squaredNorm();
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    // weak Wolfe line search (Armijo c1, curvature c2) with bisection
    const double c1 = 1e-4, c2 = 0.9;
    double lo = 0.0, hi = kInf, t = 1.0;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      Eigen::VectorXd x_new = res.x + t * dir;
      f_new = objective(x_new, new_grad);
      if (!std::isfinite(f_new) || f_new > f + c1 * t * dg) {
        hi = t;
      } else if (new_grad.dot(dir) < c2 * dg) {
        lo = t;
      } else {
        res.x = std::move(x_new);
        accepted = true;
        break;
      }
      t = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * t;
      if (t < 1e-16) break;
    }
    if (!accepted) {
      // accept the last Armijo-satisfying point if any progress was made
      Eigen::VectorXd x_new = res.x + t * dir;
      f_new = objective(x_new, new_grad);
      if (std::isfinite(f_new) && f_new < f) {
        res.x = std::move(x_new);
      } else {
        res.converged = grad.norm() <= 1e-4 * std::max(1.0, res.x.norm());
        break;
      }
    }

    Eigen::VectorXd s = t * dir;
    Eigen::VectorXd y = new_grad - grad;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    double f_prev = f;
    f = f_new;
    grad = new_grad;
    if (std::abs(f_prev - f) <= opts.f_tol * (std::abs(f_prev) + 1e-12)) {
      res.converged = true;
      break;
    }
  }
  res.f = f;
  return res;
}

}  // namespace scr
