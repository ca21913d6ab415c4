// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace moelever::detail {

// Objective callback: returns f(x); fills *grad when non-null.
using ValueGrad = std::function<double(const std::vector<double>&, std::vector<double>*)>;

struct MinimizeResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  double grad_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// BFGS with backtracking Armijo line search. Dense inverse-Hessian update,
// intended for the small parameter counts of the law fits (<= 6).
inline MinimizeResult bfgs_minimize(const ValueGrad& fg, std::vector<double> x0,
                                    double grad_tol, int max_iterations) {
  const std::size_t n = x0.size();
  MinimizeResult res;
  res.x = std::move(x0);

  std::vector<double> grad(n), grad_new(n);
  double f = fg(res.x, &grad);
  if (!std::isfinite(f)) {
    res.f = f;
    return res;
  }

  // inverse Hessian approximation, row-major
  std::vector<double> H(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;

  std::vector<double> dir(n), x_new(n), s(n), y(n), Hy(n);

  for (int iter = 0; iter < max_iterations; ++iter) {
    res.iterations = iter;
    const double gnorm = norm2(grad);
    if (gnorm < grad_tol) {
      res.converged = true;
      break;
    }

    for (std::size_t i = 0; i < n; ++i) {
      double v = 0;
      for (std::size_t j = 0; j < n; ++j) v += H[i * n + j] * grad[j];
      dir[i] = -v;
    }
    double slope = dot(dir, grad);
    if (!(slope < 0)) {  // not a descent direction: reset to steepest descent
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) H[i * n + j] = (i == j) ? 1.0 : 0.0;
        dir[i] = -grad[i];
      }
      slope = dot(dir, grad);
      if (!(slope < 0)) break;
    }

    // backtracking Armijo
    const double c1 = 1e-4;
    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = res.x[i] + step * dir[i];
      f_new = fg(x_new, &grad_new);
      if (std::isfinite(f_new) && f_new <= f + c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // stalled; convergence decided by the gradient check below

    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - res.x[i];
      y[i] = grad_new[i] - grad[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * norm2(s) * norm2(y)) {
      if (iter == 0) {  // scale the initial inverse Hessian
        const double yy = dot(y, y);
        if (yy > 0) {
          const double scale = sy / yy;
          for (std::size_t i = 0; i < n; ++i) H[i * n + i] = scale;
        }
      }
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < n; ++i) {
        double v = 0;
        for (std::size_t j = 0; j < n; ++j) v += H[i * n + j] * y[j];
        Hy[i] = v;
      }
      const double yHy = dot(y, Hy);
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          H[i * n + j] += -rho * (s[i] * Hy[j] + Hy[i] * s[j]) +
                          rho * rho * yHy * s[i] * s[j] + rho * s[i] * s[j];
        }
      }
    }

    res.x = x_new;
    f = f_new;
    grad = grad_new;
  }

  res.f = f;
  res.grad_norm = norm2(grad);
  res.converged = res.converged || res.grad_norm < grad_tol;
  return res;
}

}  // namespace moelever::detail
