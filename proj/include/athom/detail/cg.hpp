#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace athom::detail {

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

inline double inner(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Conjugate gradients for A x = b, A symmetric positive (semi-)definite.
///
/// `apply(x, y)` writes y = A x. `project`, when set, removes the kernel
/// component (e.g. the mean for periodic problems) from residuals and
/// iterates; the right-hand side must then be orthogonal to the kernel.
/// `x` holds the initial guess on entry.
inline CgResult conjugate_gradient(const std::function<void(std::span<const double>, std::span<double>)>& apply,
                                   std::span<const double> b, std::span<double> x, double rel_tol, int max_iter,
                                   const std::function<void(std::span<double>)>& project = {}) {
  const std::size_t n = b.size();
  std::vector<double> r(n), p(n), ap(n);
  CgResult res;
  const double bnorm = std::sqrt(inner(b, b));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }
  auto true_residual = [&] {
    if (project) project(x);
    apply(x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    if (project) project(r);
    return std::sqrt(inner(r, r)) / bnorm;
  };
  res.relative_residual = true_residual();
  // Restarts guard against drift between the recursive and the true residual.
  for (int restart = 0; restart < 4 && res.relative_residual > rel_tol && res.iterations < max_iter; ++restart) {
    p = r;
    double rr = inner(r, r);
    double rel = res.relative_residual;
    while (rel > rel_tol && res.iterations < max_iter) {
      apply(p, ap);
      double pap = inner(p, ap);
      if (!(pap > 0.0)) break;
      double alpha = rr / pap;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
      }
      if (project) project(r);
      double rr_new = inner(r, r);
      double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
      ++res.iterations;
      rel = std::sqrt(rr) / bnorm;
    }
    res.relative_residual = true_residual();
  }
  res.converged = res.relative_residual <= rel_tol;
  return res;
}

}  // namespace athom::detail
