#pragma once

// One-dimensional optimal transition profiles and the fixed boundary pair
// (u, v) used as boundary data for the finite-ratio surface cell problem.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "athom/core.hpp"
#include "athom/geometry.hpp"

namespace athom {

struct ProfileSolution {
  double lambda = 1.0;
  double T = 0.0;
  double value = 0.0;
  std::vector<double> samples;  // v at t_i = i T / grid_size
  double half_line_deviation = 0.0;  // max_i |v_i - (1 - exp(-t_i / sqrt(lambda)))|
};

namespace detail {

/// Solves a symmetric tridiagonal system in place (Thomas algorithm).
inline void solve_tridiagonal(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper,
                              std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    double m = lower[i] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

}  // namespace detail

/// Minimizes int_0^T (1 - v)^2 + lambda (v')^2 over piecewise-linear v with
/// v(0) = 0, v(T) = 1 (exact element integrals).
inline ProfileSolution optimal_profile(double lambda, double T, int grid_size) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InputError("optimal_profile: lambda must be positive");
  if (!(T > 0.0) || !std::isfinite(T)) throw InputError("optimal_profile: T must be positive");
  if (grid_size < 8) throw InputError("optimal_profile: grid_size must be >= 8");

  const int m = grid_size;
  const double dt = T / m;
  // Unknown w = 1 - v at interior nodes 1..m-1; w(0) = 1, w(T) = 0.
  const double off = -lambda / dt + dt / 6.0;
  const double diag_val = 2.0 * lambda / dt + 4.0 * dt / 6.0;
  std::vector<double> w(m + 1, 0.0);
  w[0] = 1.0;
  if (m > 1) {
    std::vector<double> lower(m - 1, off), diag(m - 1, diag_val), upper(m - 1, off), rhs(m - 1, 0.0);
    rhs[0] = -off * w[0];
    detail::solve_tridiagonal(std::move(lower), std::move(diag), std::move(upper), rhs);
    for (int i = 1; i < m; ++i) w[i] = rhs[i - 1];
  }

  ProfileSolution sol;
  sol.lambda = lambda;
  sol.T = T;
  sol.samples.resize(m + 1);
  double energy = 0.0;
  for (int i = 0; i < m; ++i) {
    double a = w[i], b = w[i + 1];
    energy += lambda * (b - a) * (b - a) / dt + dt / 3.0 * (a * a + a * b + b * b);
  }
  sol.value = energy;
  const double s = std::sqrt(lambda);
  double dev = 0.0, violation = 0.0;
  for (int i = 0; i <= m; ++i) {
    double v = 1.0 - w[i];
    sol.samples[i] = v;
    violation = std::max({violation, -v, v - 1.0});
    dev = std::max(dev, std::abs(v - (1.0 - std::exp(-(i * dt) / s))));
  }
  sol.half_line_deviation = dev;
  if (violation > 1e-9)
    throw InternalError("optimal_profile: discrete minimizer left [0,1] by " + std::to_string(violation) +
                        " (grid too coarse for lambda)");
  return sol;
}

namespace detail {
inline double smoothstep01(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}
}  // namespace detail

/// Profile pair (u(t), v(t)) with v u' = 0 and (u, v) = (1_{t>0}, 1) for |t| > 1.
///
/// u is the C^1 cubic smoothstep across |t| <= 1/2; v vanishes there and rises
/// by a cubic smoothstep on 1/2 <= |t| <= 1.
inline std::pair<double, double> profile_pair(double t) {
  double u = detail::smoothstep01(t + 0.5);
  double v = detail::smoothstep01(2.0 * (std::abs(t) - 0.5));
  return {u, v};
}

/// (u^nu(x), v^nu(x)) evaluated at t = x . nu; the direction enters only via t.
template <int Dim>
std::pair<double, double> boundary_pair(const Direction<Dim>& /*nu*/, double t) {
  return profile_pair(t);
}

/// (u(x.nu / eps) zeta, v(x.nu / eps)).
template <int Dim>
std::pair<double, double> scaled_boundary_pair(const Direction<Dim>& nu, double eps, double zeta, const Vec<Dim>& x) {
  if (!(eps > 0.0)) throw InputError("scaled_boundary_pair: eps must be positive");
  auto [u, v] = profile_pair(dot<Dim>(x, nu.vec()) / eps);
  return {u * zeta, v};
}

}  // namespace athom
