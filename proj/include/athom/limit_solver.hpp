#pragma once

// The sharp-interface limit functional
//
//   F(u) = int f_hom(grad u) + int_{S_u} g_hom(nu_u) dH^{n-1}
//
// on finite-jump representations, and the exact 1D limit problem
//
//   M = min_u  int_0^1 k (u')^2 + (u - g)^2 dx + g_hom * #jumps
//
// by dynamic programming over jump locations on a uniform node grid. Each
// jump-free segment is a P1 solve of -k u'' + u = g with natural conditions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "athom/cell_problems.hpp"
#include "athom/core.hpp"
#include "athom/profiles.hpp"
#include "athom/regime.hpp"

namespace athom {

/// Piecewise-W^{1,2} function on (0, 1) with finitely many breakpoints. Segment
/// k covers [b_{k-1}, b_k] (b_{-1} = 0, b_K = 1) and holds uniformly spaced
/// nodal samples, endpoints included.
struct JumpField1D {
  std::vector<double> breakpoints;
  std::vector<std::vector<double>> segments;

  void validate() const {
    if (segments.size() != breakpoints.size() + 1) throw InputError("jump field: need one more segment than breakpoints");
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
      double b = breakpoints[i];
      if (!(b > 0.0 && b < 1.0)) throw InputError("jump field: breakpoints must lie in (0, 1)");
      if (i > 0 && !(b > breakpoints[i - 1])) throw InputError("jump field: breakpoints must increase strictly");
    }
    for (const auto& s : segments) {
      if (s.size() < 2) throw InputError("jump field: each segment needs at least two samples");
      for (double x : s)
        if (!std::isfinite(x)) throw InputError("jump field: non-finite sample");
    }
  }

  double segment_begin(std::size_t k) const { return k == 0 ? 0.0 : breakpoints[k - 1]; }
  double segment_end(std::size_t k) const { return k == breakpoints.size() ? 1.0 : breakpoints[k]; }

  /// Number of breakpoints where the one-sided traces differ.
  int jump_count() const {
    int c = 0;
    for (std::size_t k = 0; k < breakpoints.size(); ++k)
      if (segments[k].back() != segments[k + 1].front()) ++c;
    return c;
  }

  double operator()(double x) const {
    std::size_t k = static_cast<std::size_t>(std::upper_bound(breakpoints.begin(), breakpoints.end(), x) - breakpoints.begin());
    const auto& s = segments[k];
    double a = segment_begin(k), b = segment_end(k);
    double t = std::clamp((x - a) / (b - a), 0.0, 1.0) * (s.size() - 1);
    std::size_t i = std::min(static_cast<std::size_t>(t), s.size() - 2);
    double w = t - i;
    return (1.0 - w) * s[i] + w * s[i + 1];
  }
};

/// 1D limit energy: bulk over segments (exact for the piecewise-linear
/// interpolant and a quadratic f_hom) plus g_hom(nu) per jump.
inline double energy_F_hom(const JumpField1D& u, const std::function<double(double)>& f_hom,
                           const std::function<double(double)>& g_hom) {
  u.validate();
  double e = 0.0;
  for (std::size_t k = 0; k < u.segments.size(); ++k) {
    const auto& s = u.segments[k];
    double dx = (u.segment_end(k) - u.segment_begin(k)) / (s.size() - 1);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) e += dx * f_hom((s[i + 1] - s[i]) / dx);
  }
  for (std::size_t k = 0; k < u.breakpoints.size(); ++k) {
    double jump = u.segments[k + 1].front() - u.segments[k].back();
    if (jump != 0.0) e += g_hom(jump > 0.0 ? 1.0 : -1.0);
  }
  return e;
}

/// Crack polyline across the unit square with the constant values of u on
/// either side (left/right with respect to the chain orientation).
struct CrackPolyline2D {
  std::vector<Vec<2>> vertices;
  double left_value = 0.0;
  double right_value = 1.0;

  void validate() const {
    if (vertices.size() < 2) throw InputError("crack polyline: need at least two vertices");
    for (const auto& p : vertices)
      if (!all_finite<2>(p) || p[0] < -1e-12 || p[0] > 1 + 1e-12 || p[1] < -1e-12 || p[1] > 1 + 1e-12)
        throw InputError("crack polyline: vertices must lie in the unit square");
    const auto& a = vertices.front();
    const auto& b = vertices.back();
    auto on = [](double x, double v) { return std::abs(x - v) < 1e-12; };
    bool horizontal = (on(a[0], 0) && on(b[0], 1)) || (on(a[0], 1) && on(b[0], 0));
    bool vertical = (on(a[1], 0) && on(b[1], 1)) || (on(a[1], 1) && on(b[1], 0));
    if (!horizontal && !vertical) throw InputError("crack polyline: endpoints must lie on opposite faces");
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i)
      if (norm<2>(vertices[i + 1] - vertices[i]) == 0.0) throw InputError("crack polyline: repeated vertex");
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i)
      for (std::size_t j = i + 2; j + 1 < vertices.size(); ++j)
        if (segments_intersect(vertices[i], vertices[i + 1], vertices[j], vertices[j + 1]))
          throw InputError("crack polyline: chain is not simple");
  }

  double length() const {
    double l = 0.0;
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i) l += norm<2>(vertices[i + 1] - vertices[i]);
    return l;
  }

 private:
  static double cross(const Vec<2>& o, const Vec<2>& a, const Vec<2>& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  }
  static bool segments_intersect(const Vec<2>& p1, const Vec<2>& p2, const Vec<2>& q1, const Vec<2>& q2) {
    double d1 = cross(q1, q2, p1), d2 = cross(q1, q2, p2), d3 = cross(p1, p2, q1), d4 = cross(p1, p2, q2);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
    auto on_seg = [](const Vec<2>& a, const Vec<2>& b, const Vec<2>& p) {
      return std::min(a[0], b[0]) <= p[0] && p[0] <= std::max(a[0], b[0]) && std::min(a[1], b[1]) <= p[1] &&
             p[1] <= std::max(a[1], b[1]);
    };
    return (d1 == 0 && on_seg(q1, q2, p1)) || (d2 == 0 && on_seg(q1, q2, p2)) || (d3 == 0 && on_seg(p1, p2, q1)) ||
           (d4 == 0 && on_seg(p1, p2, q2));
  }
};

/// 2D limit energy on the unit square: bulk by an n x n midpoint rule plus
/// sum over crack segments of length * g_hom(unit normal).
inline double energy_F_hom(const std::function<Vec<2>(const Vec<2>&)>& grad_u, const CrackPolyline2D& crack,
                           const std::function<double(const Vec<2>&)>& f_hom,
                           const std::function<double(const Vec<2>&)>& g_hom, int quadrature = 64) {
  crack.validate();
  if (quadrature < 1) throw InputError("energy_F_hom: quadrature must be positive");
  double bulk = 0.0;
  const double w = 1.0 / (static_cast<double>(quadrature) * quadrature);
  for (int i = 0; i < quadrature; ++i)
    for (int j = 0; j < quadrature; ++j) bulk += w * f_hom(grad_u({(i + 0.5) / quadrature, (j + 0.5) / quadrature}));
  double surf = 0.0;
  if (crack.left_value != crack.right_value)
    for (std::size_t i = 0; i + 1 < crack.vertices.size(); ++i) {
      Vec<2> t = crack.vertices[i + 1] - crack.vertices[i];
      double len = norm<2>(t);
      surf += len * g_hom(Vec<2>{-t[1] / len, t[0] / len});
    }
  return bulk + surf;
}

struct LimitSolution {
  double value = 0.0;
  int jumps = 0;
  JumpField1D minimizer;
};

namespace detail {

/// Discrete segment problem on nodes a..b of a uniform grid of `G` cells:
/// min sum_cells k (du)^2 / dx + int (u - g)^2 (two-point Gauss for g).
class SegmentSolver {
 public:
  SegmentSolver(const std::function<double(double)>& g, double kappa, int G) : kappa_(kappa), G_(G), dx_(1.0 / G) {
    const double q = 0.5 / std::sqrt(3.0);
    gp_.resize(G);
    for (int c = 0; c < G; ++c) {
      double xm = (c + 0.5) * dx_;
      gp_[c] = {g(xm - q * dx_), g(xm + q * dx_)};
      for (double x : gp_[c])
        if (!std::isfinite(x)) throw InputError("M_ell_1d: datum must be finite");
    }
    const double s = 0.5 - q;  // shape value of the far node at a Gauss point
    phi_ = {1.0 - s, s};
  }

  double energy(int a, int b, std::vector<double>* out = nullptr) const {
    const int n = b - a + 1;
    std::vector<double> lower(n, 0.0), diag(n, 0.0), upper(n, 0.0), rhs(n, 0.0);
    const double kk = kappa_ / dx_;
    for (int c = a; c < b; ++c) {
      int i = c - a;
      // Local Gauss points: point 0 near node i, point 1 near node i + 1.
      double m00 = 0.0, m01 = 0.0, m11 = 0.0, r0 = 0.0, r1 = 0.0;
      for (int p = 0; p < 2; ++p) {
        double w = 0.5 * dx_;
        double l = p == 0 ? phi_[0] : phi_[1];  // shape of node i
        double rgt = 1.0 - l;
        m00 += w * l * l;
        m01 += w * l * rgt;
        m11 += w * rgt * rgt;
        r0 += w * l * gp_[c][p];
        r1 += w * rgt * gp_[c][p];
      }
      diag[i] += kk + m00;
      diag[i + 1] += kk + m11;
      upper[i] += -kk + m01;
      lower[i + 1] += -kk + m01;
      rhs[i] += r0;
      rhs[i + 1] += r1;
    }
    std::vector<double> u = rhs;
    solve_tridiagonal(lower, diag, upper, u);
    double e = 0.0;
    for (int c = a; c < b; ++c) {
      int i = c - a;
      double du = u[i + 1] - u[i];
      e += kappa_ * du * du / dx_;
      for (int p = 0; p < 2; ++p) {
        double l = p == 0 ? phi_[0] : phi_[1];
        double val = l * u[i] + (1.0 - l) * u[i + 1] - gp_[c][p];
        e += 0.5 * dx_ * val * val;
      }
    }
    if (out) *out = std::move(u);
    return e;
  }

 private:
  double kappa_;
  int G_;
  double dx_;
  std::vector<std::array<double, 2>> gp_;
  std::array<double, 2> phi_{};
};

}  // namespace detail

/// Exact minimum over u with at most `max_jumps` jumps located at interior
/// grid nodes. Ties resolve towards fewer jumps, then leftmost locations.
inline LimitSolution M_ell_1d(const std::function<double(double)>& g, double q, double f_hom_coeff,
                              double g_hom_value, int max_jumps, int grid) {
  if (q != 2.0) throw UnsupportedError("M_ell_1d: only q = 2 is supported");
  if (max_jumps > 3) throw UnsupportedError("M_ell_1d: at most 3 jumps are supported");
  if (max_jumps < 0) throw InputError("M_ell_1d: max_jumps must be nonnegative");
  if (!(f_hom_coeff > 0.0)) throw InputError("M_ell_1d: f_hom_coeff must be positive");
  if (!(g_hom_value >= 0.0)) throw InputError("M_ell_1d: g_hom_value must be nonnegative");
  if (grid < 2) throw InputError("M_ell_1d: grid must have at least two cells");

  detail::SegmentSolver seg(g, f_hom_coeff, grid);
  const int G = grid;
  const double inf = std::numeric_limits<double>::infinity();
  // S[a][b] for a < b.
  std::vector<std::vector<double>> S(G + 1, std::vector<double>(G + 1, inf));
  for (int a = 0; a < G; ++a)
    for (int b = a + 1; b <= G; ++b) {
      if (a != 0 && b != G && max_jumps < 2) continue;
      if ((a != 0 || b != G) && max_jumps < 1) continue;
      S[a][b] = seg.energy(a, b);
    }
  // best[k][b]: k jumps, last segment ends at node b; parent for reconstruction.
  std::vector<std::vector<double>> best(max_jumps + 1, std::vector<double>(G + 1, inf));
  std::vector<std::vector<int>> parent(max_jumps + 1, std::vector<int>(G + 1, -1));
  for (int b = 1; b <= G; ++b) best[0][b] = S[0][b];
  for (int k = 1; k <= max_jumps; ++k)
    for (int b = 1; b <= G; ++b)
      for (int a = 1; a < b; ++a) {
        double c = best[k - 1][a] + S[a][b];
        if (c < best[k][b]) {
          best[k][b] = c;
          parent[k][b] = a;
        }
      }
  LimitSolution sol;
  sol.value = inf;
  int kbest = 0;
  for (int k = 0; k <= max_jumps; ++k) {
    double v = best[k][G] + k * g_hom_value;
    if (v < sol.value) {
      sol.value = v;
      kbest = k;
    }
  }
  std::vector<int> cuts;
  for (int k = kbest, b = G; k > 0; --k) {
    b = parent[k][b];
    cuts.push_back(b);
  }
  std::reverse(cuts.begin(), cuts.end());
  int a = 0;
  for (std::size_t i = 0; i <= cuts.size(); ++i) {
    int b = i < cuts.size() ? cuts[i] : G;
    std::vector<double> u;
    seg.energy(a, b, &u);
    sol.minimizer.segments.push_back(std::move(u));
    if (i < cuts.size()) sol.minimizer.breakpoints.push_back(static_cast<double>(b) / G);
    a = b;
  }
  sol.jumps = kbest;
  return sol;
}

/// Surface constant g_hom(+-1) of a 1D surface density h(y, w) = a(y) w^2.
///   l = 0:   2 sqrt(min a), the jump sits in the cheapest phase
///   l = oo:  2 sqrt(h_hom(1)) from the periodic corrector
///   else:    min over the crack position s of the two half-line profile
///            problems int (1 - v)^2 + a(l t) v'^2, v(s) = 0, v(s +- T) = 1
inline double surface_constant_1d(const SurfaceIntegrand<1>& h, Regime regime, double ell, int N = 256) {
  auto a = [&](double y) { return h.coefficient.value(Vec<1>{y}, Vec<1>{1.0}); };
  double a_min = INFINITY, a_max = 0.0;
  for (int i = 0; i < 4096; ++i) {
    double y = (i + 0.5) / 4096;
    a_min = std::min(a_min, a(y));
    a_max = std::max(a_max, a(y));
  }
  if (!(a_min > 0.0)) throw InputError("surface_constant_1d: coefficient must be positive");
  if (regime == Regime::zero) return 2.0 * std::sqrt(a_min);
  if (regime == Regime::infinity) return 2.0 * std::sqrt(solve_h_hom<1>(h, Vec<1>{1.0}, N).value);
  if (!(ell > 0.0) || !std::isfinite(ell)) throw InputError("surface_constant_1d: l must be in (0, inf)");
  if (a_min == a_max) return 2.0 * std::sqrt(a_min);

  const double period = 1.0 / ell;
  const double dt = std::min(0.01 * std::sqrt(a_min), period / 128.0);
  const int m = static_cast<int>(std::ceil(12.0 * std::sqrt(a_max) / dt));
  // One side: w = 1 - v, w(0) = 1, w(m dt) = 0, element coefficients at midpoints.
  auto side = [&](double s, double dir) {
    std::vector<double> k(m);
    for (int i = 0; i < m; ++i) k[i] = a(ell * (s + dir * (i + 0.5) * dt));
    std::vector<double> lower(m - 1, 0.0), diag(m - 1, 0.0), upper(m - 1, 0.0), rhs(m - 1, 0.0);
    for (int i = 0; i < m; ++i) {
      double kk = k[i] / dt, mm = dt / 6.0;
      // element between nodes i and i + 1; unknown index j = node - 1
      if (i >= 1) diag[i - 1] += kk + 2.0 * mm;
      if (i + 1 <= m - 1) diag[i] += kk + 2.0 * mm;
      if (i >= 1 && i + 1 <= m - 1) {
        upper[i - 1] += -kk + mm;
        lower[i] += -kk + mm;
      }
      if (i == 0) rhs[0] -= (-kk + mm) * 1.0;
    }
    detail::solve_tridiagonal(lower, diag, upper, rhs);
    std::vector<double> w(m + 1, 0.0);
    w[0] = 1.0;
    for (int i = 1; i < m; ++i) w[i] = rhs[i - 1];
    double e = 0.0;
    for (int i = 0; i < m; ++i) {
      double p = w[i], q = w[i + 1];
      e += k[i] * (q - p) * (q - p) / dt + dt / 3.0 * (p * p + p * q + q * q);
    }
    return e;
  };
  double best = INFINITY;
  for (int j = 0; j < 64; ++j) {
    double s = (j + 0.5) * period / 64;
    best = std::min(best, side(s, 1.0) + side(s, -1.0));
  }
  return best;
}

}  // namespace athom
