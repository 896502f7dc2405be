#pragma once

// Homogenized surface densities in the three scaling regimes.
//
//   l = 0       g0(nu)   = 2 lim (1/r) min over interfaces crossing Q^nu_r of
//                          int sqrt(h(x, normal)), as a grid shortest path.
//   0 < l < oo  gl(nu)   = lim (1/r) min over cracks G of
//                          int (1 - v)^2 + h(l x, grad v), v = 0 on G,
//                          (u, v) = profile pair near the cube boundary.
//   l = oo      ginf(nu) = 2 sqrt(h_hom(nu)).
//
// All computations run in cube-intrinsic coordinates p, physical x = R_nu p,
// so x . nu = p[1] and the flat interface is p[1] = 0.
//
// Both cube problems carry an O(1) end cost from the pinned boundary band:
// E(r) ~ g r + C. The reported value is the slope between the last two cube
// sizes, (E(r_k) - E(r_{k-1})) / (r_k - r_{k-1}); the raw E(r)/r is kept in
// the convergence table.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "athom/cell_problems.hpp"
#include "athom/detail/q1.hpp"
#include "athom/geometry.hpp"
#include "athom/integrands.hpp"
#include "athom/profiles.hpp"
#include "athom/regime.hpp"

namespace athom {

// ---------------------------------------------------------------------------
// results

struct SurfaceTableEntry {
  double r = 0.0;
  double raw = 0.0;     // E(r) / r
  double energy = 0.0;  // E(r)
};

struct SurfaceDensityResult {
  Vec<2> nu{};
  Regime regime = Regime::zero;
  double ell = 0.0;
  double value = 0.0;
  double error_bar = 0.0;
  std::vector<SurfaceTableEntry> convergence_table;
  std::string interface;  // best crack family member / stencil used
  double v_min = 0.0;     // finite-ratio solver: range of the optimal v
  double v_max = 1.0;
  double residual = 0.0;
};

namespace detail {

inline void check_r_list(const std::vector<double>& r_list, const char* who) {
  if (r_list.empty()) throw InputError(std::string(who) + ": r_list is empty");
  for (std::size_t i = 0; i < r_list.size(); ++i) {
    if (!(r_list[i] > 0.0) || !std::isfinite(r_list[i])) throw InputError(std::string(who) + ": r must be positive");
    if (i > 0 && !(r_list[i] > r_list[i - 1])) throw InputError(std::string(who) + ": r_list must be increasing");
  }
}

/// Slope estimate from the last two table rows; error bar is the change of
/// the estimate over the previous pair (or the gap to the raw value).
inline void finish_surface_result(SurfaceDensityResult& res) {
  const auto& t = res.convergence_table;
  if (t.size() == 1) {
    res.value = t[0].raw;
    res.error_bar = 0.0;
    return;
  }
  auto slope = [&](std::size_t k) { return (t[k].energy - t[k - 1].energy) / (t[k].r - t[k - 1].r); };
  res.value = slope(t.size() - 1);
  res.error_bar = t.size() >= 3 ? std::abs(res.value - slope(t.size() - 2)) : std::abs(res.value - t.back().raw);
}

inline double sqrt_h(const SurfaceIntegrand<2>& h, const Vec<2>& x, const Vec<2>& n) {
  return std::sqrt(h.coefficient.value(x, n));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// l = 0: shortest path

/// Minimal cost 2 * int sqrt(h) over lattice paths crossing Q^nu_r, pinned
/// to the flat interface in the left/right boundary band and kept out of the
/// top/bottom band. Returns E(r) = 2 * path cost.
///
/// Edge weights use a composite midpoint rule with `edge_points` samples, so
/// an edge straddling a coefficient jump is charged proportionally.
inline double g0_cube_energy(const SurfaceIntegrand<2>& h, const Direction<2>& nu, double r, double spacing,
                             int stencil = 16, int edge_points = 8) {
  if (stencil != 8 && stencil != 16) throw InputError("g0_hom: stencil must be 8 or 16");
  if (edge_points < 1) throw InputError("g0_hom: edge_points must be >= 1");
  RotatedCubeGrid<2> grid(nu, r, spacing);
  const int M = grid.cells_per_axis();
  if (M % 2 != 0) throw InputError("g0_hom: r / spacing must be an even integer");
  const int b = grid.layer_nodes();
  if (M < 2 * b + 2) throw InputError("g0_hom: cube too small for its boundary layer");
  const int mid = M / 2;
  const double hs = grid.spacing();
  const int n1 = M + 1;

  auto allowed = [&](int i, int j) {
    if (i < 0 || i > M || j < b || j > M - b) return false;
    return (i >= b && i <= M - b) || j == mid;
  };
  auto pinned = [&](int i) { return i < b || i > M - b; };

  static const int off16[8][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}, {1, 2}, {2, 1}, {1, -2}, {2, -1}};
  std::vector<std::array<int, 2>> offsets;
  for (int k = 0; k < (stencil == 16 ? 8 : 4); ++k) {
    offsets.push_back({off16[k][0], off16[k][1]});
    offsets.push_back({-off16[k][0], -off16[k][1]});
  }
  const auto& rot = grid.rotation();
  auto edge_cost = [&](int i, int j, int di, int dj) {
    double len = std::hypot(di, dj) * hs;
    Vec<2> nloc{-static_cast<double>(dj), static_cast<double>(di)};
    Vec<2> n = matvec<2>(rot, (1.0 / std::hypot(di, dj)) * nloc);
    double s = 0.0;
    for (int q = 0; q < edge_points; ++q) {
      double t = (q + 0.5) / edge_points;
      Vec<2> p{grid.local_coordinate(i) + t * di * hs, grid.local_coordinate(j) + t * dj * hs};
      s += detail::sqrt_h(h, matvec<2>(rot, p), n);
    }
    return len * s / edge_points;
  };

  const std::size_t N = static_cast<std::size_t>(n1) * n1;
  std::vector<double> dist(N, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  auto id = [n1](int i, int j) { return static_cast<std::size_t>(j) * n1 + i; };
  const std::size_t src = id(0, mid), dst = id(M, mid);
  dist[src] = 0.0;
  pq.push({0.0, src});
  while (!pq.empty()) {
    auto [d, k] = pq.top();
    pq.pop();
    if (d > dist[k]) continue;
    if (k == dst) break;
    int i = static_cast<int>(k % n1), j = static_cast<int>(k / n1);
    for (const auto& o : offsets) {
      int i2 = i + o[0], j2 = j + o[1];
      if (!allowed(i2, j2)) continue;
      if ((pinned(i) || pinned(i2)) && o[1] != 0) continue;
      double nd = d + edge_cost(i, j, o[0], o[1]);
      std::size_t k2 = id(i2, j2);
      if (nd < dist[k2]) {
        dist[k2] = nd;
        pq.push({nd, k2});
      }
    }
  }
  if (!std::isfinite(dist[dst])) throw InternalError("g0_hom: target unreachable on the cube graph");
  return 2.0 * dist[dst];
}

inline SurfaceDensityResult g0_hom(const SurfaceIntegrand<2>& h, const Direction<2>& nu,
                                   const std::vector<double>& r_list, double spacing, int stencil = 16,
                                   int edge_points = 8) {
  detail::check_r_list(r_list, "g0_hom");
  if (!(spacing > 0.0)) throw InputError("g0_hom: spacing must be positive");
  SurfaceDensityResult res;
  res.nu = nu.vec();
  res.regime = Regime::zero;
  res.ell = 0.0;
  res.interface = "shortest-path-" + std::to_string(stencil);
  for (double r : r_list) {
    double e = g0_cube_energy(h, nu, r, spacing, stencil, edge_points);
    res.convergence_table.push_back({r, e / r, e});
  }
  detail::finish_surface_result(res);
  return res;
}

// ---------------------------------------------------------------------------
// 0 < l < oo: crack family

enum class CrackShape { flat, dogleg, sine };

/// A crack graph p[1] = gamma(p[0]) over the tangent axis. Doglegs and sines
/// are tapered to zero over a unit ramp at each end of the free region.
struct CrackProfile {
  CrackShape shape = CrackShape::flat;
  double amplitude = 0.0;
  double period = 1.0;  // sine only

  std::string name() const {
    char buf[64];
    switch (shape) {
      case CrackShape::flat:
        return "flat";
      case CrackShape::dogleg:
        std::snprintf(buf, sizeof buf, "dogleg(%+.4g)", amplitude);
        return buf;
      default:
        std::snprintf(buf, sizeof buf, "sine(%+.4g,P=%.4g)", amplitude, period);
        return buf;
    }
  }

  /// gamma(s) on a free interval [-a, a].
  double operator()(double s, double a) const {
    if (shape == CrackShape::flat) return 0.0;
    double taper = std::clamp(a - std::abs(s), 0.0, 1.0);
    if (shape == CrackShape::dogleg) return amplitude * taper;
    return amplitude * taper * std::sin(2.0 * kPi * s / period);
  }
};

/// Flat crack, doglegs at quarter and half coefficient periods (1/l), sines at
/// the coefficient period, then finer doglegs and smaller sines. At most 13.
inline std::vector<CrackProfile> crack_family(int size, double ell) {
  if (size < 1) throw InputError("g_ell_hom: empty interface family");
  if (size > 13) throw InputError("g_ell_hom: interface family size is at most 13");
  const double P = 1.0 / ell;
  std::vector<CrackProfile> all = {
      {CrackShape::flat, 0.0, P},           {CrackShape::dogleg, 0.25 * P, P},   {CrackShape::dogleg, -0.25 * P, P},
      {CrackShape::dogleg, 0.5 * P, P},     {CrackShape::dogleg, -0.5 * P, P},   {CrackShape::sine, 0.25 * P, P},
      {CrackShape::sine, -0.25 * P, P},     {CrackShape::dogleg, 0.125 * P, P},  {CrackShape::dogleg, -0.125 * P, P},
      {CrackShape::dogleg, 0.375 * P, P},   {CrackShape::dogleg, -0.375 * P, P}, {CrackShape::sine, 0.1 * P, P},
      {CrackShape::sine, -0.1 * P, P},
  };
  all.resize(static_cast<std::size_t>(size));
  return all;
}

struct CrackSolve {
  double energy = 0.0;  // int over Q^nu_r of (1 - v)^2 + h(l x, grad v)
  double v_min = 0.0;
  double v_max = 1.0;
  double residual = 0.0;
  std::vector<double> v;  // nodal values, row-major in (p0 index fastest)
};

/// Solves the quadratic v-problem for one crack on Q^nu_r with Q1 elements.
inline CrackSolve g_ell_crack_solve(const SurfaceIntegrand<2>& h, double ell, const Direction<2>& nu, double r,
                                    double spacing, const CrackProfile& crack, bool keep_field = false) {
  RotatedCubeGrid<2> grid(nu, r, spacing);
  const int M = grid.cells_per_axis();
  if (M % 2 != 0) throw InputError("g_ell_hom: r / spacing must be an even integer");
  const double hs = grid.spacing();
  const int b = grid.layer_nodes();
  const int mid = M / 2;
  const double a = 0.5 * r - b * hs;  // free half-width along the tangent
  detail::StructuredLattice<2> lat({M, M}, hs, Vec<2>{-0.5 * r, -0.5 * r}, false);
  const std::size_t n = lat.node_count();

  // Fixed values: NaN marks free nodes.
  std::vector<double> fixed(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < n; ++k) {
    auto idx = lat.node_index(k);
    if (grid.in_boundary_layer({idx[0], idx[1]})) fixed[k] = profile_pair(grid.local_coordinate(idx[1])).second;
  }
  int prev = mid;
  for (int i = b; i <= M - b + 1 && i <= M; ++i) {
    int j = mid;
    if (i <= M - b) {
      double g = crack(grid.local_coordinate(i), a);
      j = mid + static_cast<int>(std::lround(g / hs));
      if (j < b + 1 || j > M - b - 1) throw InputError("g_ell_hom: crack leaves the cube interior");
    }
    int lo = std::min(prev, j), hi = std::max(prev, j);
    for (int jj = lo; jj <= hi; ++jj) fixed[lat.node_id({i, jj})] = 0.0;
    prev = j;
  }

  // Element matrices: local coefficient R^T H(l R p) R at the cell midpoint.
  const auto& rot = grid.rotation();
  const auto mass = detail::element_mass<2>(hs);
  std::vector<detail::ElementMatrix<2>> stiff(lat.cell_count());
  for (std::size_t c = 0; c < lat.cell_count(); ++c) {
    Vec<2> x = matvec<2>(rot, lat.cell_midpoint(c));
    Mat<2> A = congruence<2>(h.coefficient.matrix(ell * x), rot);
    stiff[c] = detail::element_stiffness<2>(A, hs);
  }

  std::vector<int> dof(n, -1);
  int nfree = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (std::isnan(fixed[k])) dof[k] = nfree++;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(lat.cell_count() * 16);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nfree);
  for (std::size_t c = 0; c < lat.cell_count(); ++c) {
    auto nd = lat.corners(c);
    for (int i = 0; i < 4; ++i) {
      int di = dof[nd[i]];
      if (di < 0) continue;
      for (int j = 0; j < 4; ++j) {
        double kij = stiff[c][i * 4 + j] + mass[i * 4 + j];
        rhs[di] += mass[i * 4 + j];  // M 1
        int dj = dof[nd[j]];
        if (dj >= 0)
          trip.emplace_back(di, dj, kij);
        else
          rhs[di] -= kij * fixed[nd[j]];
      }
    }
  }
  Eigen::SparseMatrix<double> A(nfree, nfree);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw SolverError("g_ell_hom: factorization failed", 1.0);
  Eigen::VectorXd x = ldlt.solve(rhs);
  CrackSolve out;
  double rn = rhs.norm();
  out.residual = rn > 0.0 ? (A * x - rhs).norm() / rn : 0.0;
  if (!(out.residual < 1e-8)) throw SolverError("g_ell_hom: linear solve inaccurate", out.residual);

  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = dof[k] >= 0 ? x[dof[k]] : fixed[k];
  out.v_min = *std::min_element(v.begin(), v.end());
  out.v_max = *std::max_element(v.begin(), v.end());
  double e = 0.0;
  for (std::size_t c = 0; c < lat.cell_count(); ++c) {
    auto nd = lat.corners(c);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        e += stiff[c][i * 4 + j] * v[nd[i]] * v[nd[j]] + mass[i * 4 + j] * (1.0 - v[nd[i]]) * (1.0 - v[nd[j]]);
  }
  out.energy = e;
  if (keep_field) out.v = std::move(v);
  return out;
}

inline SurfaceDensityResult g_ell_hom(const SurfaceIntegrand<2>& h, double ell, const Direction<2>& nu,
                                      const std::vector<double>& r_list, double spacing, int family_size = 7,
                                      int workers = 1) {
  if (!(ell > 0.0) || !std::isfinite(ell)) throw InputError("g_ell_hom: l must be in (0, inf)");
  if (!(spacing > 0.0)) throw InputError("g_ell_hom: spacing must be positive");
  detail::check_r_list(r_list, "g_ell_hom");
  auto family = crack_family(family_size, ell);
  SurfaceDensityResult res;
  res.nu = nu.vec();
  res.regime = Regime::finite;
  res.ell = ell;
  res.v_min = 1.0;
  res.v_max = 0.0;
  for (double r : r_list) {
    std::vector<CrackSolve> solves(family.size());
    std::vector<std::string> errors(family.size());
    detail::parallel_for(family.size(), workers, [&](std::size_t m) {
      try {
        solves[m] = g_ell_crack_solve(h, ell, nu, r, spacing, family[m]);
      } catch (const InputError& e) {
        errors[m] = e.what();  // member does not fit in this cube
      }
    });
    std::size_t best = family.size();
    for (std::size_t m = 0; m < family.size(); ++m) {
      if (!errors[m].empty()) continue;
      if (best == family.size() || solves[m].energy < solves[best].energy) best = m;
    }
    if (best == family.size()) throw InputError("g_ell_hom: no crack of the family fits at r = " + std::to_string(r));
    const auto& s = solves[best];
    res.convergence_table.push_back({r, s.energy / r, s.energy});
    res.interface = family[best].name();
    res.v_min = std::min(res.v_min, s.v_min);
    res.v_max = std::max(res.v_max, s.v_max);
    res.residual = std::max(res.residual, s.residual);
  }
  detail::finish_surface_result(res);
  return res;
}

// ---------------------------------------------------------------------------
// l = oo

inline SurfaceDensityResult g_inf_hom(const SurfaceIntegrand<2>& h, const Direction<2>& nu, int N,
                                      const SolverOptions& opt = {}) {
  auto hh = solve_h_hom<2>(h, nu.vec(), N, opt);
  SurfaceDensityResult res;
  res.nu = nu.vec();
  res.regime = Regime::infinity;
  res.ell = std::numeric_limits<double>::infinity();
  res.value = 2.0 * std::sqrt(hh.value);
  res.residual = hh.residual;
  res.interface = "corrector";
  res.convergence_table.push_back({static_cast<double>(N), res.value, 0.0});
  return res;
}

}  // namespace athom
