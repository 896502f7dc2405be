#pragma once

// Homogenized bulk density f_hom (asymptotic cube formula with zero boundary
// values on Q_r) and homogenized surface quadratic form h_hom (periodic
// corrector on the unit torus).
//
// Both cell problems minimize  int (grad u + s) . A(x) (grad u + s)  over Q1
// functions u on a uniform lattice, with A sampled at cell midpoints. The
// quadratic structure makes each a symmetric positive (semi-)definite linear
// system, solved matrix-free by conjugate gradients.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "athom/detail/cg.hpp"
#include "athom/detail/parallel.hpp"
#include "athom/detail/q1.hpp"
#include "athom/integrands.hpp"

namespace athom {

struct SolverOptions {
  double rel_tol = 1e-10;
  int max_iterations = 200000;
  bool keep_corrector = false;
};

struct ConvergenceEntry {
  int size = 0;  // r for f_hom, N for h_hom
  double value = 0.0;
  double residual = 0.0;
};

struct EffectiveDensityResult {
  double value = 0.0;
  std::vector<ConvergenceEntry> convergence_table;
  std::vector<double> corrector;  // nodal values, filled when requested
  double residual = 0.0;
  // f_hom only: 2 v_last - v_prev, assuming a C / r boundary-layer excess.
  // Equals `value` when fewer than two cube sizes were solved.
  double extrapolated = 0.0;
  int iterations = 0;
};

namespace detail {

struct ShiftedSolution {
  double energy = 0.0;
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> u;
};

/// Minimizes sum_cells int (grad u + s) . A_cell (grad u + s) with u = 0 on
/// `fixed` nodes (boxed lattice) or u mean-free (periodic lattice).
template <int Dim>
ShiftedSolution minimize_shifted_quadratic(const StructuredLattice<Dim>& lattice, const std::vector<Mat<Dim>>& coeff,
                                           const Vec<Dim>& shift, std::vector<char> fixed,
                                           const SolverOptions& opt) {
  const double h = lattice.spacing();
  const std::size_t n = lattice.node_count();
  std::vector<ElementMatrix<Dim>> mats(lattice.cell_count());
  std::vector<double> rhs(n, 0.0);
  for (std::size_t c = 0; c < lattice.cell_count(); ++c) {
    mats[c] = element_stiffness<Dim>(coeff[c], h);
    auto load = element_shift_load<Dim>(coeff[c], shift, h);
    auto nd = lattice.corners(c);
    for (int i = 0; i < (1 << Dim); ++i) rhs[nd[i]] -= load[i];
  }
  if (!fixed.empty())
    for (std::size_t i = 0; i < n; ++i)
      if (fixed[i]) rhs[i] = 0.0;

  ElementOperator<Dim> op(lattice, std::move(mats), fixed);
  auto apply = [&op](std::span<const double> x, std::span<double> y) { op.apply(x, y); };
  std::function<void(std::span<double>)> project;
  if (lattice.periodic()) {
    project = [](std::span<double> v) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      for (double& x : v) x -= mean;
    };
    double mean = 0.0;
    for (double x : rhs) mean += x;
    mean /= static_cast<double>(n);
    for (double& x : rhs) x -= mean;
  }

  ShiftedSolution sol;
  sol.u.assign(n, 0.0);
  auto cg = conjugate_gradient(apply, rhs, sol.u, opt.rel_tol, opt.max_iterations, project);
  sol.residual = cg.relative_residual;
  sol.iterations = cg.iterations;
  if (!cg.converged)
    throw SolverError("cell problem: conjugate gradients did not converge in " + std::to_string(cg.iterations) +
                          " iterations",
                      cg.relative_residual);

  // Energy evaluated element by element at the computed corrector.
  const auto& ref = Q1Reference<Dim>::get();
  const double vol = std::pow(h, Dim);
  double energy = 0.0;
  for (std::size_t c = 0; c < lattice.cell_count(); ++c) {
    const auto& nd = op.corners()[c];
    ElementVector<Dim> ue;
    for (int i = 0; i < (1 << Dim); ++i) ue[i] = sol.u[nd[i]];
    for (int p = 0; p < (1 << Dim); ++p) {
      Vec<Dim> g = element_gradient<Dim>(ue, p, h) + shift;
      energy += ref.weight[p] * vol * quadratic_form<Dim>(coeff[c], g);
    }
  }
  sol.energy = energy;
  return sol;
}

template <int Dim>
bool is_zero(const Vec<Dim>& v) {
  for (double x : v)
    if (x != 0.0) return false;
  return true;
}

}  // namespace detail

/// h_hom(w) = min over mean-free periodic correctors v of int_Q h(y, grad v + w) dy.
template <int Dim>
EffectiveDensityResult solve_h_hom(const SurfaceIntegrand<Dim>& h, const Vec<Dim>& w, int N,
                                   const SolverOptions& opt = {}) {
  if (N < 8) throw InputError("solve_h_hom: N must be >= 8");
  if (!all_finite<Dim>(w)) throw InputError("solve_h_hom: non-finite direction");
  EffectiveDensityResult res;
  std::size_t nodes = 1;
  for (int d = 0; d < Dim; ++d) nodes *= static_cast<std::size_t>(N);
  if (detail::is_zero<Dim>(w)) {
    res.convergence_table.push_back({N, 0.0, 0.0});
    if (opt.keep_corrector) res.corrector.assign(nodes, 0.0);
    return res;
  }
  std::array<int, Dim> cells;
  cells.fill(N);
  detail::StructuredLattice<Dim> lattice(cells, 1.0 / N, Vec<Dim>{}, true);
  std::vector<Mat<Dim>> coeff(lattice.cell_count());
  for (std::size_t c = 0; c < coeff.size(); ++c) coeff[c] = h.coefficient.matrix(lattice.cell_midpoint(c));
  auto sol = detail::minimize_shifted_quadratic<Dim>(lattice, coeff, w, {}, opt);
  res.value = sol.energy;
  res.extrapolated = sol.energy;
  res.residual = sol.residual;
  res.iterations = sol.iterations;
  res.convergence_table.push_back({N, sol.energy, sol.residual});
  if (opt.keep_corrector) res.corrector = std::move(sol.u);
  return res;
}

/// f_hom(xi) via (1/r^n) min { int_{Q_r} f(x, grad u + xi) : u = 0 on the
/// boundary of Q_r } along a doubling sequence of integer cube sizes. Stops
/// once consecutive values agree to 1e-3 relative.
template <int Dim>
EffectiveDensityResult solve_f_hom(const BulkIntegrand<Dim>& f, const Vec<Dim>& xi, std::span<const int> r_list,
                                   int n_per_cell, const SolverOptions& opt = {}) {
  if (r_list.empty()) throw InputError("solve_f_hom: r_list is empty");
  if (n_per_cell < 2) throw InputError("solve_f_hom: N_per_cell must be >= 2");
  if (!all_finite<Dim>(xi)) throw InputError("solve_f_hom: non-finite gradient");
  for (std::size_t i = 0; i < r_list.size(); ++i) {
    if (r_list[i] < 1) throw InputError("solve_f_hom: cube sizes must be positive integers");
    if (i > 0 && (r_list[i] <= r_list[i - 1] || r_list[i] % r_list[i - 1] != 0))
      throw InputError("solve_f_hom: r_list must be increasing with each entry dividing the next");
  }
  EffectiveDensityResult res;
  for (std::size_t k = 0; k < r_list.size(); ++k) {
    const int r = r_list[k];
    if (detail::is_zero<Dim>(xi)) {
      res.convergence_table.push_back({r, 0.0, 0.0});
      continue;
    }
    std::array<int, Dim> cells;
    cells.fill(r * n_per_cell);
    Vec<Dim> origin;
    origin.fill(-0.5 * r);
    detail::StructuredLattice<Dim> lattice(cells, 1.0 / n_per_cell, origin, false);
    std::vector<Mat<Dim>> coeff(lattice.cell_count());
    for (std::size_t c = 0; c < coeff.size(); ++c) coeff[c] = f.coefficient.matrix(lattice.cell_midpoint(c));
    std::vector<char> fixed(lattice.node_count(), 0);
    for (std::size_t i = 0; i < fixed.size(); ++i) fixed[i] = lattice.on_boundary(i) ? 1 : 0;
    auto sol = detail::minimize_shifted_quadratic<Dim>(lattice, coeff, xi, std::move(fixed), opt);
    const double value = sol.energy / std::pow(static_cast<double>(r), Dim);
    res.convergence_table.push_back({r, value, sol.residual});
    res.residual = sol.residual;
    res.iterations += sol.iterations;
    if (opt.keep_corrector) res.corrector = std::move(sol.u);
    if (k > 0) {
      double prev = res.convergence_table[k - 1].value;
      if (std::abs(value - prev) / prev < 1e-3) break;
    }
  }
  res.value = res.convergence_table.back().value;
  res.extrapolated = res.value;
  if (res.convergence_table.size() >= 2) {
    const auto& a = res.convergence_table[res.convergence_table.size() - 2];
    const auto& b = res.convergence_table.back();
    double ratio = static_cast<double>(b.size) / a.size;
    res.extrapolated = (ratio * b.value - a.value) / (ratio - 1.0);
  }
  return res;
}

/// Outcome of one batch entry; solver errors are captured, not propagated.
struct BatchEntry {
  std::optional<EffectiveDensityResult> result;
  std::string error;
  bool ok() const { return result.has_value(); }
};

template <int Dim>
std::vector<BatchEntry> f_hom_table(const BulkIntegrand<Dim>& f, const std::vector<Vec<Dim>>& xi_list,
                                    std::span<const int> r_list, int n_per_cell, const SolverOptions& opt = {},
                                    int workers = 1) {
  if (xi_list.empty()) throw InputError("f_hom_table: empty gradient list");
  std::vector<BatchEntry> out(xi_list.size());
  detail::parallel_for(xi_list.size(), workers, [&](std::size_t i) {
    try {
      out[i].result = solve_f_hom<Dim>(f, xi_list[i], r_list, n_per_cell, opt);
    } catch (const Error& e) {
      out[i].error = e.what();
    }
  });
  return out;
}

template <int Dim>
std::vector<BatchEntry> h_hom_table(const SurfaceIntegrand<Dim>& h, const std::vector<Vec<Dim>>& w_list, int N,
                                    const SolverOptions& opt = {}, int workers = 1) {
  if (w_list.empty()) throw InputError("h_hom_table: empty direction list");
  std::vector<BatchEntry> out(w_list.size());
  detail::parallel_for(w_list.size(), workers, [&](std::size_t i) {
    try {
      out[i].result = solve_h_hom<Dim>(h, w_list[i], N, opt);
    } catch (const Error& e) {
      out[i].error = e.what();
    }
  });
  return out;
}

/// Matrix H with h_hom(w) = w . H w, recovered by polarization from
/// Dim (Dim + 1) / 2 corrector solves.
template <int Dim>
Mat<Dim> homogenized_matrix(const SurfaceIntegrand<Dim>& h, int N, const SolverOptions& opt = {}) {
  Mat<Dim> H{};
  for (int i = 0; i < Dim; ++i) H[i][i] = solve_h_hom<Dim>(h, unit_vector<Dim>(i), N, opt).value;
  for (int i = 0; i < Dim; ++i)
    for (int j = i + 1; j < Dim; ++j) {
      double both = solve_h_hom<Dim>(h, unit_vector<Dim>(i) + unit_vector<Dim>(j), N, opt).value;
      H[i][j] = H[j][i] = 0.5 * (both - H[i][i] - H[j][j]);
    }
  return H;
}

}  // namespace athom
