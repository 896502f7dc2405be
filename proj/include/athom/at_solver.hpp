#pragma once

// Discrete eps-level phase-field functional
//
//   F(u, v) = int (v^2 + eta) f(x/delta, grad u) + (1 - v)^2 / eps + eps h(x/delta, grad v)
//
// with the fidelity term int |u - g|^2, on P1 simplices of an axis box.
// Gradient terms are element constants with the coefficient sampled at the
// element centroid. Zeroth-order terms (v^2 + eta, (1 - v)^2, |u - g|^2) use
// the vertex rule (mean over the element's vertices), which makes the v-system
// an M-matrix for isotropic coefficients and the discrete Young bound exact.
//
// Alternate minimization: each half-sweep is an exact quadratic minimization
// (one sparse LDLT solve), so the energy cannot increase.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <vector>

#include "athom/core.hpp"
#include "athom/integrands.hpp"
#include "athom/regime.hpp"

namespace athom {

/// Uniform P1 mesh of [0, L_0] x ... ; 2D cells are split along the (+,+) diagonal.
template <int Dim>
class SimplexMesh {
  static_assert(Dim == 1 || Dim == 2, "P1 meshes are provided for n = 1, 2");

 public:
  static constexpr int kVerts = Dim + 1;

  SimplexMesh(Vec<Dim> lengths, std::array<int, Dim> cells) : lengths_(lengths), cells_(cells) {
    nodes_ = 1;
    for (int d = 0; d < Dim; ++d) {
      if (!(lengths[d] > 0.0) || cells[d] < 1) throw InputError("mesh: lengths and cell counts must be positive");
      h_[d] = lengths[d] / cells[d];
      nodes_ *= static_cast<std::size_t>(cells[d] + 1);
    }
    build();
  }

  std::size_t node_count() const { return nodes_; }
  std::size_t element_count() const { return verts_.size(); }
  double spacing(int d) const { return h_[d]; }
  double max_spacing() const { return *std::max_element(h_.begin(), h_.end()); }
  const Vec<Dim>& lengths() const { return lengths_; }
  int cells(int d) const { return cells_[d]; }
  double volume() const {
    double v = 1.0;
    for (double l : lengths_) v *= l;
    return v;
  }

  const std::array<std::size_t, kVerts>& vertices(std::size_t e) const { return verts_[e]; }
  const std::array<Vec<Dim>, kVerts>& basis_gradients(std::size_t e) const { return grads_[e]; }
  double measure(std::size_t /*e*/) const { return measure_; }
  const Vec<Dim>& centroid(std::size_t e) const { return centroids_[e]; }

  Vec<Dim> node_position(std::size_t k) const {
    Vec<Dim> p;
    for (int d = 0; d < Dim; ++d) {
      p[d] = static_cast<double>(k % (cells_[d] + 1)) * h_[d];
      k /= (cells_[d] + 1);
    }
    return p;
  }

  /// Gradient of a nodal field on element e.
  Vec<Dim> gradient(const std::vector<double>& field, std::size_t e) const {
    Vec<Dim> g{};
    for (int i = 0; i < kVerts; ++i) g = g + field[verts_[e][i]] * grads_[e][i];
    return g;
  }

 private:
  void build() {
    if constexpr (Dim == 1) {
      measure_ = h_[0];
      for (int i = 0; i < cells_[0]; ++i) {
        verts_.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(i + 1)});
        grads_.push_back({Vec<1>{-1.0 / h_[0]}, Vec<1>{1.0 / h_[0]}});
        centroids_.push_back(Vec<1>{(i + 0.5) * h_[0]});
      }
    } else {
      const double hx = h_[0], hy = h_[1];
      const std::size_t nx = cells_[0] + 1;
      measure_ = 0.5 * hx * hy;
      for (int j = 0; j < cells_[1]; ++j)
        for (int i = 0; i < cells_[0]; ++i) {
          std::size_t n00 = j * nx + i, n10 = n00 + 1, n01 = n00 + nx, n11 = n01 + 1;
          double x0 = i * hx, y0 = j * hy;
          verts_.push_back({n00, n10, n11});
          grads_.push_back({Vec<2>{-1.0 / hx, 0.0}, Vec<2>{1.0 / hx, -1.0 / hy}, Vec<2>{0.0, 1.0 / hy}});
          centroids_.push_back(Vec<2>{x0 + 2.0 * hx / 3.0, y0 + hy / 3.0});
          verts_.push_back({n00, n11, n01});
          grads_.push_back({Vec<2>{0.0, -1.0 / hy}, Vec<2>{1.0 / hx, 0.0}, Vec<2>{-1.0 / hx, 1.0 / hy}});
          centroids_.push_back(Vec<2>{x0 + hx / 3.0, y0 + 2.0 * hy / 3.0});
        }
    }
  }

  Vec<Dim> lengths_;
  std::array<int, Dim> cells_;
  Vec<Dim> h_{};
  std::size_t nodes_ = 0;
  double measure_ = 0.0;
  std::vector<std::array<std::size_t, kVerts>> verts_;
  std::vector<std::array<Vec<Dim>, kVerts>> grads_;
  std::vector<Vec<Dim>> centroids_;
};

template <int Dim>
struct PhaseFieldState {
  SimplexMesh<Dim> mesh;
  std::vector<double> u;
  std::vector<double> v;
  ScaleParams scales;
};

struct EnergyParts {
  double bulk = 0.0;          // int (v^2 + eta) f
  double penalty = 0.0;       // int (1 - v)^2 / eps
  double surface_grad = 0.0;  // int eps h
  double fidelity = 0.0;      // int |u - g|^2
  double functional() const { return bulk + penalty + surface_grad; }
  double total() const { return functional() + fidelity; }
};

namespace detail {

template <int Dim>
void check_state(const PhaseFieldState<Dim>& s) {
  const std::size_t n = s.mesh.node_count();
  if (s.u.size() != n || s.v.size() != n) throw InputError("phase field: field sizes do not match the mesh");
  if (!(s.scales.eps > 0.0) || !(s.scales.delta > 0.0) || !(s.scales.eta >= 0.0))
    throw InputError("phase field: eps, delta must be positive and eta nonnegative");
}

template <int Dim>
Vec<Dim> fast_variable(const Vec<Dim>& x, double delta) {
  return (1.0 / delta) * x;
}

}  // namespace detail

/// Energy of the state; `datum` (optional, nodal) adds the fidelity term.
template <int Dim>
EnergyParts energy_parts(const PhaseFieldState<Dim>& s, const BulkIntegrand<Dim>& f, const SurfaceIntegrand<Dim>& h,
                         const std::vector<double>* datum = nullptr) {
  detail::check_state(s);
  if (datum && datum->size() != s.mesh.node_count()) throw InputError("phase field: datum size mismatch");
  constexpr int K = Dim + 1;
  const auto& m = s.mesh;
  const double eps = s.scales.eps, eta = s.scales.eta;
  EnergyParts p;
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const auto& vs = m.vertices(e);
    const double w = m.measure(e) / K;
    Vec<Dim> y = detail::fast_variable<Dim>(m.centroid(e), s.scales.delta);
    double sv = 0.0, pen = 0.0, fid = 0.0;
    for (int i = 0; i < K; ++i) {
      double vi = s.v[vs[i]];
      sv += vi * vi + eta;
      pen += (1.0 - vi) * (1.0 - vi);
      if (datum) fid += (s.u[vs[i]] - (*datum)[vs[i]]) * (s.u[vs[i]] - (*datum)[vs[i]]);
    }
    p.bulk += w * sv * f.coefficient.value(y, m.gradient(s.u, e));
    p.penalty += w * pen / eps;
    p.surface_grad += m.measure(e) * eps * h.coefficient.value(y, m.gradient(s.v, e));
    p.fidelity += w * fid;
  }
  return p;
}

template <int Dim>
double energy_F_eps(const PhaseFieldState<Dim>& s, const BulkIntegrand<Dim>& f, const SurfaceIntegrand<Dim>& h) {
  return energy_parts(s, f, h).functional();
}

/// The unit-integrand functional (f = |xi|^2, h = |w|^2) on the same quadrature.
template <int Dim>
double at_energy(const PhaseFieldState<Dim>& s) {
  auto one = PeriodicField<Dim>::constant(1.0);
  return energy_F_eps(s, isotropic_bulk<Dim>(one, 1.0, 1.0), isotropic_surface<Dim>(one, 1.0, 1.0));
}

namespace detail {

/// Stiffness sum_e weight_e int grad phi_i . A_e grad phi_j.
template <int Dim, class WeightFn, class MatFn>
Eigen::SparseMatrix<double> assemble_stiffness(const SimplexMesh<Dim>& m, WeightFn weight, MatFn matrix) {
  constexpr int K = Dim + 1;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m.element_count() * K * K + m.node_count());
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const auto& vs = m.vertices(e);
    const auto& g = m.basis_gradients(e);
    Mat<Dim> A = matrix(e);
    double w = weight(e) * m.measure(e);
    for (int i = 0; i < K; ++i) {
      Vec<Dim> ag = matvec<Dim>(A, g[i]);
      for (int j = 0; j < K; ++j) trip.emplace_back(vs[i], vs[j], w * dot<Dim>(ag, g[j]));
    }
  }
  Eigen::SparseMatrix<double> S(m.node_count(), m.node_count());
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

template <int Dim>
struct QuadraticSystem {
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;  // minimizer of x^T A x - 2 b^T x + const
};

/// u-subproblem at fixed v: (K_{(v^2+eta) f} + D) u = D g.
template <int Dim>
QuadraticSystem<Dim> u_system(const PhaseFieldState<Dim>& s, const BulkIntegrand<Dim>& f,
                              const std::vector<double>& g) {
  constexpr int K = Dim + 1;
  const auto& m = s.mesh;
  auto weight = [&](std::size_t e) {
    double sv = 0.0;
    for (int i = 0; i < K; ++i) sv += s.v[m.vertices(e)[i]] * s.v[m.vertices(e)[i]] + s.scales.eta;
    return sv / K;
  };
  auto matrix = [&](std::size_t e) {
    return f.coefficient.matrix(fast_variable<Dim>(m.centroid(e), s.scales.delta));
  };
  QuadraticSystem<Dim> q;
  q.A = assemble_stiffness<Dim>(m, weight, matrix);
  q.b = Eigen::VectorXd::Zero(m.node_count());
  Eigen::VectorXd d = Eigen::VectorXd::Zero(m.node_count());
  for (std::size_t e = 0; e < m.element_count(); ++e)
    for (int i = 0; i < K; ++i) d[m.vertices(e)[i]] += m.measure(e) / K;
  for (std::size_t k = 0; k < m.node_count(); ++k) {
    q.A.coeffRef(k, k) += d[k];
    q.b[k] = d[k] * g[k];
  }
  return q;
}

/// v-subproblem at fixed u: (eps K_h + diag(sum |e|/K (F_e + 1/eps))) v = sum |e|/K / eps.
template <int Dim>
QuadraticSystem<Dim> v_system(const PhaseFieldState<Dim>& s, const BulkIntegrand<Dim>& f,
                              const SurfaceIntegrand<Dim>& h) {
  constexpr int K = Dim + 1;
  const auto& m = s.mesh;
  const double eps = s.scales.eps;
  auto weight = [&](std::size_t) { return eps; };
  auto matrix = [&](std::size_t e) {
    return h.coefficient.matrix(fast_variable<Dim>(m.centroid(e), s.scales.delta));
  };
  QuadraticSystem<Dim> q;
  q.A = assemble_stiffness<Dim>(m, weight, matrix);
  q.b = Eigen::VectorXd::Zero(m.node_count());
  Eigen::VectorXd d = Eigen::VectorXd::Zero(m.node_count());
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    Vec<Dim> y = fast_variable<Dim>(m.centroid(e), s.scales.delta);
    double F = f.coefficient.value(y, m.gradient(s.u, e));
    double w = m.measure(e) / K;
    for (int i = 0; i < K; ++i) {
      d[m.vertices(e)[i]] += w * (F + 1.0 / eps);
      q.b[m.vertices(e)[i]] += w / eps;
    }
  }
  for (std::size_t k = 0; k < m.node_count(); ++k) q.A.coeffRef(k, k) += d[k];
  return q;
}

inline Eigen::VectorXd solve_spd(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b, double& residual) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw SolverError("phase field: factorization failed", 1.0);
  Eigen::VectorXd x = ldlt.solve(b);
  double bn = b.norm();
  residual = bn > 0.0 ? (A * x - b).norm() / bn : (A * x).norm();
  return x;
}

}  // namespace detail

/// Gradient of F + int |u - g|^2 with respect to the nodal values of u and v.
template <int Dim>
std::pair<std::vector<double>, std::vector<double>> energy_gradient(const PhaseFieldState<Dim>& s,
                                                                    const BulkIntegrand<Dim>& f,
                                                                    const SurfaceIntegrand<Dim>& h,
                                                                    const std::vector<double>& g) {
  detail::check_state(s);
  if (g.size() != s.mesh.node_count()) throw InputError("phase field: datum size mismatch");
  const std::size_t n = s.mesh.node_count();
  Eigen::Map<const Eigen::VectorXd> u(s.u.data(), n), v(s.v.data(), n);
  auto qu = detail::u_system(s, f, g);
  auto qv = detail::v_system(s, f, h);
  Eigen::VectorXd gu = 2.0 * (qu.A * u - qu.b);
  Eigen::VectorXd gv = 2.0 * (qv.A * v - qv.b);
  return {std::vector<double>(gu.data(), gu.data() + n), std::vector<double>(gv.data(), gv.data() + n)};
}

struct AtOptions {
  double tol = 1e-8;
  int max_sweeps = 500;
  double q = 2.0;
};

template <int Dim>
struct MinimizationReport {
  PhaseFieldState<Dim> state;
  std::vector<double> history;             // total energy after each full sweep
  std::vector<double> half_sweep_history;  // initial, then after every v- and u-solve
  double M_eps = 0.0;
  EnergyParts parts;
  int sweeps = 0;
  bool converged = false;
  double max_increase = 0.0;       // largest energy increase over any half-sweep
  double max_box_violation = 0.0;  // max(0, -min v, max v - 1) over all v-solves
  double max_residual = 0.0;
};

/// Initial u: g after one pass of nearest-neighbour averaging along each axis.
template <int Dim>
std::vector<double> smoothed_datum(const SimplexMesh<Dim>& m, const std::vector<double>& g) {
  std::vector<double> out = g;
  for (int d = 0; d < Dim; ++d) {
    std::vector<double> src = out;
    std::size_t stride = 1;
    for (int e = 0; e < d; ++e) stride *= static_cast<std::size_t>(m.cells(e) + 1);
    const int n = m.cells(d) + 1;
    for (std::size_t k = 0; k < src.size(); ++k) {
      int i = static_cast<int>((k / stride) % n);
      double sum = src[k];
      int cnt = 1;
      if (i > 0) sum += src[k - stride], ++cnt;
      if (i < n - 1) sum += src[k + stride], ++cnt;
      out[k] = sum / cnt;
    }
  }
  return out;
}

/// Requires spacing <= delta / 8 whenever f or h oscillates.
template <int Dim>
void check_resolution(const SimplexMesh<Dim>& m, const BulkIntegrand<Dim>& f, const SurfaceIntegrand<Dim>& h,
                      double delta) {
  bool oscillating = !f.coefficient.is_constant() || !h.coefficient.is_constant();
  if (oscillating && m.max_spacing() > delta / 8.0 * (1.0 + 1e-12))
    throw InputError("phase field: grid spacing " + std::to_string(m.max_spacing()) +
                     " does not resolve delta / 8 = " + std::to_string(delta / 8.0));
}

template <int Dim>
MinimizationReport<Dim> minimize_F_eps(const BulkIntegrand<Dim>& f, const SurfaceIntegrand<Dim>& h,
                                       const ScaleParams& scales, const SimplexMesh<Dim>& mesh,
                                       const std::vector<double>& g, const AtOptions& opt = {}) {
  if (opt.q != 2.0) throw UnsupportedError("minimize_F_eps: only q = 2 is supported");
  if (g.size() != mesh.node_count()) throw InputError("minimize_F_eps: datum size mismatch");
  for (double x : g)
    if (!std::isfinite(x)) throw InputError("minimize_F_eps: datum must be finite");
  if (opt.max_sweeps < 1 || !(opt.tol > 0.0)) throw InputError("minimize_F_eps: tol and max_sweeps must be positive");
  check_resolution(mesh, f, h, scales.delta);

  MinimizationReport<Dim> rep{PhaseFieldState<Dim>{mesh, smoothed_datum(mesh, g),
                                                   std::vector<double>(mesh.node_count(), 1.0), scales},
                              {}, {}, 0.0, {}, 0, false, 0.0, 0.0, 0.0};
  auto& s = rep.state;
  const std::size_t n = mesh.node_count();
  auto total = [&] { return energy_parts(s, f, h, &g).total(); };
  double prev = total();
  rep.half_sweep_history.push_back(prev);
  auto record = [&](double e, double before) {
    rep.half_sweep_history.push_back(e);
    double slack = 1e-12 * std::max(1.0, std::abs(before));
    rep.max_increase = std::max(rep.max_increase, e - before - slack > 0.0 ? e - before : 0.0);
  };

  // Each sweep updates v first, so the damage field sees the sharp gradients of
  // the initial u before any elastic relaxation.
  for (int it = 0; it < opt.max_sweeps; ++it) {
    double res = 0.0;
    auto qv = detail::v_system(s, f, h);
    Eigen::VectorXd v = detail::solve_spd(qv.A, qv.b, res);
    rep.max_residual = std::max(rep.max_residual, res);
    std::copy(v.data(), v.data() + n, s.v.begin());
    for (double x : s.v) rep.max_box_violation = std::max({rep.max_box_violation, -x, x - 1.0});
    double e1 = total();
    record(e1, prev);

    auto qu = detail::u_system(s, f, g);
    Eigen::VectorXd u = detail::solve_spd(qu.A, qu.b, res);
    rep.max_residual = std::max(rep.max_residual, res);
    std::copy(u.data(), u.data() + n, s.u.begin());
    double e2 = total();
    record(e2, e1);

    rep.history.push_back(e2);
    rep.sweeps = it + 1;
    double decrease = prev - e2;
    if (e2 == 0.0 || decrease <= opt.tol * std::max(std::abs(prev), 1e-300)) {
      rep.converged = true;
      prev = e2;
      break;
    }
    prev = e2;
  }
  rep.parts = energy_parts(s, f, h, &g);
  rep.M_eps = rep.parts.total();
  return rep;
}

struct YoungCheck {
  double lhs = 0.0;  // int (1 - v)^2 / eps + eps h(x/delta, grad v)
  double rhs = 0.0;  // 2 int |1 - v| sqrt(h(x/delta, grad v))
  bool holds = true;
};

/// Pointwise Young inequality a^2/eps + eps b^2 >= 2ab, integrated with the
/// same quadrature as the functional, so the discrete inequality is exact.
template <int Dim>
YoungCheck young_lower_bound_check(const PhaseFieldState<Dim>& s, const SurfaceIntegrand<Dim>& h,
                                   double slack = 1e-10) {
  detail::check_state(s);
  constexpr int K = Dim + 1;
  const auto& m = s.mesh;
  const double eps = s.scales.eps;
  YoungCheck c;
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const auto& vs = m.vertices(e);
    Vec<Dim> y = detail::fast_variable<Dim>(m.centroid(e), s.scales.delta);
    double hv = h.coefficient.value(y, m.gradient(s.v, e));
    double pen = 0.0, absdev = 0.0;
    for (int i = 0; i < K; ++i) {
      double d = 1.0 - s.v[vs[i]];
      pen += d * d;
      absdev += std::abs(d);
    }
    c.lhs += m.measure(e) * (pen / K / eps + eps * hv);
    c.rhs += m.measure(e) * 2.0 * (absdev / K) * std::sqrt(hv);
  }
  c.holds = c.lhs >= c.rhs - slack * std::max(1.0, c.rhs);
  return c;
}

}  // namespace athom
