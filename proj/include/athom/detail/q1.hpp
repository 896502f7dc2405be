#pragma once

// Multilinear (Q1) elements on uniform structured lattices, periodic or boxed.
// Element integrals use the tensor 2-point Gauss rule, which is exact for
// products of Q1 shape functions and their gradients on a cell with a constant
// coefficient.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "athom/core.hpp"

namespace athom::detail {

template <int Dim>
struct Q1Reference {
  static constexpr int kCorners = 1 << Dim;
  static constexpr int kPoints = 1 << Dim;

  std::array<double, kPoints> weight{};
  std::array<std::array<double, kCorners>, kPoints> shape{};
  std::array<std::array<Vec<Dim>, kCorners>, kPoints> grad{};

  static const Q1Reference& get() {
    static const Q1Reference ref = build();
    return ref;
  }

 private:
  static Q1Reference build() {
    Q1Reference q;
    const double g[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
    for (int p = 0; p < kPoints; ++p) {
      Vec<Dim> x;
      for (int d = 0; d < Dim; ++d) x[d] = g[(p >> d) & 1];
      q.weight[p] = 1.0 / kPoints;
      for (int c = 0; c < kCorners; ++c) {
        double val = 1.0;
        Vec<Dim> gr;
        for (int d = 0; d < Dim; ++d) {
          int bit = (c >> d) & 1;
          double f = bit ? x[d] : 1.0 - x[d];
          val *= f;
        }
        for (int d = 0; d < Dim; ++d) {
          double prod = 1.0;
          for (int e = 0; e < Dim; ++e) {
            int bit = (c >> e) & 1;
            if (e == d)
              prod *= bit ? 1.0 : -1.0;
            else
              prod *= bit ? x[e] : 1.0 - x[e];
          }
          gr[d] = prod;
        }
        q.shape[p][c] = val;
        q.grad[p][c] = gr;
      }
    }
    return q;
  }
};

/// Uniform lattice with `cells[d]` cells of size h along each axis. Periodic
/// lattices identify the last node layer with the first.
template <int Dim>
class StructuredLattice {
 public:
  static constexpr int kCorners = 1 << Dim;

  StructuredLattice(std::array<int, Dim> cells, double h, Vec<Dim> origin, bool periodic)
      : cells_(cells), h_(h), origin_(origin), periodic_(periodic) {
    node_count_ = 1;
    cell_count_ = 1;
    for (int d = 0; d < Dim; ++d) {
      if (cells_[d] < 1) throw InputError("lattice: cell count must be positive");
      nodes_[d] = periodic_ ? cells_[d] : cells_[d] + 1;
      node_count_ *= static_cast<std::size_t>(nodes_[d]);
      cell_count_ *= static_cast<std::size_t>(cells_[d]);
    }
  }

  std::size_t node_count() const { return node_count_; }
  std::size_t cell_count() const { return cell_count_; }
  double spacing() const { return h_; }
  bool periodic() const { return periodic_; }
  int cells(int d) const { return cells_[d]; }
  int nodes(int d) const { return nodes_[d]; }
  const Vec<Dim>& origin() const { return origin_; }

  std::array<int, Dim> cell_index(std::size_t cell) const {
    std::array<int, Dim> idx;
    for (int d = 0; d < Dim; ++d) {
      idx[d] = static_cast<int>(cell % cells_[d]);
      cell /= cells_[d];
    }
    return idx;
  }

  std::array<int, Dim> node_index(std::size_t node) const {
    std::array<int, Dim> idx;
    for (int d = 0; d < Dim; ++d) {
      idx[d] = static_cast<int>(node % nodes_[d]);
      node /= nodes_[d];
    }
    return idx;
  }

  std::size_t node_id(const std::array<int, Dim>& idx) const {
    std::size_t k = 0, stride = 1;
    for (int d = 0; d < Dim; ++d) {
      int i = idx[d];
      if (periodic_) i = ((i % nodes_[d]) + nodes_[d]) % nodes_[d];
      k += stride * static_cast<std::size_t>(i);
      stride *= static_cast<std::size_t>(nodes_[d]);
    }
    return k;
  }

  std::array<std::size_t, kCorners> corners(std::size_t cell) const {
    auto base = cell_index(cell);
    std::array<std::size_t, kCorners> out;
    for (int c = 0; c < kCorners; ++c) {
      std::array<int, Dim> idx = base;
      for (int d = 0; d < Dim; ++d) idx[d] += (c >> d) & 1;
      out[c] = node_id(idx);
    }
    return out;
  }

  Vec<Dim> cell_midpoint(std::size_t cell) const {
    auto idx = cell_index(cell);
    Vec<Dim> p;
    for (int d = 0; d < Dim; ++d) p[d] = origin_[d] + (idx[d] + 0.5) * h_;
    return p;
  }

  Vec<Dim> node_position(std::size_t node) const {
    auto idx = node_index(node);
    Vec<Dim> p;
    for (int d = 0; d < Dim; ++d) p[d] = origin_[d] + idx[d] * h_;
    return p;
  }

  /// Nodes on the outer boundary of a boxed lattice.
  bool on_boundary(std::size_t node) const {
    if (periodic_) return false;
    auto idx = node_index(node);
    for (int d = 0; d < Dim; ++d)
      if (idx[d] == 0 || idx[d] == cells_[d]) return true;
    return false;
  }

 private:
  std::array<int, Dim> cells_;
  std::array<int, Dim> nodes_{};
  double h_;
  Vec<Dim> origin_;
  bool periodic_;
  std::size_t node_count_ = 0;
  std::size_t cell_count_ = 0;
};

template <int Dim>
using ElementMatrix = std::array<double, (1 << Dim) * (1 << Dim)>;
template <int Dim>
using ElementVector = std::array<double, (1 << Dim)>;

/// K_ab = int_cell grad phi_a . A grad phi_b
template <int Dim>
ElementMatrix<Dim> element_stiffness(const Mat<Dim>& a, double h) {
  constexpr int K = 1 << Dim;
  const auto& ref = Q1Reference<Dim>::get();
  const double scale = std::pow(h, Dim - 2);
  ElementMatrix<Dim> k{};
  for (int p = 0; p < K; ++p) {
    for (int i = 0; i < K; ++i) {
      Vec<Dim> agi = matvec<Dim>(a, ref.grad[p][i]);
      for (int j = 0; j < K; ++j) k[i * K + j] += ref.weight[p] * scale * dot<Dim>(agi, ref.grad[p][j]);
    }
  }
  return k;
}

/// M_ab = int_cell phi_a phi_b
template <int Dim>
ElementMatrix<Dim> element_mass(double h) {
  constexpr int K = 1 << Dim;
  const auto& ref = Q1Reference<Dim>::get();
  const double scale = std::pow(h, Dim);
  ElementMatrix<Dim> m{};
  for (int p = 0; p < K; ++p)
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j) m[i * K + j] += ref.weight[p] * scale * ref.shape[p][i] * ref.shape[p][j];
  return m;
}

/// b_a = int_cell grad phi_a . A w
template <int Dim>
ElementVector<Dim> element_shift_load(const Mat<Dim>& a, const Vec<Dim>& w, double h) {
  constexpr int K = 1 << Dim;
  const auto& ref = Q1Reference<Dim>::get();
  const double scale = std::pow(h, Dim - 1);
  Vec<Dim> aw = matvec<Dim>(a, w);
  ElementVector<Dim> b{};
  for (int p = 0; p < K; ++p)
    for (int i = 0; i < K; ++i) b[i] += ref.weight[p] * scale * dot<Dim>(ref.grad[p][i], aw);
  return b;
}

/// Gradient of the Q1 interpolant of `values` (corner ordering) at Gauss point p.
template <int Dim>
Vec<Dim> element_gradient(const ElementVector<Dim>& values, int p, double h) {
  constexpr int K = 1 << Dim;
  const auto& ref = Q1Reference<Dim>::get();
  Vec<Dim> g{};
  for (int c = 0; c < K; ++c)
    for (int d = 0; d < Dim; ++d) g[d] += values[c] * ref.grad[p][c][d] / h;
  return g;
}

/// Matrix-free operator y = sum_cells P^T K_cell P x with fixed (masked) nodes
/// treated as homogeneous Dirichlet nodes.
template <int Dim>
class ElementOperator {
 public:
  static constexpr int K = 1 << Dim;

  ElementOperator(const StructuredLattice<Dim>& lattice, std::vector<ElementMatrix<Dim>> matrices,
                  std::vector<char> fixed = {})
      : lattice_(lattice), mats_(std::move(matrices)), fixed_(std::move(fixed)) {
    corners_.resize(lattice_.cell_count());
    for (std::size_t c = 0; c < lattice_.cell_count(); ++c) corners_[c] = lattice_.corners(c);
  }

  void apply(std::span<const double> x, std::span<double> y) const {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t c = 0; c < corners_.size(); ++c) {
      const auto& nd = corners_[c];
      const auto& k = mats_[c];
      double xe[K];
      for (int i = 0; i < K; ++i) xe[i] = (fixed_.empty() || !fixed_[nd[i]]) ? x[nd[i]] : 0.0;
      for (int i = 0; i < K; ++i) {
        double s = 0.0;
        for (int j = 0; j < K; ++j) s += k[i * K + j] * xe[j];
        y[nd[i]] += s;
      }
    }
    if (!fixed_.empty())
      for (std::size_t i = 0; i < y.size(); ++i)
        if (fixed_[i]) y[i] = 0.0;
  }

  const std::vector<std::array<std::size_t, K>>& corners() const { return corners_; }
  const std::vector<ElementMatrix<Dim>>& matrices() const { return mats_; }

 private:
  const StructuredLattice<Dim>& lattice_;
  std::vector<ElementMatrix<Dim>> mats_;
  std::vector<char> fixed_;
  std::vector<std::array<std::size_t, K>> corners_;
};

}  // namespace athom::detail
