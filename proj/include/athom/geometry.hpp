#pragma once

// Directions, the rotation nu -> R_nu, rotated cubes and periodic lattices.

#include <cmath>
#include <vector>

#include "athom/core.hpp"

namespace athom {

/// A unit vector in R^Dim.
template <int Dim>
class Direction {
 public:
  /// Normalizes `v`; throws InputError on the zero vector.
  static Direction normalized(const Vec<Dim>& v) {
    if (!all_finite<Dim>(v)) throw InputError("direction: non-finite components");
    double len = norm<Dim>(v);
    if (len == 0.0) throw InputError("direction: zero vector");
    return Direction((1.0 / len) * v);
  }

  /// Requires |v| = 1 within 1e-12.
  static Direction exact(const Vec<Dim>& v) {
    if (!all_finite<Dim>(v)) throw InputError("direction: non-finite components");
    double len = norm<Dim>(v);
    if (len == 0.0) throw InputError("direction: zero vector");
    if (std::abs(len - 1.0) > 1e-12) throw InputError("direction: vector is not of unit length");
    return Direction(v);
  }

  static Direction from_angle(double theta)
    requires(Dim == 2)
  {
    return Direction(Vec<2>{std::cos(theta), std::sin(theta)});
  }

  const Vec<Dim>& vec() const { return v_; }
  double operator[](int i) const { return v_[i]; }
  Direction operator-() const { return Direction((-1.0) * v_); }

  double angle() const
    requires(Dim == 2)
  {
    return std::atan2(v_[1], v_[0]);
  }

  /// Membership in the "upper" hemisphere: the last non-zero component is positive.
  bool upper_hemisphere() const {
    for (int i = Dim - 1; i >= 0; --i)
      if (v_[i] != 0.0) return v_[i] > 0.0;
    return true;
  }

 private:
  explicit Direction(const Vec<Dim>& v) : v_(v) {}
  Vec<Dim> v_;
};

/// Orthogonal R_nu with R_nu e_n = nu.
///
/// In 2D, R_nu = [[nu2, nu1], [-nu1, nu2]]. The same formula on both
/// hemispheres gives R_{-nu} = -R_nu, hence R_{-nu} Q = R_nu Q; the map is
/// continuous and rational for rational nu. In 1D, R_nu = [nu].
template <int Dim>
Mat<Dim> build_rotation(const Direction<Dim>& nu) {
  static_assert(Dim == 1 || Dim == 2, "rotations are provided for n = 1, 2");
  Mat<Dim> r{};
  if constexpr (Dim == 1) {
    r[0][0] = nu[0];
  } else {
    r[0][0] = nu[1];
    r[0][1] = nu[0];
    r[1][0] = -nu[0];
    r[1][1] = nu[1];
  }
  return r;
}

template <int Dim>
Mat<Dim> build_rotation(const Vec<Dim>& nu) {
  return build_rotation<Dim>(Direction<Dim>::exact(nu));
}

/// u^nu_zeta(x): zeta on {x.nu >= 0}, 0 elsewhere.
template <int Dim>
double jump_function(double zeta, const Direction<Dim>& nu, const Vec<Dim>& x) {
  return dot<Dim>(x, nu.vec()) >= 0.0 ? zeta : 0.0;
}

/// u_xi(x) = xi . x
template <int Dim>
double linear_function(const Vec<Dim>& xi, const Vec<Dim>& x) {
  return dot<Dim>(xi, x);
}

/// Uniform lattice on the rotated cube Q^nu_r = R_nu Q_r, stored in
/// cube-intrinsic coordinates p in [-r/2, r/2]^Dim; the physical point is R_nu p.
template <int Dim>
class RotatedCubeGrid {
 public:
  RotatedCubeGrid(Direction<Dim> nu, double r, double spacing, double boundary_layer = -1.0)
      : nu_(nu), r_(r) {
    if (!(r > 0.0) || !(spacing > 0.0)) throw InputError("rotated cube grid: r and spacing must be positive");
    cells_ = static_cast<int>(std::lround(r / spacing));
    if (cells_ < 1) throw InputError("rotated cube grid: spacing larger than the cube");
    spacing_ = r / cells_;
    layer_ = boundary_layer > 0.0 ? boundary_layer : 2.0 * spacing_;
    rot_ = build_rotation<Dim>(nu);
  }

  const Direction<Dim>& nu() const { return nu_; }
  const Mat<Dim>& rotation() const { return rot_; }
  double side() const { return r_; }
  double spacing() const { return spacing_; }
  double boundary_layer() const { return layer_; }
  int cells_per_axis() const { return cells_; }
  int nodes_per_axis() const { return cells_ + 1; }
  std::size_t node_count() const {
    std::size_t n = 1;
    for (int d = 0; d < Dim; ++d) n *= static_cast<std::size_t>(nodes_per_axis());
    return n;
  }

  double local_coordinate(int i) const { return -0.5 * r_ + i * spacing_; }

  Vec<Dim> local_point(const std::array<int, Dim>& idx) const {
    Vec<Dim> p;
    for (int d = 0; d < Dim; ++d) p[d] = local_coordinate(idx[d]);
    return p;
  }

  Vec<Dim> to_global(const Vec<Dim>& local) const { return matvec<Dim>(rot_, local); }
  Vec<Dim> to_local(const Vec<Dim>& global) const { return matvec<Dim>(transpose<Dim>(rot_), global); }

  Vec<Dim> node(const std::array<int, Dim>& idx) const { return to_global(local_point(idx)); }

  /// Distance (in intrinsic coordinates) from a node to the cube boundary.
  double distance_to_boundary(const std::array<int, Dim>& idx) const {
    int m = cells_;
    for (int d = 0; d < Dim; ++d) m = std::min(m, std::min(idx[d], cells_ - idx[d]));
    return m * spacing_;
  }

  /// Node lies in the "near the boundary" band where boundary data is imposed.
  bool in_boundary_layer(const std::array<int, Dim>& idx) const {
    return distance_to_boundary(idx) < layer_ - 1e-9 * spacing_;
  }

  /// Number of node layers inside the boundary band.
  int layer_nodes() const { return static_cast<int>(std::ceil(layer_ / spacing_ - 1e-9)); }

 private:
  Direction<Dim> nu_;
  double r_;
  double spacing_ = 0.0;
  double layer_ = 0.0;
  int cells_ = 0;
  Mat<Dim> rot_{};
};

/// N^Dim nodes on the unit torus with spacing 1/N and wrap-around indexing.
template <int Dim>
class TorusGrid {
 public:
  explicit TorusGrid(int n) : n_(n) {
    if (n < 1) throw InputError("torus grid: N must be positive");
  }
  int nodes_per_axis() const { return n_; }
  double spacing() const { return 1.0 / n_; }
  std::size_t node_count() const {
    std::size_t c = 1;
    for (int d = 0; d < Dim; ++d) c *= static_cast<std::size_t>(n_);
    return c;
  }
  int wrap(int i) const {
    int m = i % n_;
    return m < 0 ? m + n_ : m;
  }
  std::size_t index(const std::array<int, Dim>& idx) const {
    std::size_t k = 0, stride = 1;
    for (int d = 0; d < Dim; ++d) {
      k += stride * static_cast<std::size_t>(wrap(idx[d]));
      stride *= static_cast<std::size_t>(n_);
    }
    return k;
  }
  Vec<Dim> node(const std::array<int, Dim>& idx) const {
    Vec<Dim> p;
    for (int d = 0; d < Dim; ++d) p[d] = static_cast<double>(wrap(idx[d])) / n_;
    return p;
  }
  Vec<Dim> cell_midpoint(const std::array<int, Dim>& idx) const {
    Vec<Dim> p;
    for (int d = 0; d < Dim; ++d) p[d] = (wrap(idx[d]) + 0.5) / n_;
    return p;
  }

 private:
  int n_;
};

}  // namespace athom
