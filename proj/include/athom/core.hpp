#pragma once

// Small fixed-dimension vector/matrix helpers and the error hierarchy shared
// by every module of the toolkit.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace athom {

template <int Dim>
using Vec = std::array<double, Dim>;

template <int Dim>
using Mat = std::array<std::array<double, Dim>, Dim>;

// ---------------------------------------------------------------------------
// errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input (non-finite values, out-of-range parameters).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an estimate does not hold.
class PreconditionError : public InputError {
 public:
  using InputError::InputError;
};

/// Feature outside the supported subset (e.g. q != 2).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// A linear solver did not reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Configuration problem; carries the offending field path.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Broken internal invariant.
class InternalError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// vector helpers (operators deduce the array extent, hence std::size_t)

template <int Dim>
constexpr Vec<Dim> unit_vector(int axis) {
  Vec<Dim> e{};
  e[axis] = 1.0;
  return e;
}

template <int Dim>
double dot(const Vec<Dim>& a, const Vec<Dim>& b) {
  double s = 0.0;
  for (int i = 0; i < Dim; ++i) s += a[i] * b[i];
  return s;
}

template <int Dim>
double norm(const Vec<Dim>& a) {
  return std::sqrt(dot<Dim>(a, a));
}

template <std::size_t N>
std::array<double, N> operator+(const std::array<double, N>& a, const std::array<double, N>& b) {
  std::array<double, N> c;
  for (std::size_t i = 0; i < N; ++i) c[i] = a[i] + b[i];
  return c;
}

template <std::size_t N>
std::array<double, N> operator-(const std::array<double, N>& a, const std::array<double, N>& b) {
  std::array<double, N> c;
  for (std::size_t i = 0; i < N; ++i) c[i] = a[i] - b[i];
  return c;
}

template <std::size_t N>
std::array<double, N> operator*(double s, const std::array<double, N>& a) {
  std::array<double, N> c;
  for (std::size_t i = 0; i < N; ++i) c[i] = s * a[i];
  return c;
}

template <int Dim>
bool all_finite(const Vec<Dim>& a) {
  for (double x : a)
    if (!std::isfinite(x)) return false;
  return true;
}

template <int Dim>
Mat<Dim> identity_matrix() {
  Mat<Dim> m{};
  for (int i = 0; i < Dim; ++i) m[i][i] = 1.0;
  return m;
}

template <int Dim>
Vec<Dim> matvec(const Mat<Dim>& m, const Vec<Dim>& x) {
  Vec<Dim> y{};
  for (int i = 0; i < Dim; ++i)
    for (int j = 0; j < Dim; ++j) y[i] += m[i][j] * x[j];
  return y;
}

template <int Dim>
Mat<Dim> transpose(const Mat<Dim>& m) {
  Mat<Dim> t;
  for (int i = 0; i < Dim; ++i)
    for (int j = 0; j < Dim; ++j) t[i][j] = m[j][i];
  return t;
}

template <int Dim>
Mat<Dim> matmul(const Mat<Dim>& a, const Mat<Dim>& b) {
  Mat<Dim> c{};
  for (int i = 0; i < Dim; ++i)
    for (int k = 0; k < Dim; ++k)
      for (int j = 0; j < Dim; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

/// w . A w
template <int Dim>
double quadratic_form(const Mat<Dim>& a, const Vec<Dim>& w) {
  return dot<Dim>(w, matvec<Dim>(a, w));
}

/// R^T A R, the coefficient matrix seen in rotated coordinates.
template <int Dim>
Mat<Dim> congruence(const Mat<Dim>& a, const Mat<Dim>& r) {
  return matmul<Dim>(transpose<Dim>(r), matmul<Dim>(a, r));
}

template <int Dim>
double frobenius_distance(const Mat<Dim>& a, const Mat<Dim>& b) {
  double s = 0.0;
  for (int i = 0; i < Dim; ++i)
    for (int j = 0; j < Dim; ++j) s += (a[i][j] - b[i][j]) * (a[i][j] - b[i][j]);
  return std::sqrt(s);
}

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace athom
