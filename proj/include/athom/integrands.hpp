#pragma once

// Periodic bulk and surface integrands f(y, xi), h(y, w).
//
// Both are quadratic in the second argument: the coefficient is a symmetric
// matrix field A(y) = sum_k phi_k(y) M_k, where every phi_k is a strictly
// positive Q-periodic scalar field and every M_k a constant symmetric positive
// semi-definite matrix. The scalar-coefficient form a(y)|w|^2 is the special
// case of one term with M = I.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "athom/core.hpp"

namespace athom {

/// Fractional part in [0, 1).
inline double wrap_unit(double y) {
  double f = y - std::floor(y);
  return f >= 1.0 ? 0.0 : f;
}

template <int Dim>
struct TrigMode {
  std::array<int, Dim> k{};
  double cos_coeff = 0.0;
  double sin_coeff = 0.0;
};

/// A strictly positive, Q-periodic scalar field on R^Dim.
template <int Dim>
class PeriodicField {
 public:
  enum class Kind { piecewise_constant, trigonometric, laminate };

  static PeriodicField constant(double c) { return piecewise_constant(1, {c}); }

  /// Values on a k x ... x k partition of the unit cell, axis 0 varying fastest.
  static PeriodicField piecewise_constant(int k, std::vector<double> values) {
    if (k < 1) throw InputError("piecewise-constant field: partition size must be >= 1");
    std::size_t expected = 1;
    for (int d = 0; d < Dim; ++d) expected *= static_cast<std::size_t>(k);
    if (values.size() != expected)
      throw InputError("piecewise-constant field: expected " + std::to_string(expected) +
                       " values, got " + std::to_string(values.size()));
    PeriodicField f;
    f.kind_ = Kind::piecewise_constant;
    f.k_ = k;
    f.values_ = std::move(values);
    f.check_positive();
    return f;
  }

  /// Equal-width layers along `axis`; layer i covers [i/m, (i+1)/m).
  static PeriodicField laminate(int axis, std::vector<double> layer_values) {
    if (axis < 0 || axis >= Dim) throw InputError("laminate field: axis out of range");
    if (layer_values.empty()) throw InputError("laminate field: no layer values");
    PeriodicField f;
    f.kind_ = Kind::laminate;
    f.axis_ = axis;
    f.k_ = static_cast<int>(layer_values.size());
    f.values_ = std::move(layer_values);
    f.check_positive();
    return f;
  }

  /// mean + sum_k (c_k cos(2 pi k.y) + s_k sin(2 pi k.y)).
  static PeriodicField trigonometric(double mean, std::vector<TrigMode<Dim>> modes) {
    PeriodicField f;
    f.kind_ = Kind::trigonometric;
    f.mean_ = mean;
    f.modes_ = std::move(modes);
    f.check_positive();
    return f;
  }

  double operator()(const Vec<Dim>& y) const {
    switch (kind_) {
      case Kind::laminate: {
        int i = static_cast<int>(wrap_unit(y[axis_]) * k_);
        return values_[std::min(i, k_ - 1)];
      }
      case Kind::piecewise_constant: {
        std::size_t idx = 0, stride = 1;
        for (int d = 0; d < Dim; ++d) {
          int i = std::min(static_cast<int>(wrap_unit(y[d]) * k_), k_ - 1);
          idx += stride * static_cast<std::size_t>(i);
          stride *= static_cast<std::size_t>(k_);
        }
        return values_[idx];
      }
      case Kind::trigonometric: {
        Vec<Dim> yw;
        for (int d = 0; d < Dim; ++d) yw[d] = wrap_unit(y[d]);
        double v = mean_;
        for (const auto& m : modes_) {
          double phase = 0.0;
          for (int d = 0; d < Dim; ++d) phase += m.k[d] * yw[d];
          phase *= 2.0 * kPi;
          v += m.cos_coeff * std::cos(phase) + m.sin_coeff * std::sin(phase);
        }
        return v;
      }
    }
    return 0.0;
  }

  Kind kind() const { return kind_; }
  bool is_discontinuous() const {
    if (kind_ == Kind::trigonometric) return false;
    return std::any_of(values_.begin(), values_.end(), [&](double v) { return v != values_.front(); });
  }
  bool is_constant() const {
    if (kind_ == Kind::trigonometric) return modes_.empty();
    return !is_discontinuous();
  }

  /// Lower bound on the field (exact for piecewise fields).
  double lower_bound() const {
    if (kind_ == Kind::trigonometric) {
      double amp = 0.0;
      for (const auto& m : modes_) amp += std::abs(m.cos_coeff) + std::abs(m.sin_coeff);
      return mean_ - amp;
    }
    return *std::min_element(values_.begin(), values_.end());
  }
  /// Upper bound on the field (exact for piecewise fields).
  double upper_bound() const {
    if (kind_ == Kind::trigonometric) {
      double amp = 0.0;
      for (const auto& m : modes_) amp += std::abs(m.cos_coeff) + std::abs(m.sin_coeff);
      return mean_ + amp;
    }
    return *std::max_element(values_.begin(), values_.end());
  }

  int partition() const { return k_; }
  int axis() const { return axis_; }
  const std::vector<double>& values() const { return values_; }
  double mean() const { return mean_; }
  const std::vector<TrigMode<Dim>>& modes() const { return modes_; }

 private:
  PeriodicField() = default;

  void check_positive() const {
    for (double v : values_)
      if (!std::isfinite(v)) throw InputError("periodic field: non-finite value");
    if (kind_ == Kind::trigonometric) {
      if (!std::isfinite(mean_)) throw InputError("periodic field: non-finite mean");
      for (const auto& m : modes_)
        if (!std::isfinite(m.cos_coeff) || !std::isfinite(m.sin_coeff))
          throw InputError("periodic field: non-finite mode coefficient");
    }
    if (!(lower_bound() > 0.0)) throw InputError("periodic field: values must be strictly positive");
  }

  Kind kind_ = Kind::piecewise_constant;
  int k_ = 1;
  int axis_ = 0;
  std::vector<double> values_;
  double mean_ = 0.0;
  std::vector<TrigMode<Dim>> modes_;
};

enum class IntegrandForm { scalar_coefficient, quadratic_form };

template <int Dim>
struct CoefficientTerm {
  PeriodicField<Dim> weight;
  Mat<Dim> matrix;
};

/// y -> A(y), a symmetric positive semi-definite matrix field.
template <int Dim>
class QuadraticCoefficient {
 public:
  static QuadraticCoefficient scalar(PeriodicField<Dim> a) {
    QuadraticCoefficient q;
    q.form_ = IntegrandForm::scalar_coefficient;
    q.terms_.push_back({std::move(a), identity_matrix<Dim>()});
    return q;
  }

  static QuadraticCoefficient matrix_field(std::vector<CoefficientTerm<Dim>> terms) {
    if (terms.empty()) throw InputError("quadratic-form coefficient: no terms");
    for (const auto& t : terms) {
      for (int i = 0; i < Dim; ++i)
        for (int j = 0; j < Dim; ++j) {
          if (!std::isfinite(t.matrix[i][j])) throw InputError("quadratic-form coefficient: non-finite entry");
          if (std::abs(t.matrix[i][j] - t.matrix[j][i]) > 1e-12 * (1.0 + std::abs(t.matrix[i][j])))
            throw InputError("quadratic-form coefficient: matrix is not symmetric");
        }
    }
    QuadraticCoefficient q;
    q.form_ = IntegrandForm::quadratic_form;
    q.terms_ = std::move(terms);
    return q;
  }

  Mat<Dim> matrix(const Vec<Dim>& y) const {
    Mat<Dim> a{};
    for (const auto& t : terms_) {
      double phi = t.weight(y);
      for (int i = 0; i < Dim; ++i)
        for (int j = 0; j < Dim; ++j) a[i][j] += phi * t.matrix[i][j];
    }
    return a;
  }

  double value(const Vec<Dim>& y, const Vec<Dim>& w) const {
    if (form_ == IntegrandForm::scalar_coefficient) return terms_.front().weight(y) * dot<Dim>(w, w);
    return quadratic_form<Dim>(matrix(y), w);
  }

  IntegrandForm form() const { return form_; }
  const std::vector<CoefficientTerm<Dim>>& terms() const { return terms_; }

  bool is_constant() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const auto& t) { return t.weight.is_constant(); });
  }
  bool is_discontinuous() const {
    return std::any_of(terms_.begin(), terms_.end(), [](const auto& t) { return t.weight.is_discontinuous(); });
  }

 private:
  QuadraticCoefficient() = default;
  IntegrandForm form_ = IntegrandForm::scalar_coefficient;
  std::vector<CoefficientTerm<Dim>> terms_;
};

/// Bulk density f(y, xi) with growth constants c1 <= c2 and xi-continuity L1.
template <int Dim>
struct BulkIntegrand {
  QuadraticCoefficient<Dim> coefficient;
  double c1 = 1.0;
  double c2 = 1.0;
  double L1 = 1.0;
  std::string id = "bulk";
};

/// Surface density h(y, w) with growth c3 <= c4, w-continuity L2, x-Lipschitz L3.
template <int Dim>
struct SurfaceIntegrand {
  QuadraticCoefficient<Dim> coefficient;
  double c3 = 1.0;
  double c4 = 1.0;
  double L2 = 1.0;
  double L3 = 1.0;
  std::string id = "surface";
};

template <int Dim>
double eval_bulk(const BulkIntegrand<Dim>& f, const Vec<Dim>& y, const Vec<Dim>& xi) {
  if (!all_finite<Dim>(y) || !all_finite<Dim>(xi)) throw InputError("eval_bulk: non-finite input");
  return f.coefficient.value(y, xi);
}

template <int Dim>
double eval_surface(const SurfaceIntegrand<Dim>& h, const Vec<Dim>& y, const Vec<Dim>& w) {
  if (!all_finite<Dim>(y) || !all_finite<Dim>(w)) throw InputError("eval_surface: non-finite input");
  return h.coefficient.value(y, w);
}

// Convenience constructors used throughout tests and configs.

template <int Dim>
SurfaceIntegrand<Dim> isotropic_surface(PeriodicField<Dim> a, double c3, double c4, std::string id = "surface") {
  SurfaceIntegrand<Dim> h{QuadraticCoefficient<Dim>::scalar(std::move(a)), c3, c4, c4, 1.0, std::move(id)};
  return h;
}

template <int Dim>
BulkIntegrand<Dim> isotropic_bulk(PeriodicField<Dim> a, double c1, double c2, std::string id = "bulk") {
  BulkIntegrand<Dim> f{QuadraticCoefficient<Dim>::scalar(std::move(a)), c1, c2, c2, std::move(id)};
  return f;
}

}  // namespace athom
