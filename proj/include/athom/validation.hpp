#pragma once

// Sample-based checks of the structural hypotheses on f and h.
//
// Failures are reported, never thrown. Each check records the tightest
// empirical constant seen and, on failure, a witnessing sample. A failed
// x-Lipschitz check on a discontinuous (piecewise-constant) coefficient is
// downgraded to a warning: the zero-regime surface solver only needs bounded
// measurable coefficients.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "athom/integrands.hpp"

namespace athom {

template <int Dim>
struct Witness {
  Vec<Dim> y{};
  Vec<Dim> y2{};  // second point for two-point checks
  Vec<Dim> w{};
  Vec<Dim> w2{};
  double quotient = 0.0;
};

template <int Dim>
struct HypothesisCheck {
  std::string name;  // "f1-lower", "h4", ...
  bool passed = true;
  bool warning_only = false;
  double declared = 0.0;
  double empirical = 0.0;
  std::optional<Witness<Dim>> witness;
  std::string note;
};

template <int Dim>
struct ValidationReport {
  std::vector<HypothesisCheck<Dim>> checks;

  /// True unless some non-warning check failed.
  bool ok() const {
    for (const auto& c : checks)
      if (!c.passed && !c.warning_only) return false;
    return true;
  }
  const HypothesisCheck<Dim>* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

struct ValidationOptions {
  int sample_count = 1000;
  std::uint64_t seed = 0x5eedULL;
  double rel_tol = 1e-12;
};

namespace detail {

template <int Dim>
Vec<Dim> random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec<Dim> y;
  for (auto& c : y) c = u(rng);
  return y;
}

template <int Dim>
Vec<Dim> random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vec<Dim> w;
    for (auto& c : w) c = n(rng);
    double len = norm<Dim>(w);
    if (len > 1e-8) return (1.0 / len) * w;
  }
}

template <int Dim>
Vec<Dim> random_gaussian(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Vec<Dim> w;
  for (auto& c : w) c = n(rng);
  return w;
}

/// Growth bounds c_lo |w|^2 <= q(y,w) <= c_hi |w|^2.
template <int Dim>
void check_growth(const QuadraticCoefficient<Dim>& q, double c_lo, double c_hi, const std::string& prefix,
                  const ValidationOptions& opt, ValidationReport<Dim>& out) {
  std::mt19937_64 rng(opt.seed);
  HypothesisCheck<Dim> lo{prefix + "-lower", true, false, c_lo, 1e300, std::nullopt, ""};
  HypothesisCheck<Dim> hi{prefix + "-upper", true, false, c_hi, 0.0, std::nullopt, ""};
  Witness<Dim> wlo, whi;
  for (int s = 0; s < opt.sample_count; ++s) {
    Vec<Dim> y = random_point<Dim>(rng);
    Vec<Dim> w = random_unit<Dim>(rng);
    double ratio = q.value(y, w);
    if (ratio < lo.empirical) {
      lo.empirical = ratio;
      wlo = Witness<Dim>{y, y, w, w, ratio};
    }
    if (ratio > hi.empirical) {
      hi.empirical = ratio;
      whi = Witness<Dim>{y, y, w, w, ratio};
    }
  }
  if (lo.empirical < c_lo * (1.0 - opt.rel_tol)) {
    lo.passed = false;
    lo.witness = wlo;
    lo.note = "integrand below declared lower growth constant";
  }
  if (hi.empirical > c_hi * (1.0 + opt.rel_tol)) {
    hi.passed = false;
    hi.witness = whi;
    hi.note = "integrand above declared upper growth constant";
  }
  out.checks.push_back(lo);
  out.checks.push_back(hi);
}

/// |q(y,w1) - q(y,w2)| <= L (1 + |w1| + |w2|) |w1 - w2|.
template <int Dim>
void check_w_continuity(const QuadraticCoefficient<Dim>& q, double declared, const std::string& name,
                        const ValidationOptions& opt, ValidationReport<Dim>& out) {
  std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  HypothesisCheck<Dim> c{name, true, false, declared, 0.0, std::nullopt, ""};
  Witness<Dim> best;
  for (int s = 0; s < opt.sample_count; ++s) {
    Vec<Dim> y = random_point<Dim>(rng);
    Vec<Dim> w1 = random_gaussian<Dim>(rng, 2.0);
    Vec<Dim> w2 = random_gaussian<Dim>(rng, 2.0);
    double dw = norm<Dim>(w1 - w2);
    if (dw < 1e-12) continue;
    double quot = std::abs(q.value(y, w1) - q.value(y, w2)) / ((1.0 + norm<Dim>(w1) + norm<Dim>(w2)) * dw);
    if (quot > c.empirical) {
      c.empirical = quot;
      best = Witness<Dim>{y, y, w1, w2, quot};
    }
  }
  if (c.empirical > declared * (1.0 + opt.rel_tol)) {
    c.passed = false;
    c.witness = best;
    c.note = "continuity constant in the second argument exceeded";
  }
  out.checks.push_back(c);
}

/// Q-periodicity in y: compares y and y + z for random integer z.
template <int Dim>
void check_periodicity(const QuadraticCoefficient<Dim>& q, const std::string& name, const ValidationOptions& opt,
                       ValidationReport<Dim>& out) {
  std::mt19937_64 rng(opt.seed ^ 0x51ed270b27f5a8d1ULL);
  std::uniform_int_distribution<int> shift(-5, 5);
  HypothesisCheck<Dim> c{name, true, false, 0.0, 0.0, std::nullopt, ""};
  for (int s = 0; s < opt.sample_count; ++s) {
    Vec<Dim> y = random_point<Dim>(rng);
    Vec<Dim> w = random_unit<Dim>(rng);
    Vec<Dim> y2 = y;
    for (auto& v : y2) v += shift(rng);
    double a = q.value(y, w), b = q.value(y2, w);
    double rel = std::abs(a - b) / std::max(1.0, std::abs(a));
    if (rel > c.empirical) {
      c.empirical = rel;
      if (rel > 1e-10) {
        c.passed = false;
        c.witness = Witness<Dim>{y, y2, w, w, rel};
        c.note = "integrand is not Q-periodic";
      }
    }
  }
  out.checks.push_back(c);
}

}  // namespace detail

template <int Dim>
ValidationReport<Dim> validate_hypotheses(const BulkIntegrand<Dim>& f, const ValidationOptions& opt = {}) {
  if (opt.sample_count < 1) throw InputError("validate_hypotheses: sample_count must be >= 1");
  ValidationReport<Dim> r;
  detail::check_growth<Dim>(f.coefficient, f.c1, f.c2, "f1", opt, r);
  detail::check_w_continuity<Dim>(f.coefficient, f.L1, "f2", opt, r);
  detail::check_periodicity<Dim>(f.coefficient, "f3", opt, r);
  return r;
}

template <int Dim>
ValidationReport<Dim> validate_hypotheses(const SurfaceIntegrand<Dim>& h, const ValidationOptions& opt = {}) {
  if (opt.sample_count < 1) throw InputError("validate_hypotheses: sample_count must be >= 1");
  ValidationReport<Dim> r;
  detail::check_growth<Dim>(h.coefficient, h.c3, h.c4, "h1", opt, r);
  detail::check_w_continuity<Dim>(h.coefficient, h.L2, "h2", opt, r);

  // h3: h(y, s w) = s^2 h(y, w), which also covers evenness (s = -1).
  {
    std::mt19937_64 rng(opt.seed ^ 0x2545f4914f6cdd1dULL);
    HypothesisCheck<Dim> c{"h3", true, false, 0.0, 0.0, std::nullopt, ""};
    const double scales[] = {-2.0, -1.0, 0.5, 3.0};
    for (int s = 0; s < opt.sample_count; ++s) {
      Vec<Dim> y = detail::random_point<Dim>(rng);
      Vec<Dim> w = detail::random_gaussian<Dim>(rng, 1.0);
      double base = h.coefficient.value(y, w);
      for (double sc : scales) {
        double rel = std::abs(h.coefficient.value(y, sc * w) - sc * sc * base) / std::max(1e-300, sc * sc * base);
        if (base == 0.0) rel = 0.0;
        if (rel > c.empirical) c.empirical = rel;
        if (rel > 1e-12 && c.passed) {
          c.passed = false;
          c.witness = Witness<Dim>{y, y, w, sc * w, rel};
          c.note = "not homogeneous of degree two";
        }
      }
    }
    r.checks.push_back(c);
  }

  // h4: difference quotients between neighbouring points of a sampling
  // lattice with resolution m per axis, so interfaces of piecewise fields are
  // straddled deterministically.
  {
    std::mt19937_64 rng(opt.seed ^ 0x94d049bb133111ebULL);
    int m = std::max(2, static_cast<int>(std::ceil(std::pow(static_cast<double>(opt.sample_count), 1.0 / Dim))));
    HypothesisCheck<Dim> c{"h4", true, false, h.L3, 0.0, std::nullopt, ""};
    Witness<Dim> best;
    std::size_t total = 1;
    for (int d = 0; d < Dim; ++d) total *= static_cast<std::size_t>(m);
    // Offset keeps lattice points off the coefficient interfaces themselves.
    const double offset = 0.5 / m;
    for (std::size_t idx = 0; idx < total; ++idx) {
      Vec<Dim> y;
      std::size_t rem = idx;
      for (int d = 0; d < Dim; ++d) {
        y[d] = offset + static_cast<double>(rem % m) / m;
        rem /= m;
      }
      Vec<Dim> w = detail::random_unit<Dim>(rng);
      for (int axis = 0; axis < Dim; ++axis) {
        Vec<Dim> y2 = y;
        y2[axis] += 1.0 / m;
        double quot = std::abs(h.coefficient.value(y, w) - h.coefficient.value(y2, w)) * m;
        if (quot > c.empirical) {
          c.empirical = quot;
          best = Witness<Dim>{y, y2, w, w, quot};
        }
      }
    }
    if (c.empirical > h.L3 * (1.0 + opt.rel_tol)) {
      c.passed = false;
      c.witness = best;
      if (h.coefficient.is_discontinuous()) {
        c.warning_only = true;
        c.note = "difference quotient across a coefficient discontinuity exceeds L3 (warning: piecewise coefficient)";
      } else {
        c.note = "x-Lipschitz constant exceeded";
      }
    }
    r.checks.push_back(c);
  }

  detail::check_periodicity<Dim>(h.coefficient, "h5", opt, r);
  return r;
}

}  // namespace athom
