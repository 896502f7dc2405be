#pragma once

// Scaling families delta = d eps^beta, eta = e eps^gamma and the regime
// l = lim eps / delta they select.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "athom/core.hpp"

namespace athom {

enum class Regime { zero, finite, infinity };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::zero:
      return "zero";
    case Regime::finite:
      return "finite";
    default:
      return "infinity";
  }
}

/// coeff * eps^exponent
struct PowerLaw {
  double coeff = 1.0;
  double exponent = 1.0;
  double operator()(double eps) const { return coeff * std::pow(eps, exponent); }
};

struct RegimeParams {
  std::vector<double> eps_sequence;
  PowerLaw delta{1.0, 1.0};
  PowerLaw eta{1.0, 2.0};
};

struct RegimeLabel {
  Regime regime = Regime::finite;
  double ell = 1.0;  // 0, finite, or +inf
  double alpha = std::numeric_limits<double>::quiet_NaN();  // set in the infinite regime
};

inline RegimeLabel regime_select(const RegimeParams& p) {
  for (std::size_t i = 0; i < p.eps_sequence.size(); ++i) {
    double e = p.eps_sequence[i];
    if (!(e > 0.0) || !std::isfinite(e)) throw InputError("regime: eps values must be positive");
    if (i > 0 && !(e < p.eps_sequence[i - 1])) throw InputError("regime: eps_sequence must be decreasing");
  }
  if (!(p.delta.coeff > 0.0) || !(p.eta.coeff > 0.0)) throw InputError("regime: power-law coefficients must be positive");
  if (!std::isfinite(p.delta.exponent) || !std::isfinite(p.eta.exponent))
    throw InputError("regime: non-finite exponent");
  if (!(p.eta.exponent > 1.0)) throw InputError("regime: eta must vanish faster than eps (eta exponent > 1)");
  const double beta = p.delta.exponent;
  RegimeLabel out;
  if (beta < 1.0) {
    out.regime = Regime::zero;
    out.ell = 0.0;
  } else if (beta == 1.0) {
    out.regime = Regime::finite;
    out.ell = 1.0 / p.delta.coeff;
  } else {
    if (std::abs(p.eta.exponent - beta) > 1e-12)
      throw InputError(
          "regime: l = infinity requires eta ~ delta ~ eps^alpha (equal delta and eta exponents); got delta exponent " +
          std::to_string(beta) + ", eta exponent " + std::to_string(p.eta.exponent));
    out.regime = Regime::infinity;
    out.ell = std::numeric_limits<double>::infinity();
    out.alpha = beta;
  }
  return out;
}

/// (eps, delta_eps, eta_eps) at one member of the family.
struct ScaleParams {
  double eps = 0.1;
  double delta = 0.1;
  double eta = 0.01;
};

inline ScaleParams scales_at(const RegimeParams& p, double eps) {
  if (!(eps > 0.0)) throw InputError("regime: eps must be positive");
  return {eps, p.delta(eps), p.eta(eps)};
}

}  // namespace athom
