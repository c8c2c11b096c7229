#ifndef TANAG_HYPERPARAMS_HPP
#define TANAG_HYPERPARAMS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "tanag/problem.hpp"

namespace tanag {

struct OpenInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v > lo && v < hi; }
};

/// Step size, momentum, and the dominance data they were chosen against.
struct HyperParams {
  double gamma = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
  double h_max = 0.0;

  double lambda_bound() const {
    const double gm = gamma * mu;
    return gm / (2.0 * (1.0 - gm));
  }
  /// 0 < gamma < 1/h_max and 0 < lambda < gamma mu / (2 (1 - gamma mu)).
  bool strictly_feasible() const {
    if (!(mu > 0.0) || !(h_max > 0.0)) return false;
    if (!(gamma > 0.0 && gamma < 1.0 / h_max)) return false;
    const double gm = gamma * mu;
    if (!(gm > 0.0 && gm < 1.0)) return false;
    return lambda > 0.0 && lambda < lambda_bound();
  }
};

inline OpenInterval feasible_gamma_interval(const DominanceCert& cert) {
  if (!cert.valid || !(cert.h_max > 0.0)) {
    throw std::invalid_argument("step-size interval requires a valid dominance certificate");
  }
  return {0.0, 1.0 / cert.h_max};
}

inline OpenInterval feasible_lambda_interval(double gamma, double mu) {
  const double gm = gamma * mu;
  if (!(gm > 0.0 && gm < 1.0)) {
    throw std::invalid_argument("momentum interval requires gamma*mu in (0,1), got " +
                                std::to_string(gm));
  }
  return {0.0, gm / (2.0 * (1.0 - gm))};
}

/// Picks an interior point of the admissible (gamma, lambda) region as
/// fractions of the open upper bounds.
inline HyperParams select_params(const DominanceCert& cert, double gamma_frac = 0.99,
                                 double lambda_frac = 0.9) {
  if (!(gamma_frac > 0.0 && gamma_frac < 1.0)) {
    throw std::invalid_argument("gamma fraction must lie strictly inside (0,1)");
  }
  if (!(lambda_frac > 0.0 && lambda_frac < 1.0)) {
    throw std::invalid_argument("lambda fraction must lie strictly inside (0,1)");
  }
  const OpenInterval g = feasible_gamma_interval(cert);
  HyperParams hp;
  hp.mu = cert.mu;
  hp.h_max = cert.h_max;
  hp.gamma = gamma_frac * g.hi;
  hp.lambda = lambda_frac * feasible_lambda_interval(hp.gamma, hp.mu).hi;
  return hp;
}

/// Fixed reference values gamma = 0.345, lambda = 0.058 and mu = 0.3 for the
/// 10-agent benchmark; h_max is the reciprocal of that step size.
/// With these numbers lambda sits just past its own open bound.
inline HyperParams paper_mode_params() {
  HyperParams hp;
  hp.gamma = 0.345;
  hp.lambda = 0.058;
  hp.mu = 0.3;
  hp.h_max = 1.0 / 0.345;
  return hp;
}

struct ContractionFactors {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double alpha = 0.0;
  /// Inputs were not strictly feasible; alpha may be >= 1.
  bool boundary = false;
};

/// Two-step contraction factors
///   alpha1 = (1 + l - gm(1 + l))^2 + l(1 - gm) + l(1 - gm)(1 + l - gm(1 + l))
///   alpha2 = 1 - gm + 2 l (1 - gm)
/// with gm = gamma*mu and l = lambda. Never throws; infeasible inputs are
/// flagged through `boundary`.
inline ContractionFactors contraction_factors(const HyperParams& hp) {
  const double gm = hp.gamma * hp.mu;
  const double l = hp.lambda;
  const double a = 1.0 + l - gm * (1.0 + l);
  ContractionFactors f;
  f.alpha1 = a * a + l * (1.0 - gm) + l * (1.0 - gm) * a;
  f.alpha2 = 1.0 - gm + 2.0 * l * (1.0 - gm);
  f.alpha = std::max(f.alpha1, f.alpha2);
  f.boundary = !hp.strictly_feasible();
  return f;
}

struct OpsBudget {
  /// log(eps/d0)/log(alpha), clamped below at zero.
  double beta = 0.0;
  std::int64_t cycles = 0;
  /// cycles * |V^i| for the neighbor count supplied.
  std::int64_t communications = 0;
};

inline OpsBudget ops_lower_bound(double epsilon, double d0, double alpha,
                                 std::size_t neighbor_count = 0) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("operation budget requires alpha in (0,1), got " +
                                std::to_string(alpha));
  }
  if (!(d0 > 0.0) || !(epsilon > 0.0)) {
    throw std::invalid_argument("operation budget requires positive epsilon and d0");
  }
  OpsBudget b;
  b.beta = epsilon >= d0 ? 0.0 : std::log(epsilon / d0) / std::log(alpha);
  b.cycles = static_cast<std::int64_t>(std::ceil(b.beta));
  b.communications = b.cycles * static_cast<std::int64_t>(neighbor_count);
  return b;
}

/// Infinity-norm diameter of X x X, i.e. the widest box.
inline double box_diameter(const SeparableProblem& p) {
  double d = 0.0;
  for (const Box& b : p.boxes()) d = std::max(d, b.width());
  return d;
}

struct ContractionCert {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::int64_t cycles = 0;
  double d0 = 0.0;
  double epsilon = 0.0;
  bool feasible = false;
};

/// Full certificate for hp on p. beta is only defined (and cycles only
/// nonzero) when alpha < 1.
inline ContractionCert certify(const SeparableProblem& p, const HyperParams& hp,
                               double epsilon) {
  const ContractionFactors f = contraction_factors(hp);
  ContractionCert c;
  c.alpha1 = f.alpha1;
  c.alpha2 = f.alpha2;
  c.alpha = f.alpha;
  c.d0 = box_diameter(p);
  c.epsilon = epsilon;
  c.feasible = hp.strictly_feasible() && f.alpha < 1.0;
  if (f.alpha > 0.0 && f.alpha < 1.0 && c.d0 > 0.0 && epsilon > 0.0) {
    const OpsBudget b = ops_lower_bound(epsilon, c.d0, f.alpha);
    c.beta = b.beta;
    c.cycles = b.cycles;
  }
  return c;
}

}  // namespace tanag

#endif  // TANAG_HYPERPARAMS_HPP
