#ifndef TANAG_DYNAMICS_HPP
#define TANAG_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include "tanag/hyperparams.hpp"
#include "tanag/problem.hpp"

namespace tanag {

/// An agent's copy of the network state: current iterate x and previous
/// iterate y.
struct LocalPair {
  Vector x;
  Vector y;

  std::size_t size() const { return x.size(); }
  bool operator==(const LocalPair&) const = default;

  static LocalPair constant(std::size_t n, double value) {
    return {Vector(n, value), Vector(n, value)};
  }
  /// (v, v), the form every fixed point takes.
  static LocalPair diagonal(const Vector& v) { return {v, v}; }
};

/// One scalar block of a LocalPair.
struct BlockValue {
  double x = 0.0;
  double y = 0.0;
};

/// max over both halves and all coordinates of |a - b|.
inline double pair_inf_distance(const LocalPair& a, const LocalPair& b) {
  if (a.x.size() != b.x.size() || a.y.size() != b.y.size() || a.x.size() != a.y.size()) {
    throw std::invalid_argument("pair distance: dimension mismatch");
  }
  double d = 0.0;
  for (std::size_t m = 0; m < a.x.size(); ++m) {
    d = std::max(d, std::abs(a.x[m] - b.x[m]));
    d = std::max(d, std::abs(a.y[m] - b.y[m]));
  }
  return d;
}

inline bool is_feasible(const SeparableProblem& p, const LocalPair& z) {
  if (z.x.size() != p.size() || z.y.size() != p.size()) return false;
  for (std::size_t m = 0; m < p.size(); ++m) {
    const Box& b = p.box(m);
    if (z.x[m] < b.lo || z.x[m] > b.hi || z.y[m] < b.lo || z.y[m] > b.hi) return false;
  }
  return true;
}

namespace detail {

inline void check_pair(const SeparableProblem& p, const LocalPair& z) {
  if (z.x.size() != p.size() || z.y.size() != p.size()) {
    throw std::invalid_argument("local pair has dimension " + std::to_string(z.x.size()) + "/" +
                                std::to_string(z.y.size()) + ", expected " +
                                std::to_string(p.size()));
  }
}

/// Pi_{X_i}[c_i + l (c_i - b_i) - g grad_i f(c + l (c - b))]: one projected
/// NAG iteration of block i with `current` as the iterate and `previous` as
/// the one before it. The look-ahead point itself is not projected.
inline double nag_block(std::size_t i, std::span<const double> current,
                        std::span<const double> previous, const HyperParams& hp,
                        const SeparableProblem& p, Vector& scratch) {
  scratch.resize(current.size());
  for (std::size_t m = 0; m < current.size(); ++m) {
    scratch[m] = current[m] + hp.lambda * (current[m] - previous[m]);
  }
  const double g = p.gradient(i, scratch);
  return p.project(i, scratch[i] - hp.gamma * g);
}

}  // namespace detail

/// Single-step synchronous law: every block takes one projected NAG step from
/// the same input, and the previous iterate becomes the old x.
inline LocalPair single_step_sync(const LocalPair& z, const HyperParams& hp,
                                  const SeparableProblem& p) {
  detail::check_pair(p, z);
  LocalPair next{Vector(p.size()), z.x};
  Vector scratch;
  for (std::size_t i = 0; i < p.size(); ++i) {
    next.x[i] = detail::nag_block(i, z.x, z.y, hp, p, scratch);
  }
  return next;
}

/// Double-step block law for agent i, computed from its own copy z only.
/// The y output is a NAG step from (x, y). The x output is a NAG step from
/// (y', x), where y' is z.y with just entry i replaced by the new y value;
/// the other entries of y' keep the agent's stored values.
inline BlockValue double_step_block(std::size_t i, const LocalPair& z, const HyperParams& hp,
                                    const SeparableProblem& p) {
  detail::check_pair(p, z);
  if (i >= p.size()) throw std::out_of_range("double_step_block: agent index out of range");
  Vector scratch;
  BlockValue out;
  out.y = detail::nag_block(i, z.x, z.y, hp, p, scratch);
  Vector y_next = z.y;
  y_next[i] = out.y;
  out.x = detail::nag_block(i, y_next, z.x, hp, p, scratch);
  return out;
}

/// Every agent applies double_step_block to the same input z. This is the
/// network state one fully synchronous tick of the asynchronous algorithm
/// produces.
inline LocalPair blockwise_double_map(const LocalPair& z, const HyperParams& hp,
                                      const SeparableProblem& p) {
  detail::check_pair(p, z);
  LocalPair next{Vector(p.size()), Vector(p.size())};
  for (std::size_t i = 0; i < p.size(); ++i) {
    const BlockValue b = double_step_block(i, z, hp, p);
    next.x[i] = b.x;
    next.y[i] = b.y;
  }
  return next;
}

/// The synchronous double-step map h: the y half of every block is computed
/// first from z, then every x is computed from the assembled y' (all entries
/// fresh). Equals two applications of single_step_sync.
inline LocalPair synchronous_double_map(const LocalPair& z, const HyperParams& hp,
                                        const SeparableProblem& p) {
  detail::check_pair(p, z);
  LocalPair next{Vector(p.size()), Vector(p.size())};
  Vector scratch;
  for (std::size_t i = 0; i < p.size(); ++i) {
    next.y[i] = detail::nag_block(i, z.x, z.y, hp, p, scratch);
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    next.x[i] = detail::nag_block(i, next.y, z.x, hp, p, scratch);
  }
  return next;
}

/// Overwrites agent j's entries in a local copy with received values.
inline void incorporate_message(LocalPair& z, std::size_t j, double x_j, double y_j) {
  if (j >= z.x.size()) throw std::out_of_range("incorporate_message: sender out of range");
  z.x[j] = x_j;
  z.y[j] = y_j;
}

}  // namespace tanag

#endif  // TANAG_DYNAMICS_HPP
