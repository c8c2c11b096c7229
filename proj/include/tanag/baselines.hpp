#ifndef TANAG_BASELINES_HPP
#define TANAG_BASELINES_HPP

#include <cstddef>
#include <stdexcept>

#include "tanag/dynamics.hpp"
#include "tanag/problem.hpp"

namespace tanag {

struct BaselineParams {
  double gamma = 0.0;
  /// Heavy-ball coefficient; ignored by gradient descent.
  double momentum = 0.0;

  bool valid_for(const DominanceCert& cert) const {
    return gamma > 0.0 && cert.h_max > 0.0 && gamma < 1.0 / cert.h_max && momentum >= 0.0 &&
           momentum < 1.0;
  }
};

/// x_i+ = Pi[x_i - gamma grad_i f(x) + momentum (x_i - y_i)], y_i+ = x_i.
inline BlockValue heavy_ball_block_step(std::size_t i, const LocalPair& z,
                                        const BaselineParams& bp, const SeparableProblem& p) {
  detail::check_pair(p, z);
  if (i >= p.size()) throw std::out_of_range("heavy_ball_block_step: agent index out of range");
  const double g = p.gradient(i, z.x);
  return {p.project(i, z.x[i] - bp.gamma * g + bp.momentum * (z.x[i] - z.y[i])), z.x[i]};
}

/// x_i+ = Pi[x_i - gamma grad_i f(x)], y_i+ = x_i.
inline BlockValue gradient_descent_block_step(std::size_t i, const LocalPair& z,
                                              const BaselineParams& bp,
                                              const SeparableProblem& p) {
  detail::check_pair(p, z);
  if (i >= p.size()) {
    throw std::out_of_range("gradient_descent_block_step: agent index out of range");
  }
  const double g = p.gradient(i, z.x);
  return {p.project(i, z.x[i] - bp.gamma * g), z.x[i]};
}

}  // namespace tanag

#endif  // TANAG_BASELINES_HPP
