#ifndef TANAG_PROBLEM_HPP
#define TANAG_PROBLEM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tanag {

using Vector = std::vector<double>;

/// Closed interval [lo, hi] constraining one scalar block.
struct Box {
  double lo = 0.0;
  double hi = 0.0;

  double clamp(double w) const { return std::clamp(w, lo, hi); }
  double width() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
};

/// Dense row-major square matrix. Problems here are desk scale (n up to a few
/// hundred), so no sparse storage.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}
  DenseMatrix(std::size_t n, Vector row_major) : n_(n), data_(std::move(row_major)) {
    if (data_.size() != n * n) {
      throw std::invalid_argument("DenseMatrix: expected " + std::to_string(n * n) +
                                  " entries, got " + std::to_string(data_.size()));
    }
  }

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }
  const Vector& data() const { return data_; }

 private:
  std::size_t n_ = 0;
  Vector data_;
};

/// Diagonal-dominance certificate: H_ii >= mu + sum_{j != i} |H_ij| on the
/// feasible box, together with the largest diagonal magnitude.
struct DominanceCert {
  double mu = 0.0;
  double h_max = 0.0;
  bool valid = false;
  /// True when the certificate comes from a finite sample of the box rather
  /// than an exact computation (black-box objectives).
  bool sampled = false;
};

/// Scalar-block separable objective over a product of intervals.
///
/// Two kinds are supported. Quadratic problems carry f(x) = 1/2 x'Qx + q'x + c
/// with a symmetric Q; the essential-neighbor sets are read off the nonzero
/// pattern of Q. Black-box problems carry a value oracle and a per-component
/// gradient oracle together with caller-declared neighbor sets; the Hessian
/// comes from an optional oracle or central differences of the gradient.
///
/// Values are immutable after construction.
class SeparableProblem {
 public:
  using ValueFn = std::function<double(std::span<const double>)>;
  using GradientFn = std::function<double(std::size_t, std::span<const double>)>;
  using HessianFn = std::function<double(std::size_t, std::size_t, std::span<const double>)>;

  enum class Kind { kQuadratic, kBlackBox };

  static SeparableProblem quadratic(DenseMatrix Q, Vector q, double c, std::vector<Box> boxes) {
    const std::size_t n = Q.size();
    if (n == 0) throw std::invalid_argument("quadratic problem: empty Q");
    if (q.size() != n) throw std::invalid_argument("quadratic problem: q has wrong length");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (Q(i, j) != Q(j, i)) {
          throw std::invalid_argument("quadratic problem: Q is not symmetric at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
        }
      }
    }
    std::vector<std::vector<std::size_t>> neighbors(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && Q(i, j) != 0.0) neighbors[i].push_back(j);
      }
    }
    SeparableProblem p(n, std::move(neighbors), std::move(boxes));
    p.kind_ = Kind::kQuadratic;
    p.quad_ = std::make_shared<const QuadraticData>(QuadraticData{std::move(Q), std::move(q), c});
    return p;
  }

  static SeparableProblem black_box(std::size_t n,
                                    std::vector<std::vector<std::size_t>> neighbors,
                                    ValueFn value, GradientFn gradient, std::vector<Box> boxes,
                                    HessianFn hessian = {}) {
    if (n == 0) throw std::invalid_argument("black-box problem: n must be positive");
    if (!value || !gradient) {
      throw std::invalid_argument("black-box problem: value and gradient oracles are required");
    }
    for (auto& set : neighbors) std::sort(set.begin(), set.end());
    SeparableProblem p(n, std::move(neighbors), std::move(boxes));
    p.kind_ = Kind::kBlackBox;
    p.value_ = std::move(value);
    p.gradient_ = std::move(gradient);
    p.hessian_ = std::move(hessian);
    return p;
  }

  std::size_t size() const { return n_; }
  Kind kind() const { return kind_; }
  bool is_quadratic() const { return kind_ == Kind::kQuadratic; }

  /// Essential neighbors of agent i (sorted, never contains i).
  const std::vector<std::size_t>& neighbors(std::size_t i) const {
    check_index(i);
    return neighbors_[i];
  }
  bool is_neighbor(std::size_t i, std::size_t j) const {
    const auto& set = neighbors(i);
    return std::binary_search(set.begin(), set.end(), j);
  }
  const Box& box(std::size_t i) const {
    check_index(i);
    return boxes_[i];
  }
  const std::vector<Box>& boxes() const { return boxes_; }

  const DenseMatrix& Q() const { return quad().Q; }
  const Vector& q() const { return quad().q; }
  double c() const { return quad().c; }

  double objective(std::span<const double> x) const {
    check_dimension(x);
    if (kind_ == Kind::kBlackBox) return value_(x);
    const auto& d = quad();
    double quad_term = 0.0;
    double lin_term = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double row = 0.0;
      auto qi = d.Q.row(i);
      for (std::size_t j = 0; j < n_; ++j) row += qi[j] * x[j];
      quad_term += x[i] * row;
      lin_term += d.q[i] * x[i];
    }
    return 0.5 * quad_term + lin_term + d.c;
  }

  /// df/dx_i at x. Reads x_i and the coordinates of agent i's essential
  /// neighbors only.
  double gradient(std::size_t i, std::span<const double> x) const {
    check_index(i);
    check_dimension(x);
    if (kind_ == Kind::kBlackBox) return gradient_(i, x);
    const auto& d = quad();
    double g = d.Q(i, i) * x[i] + d.q[i];
    for (std::size_t j : neighbors_[i]) g += d.Q(i, j) * x[j];
    return g;
  }

  double hessian(std::size_t i, std::size_t j, std::span<const double> x) const {
    check_index(i);
    check_index(j);
    if (kind_ == Kind::kQuadratic) return quad().Q(i, j);
    check_dimension(x);
    if (hessian_) return hessian_(i, j, x);
    // Symmetrized central difference of the gradient oracle.
    return 0.5 * (gradient_difference(i, j, x) + gradient_difference(j, i, x));
  }

  double project(std::size_t i, double w) const { return box(i).clamp(w); }

  /// Diagonal-dominance certificate. Exact for quadratics. For black-box
  /// objectives the Hessian is scanned on a tensor grid of `grid_points`
  /// values per coordinate (endpoints included, so every box corner is
  /// visited) and the result is flagged as sampled.
  DominanceCert dominance_certificate(std::size_t grid_points = 3) const {
    if (kind_ == Kind::kQuadratic) {
      DominanceCert cert;
      cert.mu = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n_; ++i) {
        cert.mu = std::min(cert.mu, dominance_margin_row(i, {}));
        cert.h_max = std::max(cert.h_max, std::abs(quad().Q(i, i)));
      }
      cert.valid = cert.mu > 0.0;
      return cert;
    }
    if (grid_points < 2) throw std::invalid_argument("dominance grid needs at least 2 points");
    double total = std::pow(static_cast<double>(grid_points), static_cast<double>(n_));
    if (total > 2.0e6) {
      throw std::invalid_argument("dominance grid too large: " + std::to_string(total) +
                                  " points");
    }
    DominanceCert cert;
    cert.sampled = true;
    cert.mu = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> digits(n_, 0);
    Vector x(n_);
    while (true) {
      for (std::size_t m = 0; m < n_; ++m) {
        const Box& b = boxes_[m];
        x[m] = b.lo + b.width() * static_cast<double>(digits[m]) /
                          static_cast<double>(grid_points - 1);
      }
      for (std::size_t i = 0; i < n_; ++i) {
        cert.mu = std::min(cert.mu, dominance_margin_row(i, x));
        cert.h_max = std::max(cert.h_max, std::abs(hessian(i, i, x)));
      }
      std::size_t m = 0;
      while (m < n_ && ++digits[m] == grid_points) digits[m++] = 0;
      if (m == n_) break;
    }
    cert.valid = cert.mu > 0.0;
    return cert;
  }

 private:
  struct QuadraticData {
    DenseMatrix Q;
    Vector q;
    double c = 0.0;
  };

  SeparableProblem(std::size_t n, std::vector<std::vector<std::size_t>> neighbors,
                   std::vector<Box> boxes)
      : n_(n), neighbors_(std::move(neighbors)), boxes_(std::move(boxes)) {
    if (neighbors_.size() != n_) throw std::invalid_argument("neighbor sets: wrong count");
    if (boxes_.size() != n_) throw std::invalid_argument("boxes: wrong count");
    for (std::size_t i = 0; i < n_; ++i) {
      const Box& b = boxes_[i];
      if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi) {
        throw std::invalid_argument("box " + std::to_string(i) + " must be bounded with lo <= hi");
      }
      for (std::size_t j : neighbors_[i]) {
        if (j >= n_ || j == i) {
          throw std::invalid_argument("neighbor set of agent " + std::to_string(i) +
                                      " contains invalid index " + std::to_string(j));
        }
      }
    }
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j : neighbors_[i]) {
        const auto& back = neighbors_[j];
        if (std::find(back.begin(), back.end(), i) == back.end()) {
          throw std::invalid_argument("neighbor relation is not symmetric: " + std::to_string(j) +
                                      " in V^" + std::to_string(i) + " but not vice versa");
        }
      }
    }
  }

  const QuadraticData& quad() const {
    if (!quad_) throw std::logic_error("problem is not quadratic");
    return *quad_;
  }

  void check_index(std::size_t i) const {
    if (i >= n_) {
      throw std::out_of_range("agent index " + std::to_string(i) + " out of range for n=" +
                              std::to_string(n_));
    }
  }
  void check_dimension(std::span<const double> x) const {
    if (x.size() != n_) {
      throw std::invalid_argument("point has dimension " + std::to_string(x.size()) +
                                  ", expected " + std::to_string(n_));
    }
  }

  double dominance_margin_row(std::size_t i, std::span<const double> x) const {
    double off = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      if (j != i) off += std::abs(hessian(i, j, x));
    }
    return hessian(i, i, x) - off;
  }

  double gradient_difference(std::size_t i, std::size_t j, std::span<const double> x) const {
    const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
    Vector probe(x.begin(), x.end());
    probe[j] = x[j] + h;
    const double up = gradient_(i, probe);
    probe[j] = x[j] - h;
    const double down = gradient_(i, probe);
    return (up - down) / (2.0 * h);
  }

  std::size_t n_ = 0;
  Kind kind_ = Kind::kQuadratic;
  std::vector<std::vector<std::size_t>> neighbors_;
  std::vector<Box> boxes_;
  std::shared_ptr<const QuadraticData> quad_;
  ValueFn value_;
  GradientFn gradient_;
  HessianFn hessian_;
};

/// f(x) = 3/10 sum_i x_i^2 + 1/200 sum_i sum_{j != i} (x_i - x_j)^2 on [1, 10]^n.
/// The double sum visits every unordered pair twice, so
/// df/dx_i = 0.6 x_i + 0.02 sum_{j != i} (x_i - x_j).
inline SeparableProblem make_paper_benchmark(std::size_t n) {
  if (n < 2) throw std::invalid_argument("benchmark needs at least 2 agents");
  DenseMatrix Q(n);
  const double coupling = 2.0 * 2.0 / 200.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Q(i, j) = (i == j) ? 0.6 + coupling * static_cast<double>(n - 1) : -coupling;
    }
  }
  return SeparableProblem::quadratic(std::move(Q), Vector(n, 0.0), 0.0,
                                     std::vector<Box>(n, Box{1.0, 10.0}));
}

}  // namespace tanag

#endif  // TANAG_PROBLEM_HPP
