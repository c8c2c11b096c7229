#ifndef TANAG_RUNTIME_HPP
#define TANAG_RUNTIME_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tanag/baselines.hpp"
#include "tanag/dynamics.hpp"
#include "tanag/hyperparams.hpp"
#include "tanag/network.hpp"
#include "tanag/problem.hpp"

namespace tanag {

enum class Algorithm { kNag, kHeavyBall, kGradientDescent };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kNag:
      return "nag";
    case Algorithm::kHeavyBall:
      return "hb";
    case Algorithm::kGradientDescent:
      return "gd";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
  if (s == "nag") return Algorithm::kNag;
  if (s == "hb") return Algorithm::kHeavyBall;
  if (s == "gd") return Algorithm::kGradientDescent;
  throw std::invalid_argument("unknown algorithm '" + std::string(s) + "' (expected nag, hb, gd)");
}

/// Gradient evaluations per block update: the fused NAG double step takes two.
inline int gradient_cost(Algorithm a) { return a == Algorithm::kNag ? 2 : 1; }

struct SendEvent {
  std::size_t from = 0;
  std::size_t to = 0;
  Tick tau = 0;
};

struct DeliveryEvent {
  std::size_t from = 0;
  std::size_t to = 0;
  Tick tau = 0;
};

/// Everything that happened in one tick. Deliveries list only messages that
/// were incorporated (stale ones are dropped by the channel).
struct TickEvents {
  Tick k = 0;
  std::vector<std::size_t> computes;
  std::vector<SendEvent> sends;
  std::vector<DeliveryEvent> deliveries;
};

/// Operation-cycle counter. A cycle closes at the first tick by which every
/// agent has computed, every directed edge i -> j has carried a value
/// computed since the cycle started, and that value has been incorporated by
/// j. Values computed before the current cycle began never count toward it.
class OpsCounter {
 public:
  explicit OpsCounter(const SeparableProblem& p) : n_(p.size()), offset_(p.size() + 1, 0) {
    for (std::size_t i = 0; i < n_; ++i) {
      offset_[i + 1] = offset_[i] + p.neighbors(i).size();
      targets_.insert(targets_.end(), p.neighbors(i).begin(), p.neighbors(i).end());
    }
    computed_.assign(n_, false);
    sent_.assign(targets_.size(), false);
    received_.assign(targets_.size(), false);
  }

  std::int64_t count() const { return count_; }
  Tick cycle_start() const { return cycle_start_; }
  bool computed(std::size_t i) const { return computed_.at(i); }
  bool sent(std::size_t from, std::size_t to) const { return sent_.at(edge(from, to)); }
  bool received(std::size_t from, std::size_t to) const { return received_.at(edge(from, to)); }

  /// Applies one tick's events; returns true when a cycle closed.
  bool update(const TickEvents& events) {
    for (std::size_t i : events.computes) computed_.at(i) = true;
    for (const SendEvent& s : events.sends) {
      if (s.tau >= cycle_start_) sent_.at(edge(s.from, s.to)) = true;
    }
    for (const DeliveryEvent& d : events.deliveries) {
      if (d.tau >= cycle_start_) received_.at(edge(d.from, d.to)) = true;
    }
    const auto all = [](const std::vector<bool>& v) {
      return std::all_of(v.begin(), v.end(), [](bool b) { return b; });
    };
    if (!(all(computed_) && all(sent_) && all(received_))) return false;
    ++count_;
    cycle_start_ = events.k + 1;
    std::fill(computed_.begin(), computed_.end(), false);
    std::fill(sent_.begin(), sent_.end(), false);
    std::fill(received_.begin(), received_.end(), false);
    return true;
  }

 private:
  std::size_t edge(std::size_t from, std::size_t to) const {
    if (from >= n_) throw std::out_of_range("ops counter: agent out of range");
    auto first = targets_.begin() + static_cast<std::ptrdiff_t>(offset_[from]);
    auto last = targets_.begin() + static_cast<std::ptrdiff_t>(offset_[from + 1]);
    auto it = std::lower_bound(first, last, to);
    if (it == last || *it != to) {
      throw std::invalid_argument("ops counter: no edge " + std::to_string(from) + " -> " +
                                  std::to_string(to));
    }
    return static_cast<std::size_t>(it - targets_.begin());
  }

  std::size_t n_;
  std::vector<std::size_t> offset_;
  std::vector<std::size_t> targets_;
  std::vector<bool> computed_;
  std::vector<bool> sent_;
  std::vector<bool> received_;
  std::int64_t count_ = 0;
  Tick cycle_start_ = 1;
};

inline void update_ops_counter(OpsCounter& c, const TickEvents& events) { c.update(events); }

/// Network-level pair assembled from every agent's own entries.
inline LocalPair true_state(std::span<const LocalPair> states) {
  const std::size_t n = states.size();
  LocalPair z{Vector(n), Vector(n)};
  for (std::size_t i = 0; i < n; ++i) {
    if (states[i].x.size() != n || states[i].y.size() != n) {
      throw std::invalid_argument("true_state: agent copies must have dimension n");
    }
    z.x[i] = states[i].x[i];
    z.y[i] = states[i].y[i];
  }
  return z;
}

/// Distance of agent i's copy to z*, over the coordinates agent i actually
/// maintains: its own block and its essential neighbors. Entries of
/// non-neighbors are never read or written by agent i.
inline double agent_distance(const SeparableProblem& p, std::size_t i, const LocalPair& z,
                             const LocalPair& z_star) {
  double d = std::max(std::abs(z.x[i] - z_star.x[i]), std::abs(z.y[i] - z_star.y[i]));
  for (std::size_t j : p.neighbors(i)) {
    d = std::max(d, std::abs(z.x[j] - z_star.x[j]));
    d = std::max(d, std::abs(z.y[j] - z_star.y[j]));
  }
  return d;
}

struct StopRule {
  Tick horizon = 1000;
  /// Stop once the max agent distance is <= epsilon; negative disables.
  double epsilon = -1.0;
  /// Stop once ops(k) reaches this count; zero disables.
  std::int64_t max_ops = 0;
};

struct RunSpec {
  Algorithm algo = Algorithm::kNag;
  HyperParams nag;
  BaselineParams baseline;
  StopRule stop;
  /// Reject NAG parameters outside the open admissible region.
  bool require_feasible = true;
  bool record_events = false;
  bool record_states = true;
};

struct TraceRow {
  Tick k = 0;
  std::int64_t ops = 0;
  double max_dist = 0.0;
  std::vector<double> agent_dists;
  std::int64_t gradient_evals = 0;
  LocalPair true_state;
  TickEvents events;
};

/// Row 0 is the initial condition; row k is the state after tick k.
struct Trace {
  Algorithm algo = Algorithm::kNag;
  std::vector<TraceRow> rows;
  bool synchronous = false;
  /// First tick with max_dist <= stop epsilon, if any.
  std::optional<Tick> converged_tick;

  double initial_max_distance() const { return rows.empty() ? 0.0 : rows.front().max_dist; }
  const TraceRow& last() const { return rows.back(); }
};

namespace detail {

inline BlockValue block_update(Algorithm algo, std::size_t i, const LocalPair& z,
                               const RunSpec& spec, const SeparableProblem& p) {
  switch (algo) {
    case Algorithm::kNag:
      return double_step_block(i, z, spec.nag, p);
    case Algorithm::kHeavyBall:
      return heavy_ball_block_step(i, z, spec.baseline, p);
    case Algorithm::kGradientDescent:
      return gradient_descent_block_step(i, z, spec.baseline, p);
  }
  throw std::logic_error("unknown algorithm");
}

inline void validate_run(const SeparableProblem& p, const RunSpec& spec,
                         const ScheduleSet& sched, std::span<const LocalPair> init) {
  const std::size_t n = p.size();
  if (init.size() != n) throw std::invalid_argument("run: need one initial pair per agent");
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_feasible(p, init[i])) {
      throw std::invalid_argument("run: initial pair of agent " + std::to_string(i) +
                                  " is infeasible");
    }
  }
  if (sched.compute.size() != n || sched.receive.size() != n) {
    throw std::invalid_argument("run: schedule set does not match agent count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (sched.receive[i].size() != p.neighbors(i).size()) {
      throw std::invalid_argument("run: agent " + std::to_string(i) +
                                  " needs one receive gate per essential neighbor");
    }
  }
  const Tick horizon = std::min(sched.horizon, spec.stop.horizon);
  const auto silent = [horizon](const Schedule& s) {
    for (Tick k = 1; k <= horizon; ++k) {
      if (s.fires(k)) return false;
    }
    return true;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (silent(sched.compute[i])) {
      throw std::invalid_argument("run: compute gate of agent " + std::to_string(i) +
                                  " never fires within the horizon");
    }
    for (const Schedule& s : sched.receive[i]) {
      if (silent(s)) {
        throw std::invalid_argument("run: a receive gate of agent " + std::to_string(i) +
                                    " never fires within the horizon");
      }
    }
  }
  if (spec.algo == Algorithm::kNag) {
    if (!(spec.nag.gamma > 0.0) || spec.nag.lambda < 0.0) {
      throw std::invalid_argument("run: NAG needs gamma > 0 and lambda >= 0");
    }
    if (spec.require_feasible && !spec.nag.strictly_feasible()) {
      throw std::invalid_argument("run: NAG parameters are not strictly feasible");
    }
  } else if (!(spec.baseline.gamma > 0.0) || spec.baseline.momentum < 0.0 ||
             spec.baseline.momentum >= 1.0) {
    throw std::invalid_argument("run: baseline needs gamma > 0 and momentum in [0,1)");
  }
}

}  // namespace detail

/// Totally asynchronous block iteration. Each tick runs three phases in
/// order: every agent whose compute gate fires updates its own block from
/// its current copy; each fresh block is queued to all essential neighbors
/// stamped with the tick; then every open receive gate delivers and the
/// value overwrites the receiver's copy of the sender's block. Nothing
/// received in a tick influences that tick's computations.
inline Trace run_async(const SeparableProblem& p, const RunSpec& spec, const ScheduleSet& sched,
                       std::vector<LocalPair> states, const LocalPair& z_star) {
  detail::validate_run(p, spec, sched, states);
  const std::size_t n = p.size();
  const Tick delay = sched.same_tick_delivery ? 0 : 1;

  // inbound[i][m]: channel neighbors(i)[m] -> i.
  std::vector<std::vector<Channel>> inbound(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : p.neighbors(i)) inbound[i].emplace_back(j, i, delay);
  }
  const auto channel_index = [&p](std::size_t receiver, std::size_t sender) {
    const auto& nb = p.neighbors(receiver);
    return static_cast<std::size_t>(std::lower_bound(nb.begin(), nb.end(), sender) - nb.begin());
  };

  Trace trace;
  trace.algo = spec.algo;
  trace.synchronous = sched.same_tick_delivery;
  OpsCounter ops(p);
  std::int64_t grad_evals = 0;

  const auto record = [&](Tick k, TickEvents&& events) {
    TraceRow row;
    row.k = k;
    row.ops = ops.count();
    row.agent_dists.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      row.agent_dists[i] = agent_distance(p, i, states[i], z_star);
      row.max_dist = std::max(row.max_dist, row.agent_dists[i]);
    }
    row.gradient_evals = grad_evals;
    if (spec.record_states) row.true_state = true_state(states);
    if (spec.record_events) row.events = std::move(events);
    trace.rows.push_back(std::move(row));
    if (!trace.converged_tick && spec.stop.epsilon >= 0.0 &&
        trace.rows.back().max_dist <= spec.stop.epsilon) {
      trace.converged_tick = k;
    }
  };
  const auto done = [&]() {
    const TraceRow& row = trace.rows.back();
    if (spec.stop.epsilon >= 0.0 && row.max_dist <= spec.stop.epsilon) return true;
    return spec.stop.max_ops > 0 && row.ops >= spec.stop.max_ops;
  };

  record(0, TickEvents{});
  const Tick horizon = std::min(sched.horizon, spec.stop.horizon);
  std::vector<BlockValue> fresh(n);
  for (Tick k = 1; k <= horizon && !done(); ++k) {
    TickEvents events;
    events.k = k;
    for (std::size_t i = 0; i < n; ++i) {
      if (!sched.compute[i].fires(k)) continue;
      fresh[i] = detail::block_update(spec.algo, i, states[i], spec, p);
      events.computes.push_back(i);
    }
    for (std::size_t i : events.computes) {
      states[i].x[i] = fresh[i].x;
      states[i].y[i] = fresh[i].y;
      grad_evals += gradient_cost(spec.algo);
      for (std::size_t j : p.neighbors(i)) {
        inbound[j][channel_index(j, i)].send(Message{i, fresh[i].x, fresh[i].y, k});
        events.sends.push_back({i, j, k});
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& nb = p.neighbors(i);
      for (std::size_t m = 0; m < nb.size(); ++m) {
        auto msg = inbound[i][m].deliver_due(k, sched.receive[i][m].fires(k));
        if (!msg) continue;
        incorporate_message(states[i], msg->sender, msg->x_val, msg->y_val);
        events.deliveries.push_back({msg->sender, i, msg->tau});
      }
    }
    ops.update(events);
    record(k, std::move(events));
  }
  return trace;
}

/// Every agent starts from the same pair.
inline std::vector<LocalPair> replicate(const LocalPair& z, std::size_t n) {
  return std::vector<LocalPair>(n, z);
}

/// Feasible initial copies drawn independently per agent and coordinate from
/// the gate hash stream keyed by `seed`.
inline std::vector<LocalPair> random_initial_states(const SeparableProblem& p,
                                                    std::uint64_t seed) {
  const std::size_t n = p.size();
  std::vector<LocalPair> out(n, LocalPair{Vector(n), Vector(n)});
  const auto unit = [seed](std::uint64_t entity, Tick k) {
    return static_cast<double>(gate_hash(seed, entity, k) >> 11) * 0x1.0p-53;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < n; ++m) {
      const Box& b = p.box(m);
      out[i].x[m] = b.lo + b.width() * unit(i, static_cast<Tick>(2 * m));
      out[i].y[m] = b.lo + b.width() * unit(i, static_cast<Tick>(2 * m + 1));
    }
  }
  return out;
}

struct Minimizer {
  Vector x;
  std::int64_t iterations = 0;
  /// max |x - x_pgd| against an independent projected-gradient solve.
  double pgd_discrepancy = 0.0;

  LocalPair pair() const { return LocalPair::diagonal(x); }
};

/// Iterates the synchronous double-step map from the box center until the
/// pair stops moving, then cross-checks against projected gradient descent.
inline Minimizer solve_minimizer(const SeparableProblem& p, const HyperParams& hp,
                                 std::int64_t max_iterations = 1'000'000) {
  const std::size_t n = p.size();
  Vector center(n);
  for (std::size_t m = 0; m < n; ++m) center[m] = p.box(m).center();
  LocalPair z = LocalPair::diagonal(center);
  Minimizer out;
  int settled = 0;
  for (; out.iterations < max_iterations; ++out.iterations) {
    LocalPair next = synchronous_double_map(z, hp, p);
    const double change = pair_inf_distance(next, z);
    z = std::move(next);
    if (change == 0.0) break;
    // Keep polishing a little past the 1e-13 threshold.
    if (change < 1e-13 && ++settled >= 200) break;
  }
  out.x = z.x;

  const double step = 0.99 / std::max(hp.h_max, std::numeric_limits<double>::min());
  Vector g = center;
  for (std::int64_t it = 0; it < max_iterations; ++it) {
    double change = 0.0;
    Vector next(n);
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = p.project(i, g[i] - step * p.gradient(i, g));
      change = std::max(change, std::abs(next[i] - g[i]));
    }
    g = std::move(next);
    if (change < 1e-15) break;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.pgd_discrepancy = std::max(out.pgd_discrepancy, std::abs(out.x[i] - g[i]));
  }
  return out;
}

/// Largest m with d <= alpha^m * d0 (relative slack 1e-12); distance zero
/// maps to the int64 maximum.
inline std::int64_t containment_level(double d, double d0, double alpha) {
  if (d <= 0.0) return std::numeric_limits<std::int64_t>::max();
  if (d0 <= 0.0) return 0;
  auto m = static_cast<std::int64_t>(std::floor(std::log(d / d0) / std::log(alpha)));
  m = std::max<std::int64_t>(m, 0);
  const auto inside = [&](std::int64_t level) {
    return d <= std::pow(alpha, static_cast<double>(level)) * d0 * (1.0 + 1e-12);
  };
  while (m > 0 && !inside(m)) --m;
  while (inside(m + 1)) ++m;
  return m;
}

struct BoundsReport {
  // Linear decay in ops(k).
  bool decay_ok = true;
  std::int64_t decay_violations = 0;
  double worst_decay_excess = 0.0;
  std::optional<Tick> first_decay_violation;

  // Per-agent containment level never decreases.
  bool invariance_ok = true;
  std::int64_t invariance_violations = 0;

  // Synchronous traces only: one tick is two NAG steps, so the distance of
  // the true state must shrink by alpha every tick.
  bool two_step_checked = false;
  bool two_step_ok = true;
  double max_two_step_ratio = 0.0;

  // Operation budget for the certificate's epsilon.
  double beta = 0.0;
  std::int64_t budget_cycles = 0;
  std::optional<Tick> budget_tick;
  std::optional<Tick> first_eps_tick;
  bool budget_checked = false;
  bool budget_ok = true;
  /// Epsilon was reached with fewer completed cycles than beta.
  bool reached_below_budget = false;

  bool ok() const { return decay_ok && invariance_ok && two_step_ok && budget_ok; }
};

inline constexpr double kDecaySlack = 1e-9;
inline constexpr double kTwoStepSlack = 1e-10;

inline BoundsReport verify_bounds(const Trace& t, const ContractionCert& cert,
                                  const LocalPair& z_star) {
  BoundsReport r;
  if (t.rows.empty()) return r;
  const double alpha = cert.alpha;
  const double d0 = t.initial_max_distance();

  for (const TraceRow& row : t.rows) {
    const double bound = std::pow(alpha, static_cast<double>(row.ops)) * d0;
    const double excess = row.max_dist - bound;
    if (excess > kDecaySlack) {
      r.decay_ok = false;
      ++r.decay_violations;
      if (!r.first_decay_violation) r.first_decay_violation = row.k;
    }
    r.worst_decay_excess = std::max(r.worst_decay_excess, excess);
  }

  const std::size_t n = t.rows.front().agent_dists.size();
  std::vector<std::int64_t> level(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    level[i] = containment_level(t.rows.front().agent_dists[i], d0, alpha);
  }
  for (std::size_t row = 1; row < t.rows.size(); ++row) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::int64_t now = containment_level(t.rows[row].agent_dists[i], d0, alpha);
      if (now < level[i]) {
        r.invariance_ok = false;
        ++r.invariance_violations;
      }
      level[i] = now;
    }
  }

  if (t.synchronous && t.algo == Algorithm::kNag && !t.rows.front().true_state.x.empty()) {
    r.two_step_checked = true;
    for (std::size_t row = 1; row < t.rows.size(); ++row) {
      const double before = pair_inf_distance(t.rows[row - 1].true_state, z_star);
      const double after = pair_inf_distance(t.rows[row].true_state, z_star);
      if (after > alpha * before + kTwoStepSlack) r.two_step_ok = false;
      if (before > 0.0) r.max_two_step_ratio = std::max(r.max_two_step_ratio, after / before);
    }
  }

  for (const TraceRow& row : t.rows) {
    if (row.max_dist <= cert.epsilon) {
      r.first_eps_tick = row.k;
      break;
    }
  }
  if (d0 > 0.0 && alpha > 0.0 && alpha < 1.0 && cert.epsilon > 0.0) {
    const OpsBudget b = ops_lower_bound(cert.epsilon, d0, alpha);
    r.beta = b.beta;
    r.budget_cycles = b.cycles;
    for (const TraceRow& row : t.rows) {
      if (row.ops >= b.cycles) {
        r.budget_tick = row.k;
        r.budget_checked = true;
        r.budget_ok = row.max_dist <= cert.epsilon;
        break;
      }
    }
    if (r.first_eps_tick) {
      const auto& hit = t.rows[static_cast<std::size_t>(*r.first_eps_tick)];
      r.reached_below_budget = static_cast<double>(hit.ops) < b.beta;
    }
  } else {
    r.budget_checked = true;
    r.budget_ok = d0 <= cert.epsilon;
  }
  return r;
}

}  // namespace tanag

#endif  // TANAG_RUNTIME_HPP
