#ifndef TANAG_NETWORK_HPP
#define TANAG_NETWORK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tanag/problem.hpp"

namespace tanag {

using Tick = std::int64_t;

/// SplitMix64 finalizer (Steele, Lea, Flood). Constants:
///   add 0x9e3779b97f4a7c15, multiply 0xbf58476d1ce4e5b9 then 0x94d049bb133111eb,
///   shifts 30, 27, 31.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stateless gate draw keyed by (seed, entity, tick):
///   splitmix64(splitmix64(splitmix64(seed) ^ entity) ^ tick)
constexpr std::uint64_t gate_hash(std::uint64_t seed, std::uint64_t entity, Tick tick) {
  return splitmix64(splitmix64(splitmix64(seed) ^ entity) ^ static_cast<std::uint64_t>(tick));
}

/// Firing pattern of one gate (a compute gate K^i or a receive gate R_j^i)
/// over ticks 1..horizon.
class Schedule {
 public:
  /// Tick k fires iff gate_hash(seed, entity, k) < p * 2^64; p = 1 fires always.
  static Schedule bernoulli(double p, std::uint64_t seed, Tick horizon, std::uint64_t entity = 0) {
    if (!(p > 0.0 && p <= 1.0)) {
      throw std::invalid_argument("gate probability must lie in (0,1], got " + std::to_string(p) +
                                  " (a silent gate never lets the agent act)");
    }
    if (horizon < 0) throw std::invalid_argument("schedule horizon must be nonnegative");
    Schedule s;
    s.bernoulli_ = true;
    s.p_ = p;
    s.seed_ = seed;
    s.entity_ = entity;
    s.horizon_ = horizon;
    s.threshold_ = p >= 1.0 ? 0 : static_cast<std::uint64_t>(std::ldexp(p, 64));
    return s;
  }

  /// Fires exactly at the listed ticks, which must be strictly increasing and
  /// lie in [1, horizon].
  static Schedule explicit_ticks(std::vector<Tick> ticks, Tick horizon) {
    for (std::size_t m = 0; m < ticks.size(); ++m) {
      if (ticks[m] < 1 || ticks[m] > horizon) {
        throw std::invalid_argument("explicit tick " + std::to_string(ticks[m]) +
                                    " outside [1, horizon]");
      }
      if (m > 0 && ticks[m] <= ticks[m - 1]) {
        throw std::invalid_argument("explicit ticks must be strictly increasing");
      }
    }
    Schedule s;
    s.ticks_ = std::move(ticks);
    s.horizon_ = horizon;
    return s;
  }

  bool fires(Tick k) const {
    if (k < 1 || k > horizon_) return false;
    if (!bernoulli_) return std::binary_search(ticks_.begin(), ticks_.end(), k);
    if (p_ >= 1.0) return true;
    return gate_hash(seed_, entity_, k) < threshold_;
  }

  bool is_bernoulli() const { return bernoulli_; }
  bool always_fires() const { return bernoulli_ && p_ >= 1.0; }
  double probability() const { return p_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t entity() const { return entity_; }
  Tick horizon() const { return horizon_; }

  std::vector<Tick> firing_ticks() const {
    if (!bernoulli_) return ticks_;
    std::vector<Tick> out;
    for (Tick k = 1; k <= horizon_; ++k) {
      if (fires(k)) out.push_back(k);
    }
    return out;
  }

  /// Finite-horizon stand-in for "fires infinitely often": every block of
  /// `window` consecutive ticks in [1, horizon] contains a firing.
  bool fires_in_every_window(Tick window) const {
    if (window <= 0) throw std::invalid_argument("window must be positive");
    Tick last = 0;
    for (Tick k = 1; k <= horizon_; ++k) {
      if (fires(k)) last = k;
      if (k - last >= window) return false;
    }
    return true;
  }

 private:
  Schedule() = default;

  bool bernoulli_ = false;
  double p_ = 0.0;
  std::uint64_t seed_ = 0;
  std::uint64_t entity_ = 0;
  std::uint64_t threshold_ = 0;
  Tick horizon_ = 0;
  std::vector<Tick> ticks_;
};

inline Schedule make_bernoulli_schedule(double p, std::uint64_t seed, Tick horizon) {
  return Schedule::bernoulli(p, seed, horizon);
}

/// Agent `sender`'s own block as computed at tick tau.
struct Message {
  std::size_t sender = 0;
  double x_val = 0.0;
  double y_val = 0.0;
  Tick tau = 0;
};

/// Directed link source -> target. Messages wait in a tau-ordered queue and
/// become eligible `delay` ticks after they were computed. Delivery is
/// latest-wins: an open gate drains every eligible message and hands over the
/// newest one, unless it is not newer than what was already delivered.
class Channel {
 public:
  Channel(std::size_t source, std::size_t target, Tick delay = 1)
      : source_(source), target_(target), delay_(delay) {
    if (delay < 0) throw std::invalid_argument("channel delay must be nonnegative");
  }

  void send(const Message& msg) {
    if (msg.sender != source_) {
      throw std::invalid_argument("message from agent " + std::to_string(msg.sender) +
                                  " sent on channel from " + std::to_string(source_));
    }
    auto it = std::lower_bound(queue_.begin(), queue_.end(), msg.tau,
                               [](const Message& m, Tick t) { return m.tau < t; });
    if (it != queue_.end() && it->tau == msg.tau) {
      *it = msg;
    } else {
      queue_.insert(it, msg);
    }
  }

  std::optional<Message> deliver_due(Tick k, bool gate) {
    if (!gate) return std::nullopt;
    auto end = queue_.begin();
    while (end != queue_.end() && end->tau + delay_ <= k) ++end;
    if (end == queue_.begin()) return std::nullopt;
    const Message newest = *(end - 1);
    queue_.erase(queue_.begin(), end);
    if (newest.tau <= last_delivered_tau_) return std::nullopt;
    last_delivered_tau_ = newest.tau;
    return newest;
  }

  /// Tick at which the value last delivered was computed; 0 before any
  /// delivery (initial condition).
  Tick origin_time() const { return last_delivered_tau_; }

  std::size_t source() const { return source_; }
  std::size_t target() const { return target_; }
  Tick delay() const { return delay_; }
  const std::vector<Message>& queue() const { return queue_; }

  /// Test hook: pretend a value computed at `tau` has already been delivered.
  void set_last_delivered(Tick tau) { last_delivered_tau_ = tau; }

 private:
  std::size_t source_;
  std::size_t target_;
  Tick delay_;
  Tick last_delivered_tau_ = 0;
  std::vector<Message> queue_;
};

enum class GateMode {
  /// One compute gate per agent, one receive gate per directed edge.
  kIndependent,
  /// Agent i's single per-tick draw gates both its computation and all of its
  /// receptions.
  kTied,
};

/// Gates for a whole network. receive[i][m] gates the edge from
/// neighbors(i)[m] into agent i.
struct ScheduleSet {
  std::vector<Schedule> compute;
  std::vector<std::vector<Schedule>> receive;
  Tick horizon = 0;
  /// Messages reach their destination within the tick they were sent.
  bool same_tick_delivery = false;

  bool fires_in_every_window(Tick window) const {
    for (const auto& s : compute) {
      if (!s.fires_in_every_window(window)) return false;
    }
    for (const auto& row : receive) {
      for (const auto& s : row) {
        if (!s.fires_in_every_window(window)) return false;
      }
    }
    return true;
  }
};

/// Entity ids: agent i's compute gate is i; edge j -> i is n + j*n + i.
inline ScheduleSet make_bernoulli_schedules(const SeparableProblem& p, double prob,
                                            std::uint64_t seed, Tick horizon,
                                            GateMode mode = GateMode::kIndependent) {
  const std::size_t n = p.size();
  ScheduleSet set;
  set.horizon = horizon;
  set.same_tick_delivery = prob >= 1.0;
  set.compute.reserve(n);
  set.receive.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    set.compute.push_back(Schedule::bernoulli(prob, seed, horizon, i));
    for (std::size_t j : p.neighbors(i)) {
      const std::uint64_t entity = mode == GateMode::kTied ? i : n + j * n + i;
      set.receive[i].push_back(Schedule::bernoulli(prob, seed, horizon, entity));
    }
  }
  return set;
}

}  // namespace tanag

#endif  // TANAG_NETWORK_HPP
