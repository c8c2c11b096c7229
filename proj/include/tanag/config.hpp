#ifndef TANAG_CONFIG_HPP
#define TANAG_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tanag/network.hpp"
#include "tanag/problem.hpp"
#include "tanag/runtime.hpp"

namespace tanag {

/// Flat `key = value` text. '#' starts a comment, blank lines are ignored,
/// a repeated key is an error. List values are separated by whitespace
/// and/or commas.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in, std::string source = "<input>") {
    KeyValueFile kv;
    kv.source_ = std::move(source);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument(kv.source_ + ":" + std::to_string(lineno) +
                                    ": expected 'key = value'");
      }
      std::string key = trim(trimmed.substr(0, eq));
      std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) {
        throw std::invalid_argument(kv.source_ + ":" + std::to_string(lineno) + ": empty key");
      }
      if (!kv.values_.emplace(key, value).second) {
        throw std::invalid_argument(kv.source_ + ":" + std::to_string(lineno) +
                                    ": duplicate key '" + key + "'");
      }
    }
    return kv;
  }

  static KeyValueFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open '" + path + "'");
    return parse(in, path);
  }

  static KeyValueFile from_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get(const std::string& key) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) throw std::invalid_argument(source_ + ": missing key '" + key + "'");
    return it->second;
  }
  std::string get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
  }

  double get_double(const std::string& key) const { return to_double(key, get(key)); }
  std::int64_t get_int(const std::string& key) const { return to_int(key, get(key)); }

  std::vector<double> get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : split_list(get(key))) out.push_back(to_double(key, tok));
    return out;
  }
  std::vector<std::int64_t> get_ints(const std::string& key) const {
    std::vector<std::int64_t> out;
    for (const auto& tok : split_list(get(key))) out.push_back(to_int(key, tok));
    return out;
  }
  std::vector<std::string> get_list(const std::string& key) const {
    return split_list(get(key));
  }

  /// Keys present in the file that were never read.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
      if (!used_.count(k)) out.push_back(k);
    }
    return out;
  }
  /// Keys with the given prefix.
  std::vector<std::string> keys_with_prefix(std::string_view prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
      if (std::string_view(k).substr(0, prefix.size()) == prefix) out.push_back(k);
    }
    return out;
  }
  const std::string& source() const { return source_; }

  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
      if (ch == ',' || ch == ' ' || ch == '\t') {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
  }
  double to_double(const std::string& key, const std::string& tok) const {
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used == tok.size()) return v;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument(source_ + ": key '" + key + "': '" + tok + "' is not a number");
  }
  std::int64_t to_int(const std::string& key, const std::string& tok) const {
    try {
      std::size_t used = 0;
      long long v = std::stoll(tok, &used);
      if (used == tok.size()) return v;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument(source_ + ": key '" + key + "': '" + tok +
                                "' is not an integer");
  }

  std::string source_;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

namespace detail {

inline void reject_unused(const KeyValueFile& kv) {
  const auto unused = kv.unused_keys();
  if (unused.empty()) return;
  std::string msg = kv.source() + ": unknown key(s):";
  for (const auto& k : unused) msg += " " + k;
  throw std::invalid_argument(msg);
}

}  // namespace detail

/// Problem description file. Either
///
///   benchmark = paper
///   n = 10
///
/// or a quadratic 1/2 x'Qx + q'x + c:
///
///   n  = 3
///   Q  = 2 -0.5 0   -0.5 2 0   0 0 1     # row-major, n*n entries
///   q  = 0 0 0                          # optional, default zeros
///   c  = 0                              # optional
///   lo = -1 -1 -1                       # one entry, or n entries
///   hi = 1 1 1
///
/// Indices are 0-based everywhere.
inline SeparableProblem parse_problem(const KeyValueFile& kv) {
  if (kv.has("benchmark")) {
    if (kv.get("benchmark") != "paper") {
      throw std::invalid_argument(kv.source() + ": benchmark must be 'paper'");
    }
    const std::int64_t n = kv.get_int("n");
    detail::reject_unused(kv);
    if (n < 2) throw std::invalid_argument(kv.source() + ": benchmark needs n >= 2");
    return make_paper_benchmark(static_cast<std::size_t>(n));
  }
  const std::int64_t n_signed = kv.get_int("n");
  if (n_signed < 1) throw std::invalid_argument(kv.source() + ": n must be positive");
  const auto n = static_cast<std::size_t>(n_signed);
  Vector q_mat = kv.get_doubles("Q");
  Vector q = kv.has("q") ? kv.get_doubles("q") : Vector(n, 0.0);
  const double c = kv.has("c") ? kv.get_double("c") : 0.0;
  const auto expand = [&](const std::string& key) {
    Vector v = kv.get_doubles(key);
    if (v.size() == 1) v.assign(n, v.front());
    if (v.size() != n) {
      throw std::invalid_argument(kv.source() + ": '" + key + "' needs 1 or n entries");
    }
    return v;
  };
  const Vector lo = expand("lo");
  const Vector hi = expand("hi");
  detail::reject_unused(kv);
  std::vector<Box> boxes(n);
  for (std::size_t i = 0; i < n; ++i) boxes[i] = {lo[i], hi[i]};
  return SeparableProblem::quadratic(DenseMatrix(n, std::move(q_mat)), std::move(q), c,
                                     std::move(boxes));
}

inline SeparableProblem load_problem(const std::string& path) {
  return parse_problem(KeyValueFile::load(path));
}

enum class ParamMode { kFormula, kPaper, kExplicit };

inline ParamMode parse_param_mode(std::string_view s) {
  if (s == "formula") return ParamMode::kFormula;
  if (s == "paper") return ParamMode::kPaper;
  if (s == "explicit") return ParamMode::kExplicit;
  throw std::invalid_argument("unknown parameter mode '" + std::string(s) +
                              "' (expected formula, paper, explicit)");
}

inline std::string_view to_string(ParamMode m) {
  switch (m) {
    case ParamMode::kFormula:
      return "formula";
    case ParamMode::kPaper:
      return "paper";
    case ParamMode::kExplicit:
      return "explicit";
  }
  return "?";
}

enum class InitKind { kUpper, kLower, kCenter, kRandom, kOptimum };

inline InitKind parse_init(std::string_view s) {
  if (s == "upper") return InitKind::kUpper;
  if (s == "lower") return InitKind::kLower;
  if (s == "center") return InitKind::kCenter;
  if (s == "random") return InitKind::kRandom;
  if (s == "optimum") return InitKind::kOptimum;
  throw std::invalid_argument("unknown init '" + std::string(s) +
                              "' (expected upper, lower, center, random, optimum)");
}

/// Explicit gate lists for replaying a recorded schedule.
struct ExplicitSchedule {
  /// compute[i]: ticks at which agent i computes.
  std::vector<std::vector<Tick>> compute;
  /// receive[(i, j)]: ticks at which agent i receives from neighbor j.
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Tick>> receive;
  bool same_tick = false;
};

struct ExperimentConfig {
  /// "benchmark" or a path to a problem description file.
  std::string problem = "benchmark";
  std::size_t benchmark_n = 10;
  std::vector<Algorithm> algos{Algorithm::kNag};
  ParamMode mode = ParamMode::kFormula;
  double gamma = 0.0;
  double lambda = 0.0;
  double gamma_frac = 0.99;
  double lambda_frac = 0.9;
  /// Nonpositive: reuse the NAG step size.
  double baseline_gamma = 0.0;
  /// Negative: reuse the NAG momentum.
  double baseline_momentum = -1.0;
  std::vector<double> p_list{1.0};
  std::vector<std::uint64_t> seeds{1};
  GateMode gates = GateMode::kIndependent;
  std::optional<ExplicitSchedule> explicit_schedule;
  Tick horizon = 100000;
  double eps = 1e-4;
  InitKind init = InitKind::kUpper;
  std::vector<double> fig_p{1.0, 0.5, 0.1};
  std::string out = "out";
  bool events = false;
  std::size_t threads = 0;
};

/// Experiment configuration file. Recognized keys (all optional):
///
///   problem     = benchmark | <path to problem file>
///   n           = 10                 # benchmark size
///   algo        = nag, hb, gd
///   mode        = formula | paper | explicit
///   gamma, lambda                    # explicit mode
///   gamma_frac  = 0.99               # formula mode
///   lambda_frac = 0.9
///   baseline_gamma, baseline_momentum
///   schedule    = bernoulli | explicit
///   p           = 0.1, 0.5, 1.0      # bernoulli gate probabilities
///   seeds       = 1 2 3              # or: seed = 1
///   gates       = independent | tied
///   compute.<i> = 1 4 9              # explicit schedule ticks
///   receive.<i>.<j> = 2 5 9          # agent i receives from neighbor j
///   same_tick   = 0 | 1              # explicit schedule delivery latency
///   horizon     = 100000
///   eps         = 1e-4
///   init        = upper | lower | center | random | optimum
///   fig_p       = 1.0, 0.5, 0.1
///   out         = out
///   events      = 0 | 1
///   threads     = 0                  # 0 = hardware concurrency
inline ExperimentConfig parse_experiment(const KeyValueFile& kv) {
  ExperimentConfig c;
  c.problem = kv.get_or("problem", c.problem);
  if (kv.has("n")) c.benchmark_n = static_cast<std::size_t>(kv.get_int("n"));
  if (kv.has("algo")) {
    c.algos.clear();
    for (const auto& a : kv.get_list("algo")) c.algos.push_back(parse_algorithm(a));
  }
  if (kv.has("mode")) c.mode = parse_param_mode(kv.get("mode"));
  if (kv.has("gamma")) c.gamma = kv.get_double("gamma");
  if (kv.has("lambda")) c.lambda = kv.get_double("lambda");
  if (kv.has("gamma_frac")) c.gamma_frac = kv.get_double("gamma_frac");
  if (kv.has("lambda_frac")) c.lambda_frac = kv.get_double("lambda_frac");
  if (kv.has("baseline_gamma")) c.baseline_gamma = kv.get_double("baseline_gamma");
  if (kv.has("baseline_momentum")) c.baseline_momentum = kv.get_double("baseline_momentum");
  if (kv.has("p")) c.p_list = kv.get_doubles("p");
  if (kv.has("seeds") && kv.has("seed")) {
    throw std::invalid_argument(kv.source() + ": give either 'seed' or 'seeds', not both");
  }
  for (const char* key : {"seeds", "seed"}) {
    if (!kv.has(key)) continue;
    c.seeds.clear();
    for (auto s : kv.get_ints(key)) c.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (kv.has("gates")) {
    const auto g = kv.get("gates");
    if (g == "independent") {
      c.gates = GateMode::kIndependent;
    } else if (g == "tied") {
      c.gates = GateMode::kTied;
    } else {
      throw std::invalid_argument(kv.source() + ": gates must be independent or tied");
    }
  }
  const std::string schedule = kv.get_or("schedule", "bernoulli");
  if (schedule == "explicit") {
    ExplicitSchedule es;
    for (const auto& key : kv.keys_with_prefix("compute.")) {
      const auto i = static_cast<std::size_t>(std::stoul(key.substr(8)));
      if (es.compute.size() <= i) es.compute.resize(i + 1);
      es.compute[i] = kv.get_ints(key);
    }
    for (const auto& key : kv.keys_with_prefix("receive.")) {
      const std::string rest = key.substr(8);
      const auto dot = rest.find('.');
      if (dot == std::string::npos) {
        throw std::invalid_argument(kv.source() + ": '" + key + "' must be receive.<i>.<j>");
      }
      const auto i = static_cast<std::size_t>(std::stoul(rest.substr(0, dot)));
      const auto j = static_cast<std::size_t>(std::stoul(rest.substr(dot + 1)));
      es.receive[{i, j}] = kv.get_ints(key);
    }
    if (kv.has("same_tick")) es.same_tick = kv.get_int("same_tick") != 0;
    c.explicit_schedule = std::move(es);
  } else if (schedule != "bernoulli") {
    throw std::invalid_argument(kv.source() + ": schedule must be bernoulli or explicit");
  }
  if (kv.has("horizon")) c.horizon = kv.get_int("horizon");
  if (kv.has("eps")) c.eps = kv.get_double("eps");
  if (kv.has("init")) c.init = parse_init(kv.get("init"));
  if (kv.has("fig_p")) c.fig_p = kv.get_doubles("fig_p");
  c.out = kv.get_or("out", c.out);
  if (kv.has("events")) c.events = kv.get_int("events") != 0;
  if (kv.has("threads")) c.threads = static_cast<std::size_t>(kv.get_int("threads"));
  detail::reject_unused(kv);
  return c;
}

}  // namespace tanag

#endif  // TANAG_CONFIG_HPP
