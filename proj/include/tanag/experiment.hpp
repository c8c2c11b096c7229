#ifndef TANAG_EXPERIMENT_HPP
#define TANAG_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "tanag/config.hpp"
#include "tanag/hyperparams.hpp"
#include "tanag/network.hpp"
#include "tanag/runtime.hpp"

namespace tanag {

/// Shortest %g form that reads back to the same double; keeps CSV output
/// byte-stable and human readable.
inline std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline SeparableProblem load_experiment_problem(const ExperimentConfig& c) {
  if (c.problem == "benchmark") return make_paper_benchmark(c.benchmark_n);
  return load_problem(c.problem);
}

/// Parameters actually used by a run, plus the certificates that go with them.
struct ResolvedParams {
  ParamMode mode = ParamMode::kFormula;
  DominanceCert dominance;
  HyperParams hp;
  BaselineParams baseline;
  ContractionCert cert;
  /// Bound verification is meaningful only when the parameters certify
  /// alpha < 1.
  bool verify = false;
};

inline ResolvedParams resolve_params(const SeparableProblem& p, const ExperimentConfig& c) {
  ResolvedParams r;
  r.mode = c.mode;
  r.dominance = p.dominance_certificate();
  switch (c.mode) {
    case ParamMode::kFormula:
      if (!r.dominance.valid) {
        throw std::invalid_argument("dominance violated: mu = " + format_double(r.dominance.mu) +
                                    " <= 0");
      }
      r.hp = select_params(r.dominance, c.gamma_frac, c.lambda_frac);
      break;
    case ParamMode::kPaper:
      r.hp = paper_mode_params();
      break;
    case ParamMode::kExplicit:
      r.hp.gamma = c.gamma;
      r.hp.lambda = c.lambda;
      r.hp.mu = r.dominance.mu;
      r.hp.h_max = r.dominance.h_max;
      break;
  }
  r.baseline.gamma = c.baseline_gamma > 0.0 ? c.baseline_gamma : r.hp.gamma;
  // Heavy ball needs momentum below 1; a larger NAG lambda maps to l / (1 + l).
  const double l = r.hp.lambda;
  r.baseline.momentum = c.baseline_momentum >= 0.0 ? c.baseline_momentum
                        : l < 1.0                  ? l
                                                   : l / (1.0 + l);
  r.cert = certify(p, r.hp, c.eps);
  r.verify = r.dominance.valid && r.cert.feasible && c.mode != ParamMode::kPaper;
  return r;
}

inline ScheduleSet build_schedules(const SeparableProblem& p, const ExperimentConfig& c,
                                   double prob, std::uint64_t seed) {
  if (!c.explicit_schedule) return make_bernoulli_schedules(p, prob, seed, c.horizon, c.gates);
  const ExplicitSchedule& es = *c.explicit_schedule;
  ScheduleSet set;
  set.horizon = c.horizon;
  set.same_tick_delivery = es.same_tick;
  set.receive.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    set.compute.push_back(Schedule::explicit_ticks(
        i < es.compute.size() ? es.compute[i] : std::vector<Tick>{}, c.horizon));
    for (std::size_t j : p.neighbors(i)) {
      auto it = es.receive.find({i, j});
      set.receive[i].push_back(Schedule::explicit_ticks(
          it == es.receive.end() ? std::vector<Tick>{} : it->second, c.horizon));
    }
  }
  return set;
}

inline std::vector<LocalPair> initial_states(const SeparableProblem& p, const ExperimentConfig& c,
                                             std::uint64_t seed, const LocalPair& z_star) {
  const std::size_t n = p.size();
  Vector v(n);
  switch (c.init) {
    case InitKind::kRandom:
      return random_initial_states(p, seed);
    case InitKind::kOptimum:
      return replicate(z_star, n);
    case InitKind::kUpper:
      for (std::size_t m = 0; m < n; ++m) v[m] = p.box(m).hi;
      break;
    case InitKind::kLower:
      for (std::size_t m = 0; m < n; ++m) v[m] = p.box(m).lo;
      break;
    case InitKind::kCenter:
      for (std::size_t m = 0; m < n; ++m) v[m] = p.box(m).center();
      break;
  }
  return replicate(LocalPair::diagonal(v), n);
}

/// Reference minimizer for verification. Uses formula-mode parameters when
/// the problem is certifiably dominant, whatever mode the run itself uses.
inline Minimizer experiment_minimizer(const SeparableProblem& p) {
  const DominanceCert d = p.dominance_certificate();
  if (!d.valid) throw std::invalid_argument("dominance violated: cannot certify a minimizer");
  return solve_minimizer(p, select_params(d));
}

struct RunOutcome {
  Algorithm algo = Algorithm::kNag;
  double p = 1.0;
  std::uint64_t seed = 0;
  Trace trace;
  std::optional<BoundsReport> report;
};

inline RunOutcome run_experiment(const SeparableProblem& p, const ResolvedParams& params,
                                 const ExperimentConfig& c, Algorithm algo, double prob,
                                 std::uint64_t seed, const LocalPair& z_star,
                                 bool record_states = true) {
  RunSpec spec;
  spec.algo = algo;
  spec.nag = params.hp;
  spec.baseline = params.baseline;
  spec.stop.horizon = c.horizon;
  spec.stop.epsilon = c.eps;
  spec.require_feasible = params.verify;
  spec.record_events = c.events;
  spec.record_states = record_states;
  RunOutcome out;
  out.algo = algo;
  out.p = prob;
  out.seed = seed;
  out.trace = run_async(p, spec, build_schedules(p, c, prob, seed),
                        initial_states(p, c, seed, z_star), z_star);
  if (params.verify && algo == Algorithm::kNag) {
    out.report = verify_bounds(out.trace, params.cert, z_star);
  }
  return out;
}

/// Header `k,ops,max_dist,dist_0,...,dist_{n-1}`; one row per recorded tick.
inline void write_trace_csv(std::ostream& os, const Trace& t) {
  const std::size_t n = t.rows.empty() ? 0 : t.rows.front().agent_dists.size();
  os << "k,ops,max_dist";
  for (std::size_t i = 0; i < n; ++i) os << ",dist_" << i;
  os << '\n';
  for (const TraceRow& row : t.rows) {
    os << row.k << ',' << row.ops << ',' << format_double(row.max_dist);
    for (double d : row.agent_dists) os << ',' << format_double(d);
    os << '\n';
  }
}

/// One JSON object per event:
///   {"k":3,"type":"compute","agent":1}
///   {"k":3,"type":"send","from":1,"to":2,"tau":3}
///   {"k":4,"type":"deliver","from":1,"to":2,"tau":3}
inline void write_events_jsonl(std::ostream& os, const Trace& t) {
  for (const TraceRow& row : t.rows) {
    for (std::size_t i : row.events.computes) {
      os << "{\"k\":" << row.k << ",\"type\":\"compute\",\"agent\":" << i << "}\n";
    }
    for (const SendEvent& s : row.events.sends) {
      os << "{\"k\":" << row.k << ",\"type\":\"send\",\"from\":" << s.from << ",\"to\":" << s.to
         << ",\"tau\":" << s.tau << "}\n";
    }
    for (const DeliveryEvent& d : row.events.deliveries) {
      os << "{\"k\":" << row.k << ",\"type\":\"deliver\",\"from\":" << d.from
         << ",\"to\":" << d.to << ",\"tau\":" << d.tau << "}\n";
    }
  }
}

/// Reference iteration counts for the 10-agent benchmark: NAG, HB, GD, and
/// the percent reductions of NAG against HB and GD.
struct PublishedRow {
  double p;
  int nag;
  int hb;
  int gd;
  int reduction_hb;
  int reduction_gd;
};

inline const std::vector<PublishedRow>& published_table() {
  static const std::vector<PublishedRow> rows{
      {1.0, 5, 6, 12, 17, 58},   {0.9, 7, 7, 15, 0, 53},    {0.8, 10, 11, 17, 9, 41},
      {0.7, 8, 10, 20, 20, 60},  {0.6, 10, 11, 24, 9, 58},  {0.5, 15, 17, 29, 12, 48},
      {0.4, 15, 19, 34, 21, 56}, {0.3, 24, 29, 58, 17, 59}, {0.2, 49, 59, 93, 17, 47},
      {0.1, 123, 170, 314, 28, 61}};
  return rows;
}

inline std::optional<PublishedRow> published_row(double p) {
  for (const auto& r : published_table()) {
    if (std::abs(r.p - p) < 1e-9) return r;
  }
  return std::nullopt;
}

inline double percent_reduction(double ours, double other) {
  return other > 0.0 ? 100.0 * (1.0 - ours / other) : 0.0;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

struct SweepRun {
  Algorithm algo = Algorithm::kNag;
  double p = 1.0;
  std::uint64_t seed = 0;
  /// Ticks until max agent distance <= eps, or the last tick simulated.
  Tick ticks = 0;
  std::int64_t ops = 0;
  std::int64_t gradient_evals = 0;
  bool converged = false;
  /// Empty when verification does not apply to this run.
  std::optional<bool> bounds_ok;
};

struct SweepSummaryRow {
  double p = 1.0;
  std::map<Algorithm, double> median_ticks;
  std::map<Algorithm, double> median_ops;
  std::map<Algorithm, double> median_grads;
  std::map<Algorithm, std::size_t> converged;
};

struct SweepResult {
  std::vector<SweepRun> runs;
  std::vector<SweepSummaryRow> summary;
};

/// Runs every (algo, p, seed) combination, fanned out over worker threads.
/// Runs are independent and results are placed by index, then sorted, so the
/// output does not depend on scheduling.
inline SweepResult run_sweep(const SeparableProblem& p, const ResolvedParams& params,
                             const ExperimentConfig& c, const LocalPair& z_star) {
  if (c.algos.empty()) throw std::invalid_argument("sweep: algorithm list is empty");
  if (c.p_list.empty()) throw std::invalid_argument("sweep: probability list is empty");
  if (c.seeds.empty()) throw std::invalid_argument("sweep: seed list is empty");
  struct Job {
    Algorithm algo;
    double p;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Algorithm a : c.algos) {
    for (double prob : c.p_list) {
      for (std::uint64_t s : c.seeds) jobs.push_back({a, prob, s});
    }
  }
  SweepResult result;
  result.runs.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(jobs.size());
  const auto worker = [&]() {
    ExperimentConfig quiet = c;
    quiet.events = false;
    for (std::size_t idx = next++; idx < jobs.size(); idx = next++) {
      const Job& job = jobs[idx];
      try {
        RunOutcome o =
            run_experiment(p, params, quiet, job.algo, job.p, job.seed, z_star, params.verify);
        SweepRun& r = result.runs[idx];
        r.algo = job.algo;
        r.p = job.p;
        r.seed = job.seed;
        r.converged = o.trace.converged_tick.has_value();
        const TraceRow& end = r.converged
                                  ? o.trace.rows[static_cast<std::size_t>(*o.trace.converged_tick)]
                                  : o.trace.last();
        r.ticks = end.k;
        r.ops = end.ops;
        r.gradient_evals = end.gradient_evals;
        if (o.report) r.bounds_ok = o.report->decay_ok;
      } catch (const std::exception& e) {
        errors[idx] = e.what();
      }
    }
  };
  std::size_t threads = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, jobs.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error("sweep run failed: " + e);
  }
  std::sort(result.runs.begin(), result.runs.end(), [](const SweepRun& a, const SweepRun& b) {
    if (a.p != b.p) return a.p > b.p;
    if (a.algo != b.algo) return a.algo < b.algo;
    return a.seed < b.seed;
  });

  std::vector<double> ps = c.p_list;
  std::sort(ps.begin(), ps.end(), std::greater<>());
  ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
  for (double prob : ps) {
    SweepSummaryRow row;
    row.p = prob;
    for (Algorithm a : c.algos) {
      std::vector<double> ticks, ops, grads;
      std::size_t conv = 0;
      for (const SweepRun& r : result.runs) {
        if (r.algo != a || r.p != prob) continue;
        ticks.push_back(static_cast<double>(r.ticks));
        ops.push_back(static_cast<double>(r.ops));
        grads.push_back(static_cast<double>(r.gradient_evals));
        conv += r.converged ? 1 : 0;
      }
      row.median_ticks[a] = median(ticks);
      row.median_ops[a] = median(ops);
      row.median_grads[a] = median(grads);
      row.converged[a] = conv;
    }
    result.summary.push_back(std::move(row));
  }
  return result;
}

/// Header `algo,p,seed,ticks,ops,grad_evals,converged,bounds_ok`.
inline void write_sweep_runs_csv(std::ostream& os, const SweepResult& s) {
  os << "algo,p,seed,ticks,ops,grad_evals,converged,bounds_ok\n";
  for (const SweepRun& r : s.runs) {
    os << to_string(r.algo) << ',' << format_double(r.p) << ',' << r.seed << ',' << r.ticks
       << ',' << r.ops << ',' << r.gradient_evals << ',' << (r.converged ? 1 : 0) << ','
       << (r.bounds_ok ? (*r.bounds_ok ? "1" : "0") : "") << '\n';
  }
}

/// Header
/// `p,algo,median_ticks,median_ops,median_grad_evals,converged,runs,`
/// `reduction_vs_hb_pct,reduction_vs_gd_pct,published_ticks,published_reduction_pct`.
/// Reductions compare NAG's median ticks against the named baseline and are
/// filled on NAG rows only. Published columns hold the reference
/// iteration count for this (p, algo) and, on HB/GD rows, the reference
/// reduction of NAG against that baseline; they are empty off the table.
inline void write_sweep_summary_csv(std::ostream& os, const SweepResult& s,
                                    std::size_t runs_per_cell) {
  os << "p,algo,median_ticks,median_ops,median_grad_evals,converged,runs,reduction_vs_hb_pct,"
        "reduction_vs_gd_pct,published_ticks,published_reduction_pct\n";
  for (const SweepSummaryRow& row : s.summary) {
    const auto pub = published_row(row.p);
    for (const auto& [algo, ticks] : row.median_ticks) {
      os << format_double(row.p) << ',' << to_string(algo) << ',' << format_double(ticks) << ','
         << format_double(row.median_ops.at(algo)) << ','
         << format_double(row.median_grads.at(algo)) << ',' << row.converged.at(algo) << ','
         << runs_per_cell << ',';
      const bool nag = algo == Algorithm::kNag;
      const auto red = [&](Algorithm other) -> std::string {
        if (!nag) return "";
        auto it = row.median_ticks.find(other);
        if (it == row.median_ticks.end()) return "";
        return format_double(percent_reduction(ticks, it->second));
      };
      os << red(Algorithm::kHeavyBall) << ',' << red(Algorithm::kGradientDescent) << ',';
      if (pub) {
        const int printed = algo == Algorithm::kNag         ? pub->nag
                            : algo == Algorithm::kHeavyBall ? pub->hb
                                                            : pub->gd;
        os << printed << ',';
        if (algo == Algorithm::kHeavyBall) os << pub->reduction_hb;
        if (algo == Algorithm::kGradientDescent) os << pub->reduction_gd;
      } else {
        os << ',';
      }
      os << '\n';
    }
  }
}

}  // namespace tanag

#endif  // TANAG_EXPERIMENT_HPP
