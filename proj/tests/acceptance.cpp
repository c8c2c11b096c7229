// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tanag/tanag.hpp"
#include "test_support.hpp"

using namespace tanag;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Instance {
  SeparableProblem p;
  HyperParams hp;
  LocalPair star;
};

std::vector<Instance> fixed_point_instances() {
  std::vector<Instance> out;
  auto bench = make_paper_benchmark(10);
  auto hp = select_params(bench.dominance_certificate());
  out.push_back({bench, hp, LocalPair::constant(10, 1.0)});
  std::mt19937_64 rng(20240601);
  for (int t = 0; t < 20; ++t) {
    auto p = support::random_dominant_quadratic(rng, 3 + t % 8, 0.5);
    auto h = select_params(p.dominance_certificate());
    auto star = solve_minimizer(p, h).pair();
    out.push_back({std::move(p), h, std::move(star)});
  }
  return out;
}

void criterion_fixed_points() {
  double worst[5] = {0, 0, 0, 0, 0};
  for (const auto& inst : fixed_point_instances()) {
    const auto& p = inst.p;
    const auto& z = inst.star;
    worst[0] = std::max(worst[0], pair_inf_distance(single_step_sync(z, inst.hp, p), z));
    worst[1] = std::max(worst[1], pair_inf_distance(synchronous_double_map(z, inst.hp, p), z));
    const BaselineParams bp{inst.hp.gamma, 0.5};
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto d = double_step_block(i, z, inst.hp, p);
      worst[1] = std::max({worst[1], std::abs(d.x - z.x[i]), std::abs(d.y - z.y[i])});
      const auto hb = heavy_ball_block_step(i, z, bp, p);
      worst[2] = std::max({worst[2], std::abs(hb.x - z.x[i]), std::abs(hb.y - z.y[i])});
      const auto gd = gradient_descent_block_step(i, z, bp, p);
      worst[3] = std::max({worst[3], std::abs(gd.x - z.x[i]), std::abs(gd.y - z.y[i])});
    }
  }
  const double all = *std::max_element(worst, worst + 4);
  report(1, "fixed points", all <= 1e-12,
         fmt("21 problems; max residual single %.3g, double %.3g, hb %.3g, gd %.3g (tol 1e-12)",
             worst[0], worst[1], worst[2], worst[3]));
}

void criterion_two_step() {
  const auto p = make_paper_benchmark(10);
  const auto hp = select_params(p.dominance_certificate());
  const double alpha = contraction_factors(hp).alpha;
  const auto star = LocalPair::constant(10, 1.0);
  std::mt19937_64 rng(7);
  double worst = 0.0;
  double worst_blockwise = 0.0;
  std::int64_t checked = 0, violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    LocalPair z = support::random_pair(rng, p);
    LocalPair w = z;
    for (int step = 0; step < 200; ++step) {
      const double before = pair_inf_distance(z, star);
      const LocalPair next = synchronous_double_map(z, hp, p);
      const double after = pair_inf_distance(next, star);
      if (before > 0.0) {
        ++checked;
        const double ratio = after / before;
        worst = std::max(worst, ratio);
        if (ratio > alpha + 1e-10) ++violations;
      }
      z = next;
      const double wb = pair_inf_distance(w, star);
      w = blockwise_double_map(w, hp, p);
      if (wb > 0.0) worst_blockwise = std::max(worst_blockwise, pair_inf_distance(w, star) / wb);
    }
  }
  report(2, "two-step contraction", violations == 0,
         fmt("alpha %.9f; %lld ratios checked, max %.9f, %lld above alpha+1e-10 "
             "(block-law map max %.9f)",
             alpha, static_cast<long long>(checked), worst, static_cast<long long>(violations),
             worst_blockwise));
}

void criterion_double_equals_single_squared() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto p = support::random_dominant_quadratic(rng, 2 + t % 11, 0.6);
    const auto hp = select_params(p.dominance_certificate(), frac(rng), frac(rng));
    const auto z = support::random_pair(rng, p);
    const auto twice = single_step_sync(single_step_sync(z, hp, p), hp, p);
    worst = std::max(worst, pair_inf_distance(synchronous_double_map(z, hp, p), twice));
  }
  report(3, "double step equals two single steps", worst <= 1e-12,
         fmt("100 (problem, z) pairs; max discrepancy %.3g (tol 1e-12)", worst));
}

// Traces for criteria 4-6: p in {0.1..1.0} x seeds 1..20, per-agent random
// initial copies, run until ops reaches the budget for eps = 1e-3.
struct AsyncBatch {
  std::vector<BoundsReport> reports;
  std::vector<std::string> labels;
  double alpha = 0.0;
  std::int64_t max_ticks = 0;
  std::int64_t invalid = 0;
};

AsyncBatch run_async_batch() {
  AsyncBatch b;
  const auto p = make_paper_benchmark(10);
  const auto hp = select_params(p.dominance_certificate());
  const auto star = LocalPair::constant(10, 1.0);
  const double eps = 1e-3;
  const Tick horizon = 100000;
  for (int pi = 10; pi >= 1; --pi) {
    const double prob = pi / 10.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto init = random_initial_states(p, seed);
      double d0 = 0.0;
      for (std::size_t i = 0; i < 10; ++i) d0 = std::max(d0, agent_distance(p, i, init[i], star));
      auto cert = certify(p, hp, eps);
      b.alpha = cert.alpha;
      const auto budget = ops_lower_bound(eps, d0, cert.alpha);
      const auto sched = make_bernoulli_schedules(p, prob, seed, horizon);
      if (!sched.fires_in_every_window(200)) ++b.invalid;
      RunSpec spec;
      spec.nag = hp;
      spec.stop.horizon = horizon;
      spec.stop.max_ops = std::max<std::int64_t>(budget.cycles, 1);
      const Trace t = run_async(p, spec, sched, init, star);
      b.max_ticks = std::max<std::int64_t>(b.max_ticks, t.last().k);
      b.reports.push_back(verify_bounds(t, cert, star));
      b.labels.push_back(fmt("p=%.1f seed=%llu", prob, static_cast<unsigned long long>(seed)));
    }
  }
  return b;
}

void criterion_decay(const AsyncBatch& b) {
  std::size_t pass = 0;
  double worst = -1e300;
  for (const auto& r : b.reports) {
    pass += r.decay_ok ? 1 : 0;
    worst = std::max(worst, r.worst_decay_excess);
  }
  report(4, "decay bound in completed cycles", pass == b.reports.size() && b.invalid == 0,
         fmt("%zu/%zu traces within alpha^ops * D + 1e-9; worst excess %.3g; longest run %lld "
             "ticks; %lld schedules failed the 200-tick window check",
             pass, b.reports.size(), worst, static_cast<long long>(b.max_ticks),
             static_cast<long long>(b.invalid)));
}

void criterion_invariance(const AsyncBatch& b) {
  std::size_t pass = 0;
  std::int64_t events = 0;
  std::string first_bad;
  for (std::size_t t = 0; t < b.reports.size(); ++t) {
    if (b.reports[t].invariance_ok) {
      ++pass;
    } else {
      events += b.reports[t].invariance_violations;
      if (first_bad.empty()) first_bad = b.labels[t];
    }
  }
  const double d = 9.0;
  bool nested = true;
  for (int k = 0; k <= 500; ++k) {
    if (!(std::pow(b.alpha, k + 1) * d <= std::pow(b.alpha, k) * d)) nested = false;
  }
  report(5, "containment invariance", pass == b.reports.size() && nested,
         fmt("%zu/%zu traces with nondecreasing per-agent level (%lld decreases%s%s); "
             "nesting alpha^(k+1)D <= alpha^k D for k <= 500: %s",
             pass, b.reports.size(), static_cast<long long>(events),
             first_bad.empty() ? "" : ", first in ", first_bad.c_str(), nested ? "ok" : "broken"));
}

void criterion_budget(const AsyncBatch& b) {
  std::size_t pass = 0, below = 0;
  std::int64_t max_cycles = 0;
  for (const auto& r : b.reports) {
    pass += (r.budget_checked && r.budget_ok) ? 1 : 0;
    below += r.reached_below_budget ? 1 : 0;
    max_cycles = std::max(max_cycles, r.budget_cycles);
  }
  report(6, "operation budget", pass == b.reports.size(),
         fmt("%zu/%zu traces at distance <= 1e-3 once ops >= ceil(beta); budgets up to %lld "
             "cycles; %zu traces got there with fewer cycles than beta",
             pass, b.reports.size(), static_cast<long long>(max_cycles), below));
}

void criterion_oracles() {
  std::vector<SeparableProblem> problems{make_paper_benchmark(10)};
  std::mt19937_64 rng(31337);
  for (int t = 0; t < 20; ++t) {
    problems.push_back(support::random_dominant_quadratic(rng, 2 + t % 10, 0.5));
  }
  const double h = 1e-5;
  double worst_g = 0.0, worst_h = 0.0;
  bool dominance_exact = true;
  for (const auto& p : problems) {
    for (int t = 0; t < 50; ++t) {
      const Vector x = support::random_point(rng, p);
      for (std::size_t i = 0; i < p.size(); ++i) {
        Vector up = x, down = x;
        up[i] += h;
        down[i] -= h;
        const double g = p.gradient(i, x);
        const double fd = (p.objective(up) - p.objective(down)) / (2 * h);
        worst_g = std::max(worst_g, std::abs(fd - g) / std::max(1.0, std::abs(g)));
        for (std::size_t j = 0; j < p.size(); ++j) {
          Vector uj = x, dj = x;
          uj[j] += h;
          dj[j] -= h;
          const double hij = p.hessian(i, j, x);
          const double hfd = (p.gradient(i, uj) - p.gradient(i, dj)) / (2 * h);
          worst_h = std::max(worst_h, std::abs(hfd - hij) / std::max(1.0, std::abs(hij)));
        }
      }
    }
    const auto cert = p.dominance_certificate();
    double mu = INFINITY, hm = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double off = 0.0;
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (j != i) off += std::abs(p.Q()(i, j));
      }
      mu = std::min(mu, p.Q()(i, i) - off);
      hm = std::max(hm, std::abs(p.Q()(i, i)));
    }
    if (cert.mu != mu || cert.h_max != hm || cert.valid != (mu > 0.0)) dominance_exact = false;
  }
  report(7, "gradient and Hessian oracles",
         worst_g <= 1e-6 && worst_h <= 1e-6 && dominance_exact,
         fmt("21 problems x 50 points; max relative FD error gradient %.3g, Hessian %.3g "
             "(tol 1e-6); dominance equals row scan: %s",
             worst_g, worst_h, dominance_exact ? "yes" : "no"));
}

SweepResult table_sweep(GateMode gates) {
  const auto p = make_paper_benchmark(10);
  ExperimentConfig c;
  c.mode = ParamMode::kPaper;
  c.algos = {Algorithm::kNag, Algorithm::kHeavyBall, Algorithm::kGradientDescent};
  c.p_list.clear();
  for (int i = 10; i >= 1; --i) c.p_list.push_back(i / 10.0);
  c.seeds.clear();
  for (std::uint64_t s = 1; s <= 100; ++s) c.seeds.push_back(s);
  c.gates = gates;
  c.eps = 1e-4;
  c.init = InitKind::kUpper;
  return run_sweep(p, resolve_params(p, c), c, LocalPair::constant(10, 1.0));
}

void criterion_table() {
  const auto s = table_sweep(GateMode::kIndependent);
  bool ordered = true;
  bool all_converged = true;
  double reduction_gd_01 = 0.0;
  std::printf("      p   NAG    HB    GD  red_hb red_gd | reference NAG/HB/GD red_hb red_gd\n");
  for (const auto& row : s.summary) {
    const double nag = row.median_ticks.at(Algorithm::kNag);
    const double hb = row.median_ticks.at(Algorithm::kHeavyBall);
    const double gd = row.median_ticks.at(Algorithm::kGradientDescent);
    if (!(nag <= hb && hb <= gd)) ordered = false;
    for (const auto& [a, conv] : row.converged) all_converged = all_converged && conv == 100;
    const auto pub = published_row(row.p);
    if (std::abs(row.p - 0.1) < 1e-9) reduction_gd_01 = percent_reduction(nag, gd);
    std::printf("    %.1f %5.1f %5.1f %5.1f %6.1f%% %5.1f%% | %3d/%3d/%3d %5d%% %5d%%\n", row.p, nag,
                hb, gd, percent_reduction(nag, hb), percent_reduction(nag, gd), pub->nag, pub->hb,
                pub->gd, pub->reduction_hb, pub->reduction_gd);
  }
  const auto tied = table_sweep(GateMode::kTied);
  const auto& last = tied.summary.back();
  std::printf("    tied gates, p=%.1f: NAG %.1f HB %.1f GD %.1f (reduction vs GD %.1f%%)\n",
              last.p, last.median_ticks.at(Algorithm::kNag),
              last.median_ticks.at(Algorithm::kHeavyBall),
              last.median_ticks.at(Algorithm::kGradientDescent),
              percent_reduction(last.median_ticks.at(Algorithm::kNag),
                                last.median_ticks.at(Algorithm::kGradientDescent)));
  report(8, "iteration-count ordering", ordered && reduction_gd_01 >= 30.0 && all_converged,
         fmt("median ticks NAG <= HB <= GD at every p: %s; NAG vs GD at p=0.1: %.1f%% "
             "(need >= 30%%); all 3000 runs converged: %s",
             ordered ? "yes" : "no", reduction_gd_01, all_converged ? "yes" : "no"));
}

std::string run_csv() {
  const auto p = make_paper_benchmark(10);
  ExperimentConfig c;
  c.init = InitKind::kRandom;
  c.events = true;
  const auto params = resolve_params(p, c);
  const auto o = run_experiment(p, params, c, Algorithm::kNag, 0.3, 5, LocalPair::constant(10, 1.0));
  std::ostringstream os;
  write_trace_csv(os, o.trace);
  write_events_jsonl(os, o.trace);
  return os.str();
}

std::string sweep_csv(std::size_t threads) {
  const auto p = make_paper_benchmark(10);
  ExperimentConfig c;
  c.algos = {Algorithm::kNag, Algorithm::kHeavyBall, Algorithm::kGradientDescent};
  c.p_list = {1.0, 0.5, 0.2};
  c.seeds = {1, 2, 3, 4, 5};
  c.threads = threads;
  const auto s = run_sweep(p, resolve_params(p, c), c, LocalPair::constant(10, 1.0));
  std::ostringstream os;
  write_sweep_runs_csv(os, s);
  write_sweep_summary_csv(os, s, c.seeds.size());
  return os.str();
}

void criterion_determinism() {
  const std::string a = run_csv(), b = run_csv();
  const std::string s1 = sweep_csv(1), s2 = sweep_csv(8), s3 = sweep_csv(8);
  report(9, "determinism", a == b && s1 == s2 && s2 == s3,
         fmt("run trace+events %zu bytes identical: %s; sweep CSVs (1 and 8 threads, %zu bytes) "
             "identical: %s",
             a.size(), a == b ? "yes" : "no", s1.size(), (s1 == s2 && s2 == s3) ? "yes" : "no"));
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  criterion_fixed_points();
  criterion_two_step();
  criterion_double_equals_single_squared();
  const AsyncBatch batch = run_async_batch();
  criterion_decay(batch);
  criterion_invariance(batch);
  criterion_budget(batch);
  criterion_oracles();
  criterion_table();
  criterion_determinism();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d of 9 criteria failed (%.1f s)\n", failures, secs);
  return failures == 0 ? 0 : 1;
}
