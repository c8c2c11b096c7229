// Command-line front end: parameter certificates, single runs, and sweeps.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tanag/tanag.hpp"

namespace fs = std::filesystem;
using namespace tanag;

namespace {

struct Overrides {
  std::string config;
  std::string problem;
  std::vector<std::string> algos;
  std::vector<double> p;
  std::vector<std::uint64_t> seeds;
  double eps = -1.0;
  Tick horizon = 0;
  std::string mode;
  std::string out;
  std::string init;
  std::string gates;
  double gamma = 0.0;
  double lambda = 0.0;
  bool events = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "experiment configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--problem", o.problem, "problem file, or 'benchmark'");
  cmd->add_option("--algo", o.algos, "algorithm(s): nag, hb, gd")->delimiter(',');
  cmd->add_option("--p", o.p, "gate probability (list for sweep)")->delimiter(',');
  cmd->add_option("--seed", o.seeds, "seed(s)")->delimiter(',');
  cmd->add_option("--eps", o.eps, "stopping / certificate accuracy");
  cmd->add_option("--horizon", o.horizon, "maximum ticks");
  cmd->add_option("--mode", o.mode, "parameter mode: formula, paper, explicit");
  cmd->add_option("--gamma", o.gamma, "step size (explicit mode)");
  cmd->add_option("--lambda", o.lambda, "momentum (explicit mode)");
  cmd->add_option("--init", o.init, "initial state: upper, lower, center, random, optimum");
  cmd->add_option("--gates", o.gates, "gate mode: independent, tied");
  cmd->add_option("--out", o.out, "output directory");
}

ExperimentConfig build_config(const Overrides& o) {
  ExperimentConfig c;
  if (!o.config.empty()) c = parse_experiment(KeyValueFile::load(o.config));
  if (!o.problem.empty()) c.problem = o.problem;
  if (!o.algos.empty()) {
    c.algos.clear();
    for (const auto& a : o.algos) c.algos.push_back(parse_algorithm(a));
  }
  if (!o.p.empty()) c.p_list = o.p;
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (o.eps >= 0.0) c.eps = o.eps;
  if (o.horizon > 0) c.horizon = o.horizon;
  if (!o.mode.empty()) c.mode = parse_param_mode(o.mode);
  if (o.gamma > 0.0) c.gamma = o.gamma;
  if (o.lambda > 0.0) c.lambda = o.lambda;
  if (!o.init.empty()) c.init = parse_init(o.init);
  if (!o.gates.empty()) {
    if (o.gates == "independent") {
      c.gates = GateMode::kIndependent;
    } else if (o.gates == "tied") {
      c.gates = GateMode::kTied;
    } else {
      throw std::invalid_argument("--gates must be independent or tied");
    }
  }
  if (!o.out.empty()) c.out = o.out;
  if (o.events) c.events = true;
  std::vector<std::string> problems;
  if (c.algos.empty()) problems.push_back("algorithm list is empty");
  if (c.p_list.empty()) problems.push_back("probability list is empty");
  for (double p : c.p_list) {
    if (!(p > 0.0 && p <= 1.0)) problems.push_back("probability " + format_double(p) +
                                                   " outside (0,1]");
  }
  if (c.seeds.empty()) problems.push_back("seed list is empty");
  if (c.horizon <= 0) problems.push_back("horizon must be positive");
  if (!(c.eps > 0.0)) problems.push_back("eps must be positive");
  if (c.mode == ParamMode::kExplicit && !(c.gamma > 0.0 && c.lambda >= 0.0)) {
    problems.push_back("explicit mode needs gamma > 0 and lambda >= 0");
  }
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw std::invalid_argument(msg);
  }
  return c;
}

void print_certificate(std::ostream& os, const SeparableProblem& p, const ResolvedParams& r) {
  const DominanceCert& d = r.dominance;
  os << "n: " << p.size() << '\n';
  os << "mode: " << to_string(r.mode) << '\n';
  os << "mu: " << format_double(d.mu) << '\n';
  os << "h_max: " << format_double(d.h_max) << '\n';
  os << "dominance: " << (d.valid ? "valid" : "violated") << (d.sampled ? " (sampled)" : "")
     << '\n';
  if (d.valid) {
    const OpenInterval g = feasible_gamma_interval(d);
    os << "gamma_interval: (0, " << format_double(g.hi) << ")\n";
  }
  os << "gamma: " << format_double(r.hp.gamma) << '\n';
  const double gm = r.hp.gamma * r.hp.mu;
  if (gm > 0.0 && gm < 1.0) {
    os << "lambda_interval: (0, " << format_double(feasible_lambda_interval(r.hp.gamma, r.hp.mu).hi)
       << ")\n";
  }
  os << "lambda: " << format_double(r.hp.lambda) << '\n';
  if (r.mode == ParamMode::kPaper) {
    os << "mu_used_for_bounds: " << format_double(r.hp.mu) << '\n';
  }
  os << "alpha1: " << format_double(r.cert.alpha1) << '\n';
  os << "alpha2: " << format_double(r.cert.alpha2) << '\n';
  os << "alpha: " << format_double(r.cert.alpha) << '\n';
  os << "d0: " << format_double(r.cert.d0) << '\n';
  os << "epsilon: " << format_double(r.cert.epsilon) << '\n';
  if (r.cert.alpha > 0.0 && r.cert.alpha < 1.0) {
    std::size_t max_deg = 0;
    for (std::size_t i = 0; i < p.size(); ++i) max_deg = std::max(max_deg, p.neighbors(i).size());
    const OpsBudget b = ops_lower_bound(r.cert.epsilon, r.cert.d0, r.cert.alpha, max_deg);
    os << "beta: " << format_double(b.beta) << '\n';
    os << "beta_cycles: " << b.cycles << '\n';
    os << "beta_communications_max_agent: " << b.communications << '\n';
  } else {
    os << "beta: undefined (alpha >= 1)\n";
  }
  os << "strictly_feasible: " << (r.hp.strictly_feasible() && r.cert.alpha < 1.0 ? "yes" : "no")
     << '\n';
}

int cmd_params(const Overrides& o) {
  const ExperimentConfig c = build_config(o);
  const SeparableProblem p = load_experiment_problem(c);
  const DominanceCert d = p.dominance_certificate();
  if (!d.valid && c.mode == ParamMode::kFormula) {
    std::cerr << "error: dominance violated (mu = " << format_double(d.mu) << ")\n";
    return 1;
  }
  const ResolvedParams r = resolve_params(p, c);
  print_certificate(std::cout, p, r);
  return r.hp.strictly_feasible() && r.cert.alpha < 1.0 ? 0 : 2;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << text;
}

int cmd_run(const Overrides& o) {
  const ExperimentConfig c = build_config(o);
  const SeparableProblem p = load_experiment_problem(c);
  const ResolvedParams r = resolve_params(p, c);
  const Minimizer m = experiment_minimizer(p);
  const LocalPair z_star = m.pair();
  const Algorithm algo = c.algos.front();
  const double prob = c.p_list.front();
  const std::uint64_t seed = c.seeds.front();
  const RunOutcome out = run_experiment(p, r, c, algo, prob, seed, z_star);

  fs::create_directories(c.out);
  std::ostringstream csv;
  write_trace_csv(csv, out.trace);
  write_file(fs::path(c.out) / "trace.csv", csv.str());
  if (c.events) {
    std::ostringstream ev;
    write_events_jsonl(ev, out.trace);
    write_file(fs::path(c.out) / "events.jsonl", ev.str());
  }

  std::ostringstream rep;
  rep << "algo: " << to_string(algo) << '\n';
  rep << "p: " << format_double(prob) << '\n';
  rep << "seed: " << seed << '\n';
  print_certificate(rep, p, r);
  rep << "minimizer_pgd_discrepancy: " << format_double(m.pgd_discrepancy) << '\n';
  const TraceRow& last = out.trace.last();
  rep << "ticks: " << last.k << '\n';
  rep << "ops: " << last.ops << '\n';
  rep << "gradient_evals: " << last.gradient_evals << '\n';
  rep << "final_max_dist: " << format_double(last.max_dist) << '\n';
  rep << "converged_tick: "
      << (out.trace.converged_tick ? std::to_string(*out.trace.converged_tick) : "none") << '\n';
  if (out.report) {
    const BoundsReport& b = *out.report;
    rep << "decay_bound: " << (b.decay_ok ? "pass" : "FAIL") << " (violations "
        << b.decay_violations << ", worst excess " << format_double(b.worst_decay_excess)
        << ")\n";
    rep << "forward_invariance: " << (b.invariance_ok ? "pass" : "FAIL") << " (violations "
        << b.invariance_violations << ")\n";
    if (b.two_step_checked) {
      rep << "two_step_contraction: " << (b.two_step_ok ? "pass" : "FAIL") << " (max ratio "
          << format_double(b.max_two_step_ratio) << ")\n";
    }
    rep << "budget_cycles: " << b.budget_cycles << '\n';
    rep << "budget: "
        << (!b.budget_checked ? "not reached within horizon" : b.budget_ok ? "pass" : "FAIL")
        << '\n';
    rep << "reached_eps_below_beta: " << (b.reached_below_budget ? "yes" : "no") << '\n';
  } else {
    rep << "verification: skipped (" <<
        (algo != Algorithm::kNag ? "baseline algorithm" : "parameters do not certify alpha < 1")
        << ")\n";
  }
  write_file(fs::path(c.out) / "report.txt", rep.str());
  std::cout << rep.str();
  return out.report && !out.report->ok() ? 3 : 0;
}

int cmd_sweep(const Overrides& o) {
  const ExperimentConfig c = build_config(o);
  const SeparableProblem p = load_experiment_problem(c);
  const ResolvedParams r = resolve_params(p, c);
  const LocalPair z_star = experiment_minimizer(p).pair();
  const SweepResult s = run_sweep(p, r, c, z_star);

  fs::create_directories(c.out);
  std::ostringstream runs;
  write_sweep_runs_csv(runs, s);
  write_file(fs::path(c.out) / "sweep_runs.csv", runs.str());
  std::ostringstream summary;
  write_sweep_summary_csv(summary, s, c.seeds.size());
  write_file(fs::path(c.out) / "sweep_summary.csv", summary.str());

  // Per-tick worst-agent distance for the first seed, one column per algorithm.
  for (double fp : c.fig_p) {
    std::vector<Trace> traces;
    for (Algorithm a : c.algos) {
      traces.push_back(run_experiment(p, r, c, a, fp, c.seeds.front(), z_star, false).trace);
    }
    std::ostringstream fig;
    fig << "k";
    for (Algorithm a : c.algos) fig << ',' << to_string(a);
    fig << '\n';
    std::size_t len = 0;
    for (const auto& t : traces) len = std::max(len, t.rows.size());
    for (std::size_t k = 0; k < len; ++k) {
      fig << k;
      for (const auto& t : traces) {
        fig << ',';
        if (k < t.rows.size()) fig << format_double(t.rows[k].max_dist);
      }
      fig << '\n';
    }
    write_file(fs::path(c.out) / ("fig1_p" + format_double(fp) + ".csv"), fig.str());
  }
  std::cout << summary.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Totally asynchronous block NAG simulator"};
  app.require_subcommand(1);
  Overrides params_o, run_o, sweep_o;
  auto* params = app.add_subcommand("params", "print the parameter and contraction certificate");
  add_common(params, params_o);
  auto* run = app.add_subcommand("run", "simulate one run and verify its bounds");
  add_common(run, run_o);
  run->add_flag("--events", run_o.events, "also write events.jsonl");
  auto* sweep = app.add_subcommand("sweep", "run an (algo, p, seed) grid and summarize it");
  add_common(sweep, sweep_o);
  CLI11_PARSE(app, argc, argv);
  try {
    if (*params) return cmd_params(params_o);
    if (*run) return cmd_run(run_o);
    if (*sweep) return cmd_sweep(sweep_o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
