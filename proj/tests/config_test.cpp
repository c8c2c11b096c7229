#include "tanag/config.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "tanag/experiment.hpp"

using namespace tanag;

TEST(KeyValue, ParsesCommentsAndLists) {
  const auto kv = KeyValueFile::from_string(
      "# header\n"
      "a = 1.5   # trailing\n"
      "\n"
      "  list = 1, 2  3,4\n");
  EXPECT_DOUBLE_EQ(kv.get_double("a"), 1.5);
  EXPECT_EQ(kv.get_ints("list"), (std::vector<std::int64_t>{1, 2, 3, 4}));
  EXPECT_EQ(kv.get_or("missing", "x"), "x");
  EXPECT_TRUE(kv.unused_keys().empty());
}

TEST(KeyValue, Errors) {
  EXPECT_THROW(KeyValueFile::from_string("a = 1\na = 2\n"), std::invalid_argument);
  EXPECT_THROW(KeyValueFile::from_string("no equals sign\n"), std::invalid_argument);
  EXPECT_THROW(KeyValueFile::from_string(" = 3\n"), std::invalid_argument);
  const auto kv = KeyValueFile::from_string("a = 1x\nb = 2.5\n");
  EXPECT_THROW(kv.get_double("a"), std::invalid_argument);
  EXPECT_THROW(kv.get_int("b"), std::invalid_argument);
  EXPECT_THROW(kv.get("c"), std::invalid_argument);
  EXPECT_THROW(KeyValueFile::load("/nonexistent/file.txt"), std::invalid_argument);
}

TEST(ProblemFile, Quadratic) {
  const auto p = parse_problem(KeyValueFile::from_string(
      "n = 2\nQ = 2 -0.5 -0.5 2\nq = 1 0\nlo = -1\nhi = 1 3\n"));
  EXPECT_EQ(p.size(), 2u);
  EXPECT_EQ(p.box(1).hi, 3.0);
  EXPECT_EQ(p.box(0).lo, -1.0);
  EXPECT_DOUBLE_EQ(p.dominance_certificate().mu, 1.5);
  EXPECT_DOUBLE_EQ(p.gradient(0, Vector{1.0, 2.0}), 2.0);
}

TEST(ProblemFile, BenchmarkAndErrors) {
  EXPECT_EQ(parse_problem(KeyValueFile::from_string("benchmark = paper\nn = 4\n")).size(), 4u);
  EXPECT_THROW(parse_problem(KeyValueFile::from_string("benchmark = paper\nn = 1\n")),
               std::invalid_argument);
  EXPECT_THROW(parse_problem(KeyValueFile::from_string("n = 2\nQ = 1 0 0 1\nlo = 0\nhi = 1\nz = 3\n")),
               std::invalid_argument);
  EXPECT_THROW(parse_problem(KeyValueFile::from_string("n = 2\nQ = 1 0 0\nlo = 0\nhi = 1\n")),
               std::invalid_argument);
  EXPECT_THROW(parse_problem(KeyValueFile::from_string("n = 3\nQ = 1 0 0 0 1 0 0 0 1\nlo = 0 0\nhi = 1\n")),
               std::invalid_argument);
}

TEST(ExperimentFile, Defaults) {
  const auto c = parse_experiment(KeyValueFile::from_string(""));
  EXPECT_EQ(c.problem, "benchmark");
  EXPECT_EQ(c.benchmark_n, 10u);
  EXPECT_EQ(c.mode, ParamMode::kFormula);
  EXPECT_EQ(c.eps, 1e-4);
  EXPECT_EQ(c.init, InitKind::kUpper);
  EXPECT_FALSE(c.explicit_schedule);
}

TEST(ExperimentFile, AllKeys) {
  const auto c = parse_experiment(KeyValueFile::from_string(
      "algo = nag, gd\nmode = paper\np = 0.5 0.1\nseeds = 3 4\ngates = tied\n"
      "horizon = 50\neps = 1e-3\ninit = random\nfig_p = 0.5\nout = dir\nevents = 1\nthreads = 2\n"));
  EXPECT_EQ(c.algos, (std::vector<Algorithm>{Algorithm::kNag, Algorithm::kGradientDescent}));
  EXPECT_EQ(c.mode, ParamMode::kPaper);
  EXPECT_EQ(c.p_list, (std::vector<double>{0.5, 0.1}));
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 4}));
  EXPECT_EQ(c.gates, GateMode::kTied);
  EXPECT_EQ(c.horizon, 50);
  EXPECT_EQ(c.init, InitKind::kRandom);
  EXPECT_TRUE(c.events);
  EXPECT_EQ(c.threads, 2u);
  EXPECT_THROW(parse_experiment(KeyValueFile::from_string("bogus = 1\n")), std::invalid_argument);
  EXPECT_THROW(parse_experiment(KeyValueFile::from_string("seed = 1\nseeds = 2\n")),
               std::invalid_argument);
  EXPECT_THROW(parse_experiment(KeyValueFile::from_string("algo = sgd\n")), std::invalid_argument);
}

TEST(ExperimentFile, ExplicitSchedule) {
  const auto c = parse_experiment(KeyValueFile::from_string(
      "n = 2\nschedule = explicit\nhorizon = 3\ncompute.0 = 1\ncompute.1 = 1 2\n"
      "receive.0.1 = 2\nreceive.1.0 = 3\n"));
  ASSERT_TRUE(c.explicit_schedule);
  const auto p = load_experiment_problem(c);
  const auto set = build_schedules(p, c, 1.0, 1);
  EXPECT_EQ(set.compute[1].firing_ticks(), (std::vector<Tick>{1, 2}));
  EXPECT_EQ(set.receive[1][0].firing_ticks(), (std::vector<Tick>{3}));
  EXPECT_FALSE(set.same_tick_delivery);
}

TEST(Params, ModesResolve) {
  const auto p = make_paper_benchmark(10);
  ExperimentConfig c;
  auto r = resolve_params(p, c);
  EXPECT_TRUE(r.verify);
  EXPECT_NEAR(r.hp.gamma, 1.26923, 1e-5);
  EXPECT_NEAR(r.hp.lambda, 1.4371, 1e-4);
  EXPECT_EQ(r.baseline.gamma, r.hp.gamma);
  EXPECT_DOUBLE_EQ(r.baseline.momentum, r.hp.lambda / (1.0 + r.hp.lambda));
  c.mode = ParamMode::kPaper;
  r = resolve_params(p, c);
  EXPECT_EQ(r.baseline.momentum, 0.058);
  EXPECT_FALSE(r.verify);
  EXPECT_EQ(r.hp.gamma, 0.345);
  EXPECT_EQ(r.hp.lambda, 0.058);

  const auto bad = parse_problem(
      KeyValueFile::from_string("n = 2\nQ = 0 1 1 0\nlo = -1\nhi = 1\n"));
  try {
    resolve_params(bad, ExperimentConfig{});
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("dominance violated"), std::string::npos);
  }
}

TEST(Output, FormatDouble) {
  EXPECT_EQ(format_double(0.9), "0.9");
  EXPECT_EQ(format_double(1e-4), "0.0001");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(format_double(9.0), "9");
}

TEST(Output, TraceCsvFormat) {
  const auto p = make_paper_benchmark(2);
  ExperimentConfig c;
  c.benchmark_n = 2;
  c.horizon = 3;
  c.eps = -1.0;
  const auto params = resolve_params(p, ExperimentConfig{});
  const auto o = run_experiment(p, params, c, Algorithm::kNag, 1.0, 1, LocalPair::constant(2, 1.0));
  std::ostringstream os;
  write_trace_csv(os, o.trace);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "k,ops,max_dist,dist_0,dist_1");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0,9,9,9");
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

TEST(Output, EventsJsonl) {
  const auto p = make_paper_benchmark(2);
  ExperimentConfig c;
  c.horizon = 1;
  c.events = true;
  const auto params = resolve_params(p, c);
  const auto o = run_experiment(p, params, c, Algorithm::kNag, 1.0, 1, LocalPair::constant(2, 1.0));
  std::ostringstream os;
  write_events_jsonl(os, o.trace);
  EXPECT_EQ(os.str(),
            "{\"k\":1,\"type\":\"compute\",\"agent\":0}\n"
            "{\"k\":1,\"type\":\"compute\",\"agent\":1}\n"
            "{\"k\":1,\"type\":\"send\",\"from\":0,\"to\":1,\"tau\":1}\n"
            "{\"k\":1,\"type\":\"send\",\"from\":1,\"to\":0,\"tau\":1}\n"
            "{\"k\":1,\"type\":\"deliver\",\"from\":1,\"to\":0,\"tau\":1}\n"
            "{\"k\":1,\"type\":\"deliver\",\"from\":0,\"to\":1,\"tau\":1}\n");
}

TEST(Sweep, DeterministicAcrossThreadCounts) {
  const auto p = make_paper_benchmark(10);
  ExperimentConfig c;
  c.algos = {Algorithm::kNag, Algorithm::kHeavyBall, Algorithm::kGradientDescent};
  c.p_list = {0.5, 1.0};
  c.seeds = {1, 2, 3};
  c.mode = ParamMode::kPaper;
  const auto params = resolve_params(p, c);
  const auto star = LocalPair::constant(10, 1.0);
  std::string first;
  for (std::size_t threads : {1u, 4u}) {
    c.threads = threads;
    const auto s = run_sweep(p, params, c, star);
    std::ostringstream os;
    write_sweep_runs_csv(os, s);
    write_sweep_summary_csv(os, s, 3);
    if (first.empty()) {
      first = os.str();
    } else {
      EXPECT_EQ(os.str(), first);
    }
  }
  EXPECT_EQ(first.substr(0, first.find('\n')), "algo,p,seed,ticks,ops,grad_evals,converged,bounds_ok");
  EXPECT_NE(first.find("\np,algo,median_ticks,"), std::string::npos);
  EXPECT_NE(first.find("\n1,hb,"), std::string::npos);
  EXPECT_NE(first.find(",6,17\n"), std::string::npos);
}

TEST(Sweep, EmptyListsRejected) {
  const auto p = make_paper_benchmark(4);
  ExperimentConfig c;
  const auto params = resolve_params(p, c);
  c.algos.clear();
  EXPECT_THROW(run_sweep(p, params, c, LocalPair::constant(4, 1.0)), std::invalid_argument);
  c.algos = {Algorithm::kNag};
  c.seeds.clear();
  EXPECT_THROW(run_sweep(p, params, c, LocalPair::constant(4, 1.0)), std::invalid_argument);
}

TEST(Summary, Helpers) {
  EXPECT_NEAR(percent_reduction(123, 314), 60.828, 1e-3);
  EXPECT_EQ(static_cast<int>(std::lround(percent_reduction(123, 314))), 61);
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
  ASSERT_TRUE(published_row(0.1));
  EXPECT_EQ(published_row(0.1)->gd, 314);
  EXPECT_FALSE(published_row(0.15));
}
