// usimrank: command-line driver for SimRank on uncertain graphs.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "usimrank/oracle.hpp"
#include "usimrank/usimrank.hpp"

namespace {

using namespace usimrank;

constexpr const char* kStoreEnv = "USIMRANK_STORE";

std::string default_store() {
  const char* env = std::getenv(kStoreEnv);
  return env ? env : "";
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) { return seed ? *seed : entropy_seed(); }

void print_tsv_row(std::ostream& out, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto& c : cells) {
    out << (first ? "" : "\t") << c;
    first = false;
  }
  out << '\n';
}

std::string fmt(double x) { return format_double(x); }

// ---------------------------------------------------------------- transpr

struct TransPrArgs {
  std::string input;
  std::string out = default_store();
  int k = 1;
  int k_max = TransPrOptions{}.k_max;
  std::uint64_t budget = TransPrOptions{}.budget_bytes;
  std::uint64_t memory = TransPrOptions{}.memory_bytes;
  std::uint64_t chunk = TransPrOptions{}.chunk_bytes;
  std::string work_dir;
};

int run_transpr(const TransPrArgs& a) {
  if (a.out.empty()) throw std::invalid_argument(std::string("no store directory: pass --out or set ") + kStoreEnv);
  const auto g = load_edge_list(a.input);
  TransPrOptions opt;
  opt.k_max = a.k_max;
  opt.budget_bytes = a.budget;
  opt.memory_bytes = a.memory;
  opt.chunk_bytes = a.chunk;
  opt.work_dir = a.work_dir;
  MatrixStore store{std::filesystem::path(a.out)};
  const auto report = trans_pr(g, a.k, store, opt);
  print_tsv_row(std::cout, {"k", "walks", "bytes", "runs", "in_memory", "seconds"});
  for (const auto& s : report.steps)
    print_tsv_row(std::cout, {std::to_string(s.k), std::to_string(s.walks), std::to_string(s.bytes),
                              std::to_string(s.runs), s.in_memory ? "1" : "0", fmt(s.seconds)});
  return 0;
}

// ---------------------------------------------------------------- simrank

struct SimRankArgs {
  std::string input;
  std::string method = "twostage";
  Vertex u = 0, v = 0;
  int n = 5;
  double c = 0.6;
  std::uint64_t samples = 1000;
  double epsilon = 0.1, delta = 0.1;
  int l = 1;
  std::optional<std::uint64_t> seed;
  std::string store = default_store();
  std::string filters;
  bool shared_filters = false;
  int k_max = TransPrOptions{}.k_max;
  std::uint64_t budget = TransPrOptions{}.budget_bytes;

  // Which options were given explicitly.
  bool has_samples = false, has_accuracy = false, has_l = false, has_seed = false, has_filters = false;
};

// The v-side filter set, when separate, sits next to the u-side file.
std::string v_side_path(const std::string& filters) { return filters + ".v"; }

SamplePlan plan_of(const SimRankArgs& a) {
  if (a.has_accuracy) return SamplePlan::from_accuracy(a.epsilon, a.delta);
  return SamplePlan::fixed(a.samples);
}

void check_method_params(Method m, const SimRankArgs& a) {
  auto reject = [&](const char* flag) {
    throw std::invalid_argument(std::string(flag) + " does not apply to method " + std::string(to_string(m)));
  };
  if (a.has_samples && a.has_accuracy) throw std::invalid_argument("--N conflicts with --epsilon/--delta");
  if (m == Method::baseline) {
    if (a.has_samples) reject("--N");
    if (a.has_accuracy) reject("--epsilon/--delta");
    if (a.has_seed) reject("--seed");
  }
  if ((m == Method::baseline || m == Method::sampling) && a.has_l) reject("--l");
  if (m != Method::speedup && (a.has_filters || a.shared_filters)) reject("--filters/--shared-filters");
}

SimEstimate estimate(Method m, const UncertainGraph& g, const SimRankArgs& a, std::uint64_t seed,
                     const MatrixStore* store, const TransPrOptions& opt) {
  Rng rng(seed);
  const auto plan = plan_of(a);
  switch (m) {
    case Method::baseline: return simrank_baseline(g, a.u, a.v, a.n, a.c, store, opt);
    case Method::sampling: return simrank_sampling(g, a.u, a.v, a.n, a.c, plan, rng);
    case Method::two_stage: return simrank_two_stage(g, a.u, a.v, a.n, a.c, plan, a.l, rng, store, opt);
    case Method::speedup: {
      if (!a.filters.empty() && std::filesystem::exists(a.filters)) {
        FilterBank bank{load_filter_vectors(a.filters), std::nullopt};
        if (std::filesystem::exists(v_side_path(a.filters))) bank.v_side = load_filter_vectors(v_side_path(a.filters));
        if (!bank.u_side.matches(g) || !bank.for_v().matches(g))
          throw std::invalid_argument(a.filters + " was built for a different graph");
        if (a.has_samples && bank.samples() != plan.samples)
          throw std::invalid_argument(a.filters + " holds N=" + std::to_string(bank.samples()));
        return simrank_speedup(g, a.u, a.v, a.n, a.c, bank, a.l, plan.epsilon, store, opt);
      }
      return simrank_speedup(g, a.u, a.v, a.n, a.c, plan, a.l, rng, store, opt, a.shared_filters);
    }
  }
  throw std::logic_error("unhandled method");
}

int run_simrank(const SimRankArgs& a) {
  const auto m = parse_method(a.method);
  if (!m) throw std::invalid_argument("unknown method '" + a.method + "'");
  check_method_params(*m, a);
  const auto g = load_edge_list(a.input);
  if (a.u >= g.vertex_count()) throw std::out_of_range("unknown vertex id " + std::to_string(a.u));
  if (a.v >= g.vertex_count()) throw std::out_of_range("unknown vertex id " + std::to_string(a.v));

  std::optional<MatrixStore> store;
  if (!a.store.empty() && std::filesystem::exists(a.store)) store.emplace(std::filesystem::path(a.store));
  TransPrOptions opt;
  opt.k_max = a.k_max;
  opt.budget_bytes = a.budget;

  std::optional<std::uint64_t> seed;
  if (*m != Method::baseline) seed = resolve_seed(a.seed);
  if (*m == Method::speedup && !a.filters.empty() && !std::filesystem::exists(a.filters)) {
    // Build once and persist so later queries reuse the same filters.
    Rng rng(derive_seed(*seed, 0xf11));
    const auto bank = build_filter_bank(g, plan_of(a).samples, rng, a.shared_filters);
    save_filter_vectors(a.filters, bank.u_side);
    if (bank.v_side) save_filter_vectors(v_side_path(a.filters), *bank.v_side);
  }
  const auto e = estimate(*m, g, a, seed.value_or(0), store ? &*store : nullptr, opt);
  std::cout << format_record(make_record(e, seed, a.input, a.u, a.v)) << '\n';
  return 0;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string input;
  std::vector<std::string> methods{"sampling", "twostage"};
  std::uint64_t trials = 100;
  int n = 5;
  double c = 0.6;
  std::uint64_t samples = 1000;
  int l = 1;
  std::optional<std::uint64_t> seed;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  int k_max = 9;
  std::uint64_t budget = TransPrOptions{}.budget_bytes;
  bool sweep = false;
  int n_max = 8;
  bool distinct = false;
};

struct TrialResult {
  std::optional<double> truth;
  std::vector<double> value, wall_ms;
};

template <class F>
void parallel_for(std::uint64_t count, unsigned threads, F&& f) {
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < std::min<std::uint64_t>(threads, std::max<std::uint64_t>(count, 1)); ++t)
    pool.emplace_back([&] {
      for (std::uint64_t i; (i = next.fetch_add(1)) < count;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

std::pair<Vertex, Vertex> draw_pair(const UncertainGraph& g, Rng& rng, bool distinct) {
  const auto n = g.vertex_count();
  const auto u = static_cast<Vertex>(uniform_below(rng, n));
  auto v = static_cast<Vertex>(uniform_below(rng, n));
  while (distinct && n > 1 && v == u) v = static_cast<Vertex>(uniform_below(rng, n));
  return {u, v};
}

int run_sweep(const BenchArgs& a, const UncertainGraph& g, std::uint64_t seed) {
  TransPrOptions opt;
  opt.k_max = std::max(a.k_max, a.n_max + 1);
  opt.budget_bytes = a.budget;
  std::vector<std::vector<double>> delta(a.trials);
  parallel_for(a.trials, a.threads, [&](std::uint64_t t) {
    Rng rng(derive_seed(seed, t));
    const auto [u, v] = draw_pair(g, rng, a.distinct);
    const auto m = exact_meetings(g, u, v, a.n_max + 1, nullptr, opt);
    for (int n = 1; n <= a.n_max; ++n) {
      const double s0 = simrank_from_meetings(std::span(m).first(n + 1), n, a.c);
      const double s1 = simrank_from_meetings(std::span(m).first(n + 2), n + 1, a.c);
      delta[t].push_back(std::abs(s1 - s0));
    }
  });
  print_tsv_row(std::cout, {"n", "pairs", "max_abs_change", "bound"});
  for (int n = 1; n <= a.n_max; ++n) {
    double worst = 0.0;
    for (const auto& d : delta) worst = std::max(worst, d[n - 1]);
    print_tsv_row(std::cout, {std::to_string(n), std::to_string(a.trials), a.trials ? fmt(worst) : "NA",
                              fmt(std::pow(a.c, n + 1))});
  }
  return 0;
}

int run_bench(const BenchArgs& a) {
  std::vector<Method> methods;
  for (const auto& name : a.methods) {
    const auto m = parse_method(name);
    if (!m) throw std::invalid_argument("unknown method '" + name + "'");
    methods.push_back(*m);
  }
  const auto g = load_edge_list(a.input);
  if (g.vertex_count() == 0 && a.trials > 0) throw std::invalid_argument("graph has no vertices");
  const std::uint64_t seed = resolve_seed(a.seed);
  std::cerr << "seed " << seed << '\n';
  if (a.sweep) return run_sweep(a, g, seed);

  TransPrOptions opt;
  opt.k_max = a.k_max;
  opt.budget_bytes = a.budget;
  std::optional<FilterBank> bank;
  if (std::find(methods.begin(), methods.end(), Method::speedup) != methods.end()) {
    Rng rng(derive_seed(seed, 0xf11));
    bank = build_filter_bank(g, a.samples, rng);
  }

  std::vector<TrialResult> results(a.trials);
  parallel_for(a.trials, a.threads, [&](std::uint64_t t) {
    const std::uint64_t trial_seed = derive_seed(seed, t);
    Rng pair_rng(trial_seed);
    const auto [u, v] = draw_pair(g, pair_rng, a.distinct);
    auto& r = results[t];
    try {
      r.truth = simrank_baseline(g, u, v, a.n, a.c, nullptr, opt).value;
    } catch (const BudgetExceeded&) {
    }
    for (std::size_t i = 0; i < methods.size(); ++i) {
      Rng rng(derive_seed(trial_seed, i + 1));
      SimEstimate e;
      const auto plan = SamplePlan::fixed(a.samples);
      switch (methods[i]) {
        case Method::baseline: e = simrank_baseline(g, u, v, a.n, a.c, nullptr, opt); break;
        case Method::sampling: e = simrank_sampling(g, u, v, a.n, a.c, plan, rng); break;
        case Method::two_stage: e = simrank_two_stage(g, u, v, a.n, a.c, plan, a.l, rng, nullptr, opt); break;
        case Method::speedup: e = simrank_speedup(g, u, v, a.n, a.c, *bank, a.l, std::nullopt, nullptr, opt); break;
      }
      r.value.push_back(e.value);
      r.wall_ms.push_back(std::chrono::duration<double, std::milli>(e.wall_time).count());
    }
  });

  print_tsv_row(std::cout, {"method", "trials", "mean_wall_ms", "mean_rel_error", "rel_error_pairs", "zero_truth_pairs"});
  if (a.trials == 0) return 0;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    double wall = 0.0, rel = 0.0;
    std::uint64_t rel_pairs = 0, zero = 0, unknown = 0;
    for (const auto& r : results) {
      wall += r.wall_ms[i];
      if (!r.truth) {
        ++unknown;
      } else if (*r.truth == 0.0) {
        ++zero;
      } else {
        rel += std::abs(r.value[i] - *r.truth) / *r.truth;
        ++rel_pairs;
      }
    }
    const bool available = unknown == 0 && rel_pairs > 0;
    print_tsv_row(std::cout, {std::string(to_string(methods[i])), std::to_string(a.trials),
                              fmt(wall / static_cast<double>(a.trials)),
                              available ? fmt(rel / static_cast<double>(rel_pairs)) : "NA",
                              unknown ? "NA" : std::to_string(rel_pairs), unknown ? "NA" : std::to_string(zero)});
  }
  return 0;
}

// ---------------------------------------------------------------- gen / oracle

struct GenArgs {
  std::size_t vertices = 1024;
  std::size_t edges = 0;
  RmatWeights w;
  std::uint64_t seed = 1;
  std::string out;
};

int run_gen(const GenArgs& a) {
  const auto g = gen_rmat(a.vertices, a.edges, a.w, a.seed);
  if (a.out.empty())
    write_edge_list(std::cout, g);
  else
    save_edge_list(a.out, g);
  return 0;
}

struct OracleArgs {
  std::string input;
  Vertex u = 0, v = 0;
  int k = 1;
  int n = 5;
  double c = 0.6;
  std::size_t cap = oracle::kDefaultArcCap;
};

int run_oracle_kstep(const OracleArgs& a) {
  const auto g = load_edge_list(a.input);
  const auto w = oracle::exact_kstep_dense(g, a.k, a.cap);
  for (std::size_t i = 0; i < w.n; ++i) {
    for (std::size_t j = 0; j < w.n; ++j) std::cout << (j ? "\t" : "") << fmt(w(i, j));
    std::cout << '\n';
  }
  return 0;
}

int run_oracle_meeting(const OracleArgs& a) {
  const auto g = load_edge_list(a.input);
  std::cout << fmt(oracle::exact_meeting(g, a.u, a.v, a.k, a.cap)) << '\n';
  return 0;
}

int run_oracle_simrank(const OracleArgs& a) {
  const auto g = load_edge_list(a.input);
  std::cout << fmt(oracle::exact_simrank_uncertain(g, a.u, a.v, a.n, a.c, a.cap)) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SimRank similarities on uncertain directed graphs"};
  app.require_subcommand(1);
  int status = 0;

  TransPrArgs tp;
  auto* transpr = app.add_subcommand("transpr", "Materialize W^(1..k) into a store directory");
  transpr->add_option("--input", tp.input, "Edge list (u<TAB>v<TAB>p)")->required();
  transpr->add_option("--k", tp.k, "Highest step to materialize")->required()->check(CLI::PositiveNumber);
  transpr->add_option("--out", tp.out, std::string("Store directory (default $") + kStoreEnv + ")");
  transpr->add_option("--k-max", tp.k_max, "Cap on k")->capture_default_str();
  transpr->add_option("--budget-bytes", tp.budget, "Abort when one step's walks exceed this")->capture_default_str();
  transpr->add_option("--memory-bytes", tp.memory, "Keep a step in memory below this")->capture_default_str();
  transpr->add_option("--chunk-bytes", tp.chunk, "Sorted run size when spilling")->capture_default_str();
  transpr->add_option("--work-dir", tp.work_dir, "Scratch directory for spilled runs");
  transpr->callback([&] { status = run_transpr(tp); });

  SimRankArgs sr;
  auto* simrank = app.add_subcommand("simrank", "Estimate s^(n)(u,v) and print a JSON record");
  simrank->add_option("--input", sr.input, "Edge list")->required();
  simrank->add_option("--method", sr.method, "baseline | sampling | twostage | speedup")->capture_default_str();
  simrank->add_option("--u", sr.u, "First vertex")->required();
  simrank->add_option("--v", sr.v, "Second vertex")->required();
  simrank->add_option("--n", sr.n, "Series length")->capture_default_str()->check(CLI::PositiveNumber);
  simrank->add_option("--c", sr.c, "Delay factor in (0,1)")->capture_default_str();
  auto* opt_n = simrank->add_option("--N", sr.samples, "Sample walks per vertex")->capture_default_str();
  auto* opt_eps = simrank->add_option("--epsilon", sr.epsilon, "Derive N from accuracy epsilon");
  auto* opt_delta = simrank->add_option("--delta", sr.delta, "... and failure probability delta");
  auto* opt_l = simrank->add_option("--l", sr.l, "Exact steps (twostage, speedup)")->capture_default_str();
  auto* opt_seed = simrank->add_option("--seed", sr.seed, "Random seed (drawn and reported when omitted)");
  simrank->add_option("--store", sr.store, std::string("Matrix store to reuse (default $") + kStoreEnv + ")");
  auto* opt_filters = simrank->add_option("--filters", sr.filters, "Filter-vector file (built when missing)");
  simrank->add_flag("--shared-filters", sr.shared_filters, "Drive u- and v-walks with one filter set");
  simrank->add_option("--k-max", sr.k_max, "Cap on exact steps")->capture_default_str();
  simrank->add_option("--budget-bytes", sr.budget, "Materialization budget")->capture_default_str();
  simrank->callback([&] {
    sr.has_samples = opt_n->count() > 0;
    sr.has_accuracy = opt_eps->count() + opt_delta->count() > 0;
    sr.has_l = opt_l->count() > 0;
    sr.has_seed = opt_seed->count() > 0;
    sr.has_filters = opt_filters->count() > 0;
    status = run_simrank(sr);
  });

  BenchArgs bm;
  auto* bench = app.add_subcommand("bench", "Benchmark estimators on random vertex pairs (TSV)");
  bench->add_option("--input", bm.input, "Edge list")->required();
  bench->add_option("--method", bm.methods, "Methods, comma separated")->delimiter(',')->capture_default_str();
  bench->add_option("--trials", bm.trials, "Vertex pairs")->capture_default_str();
  bench->add_option("--n", bm.n, "Series length")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--c", bm.c, "Delay factor")->capture_default_str();
  bench->add_option("--N", bm.samples, "Sample walks per vertex")->capture_default_str();
  bench->add_option("--l", bm.l, "Exact steps for twostage/speedup")->capture_default_str();
  bench->add_option("--seed", bm.seed, "Master seed (drawn and reported when omitted)");
  bench->add_option("--threads", bm.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--k-max", bm.k_max, "Cap on exact steps")->capture_default_str();
  bench->add_option("--budget-bytes", bm.budget, "Materialization budget")->capture_default_str();
  bench->add_flag("--distinct", bm.distinct, "Draw u != v");
  bench->add_flag("--sweep", bm.sweep, "Convergence sweep of exact s^(n) over n = 1..n-max");
  bench->add_option("--n-max", bm.n_max, "Sweep range")->capture_default_str()->check(CLI::PositiveNumber);
  bench->callback([&] { status = run_bench(bm); });

  GenArgs gn;
  auto* gen = app.add_subcommand("gen", "Generate graphs");
  gen->require_subcommand(1);
  auto* rmat = gen->add_subcommand("rmat", "R-MAT graph with uniform arc probabilities");
  rmat->add_option("--v", gn.vertices, "Vertices")->capture_default_str();
  rmat->add_option("--e", gn.edges, "Arcs")->required();
  rmat->add_option("--seed", gn.seed, "Seed")->capture_default_str();
  rmat->add_option("--a", gn.w.a, "Quadrant weight a")->capture_default_str();
  rmat->add_option("--b", gn.w.b, "Quadrant weight b")->capture_default_str();
  rmat->add_option("--cw", gn.w.c, "Quadrant weight c")->capture_default_str();
  rmat->add_option("--d", gn.w.d, "Quadrant weight d")->capture_default_str();
  rmat->add_option("--out", gn.out, "Output file (default stdout)");
  rmat->callback([&] { status = run_gen(gn); });

  OracleArgs oa;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exact values by possible-world enumeration");
  oracle_cmd->require_subcommand(1);
  oracle_cmd->add_option("--input", oa.input, "Edge list")->required();
  oracle_cmd->add_option("--cap", oa.cap, "Refuse graphs with more arcs")->capture_default_str();
  auto* kstep = oracle_cmd->add_subcommand("kstep", "Print W^(k) as a dense TSV matrix");
  kstep->add_option("--k", oa.k, "Step")->required();
  kstep->callback([&] { status = run_oracle_kstep(oa); });
  auto* meeting = oracle_cmd->add_subcommand("meeting", "Print m^(k)(u,v)");
  meeting->add_option("--u", oa.u)->required();
  meeting->add_option("--v", oa.v)->required();
  meeting->add_option("--k", oa.k)->required();
  meeting->callback([&] { status = run_oracle_meeting(oa); });
  auto* osim = oracle_cmd->add_subcommand("simrank", "Print s^(n)(u,v)");
  osim->add_option("--u", oa.u)->required();
  osim->add_option("--v", oa.v)->required();
  osim->add_option("--n", oa.n)->capture_default_str();
  osim->add_option("--c", oa.c)->capture_default_str();
  osim->callback([&] { status = run_oracle_simrank(oa); });

  // Options given after a nested subcommand still reach the parent.
  oracle_cmd->fallthrough();
  kstep->fallthrough();
  meeting->fallthrough();
  osim->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "usimrank: error: " << e.what() << '\n';
    return 1;
  }
  return status;
}
