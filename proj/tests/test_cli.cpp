#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "test_support.hpp"
#include "usimrank/report.hpp"
#include "usimrank/walk_file.hpp"

using namespace usimrank;
using namespace usimrank::testing;

namespace {

struct CliResult {
  int status;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    toy_ = (dir_.path() / "toy.tsv").string();
    save_edge_list(toy_, g_toy());
  }

  CliResult run(const std::string& args, const std::string& env = "") {
    const auto out = dir_.path() / "stdout", err = dir_.path() / "stderr";
    const std::string cmd = env + " " + USIMRANK_CLI + " " + args + " >" + out.string() + " 2>" + err.string();
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
  }

  static std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static std::vector<std::vector<std::string>> tsv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
      std::vector<std::string> cells;
      std::istringstream ls(line);
      for (std::string cell; std::getline(ls, cell, '\t');) cells.push_back(cell);
      rows.push_back(cells);
    }
    return rows;
  }

  TempDir dir_;
  std::string toy_;
};

ResultRecord without_time(ResultRecord r) {
  r.wall_ms = 0.0;
  return r;
}

}  // namespace

TEST_F(Cli, TransPrWritesOneFilePerStep) {
  const auto store = dir_.path() / "store";
  const auto r = run("transpr --input " + toy_ + " --k 3 --out " + store.string());
  ASSERT_EQ(r.status, 0) << r.err;
  for (int k = 1; k <= 3; ++k) EXPECT_TRUE(std::filesystem::exists(store / ("W" + std::to_string(k) + ".mat")));
  EXPECT_EQ(tsv(r.out).size(), 4u);
}

TEST_F(Cli, TransPrStoreFromEnvironment) {
  const auto store = dir_.path() / "env-store";
  const auto r = run("transpr --input " + toy_ + " --k 2", "USIMRANK_STORE=" + store.string());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(store / "W2.mat"));
}

TEST_F(Cli, MissingInputFails) {
  const auto r = run("transpr --input " + (dir_.path() / "absent.tsv").string() + " --k 2 --out " +
                     (dir_.path() / "s").string());
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("absent.tsv"), std::string::npos);
}

TEST_F(Cli, BudgetFailureNamesStep) {
  std::vector<ArcSpec> arcs;
  for (Vertex u = 0; u < 8; ++u)
    for (Vertex v = 0; v < 8; ++v) arcs.push_back({u, v, 0.5});
  const auto dense = (dir_.path() / "dense.tsv").string();
  save_edge_list(dense, UncertainGraph(8, arcs));
  const auto r = run("transpr --input " + dense + " --k 9 --k-max 9 --budget-bytes 1048576 --out " +
                     (dir_.path() / "s").string());
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("k=5"), std::string::npos) << r.err;
}

TEST_F(Cli, BaselineRecord) {
  const auto r = run("simrank --input " + toy_ + " --method baseline --u 0 --v 0 --n 1 --c 0.6");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rec = parse_record(r.out);
  EXPECT_DOUBLE_EQ(rec.value, 0.55);
  EXPECT_EQ(rec.method, "baseline");
  EXPECT_FALSE(rec.seed);
  EXPECT_EQ(format_record(rec) + "\n", r.out);
}

TEST_F(Cli, SeededRunsRepeat) {
  for (const char* method : {"sampling", "twostage", "speedup"}) {
    const std::string args = std::string("simrank --input ") + toy_ + " --method " + method + " --u 0 --v 0 --seed 42";
    const auto r1 = run(args), r2 = run(args);
    ASSERT_EQ(r1.status, 0) << r1.err;
    EXPECT_EQ(without_time(parse_record(r1.out)), without_time(parse_record(r2.out))) << method;
    EXPECT_EQ(*parse_record(r1.out).seed, 42u);
  }
}

TEST_F(Cli, DrawnSeedIsRecordedForReplay) {
  const auto r1 = run("simrank --input " + toy_ + " --method sampling --u 0 --v 2");
  ASSERT_EQ(r1.status, 0) << r1.err;
  const auto rec = parse_record(r1.out);
  ASSERT_TRUE(rec.seed);
  const auto r2 = run("simrank --input " + toy_ + " --method sampling --u 0 --v 2 --seed " + std::to_string(*rec.seed));
  EXPECT_EQ(without_time(parse_record(r2.out)), without_time(rec));
}

TEST_F(Cli, TwoStageFullExactEqualsBaseline) {
  const auto base = parse_record(run("simrank --input " + toy_ + " --method baseline --u 0 --v 0 --n 4").out);
  const auto two = parse_record(run("simrank --input " + toy_ + " --method twostage --u 0 --v 0 --n 4 --l 4 --seed 1").out);
  EXPECT_NEAR(two.value, base.value, 1e-12);
  EXPECT_EQ(*two.exact_steps, 4);
}

TEST_F(Cli, ParameterErrors) {
  EXPECT_NE(run("simrank --input " + toy_ + " --method baseline --u 0 --v 0 --l 2").status, 0);
  EXPECT_NE(run("simrank --input " + toy_ + " --method sampling --u 0 --v 0 --l 2").status, 0);
  EXPECT_NE(run("simrank --input " + toy_ + " --method baseline --u 0 --v 0 --N 10").status, 0);
  EXPECT_NE(run("simrank --input " + toy_ + " --method nope --u 0 --v 0").status, 0);
  const auto r = run("simrank --input " + toy_ + " --method baseline --u 0 --v 9");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("unknown vertex id 9"), std::string::npos);
}

TEST_F(Cli, AccuracyFlagsSetBound) {
  const auto r = run("simrank --input " + toy_ + " --method sampling --u 0 --v 0 --epsilon 0.1 --delta 0.1 --seed 3");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rec = parse_record(r.out);
  EXPECT_EQ(*rec.samples, 899u);
  EXPECT_DOUBLE_EQ(*rec.bound, (0.6 - std::pow(0.6, 5)) * 0.1);
}

TEST_F(Cli, SpeedupFiltersPersist) {
  const auto filters = (dir_.path() / "f.bin").string();
  const std::string args = "simrank --input " + toy_ + " --method speedup --u 0 --v 0 --N 256 --seed 5 --filters " + filters;
  const auto r1 = run(args);
  ASSERT_EQ(r1.status, 0) << r1.err;
  EXPECT_TRUE(std::filesystem::exists(filters));
  EXPECT_TRUE(std::filesystem::exists(filters + ".v"));
  EXPECT_EQ(parse_record(run(args).out).value, parse_record(r1.out).value);
}

TEST_F(Cli, BenchOrdersEstimators) {
  Rng rng(77);
  const auto g = random_graph(rng, {.min_vertices = 6, .max_vertices = 6, .max_arcs = 12, .certain_share = 0.0});
  const auto path = (dir_.path() / "six.tsv").string();
  save_edge_list(path, g);
  const auto r = run("bench --input " + path + " --method sampling,twostage --trials 100 --seed 9");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rows = tsv(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][3], "mean_rel_error");
  ASSERT_NE(rows[1][3], "NA");
  EXPECT_LT(std::stod(rows[2][3]), std::stod(rows[1][3]));
  EXPECT_EQ(std::stoi(rows[1][4]) + std::stoi(rows[1][5]), 100);
}

TEST_F(Cli, BenchWithoutTrials) {
  const auto r = run("bench --input " + toy_ + " --trials 0 --seed 1");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(tsv(r.out).size(), 1u);
}

TEST_F(Cli, ConvergenceSweep) {
  Rng rng(78);
  const auto path = (dir_.path() / "sweep.tsv").string();
  save_edge_list(path, random_graph(rng, {.min_vertices = 6, .max_vertices = 6, .max_arcs = 12}));
  const auto r = run("bench --input " + path + " --sweep --n-max 8 --trials 30 --seed 2");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rows = tsv(r.out);
  ASSERT_EQ(rows.size(), 9u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(std::stod(rows[i][2]), std::stod(rows[i][3]));
}

TEST_F(Cli, GenIsReproducible) {
  const auto f1 = (dir_.path() / "g1.tsv").string(), f2 = (dir_.path() / "g2.tsv").string();
  ASSERT_EQ(run("gen rmat --v 1024 --e 5000 --seed 1 --out " + f1).status, 0);
  ASSERT_EQ(run("gen rmat --v 1024 --e 5000 --seed 1 --out " + f2).status, 0);
  EXPECT_EQ(slurp(f1), slurp(f2));
  EXPECT_EQ(load_edge_list(f1).arc_count(), 5000u);
  EXPECT_NE(run("gen rmat --v 2 --e 5").status, 0);
}

TEST_F(Cli, Oracle) {
  const auto r = run("oracle --input " + toy_ + " simrank --u 0 --v 0 --n 1 --c 0.6");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "0.55\n");
  EXPECT_EQ(run("oracle --input " + toy_ + " meeting --u 0 --v 0 --k 2").out, "0.15625\n");
  EXPECT_EQ(tsv(run("oracle --input " + toy_ + " kstep --k 3").out)[0][1], "0.375");

  std::vector<ArcSpec> arcs;
  for (Vertex v = 0; v < 25; ++v) arcs.push_back({v, (v + 1) % 25, 0.5});
  const auto big = (dir_.path() / "big.tsv").string();
  save_edge_list(big, UncertainGraph(25, arcs));
  const auto refused = run("oracle --input " + big + " simrank --u 0 --v 1");
  EXPECT_NE(refused.status, 0);
  EXPECT_NE(refused.err.find("cap"), std::string::npos);
}
