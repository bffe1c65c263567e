#include <gtest/gtest.h>

#include "test_support.hpp"
#include "usimrank/oracle.hpp"
#include "usimrank/simrank.hpp"

using namespace usimrank;
using namespace usimrank::testing;

TEST(MeetingProbExact, Examples) {
  EXPECT_EQ(meeting_prob_exact(std::vector{0.5, 0.0, 0.0}, std::vector{0.0, 0.3, 0.7}), 0.0);
  EXPECT_EQ(meeting_prob_exact(std::vector{0.0, 1.0}, std::vector{0.0, 1.0}), 1.0);
  const auto w = transition_matrices(g_toy(), 2);
  EXPECT_DOUBLE_EQ(meeting_prob_exact(w[1].dense_row(a), w[1].dense_row(a)), 0.15625);
  EXPECT_THROW(meeting_prob_exact(std::vector{1.0}, std::vector{1.0, 0.0}), std::invalid_argument);
}

TEST(Baseline, Examples) {
  const auto g = g_toy();
  const auto ab = simrank_baseline(g, a, b, 4, 0.6);
  EXPECT_EQ(ab.value, 0.0);
  EXPECT_EQ(ab.method, Method::baseline);
  EXPECT_DOUBLE_EQ(*ab.bound, std::pow(0.6, 5));
  EXPECT_DOUBLE_EQ(simrank_baseline(g, a, a, 1, 0.6).value, 0.55);
  EXPECT_THROW(simrank_baseline(g, a, 7, 1, 0.6), std::out_of_range);
  EXPECT_THROW(simrank_baseline(g, a, a, 0, 0.6), std::invalid_argument);
  EXPECT_THROW(simrank_baseline(g, a, a, 1, 1.0), std::invalid_argument);
}

TEST(Baseline, GeneralizesDeterministicSimRank) {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const auto g = random_graph(rng, {.max_vertices = 6, .max_arcs = 14, .certain = true});
    for (int n = 1; n <= 5; ++n) {
      const auto s = oracle::deterministic_simrank_series(degenerate(g), n, 0.6);
      for (Vertex u = 0; u < g.vertex_count(); ++u)
        for (Vertex v = 0; v < g.vertex_count(); ++v)
          EXPECT_NEAR(simrank_baseline(g, u, v, n, 0.6).value, s(u, v), 1e-10);
    }
  }
}

TEST(Baseline, MatchesOracleAndIsSymmetric) {
  Rng rng(6);
  for (int rep = 0; rep < 30; ++rep) {
    const auto g = random_graph(rng);
    for (Vertex u = 0; u < g.vertex_count(); ++u)
      for (Vertex v = 0; v < g.vertex_count(); ++v) {
        const double s = simrank_baseline(g, u, v, 4, 0.6).value;
        EXPECT_NEAR(s, oracle::exact_simrank_uncertain(g, u, v, 4, 0.6), 1e-10);
        EXPECT_EQ(s, simrank_baseline(g, v, u, 4, 0.6).value);
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 1.0);
      }
  }
}

TEST(Baseline, SuccessiveIteratesContract) {
  Rng rng(7);
  TransPrOptions opt;
  opt.k_max = 9;
  for (int rep = 0; rep < 40; ++rep) {
    const auto g = random_graph(rng, {.max_vertices = 6, .max_arcs = 10});
    const auto u = static_cast<Vertex>(uniform_below(rng, g.vertex_count()));
    const auto v = static_cast<Vertex>(uniform_below(rng, g.vertex_count()));
    const auto m = exact_meetings(g, u, v, 9, nullptr, opt);
    for (int n = 1; n < 9; ++n) {
      const double s0 = simrank_from_meetings(std::span(m).first(n + 1), n, 0.6);
      const double s1 = simrank_from_meetings(std::span(m).first(n + 2), n + 1, 0.6);
      EXPECT_LE(std::abs(s1 - s0), convergence_bound(n, 0.6) + 1e-15);
    }
  }
}

TEST(Baseline, UsesStoreWhenPresent) {
  Rng rng(8);
  const auto g = random_graph(rng, {.min_vertices = 6, .max_vertices = 6, .max_arcs = 16});
  TempDir dir;
  MatrixStore store(dir.path());
  trans_pr(g, 4, store, {});
  for (Vertex u = 0; u < 6; ++u)
    EXPECT_NEAR(simrank_baseline(g, u, 2, 4, 0.6, &store).value, simrank_baseline(g, u, 2, 4, 0.6).value, 1e-15);
  MatrixStore other;
  trans_pr(UncertainGraph(2, {{0, 1, 0.5}}), 4, other, {});
  EXPECT_THROW(simrank_baseline(g, 0, 1, 4, 0.6, &other), std::invalid_argument);
}

TEST(Baseline, PropagatesBudgetErrors) {
  TransPrOptions opt;
  opt.k_max = 3;
  EXPECT_THROW(simrank_baseline(g_toy(), a, a, 5, 0.6, nullptr, opt), BudgetExceeded);
}

TEST(ConvergenceBound, Examples) {
  EXPECT_NEAR(convergence_bound(5, 0.6), 0.046656, 1e-15);
  EXPECT_DOUBLE_EQ(convergence_bound(1, 0.5), 0.25);
  for (int n = 1; n < 20; ++n) EXPECT_LT(convergence_bound(n + 1, 0.6), convergence_bound(n, 0.6));
  EXPECT_THROW(convergence_bound(0, 0.6), std::invalid_argument);
}

TEST(Series, WeightsSumToOne) {
  for (int n = 1; n < 10; ++n) {
    double s = 0.0;
    for (int k = 0; k <= n; ++k) s += series_weight(k, n, 0.6);
    EXPECT_NEAR(s, 1.0, 1e-15);
  }
}

TEST(Methods, NamesRoundTrip) {
  for (Method m : {Method::baseline, Method::sampling, Method::two_stage, Method::speedup})
    EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_FALSE(parse_method("two_stage"));
}
