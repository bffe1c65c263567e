#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <filesystem>
#include <map>
#include <sstream>

#include "test_support.hpp"
#include "usimrank/graph.hpp"
#include "usimrank/oracle.hpp"
#include "usimrank/walk_file.hpp"

using namespace usimrank;
using namespace usimrank::testing;

namespace {

UncertainGraph parse(const std::string& text) {
  std::istringstream in(text);
  return parse_edge_list(in);
}

std::size_t error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(EdgeList, ParsesListedArcs) {
  const auto g = parse("0\t1\t0.5\n1\t0\t1.0\n1\t2\t0.5");
  EXPECT_EQ(g.vertex_count(), 3u);
  EXPECT_EQ(g, g_toy());
  const std::vector<ArcSpec> want{{0, 1, 0.5}, {1, 0, 1.0}, {1, 2, 0.5}};
  EXPECT_EQ(g.arcs(), want);
}

TEST(EdgeList, RejectsProbabilityAboveOne) {
  EXPECT_THROW(parse("0\t1\t1.5"), ParseError);
  EXPECT_EQ(error_line("0\t1\t1.5"), 1u);
}

TEST(EdgeList, EmptyInputGivesEmptyGraph) {
  const auto g = parse("");
  EXPECT_EQ(g.vertex_count(), 0u);
  EXPECT_EQ(g.arc_count(), 0u);
}

TEST(EdgeList, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("# header\n0\t1\t0.5\n1\t2\n"), 3u);
  EXPECT_EQ(error_line("0\t1\t0.5\n\n0\t1\t0.25\n"), 3u);       // duplicate
  EXPECT_EQ(error_line("0\t1\t0\n"), 1u);                      // p = 0
  EXPECT_EQ(error_line("0\t1\t-0.1\n"), 1u);
  EXPECT_EQ(error_line("0\tx\t0.5\n"), 1u);
  EXPECT_EQ(error_line("0\t1\tabc\n"), 1u);
  EXPECT_EQ(error_line("0\t1\t0.5\t7\n"), 1u);
  EXPECT_EQ(error_line("0 1 0.5\n"), 1u);
}

TEST(EdgeList, CommentsBlankLinesAndCrlf) {
  const auto g = parse("# comment\r\n\r\n0\t0\t1\r\n2\t0\t0.25\r\n");
  EXPECT_EQ(g.vertex_count(), 3u);
  EXPECT_EQ(g.arc_count(), 2u);
  EXPECT_TRUE(g.find_arc(0, 0));  // self-loop accepted
}

TEST(EdgeList, SaveLoadRoundTrip) {
  Rng rng(3);
  const auto g = gen_rmat(64, 300, {}, 9);
  const auto path = std::filesystem::temp_directory_path() / "usimrank-roundtrip.tsv";
  save_edge_list(path.string(), g);
  EXPECT_EQ(load_edge_list(path.string()), g);
  EXPECT_EQ(degenerate(load_edge_list(path.string())), degenerate(g));
  std::filesystem::remove(path);
  EXPECT_THROW(load_edge_list("/nonexistent/graph.tsv"), Error);
}

TEST(UncertainGraph, RejectsInvalidConstruction) {
  EXPECT_THROW(UncertainGraph(2, {{0, 2, 0.5}}), std::invalid_argument);
  EXPECT_THROW(UncertainGraph(2, {{0, 1, 0.0}}), std::invalid_argument);
  EXPECT_THROW(UncertainGraph(2, {{0, 1, 1.01}}), std::invalid_argument);
  EXPECT_THROW(UncertainGraph(2, {{0, 1, 0.5}, {0, 1, 0.7}}), std::invalid_argument);
}

TEST(UncertainGraph, InAndOutViewsAgree) {
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const auto g = random_graph(rng);
    std::multiset<std::tuple<Vertex, Vertex, double>> out, in;
    for (Vertex u = 0; u < g.vertex_count(); ++u) {
      for (const auto& e : g.out(u)) out.insert({u, e.target, e.prob});
      for (const auto& e : g.in(u)) {
        in.insert({e.source, u, e.prob});
        EXPECT_EQ(g.arc(e.arc).target, u);
      }
    }
    EXPECT_EQ(out, in);
  }
}

TEST(SampleWorld, CertainArcsAlwaysPresent) {
  Rng rng(1);
  const UncertainGraph g(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_world(g, rng), degenerate(g));
}

TEST(SampleWorld, SingleArcFrequency) {
  Rng rng(2);
  const UncertainGraph g(2, {{0, 1, 0.5}});
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += sample_world(g, rng).arc_count() == 1;
  EXPECT_NEAR(hits / 10000.0, 0.5, 0.02);
}

TEST(SampleWorld, WorldFrequenciesMatchEnumeration) {
  // Chi-square goodness of fit against the enumerated world distribution.
  const UncertainGraph g(3, {{0, 1, 0.5}, {1, 0, 0.3}, {1, 2, 0.8}});
  std::map<std::vector<std::pair<Vertex, Vertex>>, double> expected;
  oracle::enumerate_worlds(g, [&](const DeterministicGraph& w, double p) { expected[w.arcs()] += p; });
  ASSERT_EQ(expected.size(), 8u);

  Rng rng(12345);
  const int draws = 100000;
  std::map<std::vector<std::pair<Vertex, Vertex>>, int> seen;
  for (int i = 0; i < draws; ++i) ++seen[sample_world(g, rng).arcs()];

  double stat = 0.0;
  for (const auto& [world, p] : expected) {
    const double e = p * draws;
    const double o = seen.count(world) ? seen[world] : 0;
    stat += (o - e) * (o - e) / e;
  }
  EXPECT_EQ(seen.size(), expected.size());
  const boost::math::chi_squared dist(static_cast<double>(expected.size() - 1));
  EXPECT_LT(stat, boost::math::quantile(dist, 0.999));
}

TEST(Degenerate, StripsProbabilities) {
  const auto d = degenerate(UncertainGraph(2, {{0, 1, 0.5}}));
  EXPECT_EQ(d.arcs(), (std::vector<std::pair<Vertex, Vertex>>{{0, 1}}));
  EXPECT_EQ(degenerate(UncertainGraph(0, {})).vertex_count(), 0u);
  const auto toy = degenerate(g_toy());
  EXPECT_EQ(toy.vertex_count(), 3u);
  EXPECT_EQ(toy.arc_count(), 3u);
}

TEST(Rmat, ZeroEdges) {
  const auto g = gen_rmat(4, 0, {}, 7);
  EXPECT_EQ(g.vertex_count(), 4u);
  EXPECT_EQ(g.arc_count(), 0u);
}

TEST(Rmat, DeterministicForSeed) {
  const RmatWeights w{0.57, 0.19, 0.19, 0.05};
  const auto g1 = gen_rmat(1024, 5000, w, 1);
  const auto g2 = gen_rmat(1024, 5000, w, 1);
  EXPECT_EQ(g1, g2);
  std::ostringstream s1, s2;
  write_edge_list(s1, g1);
  write_edge_list(s2, g2);
  EXPECT_EQ(s1.str(), s2.str());
  EXPECT_NE(gen_rmat(1024, 5000, w, 2), g1);
}

TEST(Rmat, ExactEdgeCountAndValidProbabilities) {
  const auto g = gen_rmat(1024, 5000, {}, 1);
  EXPECT_EQ(g.arc_count(), 5000u);
  std::set<std::pair<Vertex, Vertex>> distinct;
  for (const auto& a : g.arcs()) {
    distinct.insert({a.source, a.target});
    EXPECT_GT(a.prob, 0.0);
    EXPECT_LE(a.prob, 1.0);
  }
  EXPECT_EQ(distinct.size(), 5000u);
}

TEST(Rmat, NonPowerOfTwoAndInfeasible) {
  const auto g = gen_rmat(100, 900, {}, 4);
  EXPECT_EQ(g.arc_count(), 900u);
  for (const auto& a : g.arcs()) EXPECT_LT(std::max(a.source, a.target), 100u);
  EXPECT_THROW(gen_rmat(4, 17, {}, 1), std::invalid_argument);
  EXPECT_NO_THROW(gen_rmat(4, 16, {0.25, 0.25, 0.25, 0.25}, 1));
  EXPECT_THROW(gen_rmat(4, 2, {0.5, 0.5, 0.5, 0.5}, 1), std::invalid_argument);
}
