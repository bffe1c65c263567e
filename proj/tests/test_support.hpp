#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "usimrank/graph.hpp"
#include "usimrank/random.hpp"

namespace usimrank::testing {

inline constexpr Vertex a = 0, b = 1, c = 2;

/// a -> b (0.5), b -> a (1.0), b -> c (0.5).
inline UncertainGraph g_toy() { return UncertainGraph(3, {{a, b, 0.5}, {b, a, 1.0}, {b, c, 0.5}}); }

struct RandomGraphSpec {
  std::size_t min_vertices = 2;
  std::size_t max_vertices = 6;
  std::size_t max_arcs = 12;
  bool certain = false;      // every p = 1
  bool acyclic = false;      // only arcs u -> v with u < v
  bool self_loops = true;
  double certain_share = 0.2;  // fraction of arcs forced to p = 1
};

inline UncertainGraph random_graph(Rng& rng, const RandomGraphSpec& spec = {}) {
  const auto n = static_cast<std::size_t>(spec.min_vertices +
                                          uniform_below(rng, spec.max_vertices - spec.min_vertices + 1));
  std::vector<std::pair<Vertex, Vertex>> slots;
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = 0; v < n; ++v) {
      if (spec.acyclic && u >= v) continue;
      if (!spec.self_loops && u == v) continue;
      slots.emplace_back(u, v);
    }
  std::shuffle(slots.begin(), slots.end(), rng);
  const std::size_t cap = std::min(spec.max_arcs, slots.size());
  const auto m = static_cast<std::size_t>(uniform_below(rng, cap + 1));
  std::vector<ArcSpec> arcs;
  for (std::size_t i = 0; i < m; ++i) {
    double p = 1.0;
    if (!spec.certain && uniform01(rng) >= spec.certain_share) p = uniform_open0(rng);
    arcs.push_back({slots[i].first, slots[i].second, p});
  }
  return UncertainGraph(n, std::move(arcs));
}

/// Random walk of up to `length` arcs along the support; stops at dead ends.
inline std::vector<Vertex> random_support_walk(const UncertainGraph& g, Vertex start, std::size_t length, Rng& rng) {
  std::vector<Vertex> w{start};
  for (std::size_t i = 0; i < length; ++i) {
    const auto out = g.out(w.back());
    if (out.empty()) break;
    w.push_back(out[uniform_below(rng, out.size())].target);
  }
  return w;
}

}  // namespace usimrank::testing
