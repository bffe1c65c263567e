#pragma once

// Uncertain and deterministic directed graphs, edge-list ingestion,
// possible-world sampling and the R-MAT generator.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "usimrank/error.hpp"
#include "usimrank/random.hpp"

namespace usimrank {

using Vertex = std::uint32_t;

struct ArcSpec {
  Vertex source;
  Vertex target;
  double prob;

  friend bool operator==(const ArcSpec&, const ArcSpec&) = default;
};

struct OutArc {
  Vertex target;
  double prob;
};

struct InArc {
  Vertex source;
  double prob;
  std::size_t arc;  // index into the out-arc array
};

namespace detail {

inline std::uint64_t arc_key(Vertex u, Vertex v) {
  return (static_cast<std::uint64_t>(u) << 32) | v;
}

// Sorts arcs by (source, target) and checks the structural invariants.
inline void normalize_arcs(std::size_t vertex_count, std::vector<ArcSpec>& arcs, bool check_prob) {
  for (const auto& a : arcs) {
    if (a.source >= vertex_count || a.target >= vertex_count)
      throw std::invalid_argument("arc (" + std::to_string(a.source) + "," + std::to_string(a.target) +
                                  ") references a vertex outside 0.." + std::to_string(vertex_count));
    if (check_prob && !(a.prob > 0.0 && a.prob <= 1.0))
      throw std::invalid_argument("arc (" + std::to_string(a.source) + "," + std::to_string(a.target) +
                                  ") has probability outside (0,1]");
  }
  std::stable_sort(arcs.begin(), arcs.end(), [](const ArcSpec& x, const ArcSpec& y) {
    return x.source != y.source ? x.source < y.source : x.target < y.target;
  });
  for (std::size_t i = 1; i < arcs.size(); ++i)
    if (arcs[i].source == arcs[i - 1].source && arcs[i].target == arcs[i - 1].target)
      throw std::invalid_argument("duplicate arc (" + std::to_string(arcs[i].source) + "," +
                                  std::to_string(arcs[i].target) + ")");
}

}  // namespace detail

/// Directed graph whose arcs exist independently with probability in (0,1].
/// Immutable once built. Out-lists are sorted by target.
class UncertainGraph {
 public:
  UncertainGraph() = default;

  UncertainGraph(std::size_t vertex_count, std::vector<ArcSpec> arcs) : vertex_count_(vertex_count) {
    detail::normalize_arcs(vertex_count, arcs, true);
    out_offsets_.assign(vertex_count + 1, 0);
    in_offsets_.assign(vertex_count + 1, 0);
    for (const auto& a : arcs) {
      ++out_offsets_[a.source + 1];
      ++in_offsets_[a.target + 1];
    }
    for (std::size_t v = 0; v < vertex_count; ++v) {
      out_offsets_[v + 1] += out_offsets_[v];
      in_offsets_[v + 1] += in_offsets_[v];
    }
    out_.reserve(arcs.size());
    for (const auto& a : arcs) out_.push_back({a.target, a.prob});
    in_.resize(arcs.size());
    std::vector<std::size_t> fill(in_offsets_.begin(), in_offsets_.end() - 1);
    for (std::size_t i = 0; i < arcs.size(); ++i) in_[fill[arcs[i].target]++] = {arcs[i].source, arcs[i].prob, i};
  }

  std::size_t vertex_count() const noexcept { return vertex_count_; }
  std::size_t arc_count() const noexcept { return out_.size(); }

  std::span<const OutArc> out(Vertex v) const {
    return {out_.data() + out_offsets_[v], out_.data() + out_offsets_[v + 1]};
  }
  std::span<const InArc> in(Vertex v) const {
    return {in_.data() + in_offsets_[v], in_.data() + in_offsets_[v + 1]};
  }
  std::size_t out_degree(Vertex v) const { return out_offsets_[v + 1] - out_offsets_[v]; }

  /// Global index of the first out-arc of v; arc ids are contiguous per source.
  std::size_t first_arc(Vertex v) const { return out_offsets_[v]; }
  const OutArc& arc(std::size_t id) const { return out_[id]; }

  std::optional<std::size_t> find_arc(Vertex u, Vertex v) const {
    auto arcs = out(u);
    auto it = std::lower_bound(arcs.begin(), arcs.end(), v,
                               [](const OutArc& a, Vertex t) { return a.target < t; });
    if (it == arcs.end() || it->target != v) return std::nullopt;
    return first_arc(u) + static_cast<std::size_t>(it - arcs.begin());
  }

  std::vector<ArcSpec> arcs() const {
    std::vector<ArcSpec> result;
    result.reserve(out_.size());
    for (Vertex u = 0; u < vertex_count_; ++u)
      for (const auto& a : out(u)) result.push_back({u, a.target, a.prob});
    return result;
  }

  bool operator==(const UncertainGraph& other) const {
    return vertex_count_ == other.vertex_count_ && arcs() == other.arcs();
  }

 private:
  std::size_t vertex_count_ = 0;
  std::vector<std::size_t> out_offsets_{0};
  std::vector<std::size_t> in_offsets_{0};
  std::vector<OutArc> out_;
  std::vector<InArc> in_;
};

/// Plain directed graph, one possible world of an UncertainGraph.
class DeterministicGraph {
 public:
  DeterministicGraph() = default;

  DeterministicGraph(std::size_t vertex_count, std::vector<std::pair<Vertex, Vertex>> arcs)
      : vertex_count_(vertex_count) {
    std::vector<ArcSpec> specs;
    specs.reserve(arcs.size());
    for (auto [u, v] : arcs) specs.push_back({u, v, 1.0});
    detail::normalize_arcs(vertex_count, specs, false);
    build(specs);
  }

  std::size_t vertex_count() const noexcept { return vertex_count_; }
  std::size_t arc_count() const noexcept { return out_.size(); }

  std::span<const Vertex> out(Vertex v) const {
    return {out_.data() + out_offsets_[v], out_.data() + out_offsets_[v + 1]};
  }
  std::span<const Vertex> in(Vertex v) const {
    return {in_.data() + in_offsets_[v], in_.data() + in_offsets_[v + 1]};
  }
  std::size_t out_degree(Vertex v) const { return out_offsets_[v + 1] - out_offsets_[v]; }

  std::vector<std::pair<Vertex, Vertex>> arcs() const {
    std::vector<std::pair<Vertex, Vertex>> result;
    for (Vertex u = 0; u < vertex_count_; ++u)
      for (Vertex v : out(u)) result.emplace_back(u, v);
    return result;
  }

  bool operator==(const DeterministicGraph& other) const {
    return vertex_count_ == other.vertex_count_ && arcs() == other.arcs();
  }

 private:
  friend DeterministicGraph degenerate(const UncertainGraph&);
  template <class URBG>
  friend DeterministicGraph sample_world(const UncertainGraph&, URBG&);

  // `specs` must already be normalized.
  void build(const std::vector<ArcSpec>& specs) {
    out_offsets_.assign(vertex_count_ + 1, 0);
    in_offsets_.assign(vertex_count_ + 1, 0);
    for (const auto& a : specs) {
      ++out_offsets_[a.source + 1];
      ++in_offsets_[a.target + 1];
    }
    for (std::size_t v = 0; v < vertex_count_; ++v) {
      out_offsets_[v + 1] += out_offsets_[v];
      in_offsets_[v + 1] += in_offsets_[v];
    }
    out_.clear();
    out_.reserve(specs.size());
    for (const auto& a : specs) out_.push_back(a.target);
    in_.resize(specs.size());
    std::vector<std::size_t> fill(in_offsets_.begin(), in_offsets_.end() - 1);
    for (const auto& a : specs) in_[fill[a.target]++] = a.source;
  }

  std::size_t vertex_count_ = 0;
  std::vector<std::size_t> out_offsets_{0};
  std::vector<std::size_t> in_offsets_{0};
  std::vector<Vertex> out_;
  std::vector<Vertex> in_;
};

/// Same topology, probabilities dropped.
inline DeterministicGraph degenerate(const UncertainGraph& g) {
  DeterministicGraph d;
  d.vertex_count_ = g.vertex_count();
  d.build(g.arcs());
  return d;
}

/// Draws one possible world: every arc kept independently with its probability.
template <class URBG>
DeterministicGraph sample_world(const UncertainGraph& g, URBG& rng) {
  std::vector<ArcSpec> kept;
  for (Vertex u = 0; u < g.vertex_count(); ++u)
    for (const auto& a : g.out(u))
      if (bernoulli(rng, a.prob)) kept.push_back({u, a.target, 1.0});
  DeterministicGraph d;
  d.vertex_count_ = g.vertex_count();
  d.build(kept);
  return d;
}

// ---------------------------------------------------------------------------
// Edge-list text format: `u<TAB>v<TAB>p`, `#` comments.

inline UncertainGraph parse_edge_list(std::istream& in) {
  std::vector<ArcSpec> arcs;
  std::unordered_set<std::uint64_t> seen;
  std::size_t max_id_plus_one = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;

    std::array<std::string_view, 3> fields;
    std::size_t count = 0;
    std::string_view rest(line);
    while (true) {
      auto tab = rest.find('\t');
      if (count == fields.size()) throw ParseError(line_no, "expected 3 tab-separated fields, got more");
      fields[count++] = rest.substr(0, tab);
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (count != 3) throw ParseError(line_no, "expected 3 tab-separated fields, got " + std::to_string(count));

    auto parse_id = [&](std::string_view s) {
      std::uint64_t value = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
      if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || value > 0xfffffffeULL)
        throw ParseError(line_no, "invalid vertex id '" + std::string(s) + "'");
      return static_cast<Vertex>(value);
    };
    Vertex u = parse_id(fields[0]);
    Vertex v = parse_id(fields[1]);
    double p = 0.0;
    auto [ptr, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), p);
    if (fields[2].empty() || ec != std::errc{} || ptr != fields[2].data() + fields[2].size())
      throw ParseError(line_no, "invalid probability '" + std::string(fields[2]) + "'");
    if (!(p > 0.0 && p <= 1.0)) throw ParseError(line_no, "probability out of range (0,1]: " + std::string(fields[2]));
    if (!seen.insert(detail::arc_key(u, v)).second)
      throw ParseError(line_no, "duplicate arc (" + std::to_string(u) + "," + std::to_string(v) + ")");
    arcs.push_back({u, v, p});
    max_id_plus_one = std::max<std::size_t>(max_id_plus_one, std::max(u, v) + std::size_t{1});
  }
  return UncertainGraph(max_id_plus_one, std::move(arcs));
}

inline UncertainGraph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open edge list '" + path + "'");
  return parse_edge_list(in);
}

/// Shortest round-trip decimal representation.
inline std::string format_double(double x) {
  std::array<char, 32> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

inline void write_edge_list(std::ostream& out, const UncertainGraph& g) {
  for (const auto& a : g.arcs()) out << a.source << '\t' << a.target << '\t' << format_double(a.prob) << '\n';
}

inline void save_edge_list(const std::string& path, const UncertainGraph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write edge list '" + path + "'");
  write_edge_list(out, g);
}

// ---------------------------------------------------------------------------
// R-MAT

struct RmatWeights {
  double a = 0.57, b = 0.19, c = 0.19, d = 0.05;
};

/// R-MAT recursive quadrant placement. Vertex counts that are not a power of
/// two recurse over the next power of two and re-draw out-of-range ids.
/// Duplicate arcs are re-drawn; probabilities are uniform in (0,1].
inline UncertainGraph gen_rmat(std::size_t vertices, std::size_t edges, RmatWeights w, std::uint64_t seed) {
  const double sum = w.a + w.b + w.c + w.d;
  if (w.a < 0 || w.b < 0 || w.c < 0 || w.d < 0 || std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("R-MAT weights must be non-negative and sum to 1");
  if (vertices > 0xfffffffeULL) throw std::invalid_argument("too many vertices");
  if (static_cast<long double>(edges) > static_cast<long double>(vertices) * vertices)
    throw std::invalid_argument("infeasible edge count: " + std::to_string(edges) + " > " +
                                std::to_string(vertices) + "^2");

  int levels = 0;
  while ((std::size_t{1} << levels) < vertices) ++levels;

  Rng rng(seed);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(edges * 2);
  std::vector<ArcSpec> arcs;
  arcs.reserve(edges);
  const double ab = w.a + w.b, abc = w.a + w.b + w.c;
  while (arcs.size() < edges) {
    std::uint64_t row = 0, col = 0;
    for (int level = 0; level < levels; ++level) {
      const double r = uniform01(rng);
      row <<= 1;
      col <<= 1;
      if (r < w.a) {
      } else if (r < ab) {
        col |= 1;
      } else if (r < abc) {
        row |= 1;
      } else {
        row |= 1;
        col |= 1;
      }
    }
    if (row >= vertices || col >= vertices) continue;
    auto u = static_cast<Vertex>(row), v = static_cast<Vertex>(col);
    if (!seen.insert(detail::arc_key(u, v)).second) continue;
    arcs.push_back({u, v, uniform_open0(rng)});
  }
  return UncertainGraph(vertices, std::move(arcs));
}

}  // namespace usimrank
