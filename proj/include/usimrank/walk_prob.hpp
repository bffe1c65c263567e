#pragma once

// Exact walk probabilities on uncertain graphs.
//
// For a walk W and a vertex v on it, alpha_W(v) is the expectation over
// possible worlds (conditioned on the arcs W uses out of v) of
// inv(|O_G(v)|)^{c_W(v)}; the walk probability is the product of the alphas.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "usimrank/graph.hpp"

namespace usimrank {

/// Vertex sequence v0..vk. Consecutive pairs must be arcs of the host graph.
struct Walk {
  std::vector<Vertex> vertices;

  Walk() = default;
  Walk(std::initializer_list<Vertex> vs) : vertices(vs) {}
  explicit Walk(std::vector<Vertex> vs) : vertices(std::move(vs)) {}

  /// Number of arcs.
  std::size_t length() const { return vertices.empty() ? 0 : vertices.size() - 1; }
  Vertex front() const { return vertices.front(); }
  Vertex back() const { return vertices.back(); }

  operator std::span<const Vertex>() const { return vertices; }

  friend bool operator==(const Walk&, const Walk&) = default;
};

/// O_W(v) (sorted, distinct) and c_W(v) for one vertex of a walk.
struct Departures {
  std::vector<Vertex> successors;
  std::uint32_t count = 0;
};

inline Departures departures(std::span<const Vertex> walk, Vertex v) {
  Departures d;
  for (std::size_t i = 0; i + 1 < walk.size(); ++i) {
    if (walk[i] != v) continue;
    ++d.count;
    d.successors.push_back(walk[i + 1]);
  }
  std::sort(d.successors.begin(), d.successors.end());
  d.successors.erase(std::unique(d.successors.begin(), d.successors.end()), d.successors.end());
  return d;
}

/// Distinct vertices of the walk, sorted.
inline std::vector<Vertex> vertex_set(std::span<const Vertex> walk) {
  std::vector<Vertex> vs(walk.begin(), walk.end());
  std::sort(vs.begin(), vs.end());
  vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
  return vs;
}

inline double inv(double x) { return x != 0.0 ? 1.0 / x : 1.0; }

/// Distribution of the number of present out-arcs of v among those not in
/// `forced` (sorted or not, must be out-neighbors of v). Entry x is the
/// probability that exactly x of them exist.
inline std::vector<double> out_degree_distribution(const UncertainGraph& g, Vertex v,
                                                   std::span<const Vertex> forced) {
  auto arcs = g.out(v);
  for (Vertex f : forced)
    if (!g.find_arc(v, f))
      throw std::invalid_argument("vertex " + std::to_string(f) + " is not an out-neighbor of " + std::to_string(v));

  // Rolling rows r(i-1, .) -> r(i, .).
  std::vector<double> row{1.0};
  std::vector<double> next;
  row.reserve(arcs.size() + 1);
  next.reserve(arcs.size() + 1);
  for (const auto& a : arcs) {
    if (std::find(forced.begin(), forced.end(), a.target) != forced.end()) continue;
    const double p = a.prob, q = 1.0 - a.prob;
    const std::size_t i = row.size();  // row holds r(i-1, 0..i-1)
    next.assign(i + 1, 0.0);
    next[0] = row[0] * q;
    next[i] = row[i - 1] * p;
    for (std::size_t j = 1; j < i; ++j) next[j] = row[j - 1] * p + row[j] * q;
    std::swap(row, next);
  }
  return row;
}

/// alpha_W(v) given O_W(v) = `successors` and c_W(v) = `count`.
inline double alpha(const UncertainGraph& g, Vertex v, std::span<const Vertex> successors, std::uint32_t count) {
  if (count == 0) {
    if (!successors.empty()) throw std::invalid_argument("c_W(v) = 0 requires an empty O_W(v)");
    return 1.0;
  }
  if (successors.empty() || count < successors.size())
    throw std::invalid_argument("alpha requires c_W(v) >= |O_W(v)| >= 1");

  double forced = 1.0;
  for (Vertex w : successors) {
    auto id = g.find_arc(v, w);
    if (!id) throw std::invalid_argument("vertex " + std::to_string(w) + " is not an out-neighbor of " + std::to_string(v));
    forced *= g.arc(*id).prob;
  }
  const auto r = out_degree_distribution(g, v, successors);
  const double base = static_cast<double>(successors.size());
  double sum = 0.0;
  for (std::size_t x = 0; x < r.size(); ++x) sum += r[x] * std::pow(inv(static_cast<double>(x) + base), count);
  return forced * sum;
}

inline double alpha(const UncertainGraph& g, std::span<const Vertex> walk, Vertex v) {
  auto d = departures(walk, v);
  return alpha(g, v, d.successors, d.count);
}

inline void check_walk(const UncertainGraph& g, std::span<const Vertex> walk) {
  if (walk.empty()) throw std::invalid_argument("empty walk");
  for (Vertex v : walk)
    if (v >= g.vertex_count()) throw std::invalid_argument("walk vertex " + std::to_string(v) + " out of range");
  for (std::size_t i = 0; i + 1 < walk.size(); ++i)
    if (!g.find_arc(walk[i], walk[i + 1]))
      throw std::invalid_argument("walk step (" + std::to_string(walk[i]) + "," + std::to_string(walk[i + 1]) +
                                  ") is not an arc");
}

/// Pr(X_1 = v_1, ..., X_k = v_k | X_0 = v_0) as a product of alphas.
inline double walk_probability(const UncertainGraph& g, std::span<const Vertex> walk) {
  check_walk(g, walk);
  double p = 1.0;
  for (Vertex v : vertex_set(walk)) p *= alpha(g, walk, v);
  return p;
}

/// Pr(u ->_1 v) on the uncertain graph; equals alpha(g, u, {v}, 1).
inline double one_step_probability(const UncertainGraph& g, Vertex u, Vertex v) {
  const Vertex succ[] = {v};
  return alpha(g, u, succ, 1);
}

/// Pr(u ->_1 v) for every out-arc of u, in out(u) order, in O(d^2) total.
/// The full present-count distribution is built once; each arc's leave-one-out
/// distribution is peeled off it, forward when p <= 1/2 and backward otherwise
/// so the recurrence never amplifies rounding error.
inline std::vector<double> one_step_probabilities(const UncertainGraph& g, Vertex u) {
  const auto arcs = g.out(u);
  const std::size_t d = arcs.size();
  const auto full = out_degree_distribution(g, u, {});
  std::vector<double> out(d), loo(d);
  for (std::size_t a = 0; a < d; ++a) {
    const double p = arcs[a].prob, q = 1.0 - p;
    // full(j) = loo(j) q + loo(j-1) p, for j = 0..d; loo has support 0..d-1.
    if (p <= 0.5) {
      loo[0] = full[0] / q;
      for (std::size_t j = 1; j < d; ++j) loo[j] = (full[j] - loo[j - 1] * p) / q;
    } else {
      loo[d - 1] = full[d] / p;
      for (std::size_t j = d - 1; j-- > 0;) loo[j] = (full[j + 1] - loo[j + 1] * q) / p;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) sum += std::max(loo[j], 0.0) / static_cast<double>(j + 1);
    out[a] = p * sum;
  }
  return out;
}

enum class ExtensionRule { one_step, ratio };

struct Extension {
  double p;      // probability of the extended walk
  double alpha;  // alpha of its new last vertex
  ExtensionRule rule;
};

/// Shortest directed cycle length in the support graph, nullopt when acyclic.
inline std::optional<std::size_t> girth(const UncertainGraph& g) {
  const std::size_t n = g.vertex_count();
  std::size_t best = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(n, std::numeric_limits<std::size_t>::max());
  std::vector<Vertex> touched;
  std::deque<Vertex> queue;
  for (Vertex s = 0; s < n && best > 1; ++s) {
    // A cycle through s closes with an arc (x, s); shortest is min dist(s,x) + 1.
    dist[s] = 0;
    touched.assign(1, s);
    queue.assign(1, s);
    while (!queue.empty()) {
      Vertex x = queue.front();
      queue.pop_front();
      if (dist[x] + 1 >= best) break;
      for (const auto& a : g.out(x)) {
        if (a.target == s) {
          best = std::min(best, dist[x] + 1);
          continue;
        }
        if (dist[a.target] != std::numeric_limits<std::size_t>::max()) continue;
        dist[a.target] = dist[x] + 1;
        touched.push_back(a.target);
        queue.push_back(a.target);
      }
    }
    for (Vertex t : touched) dist[t] = std::numeric_limits<std::size_t>::max();
  }
  if (best == std::numeric_limits<std::size_t>::max()) return std::nullopt;
  return best;
}

/// Incremental walk-probability extension. Caches the one-step probability of
/// every arc it touches; an optional girth lets short walks skip the repeat scan.
/// Holds scratch buffers: use one instance per thread.
class WalkExtender {
 public:
  explicit WalkExtender(const UncertainGraph& g, std::optional<std::size_t> girth_hint = std::nullopt,
                        bool girth_known = false)
      : g_(&g),
        girth_(girth_hint),
        girth_known_(girth_known),
        one_step_(g.arc_count(), std::numeric_limits<double>::quiet_NaN()) {}

  /// Extender whose girth guard is computed from the graph.
  static WalkExtender with_girth(const UncertainGraph& g) { return WalkExtender(g, girth(g), true); }

  const UncertainGraph& graph() const { return *g_; }
  /// Pr(u ->_1 v) for arc `arc_id` = (u, v); all arcs of u are filled on first use.
  double one_step(Vertex u, std::size_t arc_id) const {
    if (std::isnan(one_step_[arc_id])) {
      const auto probs = one_step_probabilities(*g_, u);
      std::copy(probs.begin(), probs.end(), one_step_.begin() + static_cast<std::ptrdiff_t>(g_->first_arc(u)));
    }
    return one_step_[arc_id];
  }

  /// `walk` is W (not yet extended); `p` its probability; `alpha_last` = alpha_W(last).
  Extension extend(std::span<const Vertex> walk, double p, double alpha_last, Vertex next) const {
    const Vertex last = walk.back();
    const auto arc = g_->find_arc(last, next);
    if (!arc)
      throw std::invalid_argument("extension (" + std::to_string(last) + "," + std::to_string(next) + ") is not an arc");

    scratch_.assign(walk.begin(), walk.end());
    scratch_.push_back(next);
    const std::span<const Vertex> extended(scratch_);

    Extension e{};
    if (!has_repeated_departure(walk)) {
      e.p = p * one_step(last, *arc);
      e.rule = ExtensionRule::one_step;
    } else {
      e.p = p * alpha(*g_, extended, last) / alpha_last;
      e.rule = ExtensionRule::ratio;
    }
    e.alpha = alpha(*g_, extended, next);
    return e;
  }

 private:
  // True when some vertex leaves W' = W + next at least twice, i.e. some
  // vertex of W occurs twice in W.
  bool has_repeated_departure(std::span<const Vertex> walk) const {
    if (girth_known_ && (!girth_ || walk.size() - 1 < *girth_)) return false;
    sorted_.assign(walk.begin(), walk.end());
    std::sort(sorted_.begin(), sorted_.end());
    return std::adjacent_find(sorted_.begin(), sorted_.end()) != sorted_.end();
  }

  const UncertainGraph* g_;
  std::optional<std::size_t> girth_;
  bool girth_known_;
  mutable std::vector<double> one_step_;
  mutable std::vector<Vertex> scratch_;
  mutable std::vector<Vertex> sorted_;
};

/// Probability and last-vertex alpha of W + next, derived from W's values.
inline std::pair<double, double> extend_walk_probability(const UncertainGraph& g, std::span<const Vertex> walk,
                                                         double p, double alpha_last, Vertex next) {
  check_walk(g, walk);
  const Vertex last = walk.back();
  if (!g.find_arc(last, next))
    throw std::invalid_argument("extension (" + std::to_string(last) + "," + std::to_string(next) + ") is not an arc");
  std::vector<Vertex> extended(walk.begin(), walk.end());
  extended.push_back(next);
  std::vector<Vertex> sorted(walk.begin(), walk.end());
  std::sort(sorted.begin(), sorted.end());
  const bool repeated = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
  const double p_next = repeated ? p * alpha(g, extended, last) / alpha_last : p * one_step_probability(g, last, next);
  return {p_next, alpha(g, extended, next)};
}

}  // namespace usimrank
