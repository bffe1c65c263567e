#pragma once

// Monte-Carlo SimRank: each sampled walk lazily instantiates a private
// possible world (a vertex's out-arcs are drawn on first visit and frozen for
// the rest of that walk) and moves uniformly over the instantiated arcs.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "usimrank/graph.hpp"
#include "usimrank/random.hpp"
#include "usimrank/simrank.hpp"
#include "usimrank/walk_prob.hpp"

namespace usimrank {

/// Reusable walk sampler; keeps the per-walk frozen arc sets between calls to
/// avoid reallocating. One instance per thread.
class WalkSampler {
 public:
  explicit WalkSampler(const UncertainGraph& g) : g_(&g) {}

  /// Samples a walk of at most n steps from `start` into `out`; shorter when
  /// it reaches a vertex with no instantiated out-arc.
  template <class URBG>
  void sample(Vertex start, int n, URBG& rng, std::vector<Vertex>& out) {
    frozen_.clear();
    pool_.clear();
    out.assign(1, start);
    for (int step = 0; step < n; ++step) {
      const Vertex w = out.back();
      auto it = frozen_.find(w);
      if (it == frozen_.end()) {
        const auto first = static_cast<std::uint32_t>(pool_.size());
        for (const auto& a : g_->out(w))
          if (bernoulli(rng, a.prob)) pool_.push_back(a.target);
        it = frozen_.emplace(w, std::pair{first, static_cast<std::uint32_t>(pool_.size()) - first}).first;
      }
      const auto [first, count] = it->second;
      if (count == 0) break;
      out.push_back(pool_[first + uniform_below(rng, count)]);
    }
  }

  /// Out-arcs instantiated for `w` during the last walk, if it was visited.
  std::optional<std::span<const Vertex>> instantiated(Vertex w) const {
    auto it = frozen_.find(w);
    if (it == frozen_.end()) return std::nullopt;
    return std::span<const Vertex>(pool_.data() + it->second.first, it->second.second);
  }

 private:
  const UncertainGraph* g_;
  std::unordered_map<Vertex, std::pair<std::uint32_t, std::uint32_t>> frozen_;
  std::vector<Vertex> pool_;
};

template <class URBG>
Walk sample_walk(const UncertainGraph& g, Vertex start, int n, URBG& rng) {
  if (n < 1) throw std::invalid_argument("walk length must be at least 1");
  if (start >= g.vertex_count()) throw std::out_of_range("unknown vertex id " + std::to_string(start));
  WalkSampler sampler(g);
  Walk w;
  sampler.sample(start, n, rng, w.vertices);
  return w;
}

template <class URBG>
std::vector<Walk> sample_walks(const UncertainGraph& g, Vertex start, int n, std::uint64_t count, URBG& rng) {
  WalkSampler sampler(g);
  std::vector<Walk> walks(count);
  for (auto& w : walks) sampler.sample(start, n, rng, w.vertices);
  return walks;
}

/// Fraction of index-paired walks that sit on the same vertex at step k.
inline double estimate_meeting(std::span<const Walk> walks_u, std::span<const Walk> walks_v, int k) {
  if (walks_u.empty()) throw std::invalid_argument("estimate_meeting needs N >= 1 walks");
  if (walks_u.size() != walks_v.size()) throw std::invalid_argument("estimate_meeting: walk counts differ");
  const auto step = static_cast<std::size_t>(k);
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < walks_u.size(); ++i) {
    const auto& a = walks_u[i].vertices;
    const auto& b = walks_v[i].vertices;
    if (step < a.size() && step < b.size() && a[step] == b[step]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(walks_u.size());
}

/// Smallest N with N >= (3 / eps^2) ln(2 / delta).
inline std::uint64_t required_samples(double epsilon, double delta) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
  const double x = 3.0 / (epsilon * epsilon) * std::log(2.0 / delta);
  // Absorb rounding noise so exact integers are not bumped up by one.
  return static_cast<std::uint64_t>(std::ceil(x * (1.0 - 1e-12)));
}

/// Sample count, plus the accuracy target it was derived from when known.
struct SamplePlan {
  std::uint64_t samples = 1000;
  std::optional<double> epsilon;
  std::optional<double> delta;

  static SamplePlan fixed(std::uint64_t n) { return {n, std::nullopt, std::nullopt}; }
  static SamplePlan from_accuracy(double epsilon, double delta) {
    return {required_samples(epsilon, delta), epsilon, delta};
  }
};

namespace detail {

template <class URBG>
void sampled_meetings(const UncertainGraph& g, Vertex u, Vertex v, int n, int from_k, std::uint64_t samples,
                      URBG& rng, std::vector<double>& m) {
  if (samples == 0) throw std::invalid_argument("N must be at least 1");
  const auto walks_u = sample_walks(g, u, n, samples, rng);
  const auto walks_v = sample_walks(g, v, n, samples, rng);
  for (int k = from_k; k <= n; ++k) m[static_cast<std::size_t>(k)] = estimate_meeting(walks_u, walks_v, k);
}

}  // namespace detail

/// Pure Monte-Carlo estimate of s^(n)(u,v); m^(0) is taken exactly.
template <class URBG>
SimEstimate simrank_sampling(const UncertainGraph& g, Vertex u, Vertex v, int n, double c, const SamplePlan& plan,
                             URBG& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  check_simrank_args(g, u, v, n, c);
  SimEstimate e;
  e.method = Method::sampling;
  e.n = n;
  e.c = c;
  e.samples = plan.samples;
  e.meetings.assign(static_cast<std::size_t>(n) + 1, 0.0);
  e.meetings[0] = u == v ? 1.0 : 0.0;
  detail::sampled_meetings(g, u, v, n, 1, plan.samples, rng, e.meetings);
  e.value = simrank_from_meetings(e.meetings, n, c);
  if (plan.epsilon) e.bound = std::max(0.0, (c - std::pow(c, n)) * *plan.epsilon);
  e.wall_time = std::chrono::steady_clock::now() - t0;
  return e;
}

}  // namespace usimrank
