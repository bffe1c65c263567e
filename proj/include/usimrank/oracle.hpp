#pragma once

// Brute-force ground truth by possible-world enumeration. Exponential in the
// number of arcs; meant for tests and small fixtures only.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "usimrank/error.hpp"
#include "usimrank/graph.hpp"
#include "usimrank/trans_matrix.hpp"

namespace usimrank::oracle {

inline constexpr std::size_t kDefaultArcCap = 20;

/// Dense row-major square matrix.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> data;

  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t size) : n(size), data(size * size, 0.0) {}

  static SquareMatrix identity(std::size_t size) {
    SquareMatrix m(size);
    for (std::size_t i = 0; i < size; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }

  friend SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b) {
    SquareMatrix c(a.n);
    for (std::size_t i = 0; i < a.n; ++i)
      for (std::size_t l = 0; l < a.n; ++l) {
        const double x = a(i, l);
        if (x == 0.0) continue;
        for (std::size_t j = 0; j < a.n; ++j) c(i, j) += x * b(l, j);
      }
    return c;
  }

  SquareMatrix transpose() const {
    SquareMatrix t(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) t(j, i) = (*this)(i, j);
    return t;
  }
};

/// Row-normalized adjacency of a deterministic graph; dangling rows are zero.
inline SquareMatrix transition_matrix(const DeterministicGraph& g) {
  SquareMatrix t(g.vertex_count());
  for (Vertex u = 0; u < g.vertex_count(); ++u) {
    const auto out = g.out(u);
    for (Vertex v : out) t(u, v) = 1.0 / static_cast<double>(out.size());
  }
  return t;
}

/// Calls visit(world, probability) for every possible world of non-zero
/// probability. Arcs with probability 1 are present in every world.
inline void enumerate_worlds(const UncertainGraph& g,
                             const std::function<void(const DeterministicGraph&, double)>& visit,
                             std::size_t arc_cap = kDefaultArcCap) {
  if (g.arc_count() > arc_cap)
    throw CapExceeded("possible-world enumeration refused: " + std::to_string(g.arc_count()) +
                      " arcs exceed the cap of " + std::to_string(arc_cap));
  std::vector<ArcSpec> certain, uncertain;
  for (const auto& a : g.arcs()) (a.prob >= 1.0 ? certain : uncertain).push_back(a);

  const std::uint64_t worlds = std::uint64_t{1} << uncertain.size();
  std::vector<std::pair<Vertex, Vertex>> arcs;
  for (std::uint64_t mask = 0; mask < worlds; ++mask) {
    double prob = 1.0;
    arcs.clear();
    for (const auto& a : certain) arcs.emplace_back(a.source, a.target);
    for (std::size_t i = 0; i < uncertain.size(); ++i) {
      if (mask >> i & 1) {
        prob *= uncertain[i].prob;
        arcs.emplace_back(uncertain[i].source, uncertain[i].target);
      } else {
        prob *= 1.0 - uncertain[i].prob;
      }
    }
    visit(DeterministicGraph(g.vertex_count(), arcs), prob);
  }
}

/// Pr(X_1 = v_1, ..., X_k = v_k | X_0 = v_0): over worlds containing every
/// arc of the walk, the product of 1/|O_G(v_i)| along it.
inline double walk_probability(const UncertainGraph& g, std::span<const Vertex> walk,
                               std::size_t arc_cap = kDefaultArcCap) {
  if (walk.empty()) throw std::invalid_argument("empty walk");
  double total = 0.0;
  enumerate_worlds(
      g,
      [&](const DeterministicGraph& world, double prob) {
        double p = prob;
        for (std::size_t i = 0; i + 1 < walk.size() && p != 0.0; ++i) {
          const auto out = world.out(walk[i]);
          if (std::find(out.begin(), out.end(), walk[i + 1]) == out.end()) p = 0.0;
          else p /= static_cast<double>(out.size());
        }
        total += p;
      },
      arc_cap);
  return total;
}

/// E over worlds of (transition matrix)^k, for k = 0..K.
inline std::vector<SquareMatrix> exact_kstep_series(const UncertainGraph& g, int K,
                                                    std::size_t arc_cap = kDefaultArcCap) {
  if (K < 0) throw std::invalid_argument("k must be non-negative");
  const std::size_t n = g.vertex_count();
  std::vector<SquareMatrix> sum(static_cast<std::size_t>(K) + 1, SquareMatrix(n));
  enumerate_worlds(
      g,
      [&](const DeterministicGraph& world, double prob) {
        const auto t = transition_matrix(world);
        auto power = SquareMatrix::identity(n);
        for (int k = 0; k <= K; ++k) {
          if (k > 0) power = power * t;
          for (std::size_t i = 0; i < power.data.size(); ++i) sum[k].data[i] += prob * power.data[i];
        }
      },
      arc_cap);
  return sum;
}

inline SquareMatrix exact_kstep_dense(const UncertainGraph& g, int k, std::size_t arc_cap = kDefaultArcCap) {
  return exact_kstep_series(g, k, arc_cap).back();
}

inline TransMatrix exact_kstep(const UncertainGraph& g, int k, std::size_t arc_cap = kDefaultArcCap) {
  const auto m = exact_kstep_dense(g, k, arc_cap);
  return TransMatrix::from_dense(k, m.n, m.data);
}

/// m^(k)(u,v) from a precomputed W^(k).
inline double meeting(const SquareMatrix& wk, Vertex u, Vertex v) {
  double s = 0.0;
  for (std::size_t w = 0; w < wk.n; ++w) s += wk(u, w) * wk(v, w);
  return s;
}

inline double exact_meeting(const UncertainGraph& g, Vertex u, Vertex v, int k,
                            std::size_t arc_cap = kDefaultArcCap) {
  if (u >= g.vertex_count() || v >= g.vertex_count()) throw std::out_of_range("vertex out of range");
  if (k == 0) return u == v ? 1.0 : 0.0;
  return meeting(exact_kstep_dense(g, k, arc_cap), u, v);
}

/// s^(n)(u,v) from meeting probabilities m[0..n].
inline double combine_series(const std::vector<double>& m, int n, double c) {
  double s = std::pow(c, n) * m[static_cast<std::size_t>(n)];
  for (int k = 0; k < n; ++k) s += (1.0 - c) * std::pow(c, k) * m[static_cast<std::size_t>(k)];
  return s;
}

inline double exact_simrank_uncertain(const UncertainGraph& g, Vertex u, Vertex v, int n, double c,
                                      std::size_t arc_cap = kDefaultArcCap) {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("delay factor must lie in (0,1)");
  if (n < 0) throw std::invalid_argument("n must be non-negative");
  if (u >= g.vertex_count() || v >= g.vertex_count()) throw std::out_of_range("vertex out of range");
  const auto w = exact_kstep_series(g, n, arc_cap);
  std::vector<double> m(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) m[k] = meeting(w[k], u, v);
  return combine_series(m, n, c);
}

/// Deterministic SimRank iterate S^(n) by the recursion
/// S^(0) = I, S^(n) = c T S^(n-1) T^T + (1-c) I, T the transition matrix.
inline SquareMatrix deterministic_simrank_series(const DeterministicGraph& g, int n, double c) {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("delay factor must lie in (0,1)");
  const std::size_t size = g.vertex_count();
  const auto t = transition_matrix(g);
  const auto tt = t.transpose();
  auto s = SquareMatrix::identity(size);
  for (int i = 0; i < n; ++i) {
    auto next = t * s * tt;
    for (std::size_t j = 0; j < next.data.size(); ++j) next.data[j] *= c;
    for (std::size_t j = 0; j < size; ++j) next(j, j) += 1.0 - c;
    s = std::move(next);
  }
  return s;
}

}  // namespace usimrank::oracle
