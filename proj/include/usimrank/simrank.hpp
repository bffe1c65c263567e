#pragma once

// Truncated SimRank on uncertain graphs:
//   s^(n)(u,v) = c^n m^(n)(u,v) + (1-c) sum_{k<n} c^k m^(k)(u,v),
// where m^(k)(u,v) = sum_w Pr(u ->_k w) Pr(v ->_k w) and m^(0) = [u = v].

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "usimrank/graph.hpp"
#include "usimrank/trans_matrix.hpp"
#include "usimrank/trans_pr.hpp"

namespace usimrank {

enum class Method { baseline, sampling, two_stage, speedup };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::baseline: return "baseline";
    case Method::sampling: return "sampling";
    case Method::two_stage: return "twostage";
    case Method::speedup: return "speedup";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
  for (Method m : {Method::baseline, Method::sampling, Method::two_stage, Method::speedup})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

struct SimEstimate {
  double value = 0.0;
  Method method = Method::baseline;
  int n = 0;
  double c = 0.0;
  std::optional<std::uint64_t> samples;  // N
  std::optional<int> exact_steps;        // l
  std::optional<double> bound;           // a-priori absolute error bound
  std::chrono::duration<double> wall_time{};
  /// m^(0..n) as used in the combination (exact or estimated).
  std::vector<double> meetings;
};

inline void check_simrank_args(const UncertainGraph& g, Vertex u, Vertex v, int n, double c) {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("delay factor c must lie in (0,1)");
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  if (u >= g.vertex_count()) throw std::out_of_range("unknown vertex id " + std::to_string(u));
  if (v >= g.vertex_count()) throw std::out_of_range("unknown vertex id " + std::to_string(v));
}

/// Dot product of the u- and v-rows of W^(k).
inline double meeting_prob_exact(std::span<const double> row_u, std::span<const double> row_v) {
  if (row_u.size() != row_v.size()) throw std::invalid_argument("meeting_prob_exact: length mismatch");
  return dot(row_u, row_v);
}

/// Weight of m^(k) in s^(n).
inline double series_weight(int k, int n, double c) {
  return k == n ? std::pow(c, n) : (1.0 - c) * std::pow(c, k);
}

inline double simrank_from_meetings(std::span<const double> m, int n, double c) {
  if (m.size() != static_cast<std::size_t>(n) + 1) throw std::invalid_argument("need m^(0..n)");
  double s = 0.0;
  for (int k = 0; k <= n; ++k) s += series_weight(k, n, c) * m[static_cast<std::size_t>(k)];
  return std::clamp(s, 0.0, 1.0);
}

/// |s^(n) - s| <= c^(n+1).
inline double convergence_bound(int n, double c) {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("delay factor c must lie in (0,1)");
  return std::pow(c, n + 1);
}

/// Exact m^(0..upto)(u,v). Uses `store` when it holds W^(1..upto); otherwise
/// W^(1) rows come straight from the graph and deeper steps are materialized
/// for the two start vertices only.
inline std::vector<double> exact_meetings(const UncertainGraph& g, Vertex u, Vertex v, int upto,
                                          const MatrixStore* store = nullptr, const TransPrOptions& opt = {}) {
  std::vector<double> m(static_cast<std::size_t>(upto) + 1, 0.0);
  m[0] = u == v ? 1.0 : 0.0;
  if (upto == 0) return m;
  if (store && store->max_k() >= 1 && store->vertex_count(1) != g.vertex_count())
    throw std::invalid_argument("matrix store was built for a graph with " + std::to_string(store->vertex_count(1)) +
                                " vertices, not " + std::to_string(g.vertex_count()));
  if (store && store->max_k() >= upto) {
    for (int k = 1; k <= upto; ++k) m[k] = store->meeting(k, u, v);
    return m;
  }
  if (upto == 1) {
    const auto ru = one_step_row(g, u);
    m[1] = u == v ? dot(std::span<const TransMatrix::Entry>(ru), std::span<const TransMatrix::Entry>(ru))
                  : dot(std::span<const TransMatrix::Entry>(ru),
                        std::span<const TransMatrix::Entry>(one_step_row(g, v)));
    return m;
  }
  TransPrOptions local = opt;
  local.sources = std::vector<Vertex>{u, v};
  MatrixStore scratch;
  trans_pr(g, upto, scratch, local);
  for (int k = 1; k <= upto; ++k) m[k] = scratch.meeting(k, u, v);
  return m;
}

/// Exact s^(n)(u,v) from W^(1..n).
inline SimEstimate simrank_baseline(const UncertainGraph& g, Vertex u, Vertex v, int n, double c,
                                    const MatrixStore* store = nullptr, const TransPrOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  check_simrank_args(g, u, v, n, c);
  SimEstimate e;
  e.method = Method::baseline;
  e.n = n;
  e.c = c;
  e.meetings = exact_meetings(g, u, v, n, store, opt);
  e.value = simrank_from_meetings(e.meetings, n, c);
  e.bound = convergence_bound(n, c);
  e.wall_time = std::chrono::steady_clock::now() - t0;
  return e;
}

}  // namespace usimrank
