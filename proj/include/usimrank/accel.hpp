#pragma once

// Two-stage estimation (exact meetings up to step l, sampled beyond) and the
// bit-parallel sampler: per-arc filter vectors fix, for each sample index, one
// successor per vertex, and counting tables carry all N walks through the
// graph at once as per-step occupancy bitsets.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "usimrank/binary_io.hpp"
#include "usimrank/bitvector.hpp"
#include "usimrank/error.hpp"
#include "usimrank/graph.hpp"
#include "usimrank/random.hpp"
#include "usimrank/sampling.hpp"
#include "usimrank/simrank.hpp"
#include "usimrank/trans_matrix.hpp"
#include "usimrank/trans_pr.hpp"
#include "usimrank/walk_prob.hpp"

namespace usimrank {

using Word = BitVector::Word;

/// N-bit filter F_e for every arc, stored contiguously in arc-id order.
class FilterVectors {
 public:
  FilterVectors() = default;
  FilterVectors(std::uint64_t samples, std::size_t vertices, std::size_t arcs)
      : samples_(samples),
        vertices_(vertices),
        arcs_(arcs),
        stride_(BitVector::word_count(samples)),
        words_(arcs * stride_, 0) {
    if (samples == 0) throw std::invalid_argument("N must be at least 1");
  }

  std::uint64_t samples() const { return samples_; }
  std::size_t vertex_count() const { return vertices_; }
  std::size_t arc_count() const { return arcs_; }
  std::size_t words_per_arc() const { return stride_; }
  std::size_t memory_bytes() const { return words_.size() * sizeof(Word); }

  std::span<const Word> filter(std::size_t arc) const { return {words_.data() + arc * stride_, stride_}; }
  std::span<Word> filter(std::size_t arc) { return {words_.data() + arc * stride_, stride_}; }
  bool test(std::size_t arc, std::uint64_t i) const { return filter(arc)[i / 64] >> (i % 64) & 1; }
  void set(std::size_t arc, std::uint64_t i) { filter(arc)[i / 64] |= Word{1} << (i % 64); }

  bool matches(const UncertainGraph& g) const { return g.vertex_count() == vertices_ && g.arc_count() == arcs_; }

  friend bool operator==(const FilterVectors&, const FilterVectors&) = default;

 private:
  std::uint64_t samples_ = 0;
  std::size_t vertices_ = 0;
  std::size_t arcs_ = 0;
  std::size_t stride_ = 0;
  std::vector<Word> words_;
};

/// For every vertex and sample index: instantiate each out-arc, then set the
/// index bit on one instantiated arc chosen uniformly (none if none survive).
template <class URBG>
FilterVectors build_filter_vectors(const UncertainGraph& g, std::uint64_t samples, URBG& rng) {
  FilterVectors f(samples, g.vertex_count(), g.arc_count());
  std::vector<std::uint32_t> present;
  for (Vertex w = 0; w < g.vertex_count(); ++w) {
    const auto arcs = g.out(w);
    if (arcs.empty()) continue;
    const std::size_t first = g.first_arc(w);
    for (std::uint64_t i = 0; i < samples; ++i) {
      present.clear();
      for (std::uint32_t j = 0; j < arcs.size(); ++j)
        if (bernoulli(rng, arcs[j].prob)) present.push_back(j);
      if (!present.empty()) f.set(first + present[uniform_below(rng, present.size())], i);
    }
  }
  return f;
}

inline constexpr char kFilterMagic[8] = {'U', 'S', 'R', 'F', 'I', 'L', 'T', '\0'};
inline constexpr std::uint32_t kFilterVersion = 1;

/// Header: magic, u32 version, u64 N, u64 |V|, u64 |E|; then |E| runs of
/// ceil(N/64) little-endian words.
inline void save_filter_vectors(const std::filesystem::path& path, const FilterVectors& f) {
  std::string buf(kFilterMagic, sizeof kFilterMagic);
  io::put_le<std::uint32_t>(buf, kFilterVersion);
  io::put_le<std::uint64_t>(buf, f.samples());
  io::put_le<std::uint64_t>(buf, f.vertex_count());
  io::put_le<std::uint64_t>(buf, f.arc_count());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  for (std::size_t e = 0; e < f.arc_count(); ++e) {
    buf.clear();
    for (Word w : f.filter(e)) io::put_le(buf, w);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out.flush()) throw Error("write failed: " + path.string());
}

inline FilterVectors load_filter_vectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  unsigned char header[36];
  io::read_exact(in, header, sizeof header);
  if (!std::equal(header, header + 8, reinterpret_cast<const unsigned char*>(kFilterMagic)))
    throw Error(path.string() + ": not a filter-vector file");
  if (const auto version = io::get_le<std::uint32_t>(header + 8); version != kFilterVersion)
    throw Error(path.string() + ": unsupported filter-vector version " + std::to_string(version));
  const auto samples = io::get_le<std::uint64_t>(header + 12);
  const auto vertices = io::get_le<std::uint64_t>(header + 20);
  const auto arcs = io::get_le<std::uint64_t>(header + 28);
  FilterVectors f(samples, vertices, arcs);
  std::vector<unsigned char> raw(f.words_per_arc() * sizeof(Word));
  for (std::size_t e = 0; e < arcs; ++e) {
    io::read_exact(in, raw.data(), raw.size());
    auto dst = f.filter(e);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = io::get_le<Word>(raw.data() + i * sizeof(Word));
  }
  return f;
}

/// Filters for the u-side and v-side walk sets. Independent by default; a
/// shared bank drives both sides with the same filters.
struct FilterBank {
  FilterVectors u_side;
  std::optional<FilterVectors> v_side;

  const FilterVectors& for_v() const { return v_side ? *v_side : u_side; }
  std::uint64_t samples() const { return u_side.samples(); }
};

template <class URBG>
FilterBank build_filter_bank(const UncertainGraph& g, std::uint64_t samples, URBG& rng, bool shared = false) {
  FilterBank bank{build_filter_vectors(g, samples, rng), std::nullopt};
  if (!shared) bank.v_side = build_filter_vectors(g, samples, rng);
  return bank;
}

/// Counting tables of one start vertex: for each step k, the frontier U^(k)
/// as sorted vertices with their occupancy bitsets M_w[k].
class CountingTables {
 public:
  struct Slot {
    Vertex vertex;
    BitVector bits;
  };

  CountingTables(Vertex start, std::uint64_t samples) : start_(start), samples_(samples) {
    steps_.push_back({Slot{start, BitVector(samples, true)}});
  }

  Vertex start() const { return start_; }
  std::uint64_t samples() const { return samples_; }
  /// Highest step held.
  int steps() const { return static_cast<int>(steps_.size()) - 1; }
  std::span<const Slot> frontier(int k) const { return steps_.at(static_cast<std::size_t>(k)); }

  /// M_w[k], or nullptr for the all-zero vector.
  const BitVector* find(Vertex w, int k) const {
    if (k < 0 || k > steps()) return nullptr;
    const auto& f = steps_[static_cast<std::size_t>(k)];
    auto it = std::lower_bound(f.begin(), f.end(), w, [](const Slot& s, Vertex x) { return s.vertex < x; });
    return it != f.end() && it->vertex == w ? &it->bits : nullptr;
  }

  /// Number of sample walks alive at step k.
  std::uint64_t alive(int k) const {
    std::uint64_t c = 0;
    for (const auto& s : frontier(k)) c += s.bits.popcount();
    return c;
  }

  void push_step(std::vector<Slot> slots) {
    std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.vertex < b.vertex; });
    steps_.push_back(std::move(slots));
  }

 private:
  Vertex start_;
  std::uint64_t samples_;
  std::vector<std::vector<Slot>> steps_;
};

/// Runs all N sample walks from `start` for n steps:
/// M_x[k+1] |= M_w[k] & F_(w,x) for every w in U^(k) and arc (w, x).
inline CountingTables propagate(const UncertainGraph& g, Vertex start, int n, const FilterVectors& filters) {
  if (start >= g.vertex_count()) throw std::out_of_range("unknown vertex id " + std::to_string(start));
  if (!filters.matches(g)) throw std::invalid_argument("filter vectors were built for a different graph");
  if (n < 0) throw std::invalid_argument("n must be non-negative");
  CountingTables tables(start, filters.samples());
  const std::size_t words = filters.words_per_arc();
  std::unordered_map<Vertex, std::size_t> index;
  for (int k = 0; k < n; ++k) {
    std::vector<CountingTables::Slot> next;
    index.clear();
    for (const auto& slot : tables.frontier(k)) {
      const auto m = slot.bits.words();
      const auto arcs = g.out(slot.vertex);
      const std::size_t first = g.first_arc(slot.vertex);
      for (std::size_t j = 0; j < arcs.size(); ++j) {
        const auto f = filters.filter(first + j);
        std::size_t i = 0;
        while (i < words && !(m[i] & f[i])) ++i;
        if (i == words) continue;
        auto [it, fresh] = index.try_emplace(arcs[j].target, next.size());
        if (fresh) next.push_back({arcs[j].target, BitVector(filters.samples())});
        auto dst = next[it->second].bits.words();
        for (; i < words; ++i) dst[i] |= m[i] & f[i];
      }
    }
    tables.push_step(std::move(next));
  }
  return tables;
}

/// (1/N) sum over w in U^(k) ∩ V^(k) of popcount(M_w[k] & M'_w[k]).
inline double estimate_meeting_bitset(const CountingTables& tu, const CountingTables& tv, int k, std::uint64_t samples) {
  if (tu.samples() != samples || tv.samples() != samples)
    throw std::invalid_argument("counting tables were built with a different N");
  if (samples == 0) throw std::invalid_argument("N must be at least 1");
  if (k < 0 || k > tu.steps() || k > tv.steps()) throw std::out_of_range("step beyond the propagated range");
  const auto a = tu.frontier(k), b = tv.frontier(k);
  std::uint64_t hits = 0;
  for (std::size_t i = 0, j = 0; i < a.size() && j < b.size();) {
    if (a[i].vertex < b[j].vertex) {
      ++i;
    } else if (b[j].vertex < a[i].vertex) {
      ++j;
    } else {
      hits += and_popcount(a[i].bits.words(), b[j].bits.words());
      ++i;
      ++j;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(samples);
}

/// Recovers the N walks encoded in the tables. Throws if a sample index sits
/// on two vertices at one step or reappears after dying.
inline std::vector<Walk> decode_walks(const CountingTables& t) {
  const std::uint64_t n = t.samples();
  std::vector<Walk> walks(n, Walk{t.start()});
  std::vector<std::uint8_t> seen(n);
  for (int k = 1; k <= t.steps(); ++k) {
    std::fill(seen.begin(), seen.end(), 0);
    for (const auto& slot : t.frontier(k))
      for (std::uint64_t i = 0; i < n; ++i) {
        if (!slot.bits.test(i)) continue;
        if (seen[i]) throw Error("sample " + std::to_string(i) + " occupies two vertices at step " + std::to_string(k));
        if (walks[i].vertices.size() != static_cast<std::size_t>(k))
          throw Error("sample " + std::to_string(i) + " resumes after dying");
        seen[i] = 1;
        walks[i].vertices.push_back(slot.vertex);
      }
  }
  return walks;
}

/// Exact meetings for k <= l, per-walk samples for l < k <= n.
template <class URBG>
SimEstimate simrank_two_stage(const UncertainGraph& g, Vertex u, Vertex v, int n, double c, const SamplePlan& plan,
                              int l, URBG& rng, const MatrixStore* store = nullptr, const TransPrOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  check_simrank_args(g, u, v, n, c);
  if (l < 1 || l > n) throw std::invalid_argument("l must lie in [1, n]");
  SimEstimate e;
  e.method = Method::two_stage;
  e.n = n;
  e.c = c;
  e.samples = plan.samples;
  e.exact_steps = l;
  e.meetings = exact_meetings(g, u, v, l, store, opt);
  e.meetings.resize(static_cast<std::size_t>(n) + 1, 0.0);
  if (l < n) detail::sampled_meetings(g, u, v, n, l + 1, plan.samples, rng, e.meetings);
  e.value = simrank_from_meetings(e.meetings, n, c);
  if (plan.epsilon) e.bound = std::max(0.0, (std::pow(c, l + 1) - std::pow(c, n)) * *plan.epsilon);
  e.wall_time = std::chrono::steady_clock::now() - t0;
  return e;
}

/// Two-stage combination whose sampled terms come from the bitset sampler;
/// l = 0 gives the pure bitset sampler.
inline SimEstimate simrank_speedup(const UncertainGraph& g, Vertex u, Vertex v, int n, double c, const FilterBank& bank,
                                   int l, std::optional<double> epsilon = std::nullopt,
                                   const MatrixStore* store = nullptr, const TransPrOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  check_simrank_args(g, u, v, n, c);
  if (l < 0 || l > n) throw std::invalid_argument("l must lie in [0, n]");
  if (bank.for_v().samples() != bank.samples()) throw std::invalid_argument("filter banks disagree on N");
  SimEstimate e;
  e.method = Method::speedup;
  e.n = n;
  e.c = c;
  e.samples = bank.samples();
  e.exact_steps = l;
  e.meetings = exact_meetings(g, u, v, l, store, opt);
  e.meetings.resize(static_cast<std::size_t>(n) + 1, 0.0);
  if (l < n) {
    const auto tu = propagate(g, u, n, bank.u_side);
    const auto tv = propagate(g, v, n, bank.for_v());
    for (int k = l + 1; k <= n; ++k) e.meetings[k] = estimate_meeting_bitset(tu, tv, k, bank.samples());
  }
  e.value = simrank_from_meetings(e.meetings, n, c);
  if (epsilon) e.bound = std::max(0.0, (std::pow(c, l + 1) - std::pow(c, n)) * *epsilon);
  e.wall_time = std::chrono::steady_clock::now() - t0;
  return e;
}

template <class URBG>
SimEstimate simrank_speedup(const UncertainGraph& g, Vertex u, Vertex v, int n, double c, const SamplePlan& plan, int l,
                            URBG& rng, const MatrixStore* store = nullptr, const TransPrOptions& opt = {},
                            bool shared_filters = false) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto bank = build_filter_bank(g, plan.samples, rng, shared_filters);
  auto e = simrank_speedup(g, u, v, n, c, bank, l, plan.epsilon, store, opt);
  e.wall_time = std::chrono::steady_clock::now() - t0;
  return e;
}

}  // namespace usimrank
