#pragma once

// Materialization of W^(1..K) by incremental walk enumeration.
//
// Every length-k walk is kept as a record (walk, p, alpha-of-last-vertex).
// Step k+1 extends each record by every out-neighbor of its last vertex,
// sorts the new records by (start, end) and sums each group into
// W^(k+1)(start, end).

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "usimrank/error.hpp"
#include "usimrank/graph.hpp"
#include "usimrank/trans_matrix.hpp"
#include "usimrank/walk_file.hpp"
#include "usimrank/walk_prob.hpp"

namespace usimrank {

struct TransPrOptions {
  /// Hard cap on K.
  int k_max = 6;
  /// Abort when the records of one step would exceed this many encoded bytes.
  std::uint64_t budget_bytes = std::uint64_t{1} << 30;
  /// Steps whose projected volume fits here run entirely in memory.
  std::uint64_t memory_bytes = std::uint64_t{64} << 20;
  /// Size of a sorted run spilled to disk.
  std::uint64_t chunk_bytes = std::uint64_t{256} << 20;
  /// Parent for scratch directories; system temp dir when empty.
  std::filesystem::path work_dir;
  /// Only enumerate walks from these start vertices (all when unset); other
  /// rows of the produced matrices are zero.
  std::optional<std::vector<Vertex>> sources;
  /// Skip the girth guard when |V| * |E| exceeds this (BFS from every vertex).
  std::uint64_t girth_work_limit = 50'000'000;
};

struct StepStats {
  int k = 0;
  std::uint64_t walks = 0;
  std::uint64_t bytes = 0;
  std::size_t runs = 0;
  bool in_memory = true;
  double seconds = 0.0;
};

struct TransPrReport {
  std::vector<StepStats> steps;
  std::optional<std::size_t> girth;
  bool girth_known = false;
};

/// Pairwise (tree) summation.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

/// W^(1): Pr(u ->_1 v) = alpha(g, u, {v}, 1) on every arc.
inline TransMatrix one_step_matrix(const UncertainGraph& g) {
  TransMatrix::Builder b(1, g.vertex_count());
  for (Vertex u = 0; u < g.vertex_count(); ++u) {
    const auto probs = one_step_probabilities(g, u);
    const auto arcs = g.out(u);
    for (std::size_t i = 0; i < arcs.size(); ++i) b.add(u, arcs[i].target, probs[i]);
  }
  return std::move(b).finish();
}

/// Row u of W^(1), sparse and sorted by target.
inline std::vector<TransMatrix::Entry> one_step_row(const UncertainGraph& g, Vertex u) {
  std::vector<TransMatrix::Entry> row;
  const auto probs = one_step_probabilities(g, u);
  const auto arcs = g.out(u);
  row.reserve(arcs.size());
  for (std::size_t i = 0; i < arcs.size(); ++i) row.push_back({arcs[i].target, probs[i]});
  return row;
}

namespace detail {

// Sorted records of one step, in memory or in a walk file.
class WalkSource {
 public:
  explicit WalkSource(WalkBatch batch) : data_(std::move(batch)) {}
  explicit WalkSource(std::filesystem::path file) : data_(std::move(file)) {}

  template <class F>
  void for_each(F&& f) const {
    if (const auto* batch = std::get_if<WalkBatch>(&data_)) {
      for (std::size_t i = 0; i < batch->size(); ++i) f(batch->walk(i), batch->p(i), batch->alpha(i));
      return;
    }
    WalkFileReader reader(std::get<std::filesystem::path>(data_));
    WalkRecord r;
    while (reader.next(r)) f(std::span<const Vertex>(r.walk), r.p, r.alpha);
  }

 private:
  std::variant<WalkBatch, std::filesystem::path> data_;
};

inline std::string human_bytes(std::uint64_t b) { return std::to_string(b) + " bytes"; }

}  // namespace detail

/// Materializes W^(1..K) into `store`.
inline TransPrReport trans_pr(const UncertainGraph& g, int K, MatrixStore& store, const TransPrOptions& opt = {}) {
  using clock = std::chrono::steady_clock;
  if (K < 1) throw std::invalid_argument("K must be at least 1");
  if (K > opt.k_max)
    throw BudgetExceeded(K, "k=" + std::to_string(K) + " exceeds the cap K_max=" + std::to_string(opt.k_max));

  std::vector<Vertex> sources;
  if (opt.sources) {
    sources = *opt.sources;
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
    for (Vertex s : sources)
      if (s >= g.vertex_count()) throw std::out_of_range("source vertex " + std::to_string(s) + " out of range");
  } else {
    sources.resize(g.vertex_count());
    for (Vertex v = 0; v < g.vertex_count(); ++v) sources[v] = v;
  }

  TransPrReport report;
  const std::uint64_t work = static_cast<std::uint64_t>(g.vertex_count()) * std::max<std::size_t>(g.arc_count(), 1);
  if (K >= 2 && work <= opt.girth_work_limit) {
    report.girth = girth(g);
    report.girth_known = true;
  }
  const WalkExtender extender(g, report.girth, report.girth_known);

  // Step 1: one record per arc.
  auto t0 = clock::now();
  WalkBatch batch(2);
  std::uint64_t next_count = 0, bytes = 0;
  {
    TransMatrix::Builder b(1, g.vertex_count());
    for (Vertex u : sources) {
      const auto arcs = g.out(u);
      for (std::size_t i = 0; i < arcs.size(); ++i) {
        const Vertex w = arcs[i].target;
        const Vertex walk[] = {u, w};
        const double p = extender.one_step(u, g.first_arc(u) + i);
        batch.push(walk, p, alpha(g, walk, w));
        b.add(u, w, p);
        next_count += g.out_degree(w);
        bytes += encoded_size(walk);
      }
    }
    store.put(std::move(b).finish());
  }
  report.steps.push_back({1, batch.size(), bytes, 0, true, std::chrono::duration<double>(clock::now() - t0).count()});

  std::optional<TempDir> scratch;
  detail::WalkSource source(std::move(batch));
  std::optional<std::filesystem::path> source_file;

  for (int k = 1; k < K; ++k) {
    t0 = clock::now();
    const int next_k = k + 1;
    const std::uint64_t projected = next_count * min_record_size(static_cast<std::uint64_t>(next_k));
    if (projected > opt.budget_bytes)
      throw BudgetExceeded(next_k, "k=" + std::to_string(next_k) + ": " + std::to_string(next_count) +
                                       " walks need at least " + detail::human_bytes(projected) +
                                       ", over the budget of " + detail::human_bytes(opt.budget_bytes));

    const bool in_memory = projected <= opt.memory_bytes;
    std::optional<std::filesystem::path> run_dir;
    if (!in_memory) {
      if (!scratch) scratch.emplace(opt.work_dir);
      run_dir = scratch->path() / ("step-" + std::to_string(next_k));
      std::filesystem::create_directories(*run_dir);
    }
    WalkSorter sorter(static_cast<std::size_t>(next_k) + 1, opt.chunk_bytes, run_dir);

    std::vector<Vertex> extended;
    source.for_each([&](std::span<const Vertex> walk, double p, double alpha_last) {
      const Vertex last = walk.back();
      for (const auto& a : g.out(last)) {
        const auto e = extender.extend(walk, p, alpha_last, a.target);
        extended.assign(walk.begin(), walk.end());
        extended.push_back(a.target);
        sorter.push(extended, e.p, e.alpha);
        if (sorter.bytes() > opt.budget_bytes)
          throw BudgetExceeded(next_k, "k=" + std::to_string(next_k) + ": walk volume exceeded the budget of " +
                                           detail::human_bytes(opt.budget_bytes));
      }
    });

    StepStats stats{next_k, sorter.count(), sorter.bytes(), sorter.runs(), sorter.in_memory(), 0.0};

    // Group by (start, end); keep the sorted records when another step follows.
    TransMatrix::Builder b(next_k, g.vertex_count());
    std::vector<double> group;
    Vertex gu = 0, gv = 0;
    bool open = false;
    auto flush = [&] {
      if (open) b.add(gu, gv, pairwise_sum(group));
      group.clear();
    };
    next_count = 0;
    const bool keep = next_k < K;
    std::optional<WalkFileWriter> writer;
    std::optional<std::filesystem::path> next_file;
    WalkBatch next_batch(static_cast<std::size_t>(next_k) + 1);

    auto consume = [&](std::span<const Vertex> walk, double p, double alpha_w) {
      if (!open || walk.front() != gu || walk.back() != gv) {
        flush();
        gu = walk.front();
        gv = walk.back();
        open = true;
      }
      group.push_back(p);
      if (!keep) return;
      next_count += g.out_degree(walk.back());
      if (writer) {
        writer->append(walk, p, alpha_w);
      } else {
        next_batch.push(walk, p, alpha_w);
      }
    };

    if (!sorter.in_memory() && keep) {
      next_file = scratch->path() / ("walks-" + std::to_string(next_k) + ".walks");
      writer.emplace(*next_file, static_cast<std::uint32_t>(next_k));
    }
    sorter.drain(consume);
    if (run_dir) std::filesystem::remove_all(*run_dir);
    flush();
    store.put(std::move(b).finish());

    if (source_file) std::filesystem::remove(*source_file);
    source_file.reset();
    if (keep) {
      if (writer) {
        writer->close();
        source = detail::WalkSource(*next_file);
        source_file = next_file;
      } else {
        source = detail::WalkSource(std::move(next_batch));
      }
    }
    stats.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    report.steps.push_back(stats);
  }
  return report;
}

/// In-memory convenience: W^(1..K) as a vector (index 0 holds W^(1)).
inline std::vector<TransMatrix> transition_matrices(const UncertainGraph& g, int K, const TransPrOptions& opt = {}) {
  MatrixStore store;
  trans_pr(g, K, store, opt);
  std::vector<TransMatrix> out;
  for (int k = 1; k <= K; ++k) out.push_back(store.matrix(k));
  return out;
}

}  // namespace usimrank
