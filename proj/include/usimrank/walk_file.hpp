#pragma once

// Walk records and their on-disk pipeline: binary walk files, sorted runs and
// a loser-tree k-way merge keyed on (start vertex, end vertex).
//
// Walk file layout (little-endian):
//   magic "USRWALK\0" | u32 version | u32 walk length (arcs)
//   records: varint length | varint v0 | length x varint zigzag(v_i - v_{i-1})
//            | f64 p | f64 alpha

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "usimrank/binary_io.hpp"
#include "usimrank/error.hpp"
#include "usimrank/graph.hpp"
#include "usimrank/random.hpp"

namespace usimrank {

/// A walk with its probability and the alpha of its last vertex.
struct WalkRecord {
  std::vector<Vertex> walk;
  double p = 0.0;
  double alpha = 0.0;

  friend bool operator==(const WalkRecord&, const WalkRecord&) = default;
};

inline void encode_record(std::string& buf, std::span<const Vertex> walk, double p, double alpha) {
  io::put_varint(buf, walk.size() - 1);
  io::put_varint(buf, walk[0]);
  for (std::size_t i = 1; i < walk.size(); ++i)
    io::put_varint(buf, io::zigzag(static_cast<std::int64_t>(walk[i]) - static_cast<std::int64_t>(walk[i - 1])));
  io::put_f64(buf, p);
  io::put_f64(buf, alpha);
}

inline std::size_t encoded_size(std::span<const Vertex> walk) {
  std::size_t n = io::varint_size(walk.size() - 1) + io::varint_size(walk[0]) + 16;
  for (std::size_t i = 1; i < walk.size(); ++i)
    n += io::varint_size(io::zigzag(static_cast<std::int64_t>(walk[i]) - static_cast<std::int64_t>(walk[i - 1])));
  return n;
}

/// Smallest possible encoding of a walk with `length` arcs.
constexpr std::uint64_t min_record_size(std::uint64_t length) { return 1 + 1 + length + 16; }

namespace detail {
inline constexpr char kWalkMagic[8] = {'U', 'S', 'R', 'W', 'A', 'L', 'K', '\0'};
inline constexpr std::uint32_t kWalkVersion = 1;
}  // namespace detail

class WalkFileWriter {
 public:
  WalkFileWriter(const std::filesystem::path& path, std::uint32_t length)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot create walk file '" + path.string() + "'");
    std::string header(detail::kWalkMagic, 8);
    io::put_le<std::uint32_t>(header, detail::kWalkVersion);
    io::put_le<std::uint32_t>(header, length);
    out_.write(header.data(), static_cast<std::streamsize>(header.size()));
    bytes_ = header.size();
  }

  void append(std::span<const Vertex> walk, double p, double alpha) {
    buf_.clear();
    encode_record(buf_, walk, p, alpha);
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    bytes_ += buf_.size();
    ++count_;
  }
  void append(const WalkRecord& r) { append(r.walk, r.p, r.alpha); }

  void close() {
    out_.close();
    if (!out_) throw Error("error writing walk file '" + path_.string() + "'");
  }

  std::uint64_t bytes() const { return bytes_; }
  std::uint64_t count() const { return count_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::string buf_;
  std::uint64_t bytes_ = 0;
  std::uint64_t count_ = 0;
};

class WalkFileReader {
 public:
  explicit WalkFileReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw Error("cannot open walk file '" + path.string() + "'");
    unsigned char header[16];
    try {
      io::read_exact(in_, header, sizeof header);
    } catch (const Error&) {
      throw Error("walk file '" + path.string() + "' is truncated");
    }
    if (!std::equal(detail::kWalkMagic, detail::kWalkMagic + 8, reinterpret_cast<const char*>(header)))
      throw Error("walk file '" + path.string() + "': bad magic");
    if (io::get_le<std::uint32_t>(header + 8) != detail::kWalkVersion)
      throw Error("walk file '" + path.string() + "': unsupported version");
    length_ = io::get_le<std::uint32_t>(header + 12);
  }

  std::uint32_t length() const { return length_; }

  /// Reads the next record into `r`; false at end of file.
  bool next(WalkRecord& r) {
    std::uint64_t len = 0;
    if (!io::read_varint(in_, len)) return false;
    std::uint64_t v = 0;
    if (!io::read_varint(in_, v)) throw Error("walk file '" + path_.string() + "': truncated record");
    r.walk.resize(len + 1);
    r.walk[0] = static_cast<Vertex>(v);
    for (std::uint64_t i = 1; i <= len; ++i) {
      if (!io::read_varint(in_, v)) throw Error("walk file '" + path_.string() + "': truncated record");
      r.walk[i] = static_cast<Vertex>(static_cast<std::int64_t>(r.walk[i - 1]) + io::unzigzag(v));
    }
    unsigned char tail[16];
    io::read_exact(in_, tail, sizeof tail);
    r.p = io::get_f64(tail);
    r.alpha = io::get_f64(tail + 8);
    return true;
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::uint32_t length_ = 0;
};

/// Tournament of losers over k sources. `beats(a, b)` must be a strict total
/// order over source indices (exhausted sources lose to everything).
template <class Beats>
class LoserTree {
 public:
  LoserTree(std::size_t k, Beats beats) : k_(k), tree_(std::max<std::size_t>(k, 1)), beats_(std::move(beats)) {
    if (k_ > 0) tree_[0] = build(1);
  }

  std::size_t winner() const { return tree_[0]; }

  /// Re-run the matches on the path of `leaf` after its head changed.
  void replay(std::size_t leaf) {
    std::size_t winner = leaf;
    for (std::size_t node = (leaf + k_) / 2; node > 0; node /= 2)
      if (beats_(tree_[node], winner)) std::swap(tree_[node], winner);
    tree_[0] = winner;
  }

 private:
  std::size_t build(std::size_t node) {
    if (node >= k_) return node - k_;
    const std::size_t left = build(2 * node), right = build(2 * node + 1);
    if (beats_(left, right)) {
      tree_[node] = right;
      return left;
    }
    tree_[node] = left;
    return right;
  }

  std::size_t k_;
  std::vector<std::size_t> tree_;
  Beats beats_;
};

/// Fixed-length walks held column-wise in memory.
class WalkBatch {
 public:
  explicit WalkBatch(std::size_t walk_vertices = 1) : stride_(walk_vertices) {}

  std::size_t size() const { return p_.size(); }
  bool empty() const { return p_.empty(); }
  std::size_t walk_vertices() const { return stride_; }

  void push(std::span<const Vertex> walk, double p, double alpha) {
    verts_.insert(verts_.end(), walk.begin(), walk.end());
    p_.push_back(p);
    alpha_.push_back(alpha);
  }

  std::span<const Vertex> walk(std::size_t i) const { return {verts_.data() + i * stride_, stride_}; }
  double p(std::size_t i) const { return p_[i]; }
  double alpha(std::size_t i) const { return alpha_[i]; }

  /// Stable sort by (start, end).
  void sort() {
    std::vector<std::size_t> order(size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const Vertex sa = verts_[a * stride_], sb = verts_[b * stride_];
      if (sa != sb) return sa < sb;
      return verts_[a * stride_ + stride_ - 1] < verts_[b * stride_ + stride_ - 1];
    });
    WalkBatch sorted(stride_);
    sorted.verts_.reserve(verts_.size());
    sorted.p_.reserve(p_.size());
    sorted.alpha_.reserve(alpha_.size());
    for (std::size_t i : order) sorted.push(walk(i), p_[i], alpha_[i]);
    *this = std::move(sorted);
  }

  void clear() {
    verts_.clear();
    p_.clear();
    alpha_.clear();
  }

 private:
  std::size_t stride_;
  std::vector<Vertex> verts_;
  std::vector<double> p_;
  std::vector<double> alpha_;
};

/// Owns a scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::filesystem::path& parent = {}) {
    const auto base = parent.empty() ? std::filesystem::temp_directory_path() : parent;
    std::random_device rd;
    for (int attempt = 0; attempt < 100; ++attempt) {
      auto candidate = base / ("usimrank-" + std::to_string(mix64((std::uint64_t{rd()} << 32) ^ rd())));
      if (std::filesystem::create_directories(candidate)) {
        path_ = candidate;
        return;
      }
    }
    throw Error("cannot create scratch directory under '" + base.string() + "'");
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Collects fixed-length walks and yields them stably sorted by (start, end).
/// Without a run directory everything stays in memory; with one, batches of
/// `chunk_bytes` encoded bytes are sorted and spilled as runs, then merged.
class WalkSorter {
 public:
  WalkSorter(std::size_t walk_vertices, std::uint64_t chunk_bytes, std::optional<std::filesystem::path> run_dir)
      : batch_(walk_vertices), chunk_bytes_(chunk_bytes), run_dir_(std::move(run_dir)) {}

  void push(std::span<const Vertex> walk, double p, double alpha) {
    batch_.push(walk, p, alpha);
    const auto sz = encoded_size(walk);
    bytes_ += sz;
    batch_bytes_ += sz;
    ++count_;
    if (run_dir_ && batch_bytes_ >= chunk_bytes_) spill();
  }

  std::uint64_t bytes() const { return bytes_; }
  std::uint64_t count() const { return count_; }
  std::size_t runs() const { return runs_.size(); }
  bool in_memory() const { return runs_.empty(); }

  /// Sorted in-memory contents; only valid when no run was spilled.
  WalkBatch take_sorted_batch() && {
    batch_.sort();
    return std::move(batch_);
  }

  /// Calls f(walk, p, alpha) in sorted order.
  template <class F>
  void drain(F&& f) {
    if (runs_.empty()) {
      batch_.sort();
      for (std::size_t i = 0; i < batch_.size(); ++i) f(batch_.walk(i), batch_.p(i), batch_.alpha(i));
      return;
    }
    if (!batch_.empty()) spill();

    std::vector<std::unique_ptr<WalkFileReader>> readers;
    std::vector<WalkRecord> heads(runs_.size());
    std::vector<bool> live(runs_.size());
    for (std::size_t i = 0; i < runs_.size(); ++i) {
      readers.push_back(std::make_unique<WalkFileReader>(runs_[i]));
      live[i] = readers[i]->next(heads[i]);
    }
    auto beats = [&](std::size_t a, std::size_t b) {
      if (!live[a]) return !live[b] && a < b;
      if (!live[b]) return true;
      const auto& x = heads[a].walk;
      const auto& y = heads[b].walk;
      if (x.front() != y.front()) return x.front() < y.front();
      if (x.back() != y.back()) return x.back() < y.back();
      return a < b;
    };
    LoserTree tree(runs_.size(), beats);
    while (live[tree.winner()]) {
      const std::size_t i = tree.winner();
      f(std::span<const Vertex>(heads[i].walk), heads[i].p, heads[i].alpha);
      live[i] = readers[i]->next(heads[i]);
      tree.replay(i);
    }
    readers.clear();
    for (const auto& r : runs_) std::filesystem::remove(r);
    runs_.clear();
  }

 private:
  void spill() {
    batch_.sort();
    auto path = *run_dir_ / ("run-" + std::to_string(run_serial_++) + ".walks");
    WalkFileWriter w(path, static_cast<std::uint32_t>(batch_.walk_vertices() - 1));
    for (std::size_t i = 0; i < batch_.size(); ++i) w.append(batch_.walk(i), batch_.p(i), batch_.alpha(i));
    w.close();
    runs_.push_back(std::move(path));
    batch_.clear();
    batch_bytes_ = 0;
  }

  WalkBatch batch_;
  std::uint64_t chunk_bytes_;
  std::optional<std::filesystem::path> run_dir_;
  std::vector<std::filesystem::path> runs_;
  std::uint64_t bytes_ = 0;
  std::uint64_t batch_bytes_ = 0;
  std::uint64_t count_ = 0;
  std::size_t run_serial_ = 0;
};

}  // namespace usimrank
