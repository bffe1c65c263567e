#pragma once

// k-step transition matrices and the column-major matrix store.
//
// Store file layout (all little-endian):
//   magic "USRWMAT\0" | u32 version | u32 k | u64 vertex_count
//   then vertex_count columns, column v = vertex_count f64 values Pr(u ->_k v).

#include <sys/mman.h>
#include <sys/stat.h>
#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "usimrank/binary_io.hpp"
#include "usimrank/error.hpp"
#include "usimrank/graph.hpp"

namespace usimrank {

/// Sparse (row-compressed) matrix of k-step transition probabilities.
class TransMatrix {
 public:
  struct Entry {
    Vertex column;
    double value;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  class Builder;

  TransMatrix() = default;

  static TransMatrix from_dense(int k, std::size_t n, std::span<const double> row_major);

  int k() const noexcept { return k_; }
  std::size_t vertex_count() const noexcept { return vertex_count_; }
  std::size_t nonzeros() const noexcept { return entries_.size(); }

  std::span<const Entry> row(Vertex u) const {
    return {entries_.data() + offsets_[u], entries_.data() + offsets_[u + 1]};
  }

  double at(Vertex u, Vertex v) const {
    auto r = row(u);
    auto it = std::lower_bound(r.begin(), r.end(), v, [](const Entry& e, Vertex c) { return e.column < c; });
    return it != r.end() && it->column == v ? it->value : 0.0;
  }

  std::vector<double> dense_row(Vertex u) const {
    std::vector<double> out(vertex_count_, 0.0);
    for (const auto& e : row(u)) out[e.column] = e.value;
    return out;
  }

  std::vector<double> column(Vertex v) const {
    std::vector<double> out(vertex_count_, 0.0);
    for (Vertex u = 0; u < vertex_count_; ++u) out[u] = at(u, v);
    return out;
  }

  std::vector<double> dense() const {
    std::vector<double> out(vertex_count_ * vertex_count_, 0.0);
    for (Vertex u = 0; u < vertex_count_; ++u)
      for (const auto& e : row(u)) out[u * vertex_count_ + e.column] = e.value;
    return out;
  }

  double row_sum(Vertex u) const {
    double s = 0.0;
    for (const auto& e : row(u)) s += e.value;
    return s;
  }

  bool operator==(const TransMatrix& o) const {
    return k_ == o.k_ && vertex_count_ == o.vertex_count_ && offsets_ == o.offsets_ && entries_ == o.entries_;
  }

 private:
  int k_ = 0;
  std::size_t vertex_count_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<Entry> entries_;
};

/// Accepts entries in strictly increasing (row, column) order.
class TransMatrix::Builder {
 public:
  Builder(int k, std::size_t vertex_count) {
    m_.k_ = k;
    m_.vertex_count_ = vertex_count;
    m_.offsets_.assign(vertex_count + 1, 0);
  }
  void add(Vertex u, Vertex v, double value) {
    if (u >= m_.vertex_count_ || v >= m_.vertex_count_) throw std::out_of_range("matrix entry out of range");
    if (started_ && (u < last_row_ || (u == last_row_ && v <= last_col_)))
      throw std::invalid_argument("matrix entries must be added in increasing (row, column) order");
    while (row_ < u) m_.offsets_[++row_] = m_.entries_.size();
    started_ = true;
    last_row_ = u;
    last_col_ = v;
    if (value != 0.0) m_.entries_.push_back({v, value});
  }
  TransMatrix finish() && {
    while (row_ < m_.vertex_count_) m_.offsets_[++row_] = m_.entries_.size();
    return std::move(m_);
  }

 private:
  TransMatrix m_;
  std::size_t row_ = 0;
  bool started_ = false;
  Vertex last_row_ = 0, last_col_ = 0;
};

inline TransMatrix TransMatrix::from_dense(int k, std::size_t n, std::span<const double> row_major) {
  if (row_major.size() != n * n) throw std::invalid_argument("dense matrix size mismatch");
  Builder b(k, n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      if (row_major[u * n + v] != 0.0) b.add(static_cast<Vertex>(u), static_cast<Vertex>(v), row_major[u * n + v]);
  return std::move(b).finish();
}

/// Dot product of two rows (or columns) held densely.
inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("vector length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Sparse dot of two sorted rows.
inline double dot(std::span<const TransMatrix::Entry> a, std::span<const TransMatrix::Entry> b) {
  double s = 0.0;
  auto i = a.begin(), j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (i->column < j->column) {
      ++i;
    } else if (j->column < i->column) {
      ++j;
    } else {
      s += i->value * j->value;
      ++i;
      ++j;
    }
  }
  return s;
}

namespace detail {

inline constexpr char kMatrixMagic[8] = {'U', 'S', 'R', 'W', 'M', 'A', 'T', '\0'};
inline constexpr std::uint32_t kMatrixVersion = 1;
inline constexpr std::size_t kMatrixHeader = 24;

/// Read-only memory map of a matrix file.
class MappedMatrix {
 public:
  explicit MappedMatrix(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_RDONLY);
    if (fd_ < 0) throw Error("cannot open matrix file '" + path.string() + "'");
    struct stat st {};
    if (::fstat(fd_, &st) != 0) {
      ::close(fd_);
      throw Error("cannot stat matrix file '" + path.string() + "'");
    }
    size_ = static_cast<std::size_t>(st.st_size);
    if (size_ < kMatrixHeader) {
      ::close(fd_);
      throw Error("matrix file '" + path.string() + "' is truncated");
    }
    void* p = ::mmap(nullptr, size_, PROT_READ, MAP_PRIVATE, fd_, 0);
    if (p == MAP_FAILED) {
      ::close(fd_);
      throw Error("cannot map matrix file '" + path.string() + "'");
    }
    data_ = static_cast<const unsigned char*>(p);
    if (!std::equal(kMatrixMagic, kMatrixMagic + 8, reinterpret_cast<const char*>(data_)))
      fail(path, "bad magic");
    if (io::get_le<std::uint32_t>(data_ + 8) != kMatrixVersion) fail(path, "unsupported version");
    k_ = static_cast<int>(io::get_le<std::uint32_t>(data_ + 12));
    n_ = io::get_le<std::uint64_t>(data_ + 16);
    if (size_ != kMatrixHeader + n_ * n_ * 8) fail(path, "size does not match header");
  }
  MappedMatrix(const MappedMatrix&) = delete;
  MappedMatrix& operator=(const MappedMatrix&) = delete;
  ~MappedMatrix() {
    if (data_) ::munmap(const_cast<unsigned char*>(data_), size_);
    if (fd_ >= 0) ::close(fd_);
  }

  int k() const { return k_; }
  std::size_t vertex_count() const { return n_; }

  // Contiguous block: column v.
  std::vector<double> column(Vertex v) const {
    std::vector<double> out(n_);
    const unsigned char* base = data_ + kMatrixHeader + static_cast<std::size_t>(v) * n_ * 8;
    for (std::size_t u = 0; u < n_; ++u) out[u] = io::get_f64(base + u * 8);
    return out;
  }

  // Strided: element u of every column.
  std::vector<double> row(Vertex u) const {
    std::vector<double> out(n_);
    const unsigned char* base = data_ + kMatrixHeader + static_cast<std::size_t>(u) * 8;
    for (std::size_t v = 0; v < n_; ++v) out[v] = io::get_f64(base + v * n_ * 8);
    return out;
  }

 private:
  [[noreturn]] void fail(const std::filesystem::path& path, const std::string& why) {
    ::munmap(const_cast<unsigned char*>(data_), size_);
    ::close(fd_);
    data_ = nullptr;
    fd_ = -1;
    throw Error("matrix file '" + path.string() + "': " + why);
  }

  int fd_ = -1;
  const unsigned char* data_ = nullptr;
  std::size_t size_ = 0;
  int k_ = 0;
  std::size_t n_ = 0;
};

}  // namespace detail

/// Writes `m` in the column-major store format.
inline void write_matrix_file(const std::filesystem::path& path, const TransMatrix& m) {
  const std::size_t n = m.vertex_count();
  // Column-compressed copy so each column is emitted with one pass.
  std::vector<std::size_t> col_offsets(n + 1, 0);
  for (Vertex u = 0; u < n; ++u)
    for (const auto& e : m.row(u)) ++col_offsets[e.column + 1];
  for (std::size_t v = 0; v < n; ++v) col_offsets[v + 1] += col_offsets[v];
  std::vector<std::pair<Vertex, double>> by_column(m.nonzeros());
  {
    std::vector<std::size_t> fill(col_offsets.begin(), col_offsets.end() - 1);
    for (Vertex u = 0; u < n; ++u)
      for (const auto& e : m.row(u)) by_column[fill[e.column]++] = {u, e.value};
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write matrix file '" + path.string() + "'");
  std::string buf(detail::kMatrixMagic, 8);
  io::put_le<std::uint32_t>(buf, detail::kMatrixVersion);
  io::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(m.k()));
  io::put_le<std::uint64_t>(buf, n);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));

  std::vector<double> column(n);
  for (std::size_t v = 0; v < n; ++v) {
    std::fill(column.begin(), column.end(), 0.0);
    for (std::size_t i = col_offsets[v]; i < col_offsets[v + 1]; ++i) column[by_column[i].first] = by_column[i].second;
    buf.clear();
    for (double x : column) io::put_f64(buf, x);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw Error("error writing matrix file '" + path.string() + "'");
}

/// Holds W^(1..K), either in memory or as one column-major file per k in a
/// directory. Concurrent readers are safe once materialization is done.
class MatrixStore {
 public:
  /// In-memory store.
  MatrixStore() = default;

  /// Directory-backed store; existing W<k>.mat files are picked up.
  explicit MatrixStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(*dir_);
  }

  static std::filesystem::path file_name(int k) { return "W" + std::to_string(k) + ".mat"; }

  bool on_disk() const { return dir_.has_value(); }
  const std::optional<std::filesystem::path>& directory() const { return dir_; }

  void put(TransMatrix m) {
    const int k = m.k();
    if (dir_) {
      std::lock_guard lock(*mutex_);
      mapped_.erase(k);
      write_matrix_file(*dir_ / file_name(k), m);
    } else {
      memory_.insert_or_assign(k, std::move(m));
    }
  }

  bool has(int k) const {
    if (dir_) return std::filesystem::exists(*dir_ / file_name(k));
    return memory_.count(k) > 0;
  }

  /// Largest K such that W^(1..K) are all present.
  int max_k() const {
    int k = 0;
    while (has(k + 1)) ++k;
    return k;
  }

  std::size_t vertex_count(int k) const {
    if (dir_) return mapped(k).vertex_count();
    return in_memory(k).vertex_count();
  }

  /// Column v of W^(k): Pr(u ->_k v) for every source u.
  std::vector<double> column(int k, Vertex v) const {
    check_vertex(k, v);
    if (dir_) return mapped(k).column(v);
    return in_memory(k).column(v);
  }

  /// Row u of W^(k): Pr(u ->_k w) for every target w.
  std::vector<double> row(int k, Vertex u) const {
    check_vertex(k, u);
    if (dir_) return mapped(k).row(u);
    return in_memory(k).dense_row(u);
  }

  /// m^(k)(u,v) = sum_w W^(k)(u,w) W^(k)(v,w).
  double meeting(int k, Vertex u, Vertex v) const {
    check_vertex(k, u);
    check_vertex(k, v);
    if (!dir_) {
      const auto& m = in_memory(k);
      return dot(m.row(u), m.row(v));
    }
    const auto& m = mapped(k);
    return dot(m.row(u), m.row(v));
  }

  /// Full matrix, reassembled from columns when on disk.
  TransMatrix matrix(int k) const {
    if (!dir_) return in_memory(k);
    const auto& m = mapped(k);
    const std::size_t n = m.vertex_count();
    std::vector<double> dense(n * n);
    for (Vertex v = 0; v < n; ++v) {
      auto col = m.column(v);
      for (std::size_t u = 0; u < n; ++u) dense[u * n + v] = col[u];
    }
    return TransMatrix::from_dense(m.k(), n, dense);
  }

 private:
  void check_vertex(int k, Vertex v) const {
    if (v >= vertex_count(k)) throw std::out_of_range("vertex " + std::to_string(v) + " out of range");
  }

  const TransMatrix& in_memory(int k) const {
    auto it = memory_.find(k);
    if (it == memory_.end()) throw Error("W^(" + std::to_string(k) + ") is not materialized");
    return it->second;
  }

  const detail::MappedMatrix& mapped(int k) const {
    std::lock_guard lock(*mutex_);
    auto it = mapped_.find(k);
    if (it != mapped_.end()) return *it->second;
    const auto path = *dir_ / file_name(k);
    if (!std::filesystem::exists(path)) throw Error("W^(" + std::to_string(k) + ") is not materialized");
    auto m = std::make_shared<detail::MappedMatrix>(path);
    if (m->k() != k) throw Error("matrix file '" + path.string() + "' holds k=" + std::to_string(m->k()));
    return *mapped_.emplace(k, std::move(m)).first->second;
  }

  std::optional<std::filesystem::path> dir_;
  std::map<int, TransMatrix> memory_;
  mutable std::map<int, std::shared_ptr<detail::MappedMatrix>> mapped_;
  std::shared_ptr<std::mutex> mutex_ = std::make_shared<std::mutex>();
};

/// Column v of W^(k).
inline std::vector<double> read_column(const MatrixStore& store, int k, Vertex v) { return store.column(k, v); }

}  // namespace usimrank
