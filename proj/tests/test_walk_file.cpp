#include <gtest/gtest.h>

#include <algorithm>
#include <tuple>

#include "usimrank/random.hpp"
#include "usimrank/walk_file.hpp"

using namespace usimrank;

namespace {

struct Rec {
  std::vector<Vertex> walk;
  double p, alpha;
  friend bool operator==(const Rec&, const Rec&) = default;
};

std::vector<Rec> random_records(Rng& rng, std::size_t count, std::size_t len, Vertex range) {
  std::vector<Rec> out;
  for (std::size_t i = 0; i < count; ++i) {
    Rec r{{}, uniform_open0(rng), uniform_open0(rng)};
    for (std::size_t j = 0; j <= len; ++j) r.walk.push_back(static_cast<Vertex>(uniform_below(rng, range)));
    out.push_back(r);
  }
  return out;
}

std::vector<Rec> stable_sorted(std::vector<Rec> v) {
  std::stable_sort(v.begin(), v.end(), [](const Rec& x, const Rec& y) {
    return std::tie(x.walk.front(), x.walk.back()) < std::tie(y.walk.front(), y.walk.back());
  });
  return v;
}

}  // namespace

TEST(WalkFile, RecordRoundTrip) {
  Rng rng(1);
  TempDir dir;
  const auto path = dir.path() / "w.walks";
  const auto recs = random_records(rng, 500, 4, 4'000'000'000u);
  {
    WalkFileWriter w(path, 4);
    for (const auto& r : recs) w.append(r.walk, r.p, r.alpha);
    w.close();
    EXPECT_EQ(w.count(), recs.size());
  }
  WalkFileReader reader(path);
  EXPECT_EQ(reader.length(), 4u);
  WalkRecord r;
  std::size_t i = 0;
  while (reader.next(r)) {
    ASSERT_LT(i, recs.size());
    EXPECT_EQ(r.walk, recs[i].walk);
    EXPECT_EQ(r.p, recs[i].p);
    EXPECT_EQ(r.alpha, recs[i].alpha);
    ++i;
  }
  EXPECT_EQ(i, recs.size());
}

TEST(WalkFile, EncodedSizeBounds) {
  const Vertex small[] = {1, 2, 3};
  std::string buf;
  encode_record(buf, small, 0.5, 0.25);
  EXPECT_EQ(buf.size(), encoded_size(small));
  EXPECT_EQ(encoded_size(small), min_record_size(2));
  const Vertex wide[] = {0, 4'000'000'000u};
  EXPECT_GT(encoded_size(wide), min_record_size(1));
}

TEST(WalkFile, RejectsForeignFile) {
  TempDir dir;
  const auto path = dir.path() / "junk";
  std::ofstream(path) << "not a walk file at all";
  EXPECT_THROW(WalkFileReader{path}, Error);
}

TEST(LoserTree, MergesLikeSort) {
  Rng rng(2);
  for (std::size_t k : {1u, 2u, 3u, 5u, 8u, 13u}) {
    std::vector<std::vector<int>> runs(k);
    std::vector<int> all;
    for (auto& r : runs) {
      const auto n = uniform_below(rng, 20);
      for (std::uint64_t i = 0; i < n; ++i) r.push_back(static_cast<int>(uniform_below(rng, 50)));
      std::sort(r.begin(), r.end());
      all.insert(all.end(), r.begin(), r.end());
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> pos(k, 0);
    auto beats = [&](std::size_t x, std::size_t y) {
      const bool lx = pos[x] < runs[x].size(), ly = pos[y] < runs[y].size();
      if (!lx) return !ly && x < y;
      if (!ly) return true;
      if (runs[x][pos[x]] != runs[y][pos[y]]) return runs[x][pos[x]] < runs[y][pos[y]];
      return x < y;
    };
    LoserTree tree(k, beats);
    std::vector<int> merged;
    while (pos[tree.winner()] < runs[tree.winner()].size()) {
      const auto w = tree.winner();
      merged.push_back(runs[w][pos[w]++]);
      tree.replay(w);
    }
    EXPECT_EQ(merged, all) << "k=" << k;
  }
}

TEST(WalkSorter, InMemoryAndSpilledAgree) {
  Rng rng(3);
  const auto recs = random_records(rng, 3000, 3, 40);
  const auto want = stable_sorted(recs);
  TempDir dir;
  for (std::uint64_t chunk : {std::uint64_t{1} << 40, std::uint64_t{1000}, std::uint64_t{1}}) {
    const bool spill = chunk < (std::uint64_t{1} << 40);
    WalkSorter sorter(4, chunk, spill ? std::optional(dir.path()) : std::nullopt);
    for (const auto& r : recs) sorter.push(r.walk, r.p, r.alpha);
    EXPECT_EQ(sorter.in_memory(), !spill);
    std::vector<Rec> got;
    sorter.drain([&](std::span<const Vertex> w, double p, double al) {
      got.push_back({{w.begin(), w.end()}, p, al});
    });
    EXPECT_EQ(got, want) << "chunk=" << chunk;
  }
  EXPECT_TRUE(std::filesystem::is_empty(dir.path()));
}
