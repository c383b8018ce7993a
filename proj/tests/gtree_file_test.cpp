#include <gtest/gtest.h>

#include <cstring>
#include <thread>

#include "gmine/gtree_file.hpp"
#include "support/testing.hpp"

namespace gmine {
namespace {

GTreeBuild build(const Graph& g, std::uint32_t fanout, std::uint32_t levels, std::uint64_t seed = 0) {
  GTreeBuildOptions opts;
  opts.fanout = fanout;
  opts.levels = levels;
  opts.seed = seed;
  return build_gtree(g, opts);
}

std::vector<std::uint8_t> bytes_of(const GTreeBuild& b) { return serialize_gtree(b.tree, b.leaves); }

std::shared_ptr<CountingSource> counting(std::vector<std::uint8_t> bytes) {
  return std::make_shared<CountingSource>(std::make_shared<MemorySource>(std::move(bytes)));
}

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::io;
}

std::uint64_t read_u64(const std::vector<std::uint8_t>& b, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[at + i];
  return v;
}

TEST(GTreeFile, HeaderOfSixteenNodeExample) {
  const auto bytes = bytes_of(build(gen::fixture16(), 2, 3));
  ASSERT_GE(bytes.size(), gtree_header_size);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "GTRE");
  EXPECT_EQ(read_u64(bytes, 8), 16u);   // global_n
  EXPECT_EQ(read_u64(bytes, 16), 27u);  // global_e
  EXPECT_EQ(std::string(bytes.end() - 4, bytes.end()), "ERTG");
}

TEST(GTreeFile, OpenReadsNoLeafBytes) {
  const auto b = build(gen::fixture16(), 2, 3);
  auto src = counting(bytes_of(b));
  const auto handle = open_gtree(src);
  EXPECT_EQ(handle.tree().nodes.size(), 7u);
  EXPECT_EQ(src->bytes_read(), handle.layout().resident_bytes());
  EXPECT_EQ(handle.tree(), b.tree);
  EXPECT_EQ(handle.cached_leaves(), 0u);
}

TEST(GTreeFile, LoadLeafReadsOneBlockAndCaches) {
  const auto b = build(gen::fixture16(), 2, 3);
  auto src = counting(bytes_of(b));
  const auto handle = open_gtree(src);
  const std::uint64_t after_open = src->bytes_read();
  const TreeNodeId leaf = handle.tree().leaves().front();
  const auto first = handle.load_leaf(leaf);
  EXPECT_EQ(src->bytes_read() - after_open, handle.leaf_block(leaf).length);
  EXPECT_EQ(*first, b.leaves.at(leaf));
  EXPECT_EQ(first->graph.node_count(), 4u);
  EXPECT_EQ(first->graph.edge_count(), 6u);
  const std::uint64_t after_first = src->bytes_read();
  const auto second = handle.load_leaf(leaf);
  EXPECT_EQ(first.get(), second.get());
  EXPECT_EQ(src->bytes_read(), after_first);
  EXPECT_EQ(handle.cache_hits(), 1u);
  EXPECT_EQ(handle.cache_misses(), 1u);
}

TEST(GTreeFile, LoadLeafOfInternalNodeIsContractError) {
  const auto handle = open_gtree(counting(bytes_of(build(gen::fixture16(), 2, 3))));
  EXPECT_EQ(code_of([&] { handle.load_leaf(0); }), ErrorCode::contract);
  EXPECT_EQ(code_of([&] { handle.load_leaf(99); }), ErrorCode::not_found);
}

TEST(GTreeFile, CacheIsBounded) {
  const auto b = build(gen::planted_partition(400, 1600, 8, 0.9, 1), 2, 4);
  OpenOptions opts;
  opts.cache_capacity = 2;
  auto src = counting(bytes_of(b));
  const auto handle = open_gtree(src, opts);
  const auto leaves = handle.tree().leaves();
  for (TreeNodeId leaf : leaves) handle.load_leaf(leaf);
  EXPECT_EQ(handle.cached_leaves(), 2u);
  const std::uint64_t before = src->bytes_read();
  handle.load_leaf(leaves.back());  // most recent, still cached
  EXPECT_EQ(src->bytes_read(), before);
  handle.load_leaf(leaves.front());  // evicted long ago
  EXPECT_GT(src->bytes_read(), before);
}

TEST(GTreeFile, LocalityBound) {
  Graph g = gen::planted_partition(3000, 12000, 27, 0.85, 2);
  std::vector<std::string> labels(g.node_count());
  for (NodeId u = 0; u < g.node_count(); ++u) labels[u] = "n" + std::to_string(u);
  g = g.with_labels(labels);
  const auto b = build(g, 3, 4, 5);
  const auto bytes = bytes_of(b);
  for (TreeNodeId leaf : b.tree.leaves()) {
    auto src = counting(bytes);
    const auto handle = open_gtree(src);
    handle.load_leaf(leaf);
    EXPECT_LE(src->bytes_read(), handle.layout().resident_bytes() + handle.leaf_block(leaf).length);
  }
}

TEST(GTreeFile, RoundTripIsByteIdentical) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Graph g = gen::planted_partition(500, 2000, 9, 0.8, seed);
    if (seed % 2) {
      std::vector<std::string> labels(g.node_count());
      for (NodeId u = 0; u < g.node_count(); u += 2) labels[u] = "λ-" + std::to_string(u);
      g = g.with_labels(labels);
    }
    const auto b = build(g, 3, 3, seed);
    const auto bytes = bytes_of(b);
    const auto handle = open_gtree(std::make_shared<MemorySource>(bytes));
    EXPECT_EQ(handle.tree(), b.tree);
    const auto leaves = load_all_leaves(handle);
    EXPECT_EQ(leaves, b.leaves);
    EXPECT_EQ(serialize_gtree(handle.tree(), leaves), bytes);
  }
}

TEST(GTreeFile, UnlabelledGraphHasEmptyLabelSection) {
  const auto handle = open_gtree(counting(bytes_of(build(gen::barbell(), 2, 2))));
  EXPECT_EQ(handle.layout().labels_length, 0u);
}

TEST(GTreeFile, FileRoundTrip) {
  testing::TempDir dir;
  const auto b = build(gen::fixture16(), 2, 3);
  write_gtree_file(dir.file("t.gtree"), b);
  const auto handle = open_gtree_file(dir.file("t.gtree"));
  EXPECT_EQ(handle.tree(), b.tree);
  EXPECT_EQ(load_all_leaves(handle), b.leaves);
  EXPECT_EQ(code_of([&] { open_gtree_file(dir.file("missing")); }), ErrorCode::io);
}

TEST(GTreeFile, TruncationNamesTheSection) {
  const auto b = build(gen::fixture16(), 2, 3);
  const auto bytes = bytes_of(b);
  const auto layout = open_gtree(std::make_shared<MemorySource>(bytes)).layout();
  const std::pair<std::uint64_t, const char*> cuts[] = {
      {10, "header"},
      {layout.tree_offset + 5, "tree"},
      {layout.connectivity_offset + 3, "connectivity"},
      {layout.labels_offset + 7, "label index"},
      {layout.leaves_offset + 11, "leaf blocks"},
      {bytes.size() - 3, "trailer"},
  };
  for (const auto& [len, section] : cuts) {
    std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<long>(len));
    try {
      open_gtree(std::make_shared<MemorySource>(cut));
      ADD_FAILURE() << "truncation at " << len << " accepted";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::format);
      EXPECT_NE(std::string(e.what()).find(section), std::string::npos) << e.what();
      EXPECT_TRUE(e.offset().has_value());
    }
  }
}

TEST(GTreeFile, BadMagicAndVersion) {
  auto bytes = bytes_of(build(gen::fixture16(), 2, 3));
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_EQ(code_of([&] { open_gtree(std::make_shared<MemorySource>(magic)); }), ErrorCode::format);
  auto version = bytes;
  version[4] = 9;
  EXPECT_EQ(code_of([&] { open_gtree(std::make_shared<MemorySource>(version)); }),
            ErrorCode::format);
}

TEST(GTreeFile, CorruptionIsDetected) {
  const auto b = build(gen::fixture16(), 2, 3);
  const auto bytes = bytes_of(b);
  const auto layout = open_gtree(std::make_shared<MemorySource>(bytes)).layout();
  // Flip one bit in each resident section: rejected at open.
  for (std::uint64_t at : {std::uint64_t{20}, layout.tree_offset + 13, layout.connectivity_offset + 9,
                           layout.labels_offset + 6}) {
    auto bad = bytes;
    bad[at] ^= 0x10;
    EXPECT_EQ(code_of([&] { open_gtree(std::make_shared<MemorySource>(bad)); }),
              ErrorCode::integrity)
        << "offset " << at;
  }
  // A damaged leaf block opens fine and fails when loaded.
  auto bad = bytes;
  bad[layout.leaves_offset + 2] ^= 0x01;
  const auto handle = open_gtree(std::make_shared<MemorySource>(bad));
  bool caught = false;
  for (TreeNodeId leaf : handle.tree().leaves()) {
    try {
      handle.load_leaf(leaf);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::integrity);
      caught = true;
    }
  }
  EXPECT_TRUE(caught);
}

TEST(GTreeFile, ConcurrentLoads) {
  const auto b = build(gen::planted_partition(2000, 8000, 16, 0.9, 4), 2, 5);
  testing::TempDir dir;
  write_gtree_file(dir.file("c.gtree"), b);
  OpenOptions opts;
  opts.cache_capacity = 3;
  const auto handle = open_gtree_file(dir.file("c.gtree"), opts);
  const auto leaves = handle.tree().leaves();
  std::vector<std::thread> threads;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 200; ++i) {
        const TreeNodeId leaf = leaves[(i * 7 + t) % leaves.size()];
        if (*handle.load_leaf(leaf) != b.leaves.at(leaf)) ++mismatches;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(mismatches.load(), 0);
  EXPECT_LE(handle.cached_leaves(), 3u);
}

TEST(GTreeFile, LabelLookupThroughHandle) {
  const auto handle = open_gtree(counting(bytes_of(build(gen::fixture16(), 2, 3))));
  const auto hits = handle.label_lookup("v9");
  ASSERT_EQ(hits.size(), 1u);
  const auto leaf = handle.load_leaf(hits[0].leaf);
  EXPECT_EQ(leaf->global_ids[hits[0].local_index], 9u);
  EXPECT_EQ(leaf->graph.label(hits[0].local_index), "v9");
  EXPECT_TRUE(handle.label_lookup("nobody").empty());
  EXPECT_TRUE(handle.label_lookup("").empty());
}

}  // namespace
}  // namespace gmine
