#include <gtest/gtest.h>

#include <set>

#include "gmine/navigator.hpp"
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

GTreeHandle open(const GTreeBuild& b, std::shared_ptr<CountingSource>* counter = nullptr) {
  auto src = std::make_shared<CountingSource>(
      std::make_shared<MemorySource>(serialize_gtree(b.tree, b.leaves)));
  if (counter) *counter = src;
  return open_gtree(src);
}

std::uint64_t crossing(const Graph& g, const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
  std::vector<char> in_a(g.node_count(), 0), in_b(g.node_count(), 0);
  for (NodeId v : a) in_a[v] = 1;
  for (NodeId v : b) in_b[v] = 1;
  std::uint64_t count = 0;
  for (const Edge& e : g.edges()) count += (in_a[e.from] && in_b[e.to]) || (in_b[e.from] && in_a[e.to]);
  return count;
}

TEST(Tomahawk, RootOfSixteenNodeExample) {
  const auto handle = open(build(gen::fixture16(), 2, 3));
  const auto ctx = tomahawk_context(handle, 0);
  EXPECT_TRUE(ctx.ancestors.empty());
  EXPECT_TRUE(ctx.siblings.empty());
  EXPECT_EQ(ctx.children.size(), 2u);
  EXPECT_EQ(ctx.visible().size(), 3u);
  ASSERT_EQ(ctx.visible_connectivity.size(), 1u);
  EXPECT_EQ(ctx.visible_connectivity[0].weight, 1u);
}

TEST(Tomahawk, LeafFocusHasNoChildren) {
  const auto b = build(gen::fixture16(), 2, 3);
  const auto handle = open(b);
  for (TreeNodeId leaf : b.tree.leaves()) {
    const auto ctx = tomahawk_context(handle, leaf);
    EXPECT_TRUE(ctx.children.empty());
    EXPECT_EQ(ctx.ancestors.size(), 2u);
    EXPECT_EQ(ctx.siblings.size(), 1u);
    EXPECT_EQ(ctx.visible().size(), 4u);
  }
}

TEST(Tomahawk, MidLevelNodeOfThreeLevelTree) {
  for (std::uint32_t f : {2u, 3u, 4u}) {
    const auto b = build(gen::planted_partition(f * f * 60, f * f * 300, f * f, 0.9, f), f, 3, 1);
    for (TreeNodeId mid : b.tree.root().children) {
      const auto ctx = tomahawk_context(b.tree, mid);
      EXPECT_EQ(ctx.visible().size(), 1 + 1 + (f - 1) + f) << "fanout " << f;
    }
  }
}

TEST(Tomahawk, VisibleBoundAndConnectivityMatchBruteForce) {
  const Graph g = gen::planted_partition(2000, 9000, 27, 0.8, 6);
  const auto b = build(g, 3, 4, 2);
  const std::size_t bound = 1 + (b.tree.levels - 1) + (b.tree.fanout - 1) + b.tree.fanout;
  for (const auto& node : b.tree.nodes) {
    const auto ctx = tomahawk_context(b.tree, node.id);
    const auto visible = ctx.visible();
    EXPECT_LE(visible.size(), bound);
    EXPECT_EQ(std::set<TreeNodeId>(visible.begin(), visible.end()).size(), visible.size());

    // Pairs that are not nested inside each other, with their true counts.
    std::vector<TreeNodeId> drawn{ctx.focus};
    drawn.insert(drawn.end(), ctx.siblings.begin(), ctx.siblings.end());
    drawn.insert(drawn.end(), ctx.children.begin(), ctx.children.end());
    std::vector<ConnectivityEdge> expected;
    for (TreeNodeId a : drawn) {
      for (TreeNodeId c : drawn) {
        if (a >= c) continue;
        if ((a == ctx.focus && b.tree.nodes[c].parent == ctx.focus) ||
            (c == ctx.focus && b.tree.nodes[a].parent == ctx.focus)) {
          continue;
        }
        const auto w = crossing(g, testing::members_of(b, a), testing::members_of(b, c));
        if (w > 0) expected.push_back({a, c, w});
      }
    }
    std::sort(expected.begin(), expected.end(), [](const auto& x, const auto& y) {
      return std::pair{x.a, x.b} < std::pair{y.a, y.b};
    });
    EXPECT_EQ(ctx.visible_connectivity, expected) << "focus " << node.id;
  }
}

TEST(Tomahawk, ReadsNoLeafBytes) {
  std::shared_ptr<CountingSource> counter;
  const auto b = build(gen::fixture16(), 2, 3);
  const auto handle = open(b, &counter);
  const auto before = counter->bytes_read();
  for (const auto& node : handle.tree().nodes) tomahawk_context(handle, node.id);
  EXPECT_EQ(counter->bytes_read(), before);
}

TEST(Tomahawk, UnknownFocus) {
  const auto b = build(gen::fixture16(), 2, 3);
  try {
    tomahawk_context(b.tree, 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_found);
  }
}

TEST(LeafMetrics, CliqueLeaf) {
  const auto b = build(gen::fixture16(), 2, 3);
  const auto handle = open(b);
  const auto m = leaf_metrics(handle, b.tree.leaves().front());
  EXPECT_EQ(m.degree_histogram, (DegreeHistogram{{3, 4}}));
  EXPECT_EQ(m.weak.count, 1u);
  EXPECT_EQ(m.strong.count, 1u);
  ASSERT_EQ(m.pagerank.size(), 4u);
  for (double p : m.pagerank) EXPECT_NEAR(p, 0.25, 1e-9);
  ASSERT_EQ(m.hop_plot.entries.size(), 1u);
  EXPECT_EQ(m.hop_plot.entries[0].pairs, 12.0);
}

TEST(LeafMetrics, EdgelessLeaf) {
  const auto b = build(testing::ugraph(6, {}), 2, 2);
  const auto handle = open(b);
  for (TreeNodeId leaf : b.tree.leaves()) {
    const auto m = leaf_metrics(handle, leaf);
    EXPECT_EQ(m.global_ids.size(), 3u);
    EXPECT_EQ(m.weak.count, 3u);
    EXPECT_EQ(m.degree_histogram, (DegreeHistogram{{0, 3}}));
    EXPECT_TRUE(m.hop_plot.entries.empty());
  }
}

TEST(LeafMetrics, EqualsDirectCalls) {
  const auto b = build(gen::planted_partition(600, 3000, 6, 0.85, 3), 2, 3, 3);
  const auto handle = open(b);
  for (TreeNodeId leaf : b.tree.leaves()) {
    const auto m = leaf_metrics(handle, leaf);
    const Graph& lg = b.leaves.at(leaf).graph;
    EXPECT_EQ(m.global_ids, b.leaves.at(leaf).global_ids);
    EXPECT_EQ(m.degree_histogram, degree_distribution(lg));
    EXPECT_EQ(m.weak.id, weak_components(lg).id);
    EXPECT_EQ(m.strong.id, strong_components(lg).id);
    EXPECT_EQ(m.pagerank, pagerank(lg));
    const auto hp = hop_plot(lg);
    ASSERT_EQ(m.hop_plot.entries.size(), hp.entries.size());
    for (std::size_t i = 0; i < hp.entries.size(); ++i) {
      EXPECT_EQ(m.hop_plot.entries[i].pairs, hp.entries[i].pairs);
    }
  }
}

TEST(LeafMetrics, InternalNodeRejected) {
  const auto handle = open(build(gen::fixture16(), 2, 3));
  EXPECT_THROW(leaf_metrics(handle, 0), Error);
}

TEST(FindNode, PathReachesLeafHoldingLabel) {
  const auto b = build(gen::fixture16(), 2, 3);
  const auto handle = open(b);
  for (NodeId u = 0; u < 16; ++u) {
    const auto matches = find_node(handle, "v" + std::to_string(u));
    ASSERT_EQ(matches.size(), 1u);
    const auto& m = matches[0];
    EXPECT_EQ(m.global_id, u);
    ASSERT_EQ(m.path.size(), b.tree.levels);
    EXPECT_EQ(m.path.front(), 0u);
    for (std::size_t i = 1; i < m.path.size(); ++i) {
      EXPECT_EQ(b.tree.nodes[m.path[i]].parent, m.path[i - 1]);
    }
    const auto leaf = handle.load_leaf(m.path.back());
    EXPECT_EQ(leaf->graph.label(m.local_index), "v" + std::to_string(u));
    EXPECT_EQ(leaf->global_ids[m.local_index], u);
  }
  EXPECT_TRUE(find_node(handle, "v99").empty());
  EXPECT_TRUE(find_node(handle, "").empty());
}

TEST(FindNode, DuplicateLabelsOrderedByGlobalId) {
  Graph g = gen::planted_partition(120, 500, 4, 0.9, 2);
  std::vector<std::string> labels(120);
  for (NodeId u : {90u, 7u, 55u}) labels[u] = "J. Smith";
  g = g.with_labels(labels);
  const auto b = build(g, 2, 3);
  const auto matches = find_node(open(b), "J. Smith");
  ASSERT_EQ(matches.size(), 3u);
  EXPECT_EQ(matches[0].global_id, 7u);
  EXPECT_EQ(matches[1].global_id, 55u);
  EXPECT_EQ(matches[2].global_id, 90u);
}

TEST(FindNode, ShallowLeafPathIsShorter) {
  GTreeBuildOptions opts;
  opts.fanout = 5;
  opts.levels = 5;
  opts.strict_depth = false;
  const auto b = build_gtree(gen::fixture16(), opts);
  const auto handle = open(b);
  for (NodeId u = 0; u < 16; ++u) {
    const auto m = find_node(handle, "v" + std::to_string(u));
    ASSERT_EQ(m.size(), 1u);
    EXPECT_LT(m[0].path.size(), 5u);
    EXPECT_TRUE(b.tree.nodes[m[0].path.back()].is_leaf());
  }
}

}  // namespace
}  // namespace gmine
