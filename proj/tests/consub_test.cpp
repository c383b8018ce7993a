#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "gmine/consub.hpp"
#include "support/testing.hpp"

namespace gmine {
namespace {

using testing::ugraph;

double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

ConnectionSubgraph run_extract(const Graph& g, std::vector<NodeId> sources, std::size_t budget,
                               std::size_t maxlen = 5) {
  ExtractOptions opts;
  opts.budget = budget;
  opts.max_path_length = maxlen;
  return extract(g, sources, opts);
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

// Small connected graph: random spanning tree plus extra edges.
Graph small_connected(std::size_t n, std::size_t extra, std::uint64_t seed) {
  const Graph tree = gen::random_tree(n, seed);
  std::vector<Edge> edges = tree.edges();
  std::mt19937_64 rng(seed * 7 + 1);
  for (std::size_t i = 0; i < extra; ++i) {
    const NodeId a = static_cast<NodeId>(rng() % n);
    const NodeId b = static_cast<NodeId>(rng() % n);
    if (a != b) edges.push_back({a, b});
  }
  return ugraph(n, edges);
}

TEST(Rwr, SingleNode) {
  const auto r = rwr(ugraph(1, {}), 0);
  ASSERT_EQ(r.scores.size(), 1u);
  EXPECT_NEAR(r.scores[0], 1.0, 1e-12);
}

TEST(Rwr, SingleEdgeClosedForm) {
  const auto r = rwr(ugraph(2, {{0, 1}}), 0);
  const double c = 0.15;
  const double r0 = c / (1.0 - (1.0 - c) * (1.0 - c));
  EXPECT_NEAR(r0, 0.5405405405, 1e-9);
  EXPECT_NEAR(r.scores[0], r0, 1e-9);
  EXPECT_NEAR(r.scores[1], 1.0 - r0, 1e-9);
}

TEST(Rwr, PathMatchesDenseSolve) {
  const Graph p3 = gen::path(3);
  RwrOptions opts;
  opts.tolerance = 1e-12;
  for (NodeId s = 0; s < 3; ++s) {
    EXPECT_LE(l1(rwr(p3, s, opts).scores, testing::dense_rwr(p3, s, 0.15)), 1e-8);
  }
}

TEST(Rwr, RandomGraphsMatchDenseSolve) {
  RwrOptions opts;
  opts.tolerance = 1e-12;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const std::size_t n = 20 + seed * 7;
    const Graph g = gen::random_graph(n, n + seed * 5, seed);  // often disconnected
    const NodeId s = static_cast<NodeId>(seed % n);
    const auto r = rwr(g, s, opts);
    EXPECT_LE(l1(r.scores, testing::dense_rwr(g, s, 0.15)), 1e-8) << "seed " << seed;
    EXPECT_NEAR(sum(r.scores), 1.0, 1e-9);
    for (double x : r.scores) EXPECT_GE(x, 0.0);
  }
}

TEST(Rwr, SatisfiesLinearSystem) {
  const Graph g = gen::random_graph(150, 600, 3);
  const double c = 0.3;
  RwrOptions opts;
  opts.restart = c;
  opts.tolerance = 1e-13;
  const auto r = rwr(g, 5, opts).scores;
  // (I - (1-c) P) r = c e, P column stochastic.
  std::vector<double> lhs = r;
  for (NodeId u = 0; u < g.node_count(); ++u) {
    for (NodeId v : g.neighbors(u)) lhs[v] -= (1.0 - c) * r[u] / static_cast<double>(g.degree(u));
    if (g.degree(u) == 0) lhs[5] -= (1.0 - c) * r[u];
  }
  for (NodeId v = 0; v < g.node_count(); ++v) {
    EXPECT_NEAR(lhs[v], v == 5 ? c : 0.0, 1e-11) << v;
  }
}

TEST(Rwr, IsolatedSourceKeepsAllMass) {
  const auto r = rwr(ugraph(4, {{1, 2}, {2, 3}}), 0);
  EXPECT_EQ(r.scores, (std::vector<double>{1.0, 0.0, 0.0, 0.0}));
}

TEST(Rwr, DirectionIgnored) {
  const Graph d = testing::digraph(3, {{0, 1}, {2, 1}});
  const Graph u = ugraph(3, {{0, 1}, {1, 2}});
  EXPECT_EQ(rwr(d, 0).scores, rwr(u, 0).scores);
}

TEST(Rwr, BadArguments) {
  const Graph g = gen::path(3);
  EXPECT_EQ(code_of([&] { rwr(g, 3); }), ErrorCode::contract);
  RwrOptions opts;
  opts.restart = 0.0;
  EXPECT_EQ(code_of([&] { rwr(g, 0, opts); }), ErrorCode::contract);
  opts.restart = 1.0;
  EXPECT_EQ(code_of([&] { rwr(g, 0, opts); }), ErrorCode::contract);
}

TEST(Goodness, SingleSourceIsRwr) {
  const Graph g = gen::random_graph(200, 800, 9);
  const std::vector<NodeId> s{17};
  EXPECT_EQ(goodness(g, s).scores, rwr(g, 17).scores);
}

TEST(Goodness, PathEndpointsFavourMiddle) {
  const Graph p3 = gen::path(3);
  const std::vector<NodeId> s{0, 2};
  const auto field = goodness(p3, s);
  const auto r0 = testing::dense_rwr(p3, 0, 0.15);
  const auto r2 = testing::dense_rwr(p3, 2, 0.15);
  for (NodeId v = 0; v < 3; ++v) EXPECT_NEAR(field.scores[v], r0[v] * r2[v], 1e-9);
  EXPECT_GT(field.scores[1], 0.0);
  EXPECT_EQ(field.sources, s);
}

TEST(Goodness, SeparateComponentsScoreZero) {
  const Graph g = ugraph(6, {{0, 1}, {1, 2}, {3, 4}, {4, 5}});
  const std::vector<NodeId> s{0, 3};
  for (double x : goodness(g, s).scores) EXPECT_EQ(x, 0.0);
}

TEST(Goodness, SourceListContract) {
  const Graph g = gen::random_graph(30, 60, 1);
  const std::vector<NodeId> dup{1, 1};
  const std::vector<NodeId> none;
  const std::vector<NodeId> nine{0, 1, 2, 3, 4, 5, 6, 7, 8};
  EXPECT_EQ(code_of([&] { goodness(g, dup); }), ErrorCode::contract);
  EXPECT_EQ(code_of([&] { goodness(g, none); }), ErrorCode::contract);
  EXPECT_EQ(code_of([&] { goodness(g, nine); }), ErrorCode::contract);
  EXPECT_NO_THROW(goodness(g, nine, {}, 9));
}

TEST(Extract, PathOfThree) {
  const auto sub = run_extract(gen::path(3), {0, 2}, 3);
  EXPECT_EQ(sub.nodes, (std::vector<NodeId>{0, 1, 2}));
  EXPECT_EQ(sub.edges, (std::vector<Edge>{{0, 1}, {1, 2}}));
  ASSERT_EQ(sub.paths.size(), 1u);
  EXPECT_EQ(sub.paths[0], (std::vector<NodeId>{0, 1, 2}));
  EXPECT_EQ(code_of([] { run_extract(gen::path(3), {0, 2}, 2); }), ErrorCode::insufficient_budget);
}

TEST(Extract, ParallelPathsPickHigherGoodness) {
  // 0-1-3 and 0-2-3; node 1 also carries three pendant neighbours.
  const Graph g = ugraph(7, {{0, 1}, {1, 3}, {0, 2}, {2, 3}, {1, 4}, {1, 5}, {1, 6}});
  const std::vector<NodeId> sources{0, 3};
  const auto field = goodness(g, sources);
  const NodeId better = field.scores[1] > field.scores[2] ? 1 : 2;
  const auto sub = run_extract(g, sources, 3);
  EXPECT_EQ(sub.nodes, (std::vector<NodeId>{0, std::min<NodeId>(better, 3), 3}));
  EXPECT_DOUBLE_EQ(sub.total_goodness(),
                   testing::brute_force_best_goodness(g, sources, field.scores, 3));
}

TEST(Extract, SmallCorpusAgainstBruteForce) {
  std::mt19937_64 rng(2024);
  int cases = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const std::size_t n = 6 + seed % 7;
    const Graph g = small_connected(n, seed % 6, seed);
    const std::size_t q = 2 + seed % 2;
    std::vector<NodeId> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<NodeId> sources(all.begin(), all.begin() + static_cast<long>(q));
    const auto field = goodness(g, sources);
    for (std::size_t budget = q + 1; budget <= n; budget += 2) {
      ConnectionSubgraph sub;
      try {
        sub = run_extract(g, sources, budget, n);
      } catch (const Error& e) {
        ASSERT_EQ(e.code(), ErrorCode::insufficient_budget);
        // Only legitimate when no connected superset fits.
        EXPECT_LT(testing::brute_force_best_goodness(g, sources, field.scores, budget), 0.0);
        continue;
      }
      ++cases;
      EXPECT_LE(sub.nodes.size(), budget);
      for (NodeId s : sources) {
        EXPECT_TRUE(std::binary_search(sub.nodes.begin(), sub.nodes.end(), s));
      }
      EXPECT_TRUE(testing::connected_subset(g, sub.nodes));
      EXPECT_EQ(sub.edges.size(), testing::edges_within(g, sub.nodes));
      const double best = testing::brute_force_best_goodness(g, sources, field.scores, budget);
      EXPECT_GE(sub.total_goodness(), 0.8 * best) << "seed " << seed << " budget " << budget;
    }
  }
  EXPECT_GT(cases, 100);
}

TEST(Extract, ThreeSourcesConnectWheneverSomeSupersetFits) {
  std::mt19937_64 rng(77);
  for (std::uint64_t seed = 0; seed < 80; ++seed) {
    const std::size_t n = 7 + seed % 8;
    const Graph g = small_connected(n, seed % 5, seed + 1000);
    std::vector<NodeId> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    const std::vector<NodeId> sources(all.begin(), all.begin() + 3);
    const auto field = goodness(g, sources);
    for (std::size_t budget = 3; budget <= n; ++budget) {
      if (testing::brute_force_best_goodness(g, sources, field.scores, budget) < 0.0) continue;
      EXPECT_NO_THROW(run_extract(g, sources, budget, n)) << "seed " << seed << " budget " << budget;
    }
  }
}

TEST(Extract, ThreeSourcesJoinedAtOneCentre) {
  // Joining 8 and 3 first by their best pair path leaves 6 two nodes away;
  // the smallest superset meets all three at 4 and has six nodes.
  const Graph g = testing::ugraph(
      9, {{0, 1}, {0, 3}, {0, 5}, {0, 7}, {1, 2}, {2, 4}, {2, 6}, {3, 4}, {4, 7}, {7, 8}});
  const auto sub = run_extract(g, {8, 3, 6}, 6, 9);
  EXPECT_EQ(sub.nodes, (std::vector<NodeId>{2, 3, 4, 6, 7, 8}));
  EXPECT_TRUE(testing::connected_subset(g, sub.nodes));
}

TEST(Extract, LargerBudgetIsSuperset) {
  const Graph g = gen::planted_partition(3000, 15000, 10, 0.8, 4);
  const std::vector<NodeId> sources{3, 1500, 2999};
  std::vector<NodeId> previous;
  for (std::size_t budget : {12u, 20u, 40u, 80u}) {
    const auto sub = run_extract(g, sources, budget);
    EXPECT_LE(sub.nodes.size(), budget);
    EXPECT_TRUE(testing::connected_subset(g, sub.nodes));
    EXPECT_TRUE(std::includes(sub.nodes.begin(), sub.nodes.end(), previous.begin(), previous.end()));
    previous = sub.nodes;
  }
}

TEST(Extract, Deterministic) {
  const Graph g = gen::planted_partition(2000, 10000, 8, 0.8, 5);
  const std::vector<NodeId> sources{0, 999, 1999};
  const auto a = run_extract(g, sources, 25);
  const auto b = run_extract(g, sources, 25);
  EXPECT_EQ(a.nodes, b.nodes);
  EXPECT_EQ(a.paths, b.paths);
}

TEST(Extract, SingleSourceGrowsNeighbourhood) {
  const auto sub = run_extract(gen::path(5), {2}, 3);
  EXPECT_EQ(sub.nodes, (std::vector<NodeId>{1, 2, 3}));
  EXPECT_EQ(run_extract(gen::path(5), {2}, 1).nodes, (std::vector<NodeId>{2}));
}

TEST(Extract, DisconnectedSources) {
  const Graph g = ugraph(6, {{0, 1}, {1, 2}, {3, 4}, {4, 5}});
  try {
    run_extract(g, {0, 5}, 6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::insufficient_budget);
    EXPECT_NE(std::string(e.what()).find("{0}"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("{5}"), std::string::npos) << e.what();
  }
}

TEST(Extract, PathLongerThanMaxLength) {
  EXPECT_EQ(code_of([] { run_extract(gen::path(8), {0, 7}, 8, 5); }),
            ErrorCode::insufficient_budget);
  EXPECT_EQ(run_extract(gen::path(8), {0, 7}, 8, 7).nodes.size(), 8u);
}

TEST(Extract, BudgetBelowSourceCount) {
  EXPECT_EQ(code_of([] { run_extract(gen::path(5), {0, 2, 4}, 2); }), ErrorCode::contract);
}

TEST(Extract, TimeLimit) {
  const Graph g = gen::planted_partition(50000, 250000, 50, 0.8, 1);
  ExtractOptions opts;
  opts.budget = 30;
  opts.time_limit = std::chrono::milliseconds(0);
  const std::vector<NodeId> sources{1, 20000, 40000};
  EXPECT_EQ(code_of([&] { extract(g, sources, opts); }), ErrorCode::timeout);
}

TEST(Extract, DirectedInputUsesUndirectedView) {
  const Graph d = testing::digraph(3, {{1, 0}, {1, 2}});
  const auto sub = run_extract(d, {0, 2}, 3);
  EXPECT_EQ(sub.nodes, (std::vector<NodeId>{0, 1, 2}));
  EXPECT_EQ(sub.edges, (std::vector<Edge>{{1, 0}, {1, 2}}));
}

}  // namespace
}  // namespace gmine
