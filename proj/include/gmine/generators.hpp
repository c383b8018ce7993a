#pragma once

// Seeded synthetic graphs for tests, benchmarks and `gmine generate`.
// Output depends only on the arguments: draws use mt19937_64 raw output
// with rejection sampling, never a standard-library distribution.

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gmine/error.hpp"
#include "gmine/graph.hpp"

namespace gmine::gen {

namespace detail {

// Uniform integer in [0, bound).
inline std::uint64_t below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

inline std::uint64_t key(NodeId u, NodeId v) {
  if (u > v) std::swap(u, v);
  return (std::uint64_t{u} << 32) | v;
}

}  // namespace detail

/// Uniform G(n, m): exactly m distinct undirected edges.
inline Graph random_graph(std::size_t n, std::size_t m, std::uint64_t seed) {
  gmine::detail::require(n >= 2 || m == 0, "random_graph: need two nodes for an edge");
  gmine::detail::require(m <= n * (n - 1) / 2, "random_graph: too many edges for n");
  std::mt19937_64 rng(seed);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(m * 2);
  std::vector<Edge> edges;
  edges.reserve(m);
  while (edges.size() < m) {
    const auto u = static_cast<NodeId>(detail::below(rng, n));
    const auto v = static_cast<NodeId>(detail::below(rng, n));
    if (u == v || !seen.insert(detail::key(u, v)).second) continue;
    edges.push_back({u, v});
  }
  return Graph::from_edges(n, false, edges);
}

/**
 * Planted communities: node u belongs to block u * blocks / n. Each of
 * the m distinct edges stays inside a block with probability
 * `intra_fraction`, otherwise its endpoints are drawn from the whole graph.
 */
inline Graph planted_partition(std::size_t n, std::size_t m, std::size_t blocks,
                               double intra_fraction, std::uint64_t seed) {
  gmine::detail::require(blocks >= 1 && blocks <= n, "planted_partition: bad block count");
  gmine::detail::require(intra_fraction >= 0.0 && intra_fraction <= 1.0,
                         "planted_partition: intra fraction must lie in [0,1]");
  gmine::detail::require(n / blocks >= 2, "planted_partition: blocks too small");
  std::mt19937_64 rng(seed);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(m * 2);
  std::vector<Edge> edges;
  edges.reserve(m);
  const auto threshold =
      static_cast<std::uint64_t>(intra_fraction * static_cast<double>(std::uint64_t{1} << 53));
  auto block_start = [&](std::size_t b) { return (b * n + blocks - 1) / blocks; };
  std::size_t attempts = 0;
  while (edges.size() < m) {
    gmine::detail::require(++attempts < 64 * m + 1024, "planted_partition: too dense");
    NodeId u = 0;
    NodeId v = 0;
    if ((rng() >> 11) < threshold) {
      const std::size_t b = detail::below(rng, blocks);
      const std::size_t lo = block_start(b);
      const std::size_t size = block_start(b + 1) - lo;
      u = static_cast<NodeId>(lo + detail::below(rng, size));
      v = static_cast<NodeId>(lo + detail::below(rng, size));
    } else {
      u = static_cast<NodeId>(detail::below(rng, n));
      v = static_cast<NodeId>(detail::below(rng, n));
    }
    if (u == v || !seen.insert(detail::key(u, v)).second) continue;
    edges.push_back({u, v});
  }
  return Graph::from_edges(n, false, edges);
}

/// Uniform random recursive tree: node i > 0 attaches to a node below i.
inline Graph random_tree(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  for (std::size_t i = 1; i < n; ++i) {
    edges.push_back({static_cast<NodeId>(detail::below(rng, i)), static_cast<NodeId>(i)});
  }
  return Graph::from_edges(n, false, edges);
}

inline Graph path(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 1; i < n; ++i) edges.push_back({NodeId(i - 1), NodeId(i)});
  return Graph::from_edges(n, false, edges);
}

/// `count` cliques of `size` nodes; clique c holds ids [c*size, (c+1)*size).
/// Consecutive cliques are joined by one edge from the last node of one to
/// the first node of the next when `chained`.
inline Graph cliques(std::size_t count, std::size_t size, bool chained) {
  std::vector<Edge> edges;
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t base = c * size;
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t j = i + 1; j < size; ++j) {
        edges.push_back({NodeId(base + i), NodeId(base + j)});
      }
    }
    if (chained && c + 1 < count) edges.push_back({NodeId(base + size - 1), NodeId(base + size)});
  }
  return Graph::from_edges(count * size, false, edges);
}

/// Two K4s joined by the bridge 3-4.
inline Graph barbell() { return cliques(2, 4, true); }

inline Graph disjoint_triangles(std::size_t count) { return cliques(count, 3, false); }

/// Four K4s chained by bridges 3-4, 7-8 and 11-12; node i is labelled "v<i>".
inline Graph fixture16() {
  std::vector<std::string> labels;
  for (int i = 0; i < 16; ++i) labels.push_back("v" + std::to_string(i));
  return cliques(4, 4, true).with_labels(std::move(labels));
}

}  // namespace gmine::gen
