#pragma once

// Per-subgraph statistics shown for leaf communities: degree distribution,
// hop plot, weak/strong components and PageRank.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "gmine/error.hpp"
#include "gmine/graph.hpp"

namespace gmine {

/// degree -> number of nodes with that (out-)degree.
using DegreeHistogram = std::map<std::size_t, std::size_t>;

inline DegreeHistogram degree_distribution(const Graph& g) {
  DegreeHistogram hist;
  for (NodeId u = 0; u < g.node_count(); ++u) ++hist[g.degree(u)];
  return hist;
}

struct PageRankOptions {
  double damping = 0.85;
  double tolerance = 1e-10;
  std::size_t max_iterations = 1000;
};

/// Power iteration with uniform teleport. Mass sitting on nodes without
/// out-links is spread uniformly over all nodes.
inline std::vector<double> pagerank(const Graph& g, const PageRankOptions& opts = {}) {
  const std::size_t n = g.node_count();
  if (n == 0) throw Error(ErrorCode::empty_graph, "pagerank of an empty graph");
  detail::require(opts.damping > 0.0 && opts.damping < 1.0, "damping must lie in (0,1)");
  detail::require(opts.tolerance > 0.0, "tolerance must be positive");

  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> rank(n, inv_n);
  std::vector<double> next(n);
  for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
    double dangling = 0.0;
    std::fill(next.begin(), next.end(), 0.0);
    for (NodeId u = 0; u < n; ++u) {
      const std::size_t deg = g.degree(u);
      if (deg == 0) {
        dangling += rank[u];
        continue;
      }
      const double share = rank[u] / static_cast<double>(deg);
      for (NodeId v : g.neighbors(u)) next[v] += share;
    }
    const double base = (1.0 - opts.damping) * inv_n + opts.damping * dangling * inv_n;
    double change = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      next[v] = base + opts.damping * next[v];
      change += std::abs(next[v] - rank[v]);
    }
    rank.swap(next);
    if (change <= opts.tolerance) break;
  }
  return rank;
}

struct Components {
  std::vector<std::uint32_t> id;  // per node, in [0, count)
  std::uint32_t count = 0;

  friend bool operator==(const Components&, const Components&) = default;
};

namespace detail {

// Relabels arbitrary component representatives so ids appear in order of
// each component's smallest node.
inline Components canonical_components(const std::vector<std::uint32_t>& rep) {
  Components out;
  out.id.resize(rep.size());
  std::vector<std::uint32_t> remap(rep.size(), std::numeric_limits<std::uint32_t>::max());
  for (std::size_t v = 0; v < rep.size(); ++v) {
    auto& slot = remap[rep[v]];
    if (slot == std::numeric_limits<std::uint32_t>::max()) slot = out.count++;
    out.id[v] = slot;
  }
  return out;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (a > b) std::swap(a, b);
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace detail

/// Connected components ignoring edge direction.
inline Components weak_components(const Graph& g) {
  const std::size_t n = g.node_count();
  detail::DisjointSets sets(n);
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v : g.neighbors(u)) sets.unite(u, v);
  }
  std::vector<std::uint32_t> rep(n);
  for (NodeId u = 0; u < n; ++u) rep[u] = sets.find(u);
  return detail::canonical_components(rep);
}

/// Strongly connected components (iterative Tarjan). For undirected
/// graphs this coincides with weak_components().
inline Components strong_components(const Graph& g) {
  const std::size_t n = g.node_count();
  constexpr std::uint32_t unvisited = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> index(n, unvisited), low(n, 0), rep(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<NodeId> stack;
  struct Frame {
    NodeId node;
    std::size_t next;
  };
  std::vector<Frame> call;
  std::uint32_t counter = 0;

  for (NodeId root = 0; root < n; ++root) {
    if (index[root] != unvisited) continue;
    call.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& frame = call.back();
      const auto adj = g.neighbors(frame.node);
      if (frame.next < adj.size()) {
        const NodeId w = adj[frame.next++];
        if (index[w] == unvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[frame.node] = std::min(low[frame.node], index[w]);
        }
        continue;
      }
      const NodeId v = frame.node;
      call.pop_back();
      if (!call.empty()) low[call.back().node] = std::min(low[call.back().node], low[v]);
      if (low[v] == index[v]) {
        NodeId smallest = v;
        std::vector<NodeId> members;
        NodeId w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          members.push_back(w);
          smallest = std::min(smallest, w);
        } while (w != v);
        for (NodeId m : members) rep[m] = smallest;
      }
    }
  }
  return detail::canonical_components(rep);
}

/**
 * Hop plot: N(h) is the number of ordered pairs (u, v), u != v, whose
 * shortest-path distance is at most h. Distances follow edge direction.
 */
struct HopPlot {
  struct Entry {
    std::uint32_t hops;
    double pairs;
  };
  std::vector<Entry> entries;  // h = 1, 2, ... up to the largest distance seen
  bool approximate = false;
  std::size_t sources = 0;     // BFS roots actually used
};

struct HopPlotOptions {
  std::size_t exact_threshold = 4096;
  std::size_t sample_seeds = 64;
};

inline HopPlot hop_plot(const Graph& g, const HopPlotOptions& opts = {}) {
  const std::size_t n = g.node_count();
  if (n == 0) throw Error(ErrorCode::empty_graph, "hop plot of an empty graph");
  HopPlot plot;
  std::vector<NodeId> roots;
  if (n <= opts.exact_threshold || opts.sample_seeds == 0 || opts.sample_seeds >= n) {
    roots.resize(n);
    std::iota(roots.begin(), roots.end(), NodeId{0});
  } else {
    // Evenly spaced ids: deterministic and independent of any RNG.
    plot.approximate = true;
    for (std::size_t i = 0; i < opts.sample_seeds; ++i) {
      roots.push_back(static_cast<NodeId>(i * n / opts.sample_seeds));
    }
  }
  plot.sources = roots.size();

  std::vector<std::uint64_t> at_distance;  // at_distance[d] = pairs at exactly d
  std::vector<std::uint32_t> dist(n, std::numeric_limits<std::uint32_t>::max());
  std::vector<NodeId> queue;
  queue.reserve(n);
  for (NodeId root : roots) {
    queue.clear();
    queue.push_back(root);
    dist[root] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const NodeId u = queue[head];
      for (NodeId v : g.neighbors(u)) {
        if (dist[v] != std::numeric_limits<std::uint32_t>::max()) continue;
        dist[v] = dist[u] + 1;
        if (at_distance.size() <= dist[v]) at_distance.resize(dist[v] + 1, 0);
        ++at_distance[dist[v]];
        queue.push_back(v);
      }
    }
    for (NodeId v : queue) dist[v] = std::numeric_limits<std::uint32_t>::max();
  }

  const double scale =
      plot.approximate ? static_cast<double>(n) / static_cast<double>(roots.size()) : 1.0;
  std::uint64_t cumulative = 0;
  for (std::size_t d = 1; d < at_distance.size(); ++d) {
    cumulative += at_distance[d];
    plot.entries.push_back({static_cast<std::uint32_t>(d), static_cast<double>(cumulative) * scale});
  }
  return plot;
}

}  // namespace gmine
