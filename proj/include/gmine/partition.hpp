#pragma once

// Multilevel balanced k-way partitioning: heavy-edge matching coarsening,
// greedy graph-growing on the coarsest graph, and boundary refinement with
// single moves and pairwise swaps while projecting back.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gmine/error.hpp"
#include "gmine/graph.hpp"

namespace gmine {

using PartId = std::uint32_t;
using Weight = std::int64_t;

/// Undirected graph with positive node and edge weights. Adjacency lists
/// are sorted ascending; edge weights are symmetric.
struct WeightedGraph {
  std::vector<std::uint64_t> offsets{0};
  std::vector<NodeId> adjacency;
  std::vector<Weight> edge_weights;
  std::vector<Weight> node_weights;

  std::size_t node_count() const noexcept { return node_weights.size(); }
  std::span<const NodeId> neighbors(NodeId u) const noexcept {
    return {adjacency.data() + offsets[u], adjacency.data() + offsets[u + 1]};
  }
  std::span<const Weight> weights(NodeId u) const noexcept {
    return {edge_weights.data() + offsets[u], edge_weights.data() + offsets[u + 1]};
  }
  Weight total_node_weight() const noexcept {
    return std::accumulate(node_weights.begin(), node_weights.end(), Weight{0});
  }
  Weight total_edge_weight() const noexcept {
    return std::accumulate(edge_weights.begin(), edge_weights.end(), Weight{0}) / 2;
  }
  /// Weight of edge (u, v), or 0 if absent.
  Weight edge_weight(NodeId u, NodeId v) const noexcept {
    const auto adj = neighbors(u);
    const auto it = std::lower_bound(adj.begin(), adj.end(), v);
    if (it == adj.end() || *it != v) return 0;
    return edge_weights[offsets[u] + static_cast<std::size_t>(it - adj.begin())];
  }

  /// Unit node weights. Direction is dropped; for directed input the edge
  /// weight is the number of arcs between the pair (1 or 2).
  static WeightedGraph from_graph(const Graph& g) {
    WeightedGraph wg;
    const std::size_t n = g.node_count();
    wg.node_weights.assign(n, 1);
    if (!g.directed()) {
      wg.offsets.assign(g.offsets().begin(), g.offsets().end());
      wg.adjacency.assign(g.adjacency().begin(), g.adjacency().end());
      wg.edge_weights.assign(wg.adjacency.size(), 1);
      return wg;
    }
    std::vector<Edge> arcs;
    arcs.reserve(2 * g.adjacency_entries());
    for (NodeId u = 0; u < n; ++u) {
      for (NodeId v : g.neighbors(u)) {
        arcs.push_back({u, v});
        arcs.push_back({v, u});
      }
    }
    std::sort(arcs.begin(), arcs.end());
    wg.offsets.assign(n + 1, 0);
    for (std::size_t i = 0; i < arcs.size();) {
      std::size_t j = i;
      while (j < arcs.size() && arcs[j] == arcs[i]) ++j;
      wg.adjacency.push_back(arcs[i].to);
      wg.edge_weights.push_back(static_cast<Weight>(j - i));
      ++wg.offsets[arcs[i].from + 1];
      i = j;
    }
    std::partial_sum(wg.offsets.begin(), wg.offsets.end(), wg.offsets.begin());
    return wg;
  }

  /// Subgraph induced by sorted `members`. `scratch` must have node_count()
  /// entries equal to the max NodeId value and is restored before returning.
  WeightedGraph induced(std::span<const NodeId> members, std::vector<NodeId>& scratch) const {
    constexpr NodeId none = std::numeric_limits<NodeId>::max();
    for (std::size_t i = 0; i < members.size(); ++i) scratch[members[i]] = static_cast<NodeId>(i);
    WeightedGraph sub;
    sub.offsets.assign(members.size() + 1, 0);
    sub.node_weights.reserve(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      const NodeId u = members[i];
      sub.node_weights.push_back(node_weights[u]);
      const auto adj = neighbors(u);
      const auto wts = weights(u);
      for (std::size_t j = 0; j < adj.size(); ++j) {
        if (scratch[adj[j]] == none) continue;
        sub.adjacency.push_back(scratch[adj[j]]);
        sub.edge_weights.push_back(wts[j]);
      }
      sub.offsets[i + 1] = sub.adjacency.size();
    }
    for (NodeId m : members) scratch[m] = none;
    return sub;
  }

  void validate() const {
    const std::size_t n = node_count();
    detail::require(offsets.size() == n + 1 && offsets.back() == adjacency.size() &&
                        edge_weights.size() == adjacency.size(),
                    "weighted graph arrays are inconsistent");
    for (NodeId u = 0; u < n; ++u) {
      detail::require(node_weights[u] >= 1, "node weights must be >= 1");
      const auto adj = neighbors(u);
      const auto wts = weights(u);
      for (std::size_t j = 0; j < adj.size(); ++j) {
        detail::require(adj[j] < n && adj[j] != u, "bad neighbor in weighted graph");
        detail::require(j == 0 || adj[j - 1] < adj[j], "weighted adjacency must be sorted");
        detail::require(wts[j] >= 1, "edge weights must be >= 1");
        detail::require(edge_weight(adj[j], u) == wts[j], "edge weights must be symmetric");
      }
    }
  }
};

struct PartitionAssignment {
  std::vector<PartId> part;
  PartId k = 1;
  double epsilon = 0.0;
  Weight cut = 0;

  friend bool operator==(const PartitionAssignment&, const PartitionAssignment&) = default;
};

/// Largest admissible part weight: (1+epsilon) * ceil(total/k).
inline Weight max_part_weight(Weight total, PartId k, double epsilon) {
  const Weight ideal = (total + static_cast<Weight>(k) - 1) / static_cast<Weight>(k);
  return static_cast<Weight>(std::floor((1.0 + epsilon) * static_cast<double>(ideal) + 1e-9));
}

inline Weight edge_cut(const WeightedGraph& g, std::span<const PartId> part) {
  detail::require(part.size() == g.node_count(), "assignment length does not match node count");
  Weight cut = 0;
  for (NodeId u = 0; u < g.node_count(); ++u) {
    const auto adj = g.neighbors(u);
    const auto wts = g.weights(u);
    for (std::size_t j = 0; j < adj.size(); ++j) {
      if (adj[j] > u && part[adj[j]] != part[u]) cut += wts[j];
    }
  }
  return cut;
}

inline Weight edge_cut(const WeightedGraph& g, std::span<const PartId> part, PartId k) {
  for (PartId p : part) detail::require(p < k, "part id out of range");
  return edge_cut(g, part);
}

inline Weight edge_cut(const Graph& g, std::span<const PartId> part) {
  return edge_cut(WeightedGraph::from_graph(g), part);
}

struct Coarsening {
  WeightedGraph graph;
  std::vector<NodeId> mapping;  // fine node -> coarse node
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Fisher-Yates over mt19937_64 raw output; std::shuffle's draw sequence is
// implementation-defined, this is not.
inline std::vector<NodeId> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

}  // namespace detail

/**
 * One level of heavy-edge matching. Nodes are visited in a seeded random
 * order; each unmatched node pairs with its unmatched neighbor of heaviest
 * connecting edge (ties to the smaller id). Coarse ids follow the smallest
 * fine id of each pair. Pairs whose combined weight would exceed
 * `max_node_weight` are not formed.
 */
inline Coarsening coarsen(const WeightedGraph& g, std::uint64_t seed,
                          Weight max_node_weight = std::numeric_limits<Weight>::max()) {
  const std::size_t n = g.node_count();
  constexpr NodeId none = std::numeric_limits<NodeId>::max();
  std::vector<NodeId> match(n, none);
  for (NodeId u : detail::seeded_permutation(n, seed)) {
    if (match[u] != none) continue;
    NodeId best = none;
    Weight best_weight = 0;
    const auto adj = g.neighbors(u);
    const auto wts = g.weights(u);
    for (std::size_t j = 0; j < adj.size(); ++j) {
      const NodeId v = adj[j];
      if (match[v] != none || g.node_weights[u] + g.node_weights[v] > max_node_weight) continue;
      if (wts[j] > best_weight || (wts[j] == best_weight && v < best)) {
        best = v;
        best_weight = wts[j];
      }
    }
    if (best == none) {
      match[u] = u;
    } else {
      match[u] = best;
      match[best] = u;
    }
  }

  Coarsening out;
  out.mapping.assign(n, none);
  std::vector<NodeId> first;
  std::vector<NodeId> second;
  for (NodeId u = 0; u < n; ++u) {
    if (out.mapping[u] != none) continue;
    const auto c = static_cast<NodeId>(first.size());
    out.mapping[u] = c;
    out.mapping[match[u]] = c;
    first.push_back(u);
    second.push_back(match[u]);
  }

  const std::size_t coarse_n = first.size();
  WeightedGraph& cg = out.graph;
  cg.offsets.assign(coarse_n + 1, 0);
  cg.node_weights.resize(coarse_n);
  std::vector<std::int64_t> slot(coarse_n, -1);
  std::vector<std::pair<NodeId, Weight>> row;
  for (NodeId c = 0; c < coarse_n; ++c) {
    row.clear();
    const NodeId members[2] = {first[c], second[c]};
    const int member_count = first[c] == second[c] ? 1 : 2;
    cg.node_weights[c] = 0;
    for (int m = 0; m < member_count; ++m) {
      const NodeId u = members[m];
      cg.node_weights[c] += g.node_weights[u];
      const auto adj = g.neighbors(u);
      const auto wts = g.weights(u);
      for (std::size_t j = 0; j < adj.size(); ++j) {
        const NodeId cv = out.mapping[adj[j]];
        if (cv == c) continue;
        if (slot[cv] < 0) {
          slot[cv] = static_cast<std::int64_t>(row.size());
          row.emplace_back(cv, wts[j]);
        } else {
          row[static_cast<std::size_t>(slot[cv])].second += wts[j];
        }
      }
    }
    std::sort(row.begin(), row.end());
    for (const auto& [cv, w] : row) {
      slot[cv] = -1;
      cg.adjacency.push_back(cv);
      cg.edge_weights.push_back(w);
    }
    cg.offsets[c + 1] = cg.adjacency.size();
  }
  return out;
}

namespace detail {

// Connection weights from one node to each part, with a touched list so
// resetting costs O(degree).
class PartConnections {
 public:
  explicit PartConnections(PartId k) : weight_(k, 0), seen_(k, 0) {}

  void gather(const WeightedGraph& g, std::span<const PartId> part, NodeId u) {
    clear();
    const auto adj = g.neighbors(u);
    const auto wts = g.weights(u);
    for (std::size_t j = 0; j < adj.size(); ++j) {
      const PartId p = part[adj[j]];
      if (!seen_[p]) {
        seen_[p] = 1;
        touched_.push_back(p);
      }
      weight_[p] += wts[j];
    }
  }
  void clear() {
    for (PartId p : touched_) {
      weight_[p] = 0;
      seen_[p] = 0;
    }
    touched_.clear();
  }
  Weight to(PartId p) const noexcept { return weight_[p]; }
  std::span<const PartId> touched() const noexcept { return touched_; }

 private:
  std::vector<Weight> weight_;
  std::vector<char> seen_;
  std::vector<PartId> touched_;
};

inline Weight gain_to(const WeightedGraph& g, std::span<const PartId> part, NodeId u, PartId target) {
  Weight gain = 0;
  const auto adj = g.neighbors(u);
  const auto wts = g.weights(u);
  for (std::size_t j = 0; j < adj.size(); ++j) {
    if (part[adj[j]] == target) gain += wts[j];
    else if (part[adj[j]] == part[u]) gain -= wts[j];
  }
  return gain;
}

struct Loads {
  std::vector<Weight> weight;
  std::vector<std::size_t> count;

  Loads(const WeightedGraph& g, std::span<const PartId> part, PartId k) : weight(k, 0), count(k, 0) {
    for (NodeId u = 0; u < g.node_count(); ++u) {
      weight[part[u]] += g.node_weights[u];
      ++count[part[u]];
    }
  }
  void move(const WeightedGraph& g, std::vector<PartId>& part, NodeId u, PartId to) {
    weight[part[u]] -= g.node_weights[u];
    --count[part[u]];
    weight[to] += g.node_weights[u];
    ++count[to];
    part[u] = to;
  }
};

// Boundary refinement sweeps. Moves never increase the cut, never push a
// part above `cap`, and never empty a part.
inline void refine(const WeightedGraph& g, std::vector<PartId>& part, PartId k, Weight cap,
                   std::size_t passes) {
  const std::size_t n = g.node_count();
  if (k < 2 || n == 0) return;
  Loads loads(g, part, k);
  PartConnections conn(k);
  struct Blocked {
    NodeId node;
    PartId from;
    PartId to;
    Weight gain;
  };
  std::vector<Blocked> blocked;

  for (std::size_t pass = 0; pass < passes; ++pass) {
    std::size_t moves = 0;
    blocked.clear();
    for (NodeId u = 0; u < n; ++u) {
      const PartId a = part[u];
      conn.gather(g, part, u);
      const Weight internal = conn.to(a);
      const Weight w = g.node_weights[u];
      PartId best_any = a;
      Weight best_any_gain = 0;
      PartId best_fit = a;
      Weight best_fit_gain = std::numeric_limits<Weight>::min();
      for (PartId b : conn.touched()) {
        if (b == a) continue;
        const Weight gain = conn.to(b) - internal;
        if (gain > best_any_gain || (gain == best_any_gain && best_any != a && b < best_any)) {
          best_any = b;
          best_any_gain = gain;
        }
        if (loads.weight[b] + w <= cap &&
            (gain > best_fit_gain || (gain == best_fit_gain && b < best_fit))) {
          best_fit = b;
          best_fit_gain = gain;
        }
      }
      if (best_fit == a && best_any == a) continue;
      const bool can_leave = loads.count[a] > 1;
      if (can_leave && best_fit != a &&
          (best_fit_gain > 0 ||
           (best_fit_gain == 0 && loads.weight[best_fit] + w < loads.weight[a]))) {
        loads.move(g, part, u, best_fit);
        ++moves;
      } else if (best_any != a && best_any_gain > 0) {
        blocked.push_back({u, a, best_any, best_any_gain});
      }
    }

    // Pairwise swaps for positive-gain moves that the balance gate blocked.
    std::sort(blocked.begin(), blocked.end(), [](const Blocked& x, const Blocked& y) {
      if (x.from != y.from) return x.from < y.from;
      if (x.to != y.to) return x.to < y.to;
      if (x.gain != y.gain) return x.gain > y.gain;
      return x.node < y.node;
    });
    auto range = [&](PartId from, PartId to) {
      const auto lo = std::lower_bound(blocked.begin(), blocked.end(), std::pair{from, to},
                                       [](const Blocked& x, const std::pair<PartId, PartId>& key) {
                                         return std::pair{x.from, x.to} < key;
                                       });
      auto hi = lo;
      while (hi != blocked.end() && hi->from == from && hi->to == to) ++hi;
      return std::pair{lo, hi};
    };
    constexpr std::size_t partner_window = 64;
    std::vector<char> used;
    for (auto it = blocked.begin(); it != blocked.end();) {
      const PartId a = it->from;
      const PartId b = it->to;
      const auto [lo, hi] = range(a, b);
      it = hi;
      if (a > b) continue;
      const auto [rlo, rhi] = range(b, a);
      if (rlo == rhi) continue;
      used.assign(static_cast<std::size_t>(rhi - rlo), 0);
      for (auto cu = lo; cu != hi; ++cu) {
        const NodeId u = cu->node;
        if (part[u] != a) continue;
        std::size_t examined = 0;
        for (auto cv = rlo; cv != rhi && examined < partner_window; ++cv) {
          const auto idx = static_cast<std::size_t>(cv - rlo);
          if (used[idx]) continue;
          const NodeId v = cv->node;
          if (part[v] != b) continue;
          ++examined;
          const Weight combined = gain_to(g, part, u, b) + gain_to(g, part, v, a) -
                                  2 * g.edge_weight(u, v);
          const Weight wu = g.node_weights[u];
          const Weight wv = g.node_weights[v];
          const Weight la = loads.weight[a] - wu + wv;
          const Weight lb = loads.weight[b] - wv + wu;
          const bool balanced = (la <= cap || la <= loads.weight[a]) &&
                                (lb <= cap || lb <= loads.weight[b]);
          if (combined > 0 && balanced) {
            loads.move(g, part, u, b);
            loads.move(g, part, v, a);
            used[idx] = 1;
            ++moves;
            break;
          }
        }
      }
    }
    if (moves == 0) break;
  }
}

// Moves nodes out of parts heavier than `cap`, choosing the cheapest moves
// first. Best effort when node weights make the cap unreachable.
inline void rebalance(const WeightedGraph& g, std::vector<PartId>& part, PartId k, Weight cap) {
  if (k < 2) return;
  Loads loads(g, part, k);
  PartConnections conn(k);
  auto best_move = [&](NodeId u) -> std::pair<Weight, PartId> {
    const PartId a = part[u];
    conn.gather(g, part, u);
    Weight best_gain = std::numeric_limits<Weight>::min();
    PartId best = a;
    for (PartId b = 0; b < k; ++b) {
      if (b == a || loads.weight[b] + g.node_weights[u] > cap) continue;
      const Weight gain = conn.to(b) - conn.to(a);
      if (gain > best_gain ||
          (gain == best_gain && loads.weight[b] < loads.weight[best])) {
        best_gain = gain;
        best = b;
      }
    }
    return {best_gain, best};
  };
  struct Candidate {
    Weight gain;
    NodeId node;
    bool operator<(const Candidate& o) const {
      return gain != o.gain ? gain < o.gain : node > o.node;
    }
  };
  for (PartId a = 0; a < k; ++a) {
    if (loads.weight[a] <= cap) continue;
    std::priority_queue<Candidate> heap;
    for (NodeId u = 0; u < g.node_count(); ++u) {
      if (part[u] != a) continue;
      const auto [gain, target] = best_move(u);
      if (target != a) heap.push({gain, u});
    }
    while (loads.weight[a] > cap && !heap.empty() && loads.count[a] > 1) {
      const Candidate top = heap.top();
      heap.pop();
      const auto [gain, target] = best_move(top.node);
      if (target == a) continue;
      if (gain < top.gain) {
        heap.push({gain, top.node});
        continue;
      }
      loads.move(g, part, top.node, target);
    }
  }
}

// Gives every empty part one node taken from the part with the most nodes.
inline void fill_empty_parts(const WeightedGraph& g, std::vector<PartId>& part, PartId k) {
  Loads loads(g, part, k);
  PartConnections conn(k);
  for (PartId p = 0; p < k; ++p) {
    if (loads.count[p] != 0) continue;
    PartId donor = 0;
    for (PartId q = 1; q < k; ++q) {
      if (loads.count[q] > loads.count[donor]) donor = q;
    }
    if (loads.count[donor] < 2) return;
    NodeId pick = 0;
    Weight pick_internal = std::numeric_limits<Weight>::max();
    for (NodeId u = 0; u < g.node_count(); ++u) {
      if (part[u] != donor) continue;
      conn.gather(g, part, u);
      const Weight internal = conn.to(donor) - conn.to(p);
      if (internal < pick_internal) {
        pick_internal = internal;
        pick = u;
      }
    }
    loads.move(g, part, pick, p);
  }
}

// Pseudo-peripheral node of the still-unassigned part of a component:
// farthest from its smallest id, ties to the smaller id.
inline NodeId peripheral_node(const WeightedGraph& g, std::span<const NodeId> nodes,
                              const std::vector<char>& open, std::vector<std::uint32_t>& dist) {
  NodeId start = std::numeric_limits<NodeId>::max();
  for (NodeId u : nodes) {
    if (open[u]) start = std::min(start, u);
  }
  std::vector<NodeId> queue{start};
  dist[start] = 0;
  NodeId far = start;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const NodeId u = queue[head];
    if (dist[u] > dist[far] || (dist[u] == dist[far] && u < far)) far = u;
    for (NodeId v : g.neighbors(u)) {
      if (!open[v] || dist[v] != std::numeric_limits<std::uint32_t>::max()) continue;
      dist[v] = dist[u] + 1;
      queue.push_back(v);
    }
  }
  for (NodeId u : queue) dist[u] = std::numeric_limits<std::uint32_t>::max();
  return far;
}

/**
 * Initial k-way assignment. Components are taken heaviest first; one that
 * fits whole into a part (up to the ideal weight) goes to the first such
 * part, otherwise it is carved up by greedy region growing into the
 * lightest parts, each region started from a peripheral node and extended
 * by the open node most strongly connected to it. A nonzero `trial` starts
 * regions from pseudo-random open nodes instead.
 */
inline std::vector<PartId> initial_partition(const WeightedGraph& g, PartId k, Weight cap,
                                             std::uint64_t trial = 0) {
  const std::size_t n = g.node_count();
  constexpr PartId unassigned = std::numeric_limits<PartId>::max();
  std::vector<PartId> part(n, unassigned);
  if (k == 1) {
    std::fill(part.begin(), part.end(), 0);
    return part;
  }
  const Weight total = g.total_node_weight();
  const Weight ideal = (total + static_cast<Weight>(k) - 1) / static_cast<Weight>(k);

  struct Component {
    Weight weight = 0;
    std::vector<NodeId> nodes;  // ascending after sort
  };
  std::vector<Component> comps;
  {
    std::vector<char> seen(n, 0);
    for (NodeId s = 0; s < n; ++s) {
      if (seen[s]) continue;
      Component c;
      c.nodes.push_back(s);
      seen[s] = 1;
      for (std::size_t head = 0; head < c.nodes.size(); ++head) {
        const NodeId u = c.nodes[head];
        c.weight += g.node_weights[u];
        for (NodeId v : g.neighbors(u)) {
          if (!seen[v]) {
            seen[v] = 1;
            c.nodes.push_back(v);
          }
        }
      }
      std::sort(c.nodes.begin(), c.nodes.end());
      comps.push_back(std::move(c));
    }
  }
  std::stable_sort(comps.begin(), comps.end(),
                   [](const Component& x, const Component& y) { return x.weight > y.weight; });

  std::vector<Weight> load(k, 0);
  auto lightest = [&] {
    return static_cast<PartId>(std::min_element(load.begin(), load.end()) - load.begin());
  };
  std::vector<char> open(n, 0);
  std::vector<std::uint32_t> dist(n, std::numeric_limits<std::uint32_t>::max());
  std::vector<Weight> pull(n, 0);

  for (const Component& comp : comps) {
    PartId fit = unassigned;
    for (PartId p = 0; p < k; ++p) {
      if (load[p] + comp.weight <= ideal) {
        fit = p;
        break;
      }
    }
    if (fit != unassigned) {
      for (NodeId u : comp.nodes) part[u] = fit;
      load[fit] += comp.weight;
      continue;
    }

    for (NodeId u : comp.nodes) open[u] = 1;
    std::size_t remaining = comp.nodes.size();
    while (remaining > 0) {
      const PartId p = lightest();
      std::size_t grown = 0;
      if (load[p] < ideal) {
        NodeId seed = 0;
        if (trial == 0) {
          seed = peripheral_node(g, comp.nodes, open, dist);
        } else {
          std::size_t pick = splitmix64(trial + remaining) % remaining;
          for (NodeId u : comp.nodes) {
            if (open[u] && pick-- == 0) {
              seed = u;
              break;
            }
          }
        }
        struct Entry {
          Weight pull;
          NodeId node;
          bool operator<(const Entry& o) const {
            return pull != o.pull ? pull < o.pull : node > o.node;
          }
        };
        std::priority_queue<Entry> frontier;
        std::vector<NodeId> touched{seed};
        frontier.push({0, seed});
        while (!frontier.empty() && load[p] < ideal) {
          const Entry top = frontier.top();
          frontier.pop();
          const NodeId v = top.node;
          if (!open[v] || top.pull != pull[v]) continue;
          if (load[p] + g.node_weights[v] > cap) continue;
          open[v] = 0;
          part[v] = p;
          load[p] += g.node_weights[v];
          --remaining;
          ++grown;
          const auto adj = g.neighbors(v);
          const auto wts = g.weights(v);
          for (std::size_t j = 0; j < adj.size(); ++j) {
            if (!open[adj[j]]) continue;
            pull[adj[j]] += wts[j];
            touched.push_back(adj[j]);
            frontier.push({pull[adj[j]], adj[j]});
          }
        }
        for (NodeId t : touched) pull[t] = 0;
      }
      if (grown == 0) {
        // Every part is full or the open nodes are too heavy to fit:
        // hand out what is left one node at a time.
        for (NodeId u : comp.nodes) {
          if (!open[u]) continue;
          const PartId q = lightest();
          open[u] = 0;
          part[u] = q;
          load[q] += g.node_weights[u];
        }
        remaining = 0;
      }
    }
  }
  return part;
}

}  // namespace detail

/// Greedy boundary refinement of an existing assignment under the balance
/// bound for `epsilon`; at most `passes` sweeps. The cut never increases.
inline PartitionAssignment refine_boundary(const WeightedGraph& g, PartitionAssignment assignment,
                                           double epsilon, std::size_t passes) {
  detail::require(assignment.part.size() == g.node_count(), "assignment length mismatch");
  for (PartId p : assignment.part) detail::require(p < assignment.k, "part id out of range");
  const Weight cap = max_part_weight(g.total_node_weight(), assignment.k, epsilon);
  detail::refine(g, assignment.part, assignment.k, cap, passes);
  assignment.epsilon = epsilon;
  assignment.cut = edge_cut(g, assignment.part);
  return assignment;
}

struct PartitionOptions {
  std::size_t refine_passes = 8;
  /// Initial partitions tried on the coarsest graph; the best cut is kept.
  std::size_t initial_trials = 8;
};

inline PartitionAssignment partition_kway(const WeightedGraph& g, PartId k, double epsilon,
                                          std::uint64_t seed, const PartitionOptions& opts = {}) {
  const std::size_t n = g.node_count();
  detail::require(k >= 1, "k must be at least 1");
  detail::require(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must lie in [0,1]");
  if (k > n) {
    throw Error(ErrorCode::infeasible, "cannot split " + std::to_string(n) + " nodes into " +
                                           std::to_string(k) + " non-empty parts");
  }
  PartitionAssignment result;
  result.k = k;
  result.epsilon = epsilon;
  if (k == 1) {
    result.part.assign(n, 0);
    return result;
  }

  const Weight total = g.total_node_weight();
  const Weight cap = max_part_weight(total, k, epsilon);
  const std::size_t coarsen_to = std::max<std::size_t>(4 * static_cast<std::size_t>(k), 64);
  const Weight heaviest = std::max<Weight>(
      1, (3 * total) / (2 * static_cast<Weight>(coarsen_to)));

  std::vector<Coarsening> levels;
  auto graph_at = [&](std::size_t level) -> const WeightedGraph& {
    return level == 0 ? g : levels[level - 1].graph;
  };
  while (graph_at(levels.size()).node_count() > coarsen_to) {
    const WeightedGraph& fine = graph_at(levels.size());
    Coarsening next = coarsen(fine, detail::splitmix64(seed + levels.size()), heaviest);
    const std::size_t fine_n = fine.node_count();
    const std::size_t coarse_n = next.graph.node_count();
    if (coarse_n == fine_n) break;
    levels.push_back(std::move(next));
    if (coarse_n * 20 > fine_n * 19) break;  // matching has stalled
  }

  std::vector<PartId> part;
  {
    const WeightedGraph& coarsest = graph_at(levels.size());
    // Ranked by total overload first, then by cut.
    std::pair<Weight, Weight> best{0, 0};
    for (std::size_t t = 0; t < std::max<std::size_t>(1, opts.initial_trials); ++t) {
      auto trial = detail::initial_partition(
          coarsest, k, cap, t == 0 ? 0 : detail::splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * t)));
      detail::rebalance(coarsest, trial, k, cap);
      detail::refine(coarsest, trial, k, cap, opts.refine_passes);
      std::vector<Weight> load(k, 0);
      for (NodeId u = 0; u < coarsest.node_count(); ++u) load[trial[u]] += coarsest.node_weights[u];
      Weight overload = 0;
      for (Weight w : load) overload += std::max<Weight>(0, w - cap);
      const std::pair<Weight, Weight> score{overload, edge_cut(coarsest, trial)};
      if (t == 0 || score < best) {
        best = score;
        part = std::move(trial);
      }
    }
  }
  for (std::size_t level = levels.size();; --level) {
    const WeightedGraph& current = graph_at(level);
    if (level < levels.size()) {
      const auto& mapping = levels[level].mapping;
      std::vector<PartId> finer(current.node_count());
      for (NodeId u = 0; u < current.node_count(); ++u) finer[u] = part[mapping[u]];
      part = std::move(finer);
    }
    detail::rebalance(current, part, k, cap);
    detail::refine(current, part, k, cap, opts.refine_passes);
    if (level == 0) break;
  }
  detail::fill_empty_parts(g, part, k);
  detail::rebalance(g, part, k, cap);
  detail::refine(g, part, k, cap, opts.refine_passes);

  result.cut = edge_cut(g, part);
  result.part = std::move(part);
  return result;
}

inline PartitionAssignment partition_kway(const Graph& g, PartId k, double epsilon,
                                          std::uint64_t seed, const PartitionOptions& opts = {}) {
  return partition_kway(WeightedGraph::from_graph(g), k, epsilon, seed, opts);
}

}  // namespace gmine
