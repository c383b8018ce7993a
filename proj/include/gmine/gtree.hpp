#pragma once

// The G-Tree: communities-within-communities produced by recursive k-way
// partitioning, with connectivity edges summarising crossing edges.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gmine/error.hpp"
#include "gmine/graph.hpp"
#include "gmine/partition.hpp"

namespace gmine {

using TreeNodeId = std::uint32_t;

/// Crossing-edge count between two tree nodes, a < b.
struct ConnectivityEdge {
  TreeNodeId a;
  TreeNodeId b;
  std::uint64_t weight;

  friend bool operator==(const ConnectivityEdge&, const ConnectivityEdge&) = default;
};

struct GTreeNode {
  TreeNodeId id = 0;
  std::optional<TreeNodeId> parent;
  std::uint32_t level = 0;
  std::vector<TreeNodeId> children;  // contiguous ids, ascending
  std::uint64_t member_count = 0;
  /// Graph edges with both endpoints inside this community.
  std::uint64_t internal_edges = 0;
  /// Between pairs of direct children; internal nodes only.
  std::vector<ConnectivityEdge> connectivity;
  /// Between this node and each sibling of its parent (a = this node).
  /// Lets a context view show child-to-sibling links without leaf access.
  std::vector<ConnectivityEdge> parent_sibling_connectivity;

  bool is_leaf() const noexcept { return children.empty(); }

  friend bool operator==(const GTreeNode&, const GTreeNode&) = default;
};

/// One indexed label: the node's leaf, its index within the leaf, and its
/// global id.
struct LabelEntry {
  std::string label;
  TreeNodeId leaf = 0;
  std::uint32_t local_index = 0;
  NodeId global_id = 0;

  friend bool operator==(const LabelEntry&, const LabelEntry&) = default;
};

/// Leaf community's concrete subgraph. Local id i is global_ids[i].
struct LeafSubgraph {
  TreeNodeId leaf = 0;
  Graph graph;
  std::vector<NodeId> global_ids;

  friend bool operator==(const LeafSubgraph&, const LeafSubgraph&) = default;
};

class GTree {
 public:
  std::vector<GTreeNode> nodes;
  std::uint32_t levels = 0;
  std::uint32_t fanout = 0;
  std::uint64_t global_n = 0;
  std::uint64_t global_e = 0;
  bool directed = false;
  std::vector<LabelEntry> label_index;  // sorted by (label, global_id)

  const GTreeNode& node(TreeNodeId id) const {
    if (id >= nodes.size()) {
      throw Error(ErrorCode::not_found, "unknown tree node " + std::to_string(id));
    }
    return nodes[id];
  }
  const GTreeNode& root() const { return node(0); }

  std::vector<TreeNodeId> leaves() const {
    std::vector<TreeNodeId> out;
    for (const auto& n : nodes) {
      if (n.is_leaf()) out.push_back(n.id);
    }
    return out;
  }

  /// Root-first chain of strict ancestors of `id`.
  std::vector<TreeNodeId> ancestors(TreeNodeId id) const {
    std::vector<TreeNodeId> chain;
    for (auto p = node(id).parent; p; p = nodes[*p].parent) chain.push_back(*p);
    std::reverse(chain.begin(), chain.end());
    return chain;
  }

  std::vector<TreeNodeId> siblings(TreeNodeId id) const {
    std::vector<TreeNodeId> out;
    const auto& n = node(id);
    if (!n.parent) return out;
    for (TreeNodeId s : nodes[*n.parent].children) {
      if (s != id) out.push_back(s);
    }
    return out;
  }

  /// Stored crossing-edge count between siblings `a` and `b` (0 if none).
  std::uint64_t connectivity_between(TreeNodeId a, TreeNodeId b) const {
    const auto& na = node(a);
    const auto& nb = node(b);
    if (a == b || !na.parent || na.parent != nb.parent) {
      throw Error(ErrorCode::contract, "tree nodes " + std::to_string(a) + " and " +
                                           std::to_string(b) + " are not siblings");
    }
    const auto [lo, hi] = std::minmax(a, b);
    for (const auto& c : nodes[*na.parent].connectivity) {
      if (c.a == lo && c.b == hi) return c.weight;
    }
    return 0;
  }

  /// All index entries for an exact label, ordered by global id. Empty
  /// labels are never indexed.
  std::vector<LabelEntry> find_label(std::string_view label) const {
    std::vector<LabelEntry> out;
    if (label.empty()) return out;
    auto it = std::lower_bound(label_index.begin(), label_index.end(), label,
                               [](const LabelEntry& e, std::string_view l) { return e.label < l; });
    for (; it != label_index.end() && it->label == label; ++it) out.push_back(*it);
    return out;
  }

  /// ASCII case-insensitive variant of find_label.
  std::vector<LabelEntry> find_label_casefold(std::string_view label) const {
    auto fold = [](std::string_view s) {
      std::string out(s);
      for (char& ch : out) {
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
      }
      return out;
    };
    std::vector<LabelEntry> out;
    if (label.empty()) return out;
    const std::string key = fold(label);
    for (const auto& e : label_index) {
      if (fold(e.label) == key) out.push_back(e);
    }
    std::sort(out.begin(), out.end(),
              [](const LabelEntry& x, const LabelEntry& y) { return x.global_id < y.global_id; });
    return out;
  }

  std::size_t shallow_leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [&](const auto& n) {
      return n.is_leaf() && n.level + 1 < levels;
    }));
  }

  friend bool operator==(const GTree&, const GTree&) = default;
};

struct GTreeBuildOptions {
  std::uint32_t fanout = 5;
  std::uint32_t levels = 5;
  double epsilon = 0.05;
  std::uint64_t seed = 0;
  /// Reject graphs too small for `levels` full levels of `fanout` splits.
  bool strict_depth = true;
  PartitionOptions partition;
};

struct GTreeBuild {
  GTree tree;
  std::map<TreeNodeId, LeafSubgraph> leaves;
};

namespace detail {

inline std::uint64_t required_nodes(std::uint32_t fanout, std::uint32_t levels) {
  std::uint64_t need = 1;
  for (std::uint32_t i = 1; i < levels; ++i) {
    if (need > std::numeric_limits<std::uint64_t>::max() / fanout) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    need *= fanout;
  }
  return need;
}

}  // namespace detail

/**
 * Recursive partitioning into `levels` levels of `fanout` communities each.
 * Tree node ids are assigned breadth-first so each node's children are
 * contiguous. A community smaller than 2*fanout becomes a leaf early.
 * Children are ordered by their smallest member id.
 */
inline GTreeBuild build_gtree(const Graph& g, const GTreeBuildOptions& opts) {
  detail::require(opts.fanout >= 2, "fanout must be at least 2");
  detail::require(opts.levels >= 2, "levels must be at least 2");
  const std::size_t n = g.node_count();
  const std::uint64_t need = detail::required_nodes(opts.fanout, opts.levels);
  if (opts.strict_depth && n < need) {
    throw Error(ErrorCode::infeasible, std::to_string(n) + " nodes cannot fill " +
                                           std::to_string(opts.levels) + " levels of fanout " +
                                           std::to_string(opts.fanout) + " (need " +
                                           std::to_string(need) + ")");
  }

  GTreeBuild out;
  GTree& tree = out.tree;
  tree.levels = opts.levels;
  tree.fanout = opts.fanout;
  tree.global_n = n;
  tree.global_e = g.edge_count();
  tree.directed = g.directed();

  const WeightedGraph weighted = WeightedGraph::from_graph(g);
  std::vector<NodeId> scratch(n, std::numeric_limits<NodeId>::max());
  std::vector<std::vector<NodeId>> members;

  tree.nodes.push_back(GTreeNode{});
  members.emplace_back(n);
  for (NodeId u = 0; u < n; ++u) members[0][u] = u;

  for (TreeNodeId id = 0; id < tree.nodes.size(); ++id) {
    const std::uint32_t level = tree.nodes[id].level;
    std::vector<NodeId> own = std::move(members[id]);
    tree.nodes[id].member_count = own.size();
    const bool bottom = level + 1 >= opts.levels;
    if (bottom || own.size() < 2 * static_cast<std::size_t>(opts.fanout)) {
      LeafSubgraph leaf;
      leaf.leaf = id;
      leaf.graph = g.induced(own);
      leaf.global_ids = std::move(own);
      out.leaves.emplace(id, std::move(leaf));
      continue;
    }
    const WeightedGraph sub = weighted.induced(own, scratch);
    const std::uint64_t seed = detail::splitmix64(opts.seed ^ detail::splitmix64(id));
    const PartitionAssignment split =
        partition_kway(sub, opts.fanout, opts.epsilon, seed, opts.partition);

    std::vector<std::vector<NodeId>> groups(opts.fanout);
    for (std::size_t i = 0; i < own.size(); ++i) groups[split.part[i]].push_back(own[i]);
    std::erase_if(groups, [](const auto& grp) { return grp.empty(); });
    std::sort(groups.begin(), groups.end(),
              [](const auto& x, const auto& y) { return x.front() < y.front(); });
    for (auto& grp : groups) {
      GTreeNode child;
      child.id = static_cast<TreeNodeId>(tree.nodes.size());
      child.parent = id;
      child.level = level + 1;
      tree.nodes[id].children.push_back(child.id);
      tree.nodes.push_back(std::move(child));
      members.push_back(std::move(grp));
    }
  }

  // Route every edge through the hierarchy: it is internal to each common
  // ancestor, crosses between siblings where the paths diverge, and links
  // each endpoint's next-level community to the other endpoint's branch.
  std::vector<std::vector<TreeNodeId>> path_of(n);
  for (const auto& [leaf_id, leaf] : out.leaves) {
    std::vector<TreeNodeId> chain = tree.ancestors(leaf_id);
    chain.push_back(leaf_id);
    for (NodeId u : leaf.global_ids) path_of[u] = chain;
  }
  std::vector<std::map<std::pair<TreeNodeId, TreeNodeId>, std::uint64_t>> sibling(tree.nodes.size());
  std::vector<std::map<TreeNodeId, std::uint64_t>> uncle(tree.nodes.size());
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v : g.neighbors(u)) {
      if (!g.directed() && v < u) continue;
      const auto& pu = path_of[u];
      const auto& pv = path_of[v];
      std::size_t d = 0;
      while (d < pu.size() && d < pv.size() && pu[d] == pv[d]) {
        ++tree.nodes[pu[d]].internal_edges;
        ++d;
      }
      if (d == pu.size() || d == pv.size()) continue;  // same leaf
      const TreeNodeId parent = pu[d - 1];
      ++sibling[parent][std::minmax(pu[d], pv[d])];
      if (d + 1 < pu.size()) ++uncle[pu[d + 1]][pv[d]];
      if (d + 1 < pv.size()) ++uncle[pv[d + 1]][pu[d]];
    }
  }
  for (TreeNodeId id = 0; id < tree.nodes.size(); ++id) {
    for (const auto& [pair, w] : sibling[id]) {
      tree.nodes[id].connectivity.push_back({pair.first, pair.second, w});
    }
    for (const auto& [other, w] : uncle[id]) {
      tree.nodes[id].parent_sibling_connectivity.push_back({id, other, w});
    }
  }

  for (const auto& [leaf_id, leaf] : out.leaves) {
    for (std::size_t i = 0; i < leaf.global_ids.size(); ++i) {
      const std::string& label = g.label(leaf.global_ids[i]);
      if (label.empty()) continue;
      tree.label_index.push_back({label, leaf_id, static_cast<std::uint32_t>(i), leaf.global_ids[i]});
    }
  }
  std::sort(tree.label_index.begin(), tree.label_index.end(),
            [](const LabelEntry& x, const LabelEntry& y) {
              return x.label != y.label ? x.label < y.label : x.global_id < y.global_id;
            });
  return out;
}

/// Sum of connectivity weights created at each level (index = level of the
/// parent whose children they join).
inline std::vector<std::uint64_t> per_level_cuts(const GTree& tree) {
  std::vector<std::uint64_t> cuts(tree.levels > 0 ? tree.levels - 1 : 0, 0);
  for (const auto& node : tree.nodes) {
    for (const auto& c : node.connectivity) {
      if (node.level < cuts.size()) cuts[node.level] += c.weight;
    }
  }
  return cuts;
}

}  // namespace gmine
