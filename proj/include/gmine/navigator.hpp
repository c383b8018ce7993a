#pragma once

// Context selection over an open G-Tree (focus, ancestors, siblings and
// children) and on-demand metrics for leaf communities.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string_view>
#include <utility>
#include <vector>

#include "gmine/error.hpp"
#include "gmine/gtree.hpp"
#include "gmine/gtree_file.hpp"
#include "gmine/metrics.hpp"

namespace gmine {

/// The tree nodes worth drawing around a focus community.
struct ContextSet {
  TreeNodeId focus = 0;
  std::vector<TreeNodeId> ancestors;  // root first, focus excluded
  std::vector<TreeNodeId> siblings;
  std::vector<TreeNodeId> children;
  std::vector<ConnectivityEdge> visible_connectivity;  // sorted by (a, b)

  std::vector<TreeNodeId> visible() const {
    std::vector<TreeNodeId> out = ancestors;
    out.push_back(focus);
    out.insert(out.end(), siblings.begin(), siblings.end());
    out.insert(out.end(), children.begin(), children.end());
    std::sort(out.begin(), out.end());
    return out;
  }
};

/**
 * Focus-plus-context selection. Links among the focus and its siblings come
 * from the parent's records, links among children from the focus's own
 * records, and child-to-sibling links from each child's parent-sibling
 * records (the per-child share of the focus-to-sibling count). Ancestors
 * enclose everything else so they get no links.
 */
inline ContextSet tomahawk_context(const GTree& tree, TreeNodeId focus) {
  const GTreeNode& node = tree.node(focus);
  ContextSet ctx;
  ctx.focus = focus;
  ctx.ancestors = tree.ancestors(focus);
  ctx.siblings = tree.siblings(focus);
  ctx.children = node.children;
  if (node.parent) {
    const auto& from_parent = tree.nodes[*node.parent].connectivity;
    ctx.visible_connectivity.insert(ctx.visible_connectivity.end(), from_parent.begin(),
                                    from_parent.end());
  }
  ctx.visible_connectivity.insert(ctx.visible_connectivity.end(), node.connectivity.begin(),
                                  node.connectivity.end());
  for (TreeNodeId child : node.children) {
    for (const auto& c : tree.nodes[child].parent_sibling_connectivity) {
      const auto [lo, hi] = std::minmax(c.a, c.b);
      ctx.visible_connectivity.push_back({lo, hi, c.weight});
    }
  }
  std::erase_if(ctx.visible_connectivity, [](const ConnectivityEdge& c) { return c.weight == 0; });
  std::sort(ctx.visible_connectivity.begin(), ctx.visible_connectivity.end(),
            [](const ConnectivityEdge& x, const ConnectivityEdge& y) {
              return std::pair{x.a, x.b} < std::pair{y.a, y.b};
            });
  return ctx;
}

inline ContextSet tomahawk_context(const GTreeHandle& handle, TreeNodeId focus) {
  return tomahawk_context(handle.tree(), focus);
}

struct LeafMetrics {
  TreeNodeId leaf = 0;
  std::vector<NodeId> global_ids;  // per-node arrays below follow this order
  DegreeHistogram degree_histogram;
  HopPlot hop_plot;
  Components weak;
  Components strong;
  std::vector<double> pagerank;
};

struct MetricOptions {
  PageRankOptions pagerank;
  HopPlotOptions hops;
};

inline LeafMetrics compute_leaf_metrics(const LeafSubgraph& leaf, const MetricOptions& opts = {}) {
  LeafMetrics m;
  m.leaf = leaf.leaf;
  m.global_ids = leaf.global_ids;
  m.degree_histogram = degree_distribution(leaf.graph);
  m.weak = weak_components(leaf.graph);
  m.strong = strong_components(leaf.graph);
  if (leaf.graph.node_count() > 0) {
    m.hop_plot = hop_plot(leaf.graph, opts.hops);
    m.pagerank = pagerank(leaf.graph, opts.pagerank);
  }
  return m;
}

inline LeafMetrics leaf_metrics(const GTreeHandle& handle, TreeNodeId leaf,
                                const MetricOptions& opts = {}) {
  return compute_leaf_metrics(*handle.load_leaf(leaf), opts);
}

/// Where a labelled node lives: root-to-leaf tree path plus its indices.
struct NavigationPath {
  std::vector<TreeNodeId> path;
  std::uint32_t local_index = 0;
  NodeId global_id = 0;
};

/// Every node carrying `label`, ordered by global id. Empty when unknown.
inline std::vector<NavigationPath> find_node(const GTreeHandle& handle, std::string_view label) {
  std::vector<NavigationPath> out;
  for (const LabelEntry& hit : handle.label_lookup(label)) {
    NavigationPath p;
    p.path = handle.tree().ancestors(hit.leaf);
    p.path.push_back(hit.leaf);
    p.local_index = hit.local_index;
    p.global_id = hit.global_id;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace gmine
