#pragma once

// JSON views of the library's results, shared by the CLI and the HTTP
// service so both emit identical shapes.

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmine/consub.hpp"
#include "gmine/error.hpp"
#include "gmine/gtree.hpp"
#include "gmine/navigator.hpp"

namespace gmine::json {

using nlohmann::json;

inline json error_body(ErrorCode code, const std::string& message) {
  return {{"error", {{"code", std::string(code_name(code))}, {"message", message}}}};
}

inline json tree_node_summary(const GTreeNode& node) {
  return {{"id", node.id},
          {"parent", node.parent ? json(*node.parent) : json(nullptr)},
          {"level", node.level},
          {"member_count", node.member_count},
          {"internal_edges", node.internal_edges},
          {"is_leaf", node.is_leaf()},
          {"children", node.children}};
}

inline json connectivity(const std::vector<ConnectivityEdge>& edges) {
  json out = json::array();
  for (const auto& c : edges) out.push_back({{"a", c.a}, {"b", c.b}, {"weight", c.weight}});
  return out;
}

inline json context(const GTree& tree, const ContextSet& ctx) {
  json nodes = json::array();
  for (TreeNodeId id : ctx.visible()) nodes.push_back(tree_node_summary(tree.node(id)));
  return {{"focus", ctx.focus},
          {"ancestors", ctx.ancestors},
          {"siblings", ctx.siblings},
          {"children", ctx.children},
          {"nodes", std::move(nodes)},
          {"connectivity", connectivity(ctx.visible_connectivity)}};
}

inline json search(const std::string& label, const std::vector<NavigationPath>& matches) {
  json out = json::array();
  for (const auto& m : matches) {
    out.push_back({{"global_id", m.global_id},
                   {"leaf", m.path.back()},
                   {"local_index", m.local_index},
                   {"path", m.path}});
  }
  return {{"label", label}, {"matches", std::move(out)}};
}

inline json leaf_subgraph(const LeafSubgraph& leaf) {
  json nodes = json::array();
  json edges = json::array();
  const Graph& g = leaf.graph;
  for (NodeId u = 0; u < g.node_count(); ++u) {
    nodes.push_back({{"local", u},
                     {"global_id", leaf.global_ids[u]},
                     {"label", g.label(u)},
                     {"degree", g.degree(u)}});
  }
  for (const Edge& e : g.edges()) {
    edges.push_back({leaf.global_ids[e.from], leaf.global_ids[e.to]});
  }
  return {{"leaf", leaf.leaf}, {"directed", g.directed()}, {"nodes", std::move(nodes)},
          {"edges", std::move(edges)}};
}

inline json components(const Components& c) {
  return {{"count", c.count}, {"component", c.id}};
}

inline json metrics(const LeafMetrics& m) {
  json hist = json::array();
  for (const auto& [degree, count] : m.degree_histogram) {
    hist.push_back({{"degree", degree}, {"count", count}});
  }
  json hops = json::array();
  for (const auto& e : m.hop_plot.entries) hops.push_back({{"hops", e.hops}, {"pairs", e.pairs}});
  return {{"leaf", m.leaf},
          {"global_ids", m.global_ids},
          {"degree_histogram", std::move(hist)},
          {"hop_plot", {{"approximate", m.hop_plot.approximate}, {"entries", std::move(hops)}}},
          {"weak_components", components(m.weak)},
          {"strong_components", components(m.strong)},
          {"pagerank", m.pagerank}};
}

inline json connection_subgraph(const Graph& g, const ConnectionSubgraph& sub) {
  json nodes = json::array();
  for (std::size_t i = 0; i < sub.nodes.size(); ++i) {
    const NodeId v = sub.nodes[i];
    const bool is_source =
        std::find(sub.sources.begin(), sub.sources.end(), v) != sub.sources.end();
    nodes.push_back(
        {{"id", v}, {"label", g.label(v)}, {"goodness", sub.goodness[i]}, {"source", is_source}});
  }
  json edges = json::array();
  for (const Edge& e : sub.edges) edges.push_back({e.from, e.to});
  return {{"sources", sub.sources},
          {"budget", sub.budget},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"paths", sub.paths}};
}

/// Whole tree with leaf members, for small transient hierarchies. When
/// `ids` is given, member i of the built graph is reported as ids[i].
inline json tree(const GTreeBuild& build, std::span<const NodeId> ids = {}) {
  json nodes = json::array();
  for (const auto& node : build.tree.nodes) {
    json entry = tree_node_summary(node);
    entry["connectivity"] = connectivity(node.connectivity);
    if (node.is_leaf()) {
      std::vector<NodeId> members = build.leaves.at(node.id).global_ids;
      if (!ids.empty()) {
        for (NodeId& m : members) m = ids[m];
      }
      entry["members"] = std::move(members);
    }
    nodes.push_back(std::move(entry));
  }
  return {{"n", build.tree.global_n},
          {"e", build.tree.global_e},
          {"fanout", build.tree.fanout},
          {"levels", build.tree.levels},
          {"nodes", std::move(nodes)}};
}

}  // namespace gmine::json
