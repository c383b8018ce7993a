#pragma once

// Immutable CSR graph plus the edge-list text format used for ingestion
// and for exporting extracted subgraphs.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gmine/error.hpp"

namespace gmine {

using NodeId = std::uint32_t;

struct Edge {
  NodeId from;
  NodeId to;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Counts of input entries dropped while building a graph.
struct DropCounts {
  std::size_t duplicates = 0;
  std::size_t self_loops = 0;
};

/**
 * Compressed sparse row adjacency structure.
 *
 * Adjacency lists are sorted ascending and free of duplicates and
 * self-loops. Undirected graphs store every edge in both lists, so
 * edge_count() is half the number of adjacency entries. Directed graphs
 * store out-neighbors only.
 */
class Graph {
 public:
  Graph() : offsets_(1, 0) {}

  /// Builds a graph from an arbitrary edge sequence. Self-loops and
  /// repeated edges are dropped and tallied in `drops` when given. For
  /// undirected graphs (u,v) and (v,u) denote the same edge.
  static Graph from_edges(std::size_t node_count, bool directed, std::span<const Edge> edges,
                          std::vector<std::string> labels = {}, DropCounts* drops = nullptr) {
    detail::require(node_count <= std::numeric_limits<NodeId>::max(),
                    "node count exceeds 32-bit id space");
    DropCounts local;
    std::vector<Edge> entries;
    entries.reserve(directed ? edges.size() : 2 * edges.size());
    for (const Edge& e : edges) {
      detail::require(e.from < node_count && e.to < node_count,
                      "edge endpoint out of range: " + std::to_string(e.from) + " " +
                          std::to_string(e.to));
      if (e.from == e.to) {
        ++local.self_loops;
        continue;
      }
      entries.push_back(e);
      if (!directed) entries.push_back({e.to, e.from});
    }
    std::sort(entries.begin(), entries.end());
    const auto unique_end = std::unique(entries.begin(), entries.end());
    const std::size_t removed = static_cast<std::size_t>(entries.end() - unique_end);
    local.duplicates = directed ? removed : removed / 2;
    entries.erase(unique_end, entries.end());

    Graph g;
    g.directed_ = directed;
    g.offsets_.assign(node_count + 1, 0);
    for (const Edge& e : entries) ++g.offsets_[e.from + 1];
    std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());
    g.neighbors_.reserve(entries.size());
    for (const Edge& e : entries) g.neighbors_.push_back(e.to);
    g.set_labels(std::move(labels));
    if (drops != nullptr) *drops = local;
    return g;
  }

  /// Adopts already-built CSR arrays, checking every structural invariant.
  static Graph from_csr(bool directed, std::vector<std::uint64_t> offsets,
                        std::vector<NodeId> neighbors, std::vector<std::string> labels = {}) {
    Graph g;
    g.directed_ = directed;
    g.offsets_ = std::move(offsets);
    g.neighbors_ = std::move(neighbors);
    g.set_labels(std::move(labels));
    g.validate();
    return g;
  }

  std::size_t node_count() const noexcept { return offsets_.size() - 1; }
  bool directed() const noexcept { return directed_; }
  std::size_t adjacency_entries() const noexcept { return neighbors_.size(); }
  std::size_t edge_count() const noexcept {
    return directed_ ? neighbors_.size() : neighbors_.size() / 2;
  }

  std::span<const NodeId> neighbors(NodeId u) const noexcept {
    return {neighbors_.data() + offsets_[u], neighbors_.data() + offsets_[u + 1]};
  }
  std::size_t degree(NodeId u) const noexcept {
    return static_cast<std::size_t>(offsets_[u + 1] - offsets_[u]);
  }
  bool has_edge(NodeId u, NodeId v) const noexcept {
    const auto adj = neighbors(u);
    return std::binary_search(adj.begin(), adj.end(), v);
  }

  std::span<const std::uint64_t> offsets() const noexcept { return offsets_; }
  std::span<const NodeId> adjacency() const noexcept { return neighbors_; }

  bool has_labels() const noexcept { return !labels_.empty(); }
  std::span<const std::string> labels() const noexcept { return labels_; }
  const std::string& label(NodeId u) const noexcept {
    static const std::string empty;
    return labels_.empty() ? empty : labels_[u];
  }

  Graph with_labels(std::vector<std::string> labels) const {
    Graph g = *this;
    g.set_labels(std::move(labels));
    return g;
  }

  /// Every edge as (u, v); for undirected graphs only u < v is reported.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count());
    for (NodeId u = 0; u < node_count(); ++u) {
      for (NodeId v : neighbors(u)) {
        if (directed_ || u < v) out.push_back({u, v});
      }
    }
    return out;
  }

  /// Same node set with direction ignored. Returns a copy for undirected input.
  Graph undirected() const {
    if (!directed_) return *this;
    return from_edges(node_count(), false, edges(), labels_);
  }

  /// Subgraph induced by `members` (sorted ascending, distinct). Local id i
  /// corresponds to members[i].
  Graph induced(std::span<const NodeId> members) const {
    std::vector<NodeId> local(node_count(), std::numeric_limits<NodeId>::max());
    for (std::size_t i = 0; i < members.size(); ++i) {
      detail::require(members[i] < node_count(), "induced: member out of range");
      detail::require(i == 0 || members[i - 1] < members[i],
                      "induced: members must be strictly increasing");
      local[members[i]] = static_cast<NodeId>(i);
    }
    Graph g;
    g.directed_ = directed_;
    g.offsets_.assign(members.size() + 1, 0);
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (NodeId v : neighbors(members[i])) {
        // Global adjacency is sorted and the local map is monotone, so
        // local adjacency stays sorted.
        if (local[v] != std::numeric_limits<NodeId>::max()) g.neighbors_.push_back(local[v]);
      }
      g.offsets_[i + 1] = g.neighbors_.size();
    }
    if (has_labels()) {
      std::vector<std::string> sub;
      sub.reserve(members.size());
      for (NodeId m : members) sub.push_back(labels_[m]);
      g.set_labels(std::move(sub));
    }
    return g;
  }

  void validate() const {
    detail::require(!offsets_.empty() && offsets_.front() == 0, "offsets must start at 0");
    detail::require(offsets_.back() == neighbors_.size(),
                    "offsets[n] must equal the adjacency entry count");
    const std::size_t n = node_count();
    for (std::size_t u = 0; u < n; ++u) {
      detail::require(offsets_[u] <= offsets_[u + 1], "offsets must be non-decreasing");
      const auto adj = neighbors(static_cast<NodeId>(u));
      for (std::size_t i = 0; i < adj.size(); ++i) {
        detail::require(adj[i] < n, "neighbor id out of range");
        detail::require(adj[i] != u, "self-loop in adjacency");
        detail::require(i == 0 || adj[i - 1] < adj[i], "adjacency must be sorted and unique");
        if (!directed_) {
          detail::require(has_edge(adj[i], static_cast<NodeId>(u)),
                          "undirected adjacency is not symmetric");
        }
      }
    }
    detail::require(labels_.empty() || labels_.size() == n, "label count must equal node count");
  }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  void set_labels(std::vector<std::string> labels) {
    detail::require(labels.empty() || labels.size() == node_count(),
                    "label count must equal node count");
    if (std::all_of(labels.begin(), labels.end(), [](const auto& s) { return s.empty(); })) {
      labels.clear();
    }
    labels_ = std::move(labels);
  }

  bool directed_ = false;
  std::vector<std::uint64_t> offsets_;
  std::vector<NodeId> neighbors_;
  std::vector<std::string> labels_;
};

// ---------------------------------------------------------------------------
// Edge-list text format
//
//   %% n=<count>        optional node-count header
//   # <id> <label>      label line; also registers <id> as a node
//   # anything else     comment
//   % anything          comment
//   <u> <v>             edge
// ---------------------------------------------------------------------------

struct EdgeListLoad {
  Graph graph;
  DropCounts dropped;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename Int>
bool parse_int(std::string_view token, Int& out) {
  if (token.empty()) return false;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc{} && ptr == token.data() + token.size();
}

// Splits off the first whitespace-delimited token.
inline std::pair<std::string_view, std::string_view> split_token(std::string_view s) {
  s = trim(s);
  const auto end = s.find_first_of(" \t");
  if (end == std::string_view::npos) return {s, {}};
  return {s.substr(0, end), trim(s.substr(end))};
}

[[noreturn]] inline void parse_failure(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::parse, "line " + std::to_string(line) + ": " + what);
}

}  // namespace detail

inline EdgeListLoad load_edge_list(std::istream& in, bool directed) {
  std::vector<Edge> edges;
  std::vector<std::pair<NodeId, std::string>> label_lines;
  std::uint64_t node_count = 0;
  std::string line;
  std::size_t line_no = 0;
  constexpr std::uint64_t id_limit = std::numeric_limits<NodeId>::max();

  auto see = [&](std::uint64_t id, std::size_t at) {
    if (id >= id_limit) detail::parse_failure(at, "node id exceeds 32-bit range");
    node_count = std::max(node_count, id + 1);
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = detail::trim(line);
    if (text.empty()) continue;
    if (text.starts_with("%%")) {
      const auto body = detail::trim(text.substr(2));
      if (body.starts_with("n=")) {
        std::uint64_t declared = 0;
        if (!detail::parse_int(detail::trim(body.substr(2)), declared)) {
          detail::parse_failure(line_no, "malformed node-count header");
        }
        if (declared > id_limit) detail::parse_failure(line_no, "node count exceeds 32-bit range");
        node_count = std::max(node_count, declared);
      }
      continue;
    }
    if (text.front() == '%') continue;
    if (text.front() == '#') {
      const auto [id_token, rest] = detail::split_token(text.substr(1));
      std::uint64_t id = 0;
      if (detail::parse_int(id_token, id)) {
        see(id, line_no);
        label_lines.emplace_back(static_cast<NodeId>(id), std::string(rest));
      }
      continue;
    }
    const auto [first, tail] = detail::split_token(text);
    const auto [second, extra] = detail::split_token(tail);
    std::uint64_t u = 0;
    std::uint64_t v = 0;
    if (!extra.empty() || !detail::parse_int(first, u) || !detail::parse_int(second, v)) {
      detail::parse_failure(line_no, "expected two non-negative integers, got \"" +
                                         std::string(text) + "\"");
    }
    see(u, line_no);
    see(v, line_no);
    edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
  }
  if (in.bad()) throw Error(ErrorCode::io, "read failure while loading edge list");

  std::vector<std::string> labels;
  if (!label_lines.empty()) {
    labels.resize(node_count);
    for (auto& [id, text] : label_lines) labels[id] = std::move(text);
  }
  EdgeListLoad result;
  result.graph = Graph::from_edges(node_count, directed, edges, std::move(labels), &result.dropped);
  return result;
}

inline EdgeListLoad load_edge_list_file(const std::string& path, bool directed) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  return load_edge_list(in, directed);
}

/// Reads "id<TAB>label" lines for a graph with `node_count` nodes.
inline std::vector<std::string> load_labels(std::istream& in, std::size_t node_count) {
  std::vector<std::string> labels(node_count);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    std::uint64_t id = 0;
    if (tab == std::string::npos ||
        !detail::parse_int(std::string_view(line).substr(0, tab), id)) {
      detail::parse_failure(line_no, "expected \"id<TAB>label\"");
    }
    if (id >= node_count) detail::parse_failure(line_no, "label id out of range");
    labels[id] = line.substr(tab + 1);
  }
  if (in.bad()) throw Error(ErrorCode::io, "read failure while loading labels");
  return labels;
}

inline std::vector<std::string> load_labels_file(const std::string& path, std::size_t node_count) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  return load_labels(in, node_count);
}

/**
 * Writes `g` in edge-list format. When `ids` is given, local node i is
 * written as ids[i] (used to export subgraphs under their global ids);
 * every node also gets a "# <id> <label>" line so isolated nodes survive.
 */
inline void write_edge_list(const Graph& g, std::ostream& out,
                            std::span<const NodeId> ids = {}) {
  auto name = [&](NodeId u) { return ids.empty() ? u : ids[u]; };
  if (ids.empty()) out << "%% n=" << g.node_count() << '\n';
  for (NodeId u = 0; u < g.node_count(); ++u) {
    if (!ids.empty() || !g.label(u).empty()) {
      out << "# " << name(u);
      if (!g.label(u).empty()) out << ' ' << g.label(u);
      out << '\n';
    }
  }
  for (const Edge& e : g.edges()) out << name(e.from) << ' ' << name(e.to) << '\n';
}

/// Renumbers the ids present in `g` (nodes with an edge or a label) to a
/// dense range, keeping relative order. Nodes without a label are labelled
/// with their original id so provenance survives the renumbering.
inline Graph compact(const Graph& g) {
  std::vector<NodeId> present;
  for (NodeId u = 0; u < g.node_count(); ++u) {
    if (g.degree(u) > 0 || !g.label(u).empty()) present.push_back(u);
  }
  if (g.directed()) {
    std::vector<char> has_in(g.node_count(), 0);
    for (NodeId v : g.adjacency()) has_in[v] = 1;
    present.clear();
    for (NodeId u = 0; u < g.node_count(); ++u) {
      if (g.degree(u) > 0 || has_in[u] || !g.label(u).empty()) present.push_back(u);
    }
  }
  Graph sub = g.induced(present);
  std::vector<std::string> labels(present.size());
  for (std::size_t i = 0; i < present.size(); ++i) {
    labels[i] = g.label(present[i]).empty() ? std::to_string(present[i]) : g.label(present[i]);
  }
  return sub.with_labels(std::move(labels));
}

}  // namespace gmine
