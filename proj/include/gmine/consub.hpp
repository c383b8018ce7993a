#pragma once

// Multi-source connection subgraphs: one random walk with restart per
// source, goodness as the product of the per-source stationary
// probabilities, and greedy path discovery by dynamic programming over
// (node, hop count) states.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "gmine/error.hpp"
#include "gmine/graph.hpp"
#include "gmine/metrics.hpp"

namespace gmine {

struct RwrOptions {
  double restart = 0.15;
  double tolerance = 1e-10;
  std::size_t max_iterations = 10000;
};

struct RwrVector {
  NodeId source = 0;
  double restart = 0.15;
  std::vector<double> scores;
  std::size_t iterations = 0;
  double residual = 0.0;  // L1 change of the last iteration
};

namespace detail {

// Walk on an undirected graph. A walker on a node without neighbors
// restarts, so the vector stays a probability distribution.
inline RwrVector rwr_undirected(const Graph& g, NodeId source, const RwrOptions& opts) {
  const std::size_t n = g.node_count();
  const double c = opts.restart;
  RwrVector out;
  out.source = source;
  out.restart = c;
  out.scores.assign(n, 0.0);
  out.scores[source] = 1.0;
  std::vector<double> inv_degree(n, 0.0);
  for (NodeId u = 0; u < n; ++u) {
    if (g.degree(u) > 0) inv_degree[u] = 1.0 / static_cast<double>(g.degree(u));
  }
  std::vector<double> next(n);
  std::vector<double>& r = out.scores;
  for (out.iterations = 0; out.iterations < opts.max_iterations;) {
    std::fill(next.begin(), next.end(), 0.0);
    double stranded = 0.0;
    for (NodeId u = 0; u < n; ++u) {
      if (r[u] == 0.0) continue;
      if (inv_degree[u] == 0.0) {
        stranded += r[u];
        continue;
      }
      const double share = r[u] * inv_degree[u];
      for (NodeId v : g.neighbors(u)) next[v] += share;
    }
    double residual = 0.0;
    for (NodeId v = 0; v < n; ++v) {
      next[v] *= (1.0 - c);
      if (v == source) next[v] += c + (1.0 - c) * stranded;
      residual += std::abs(next[v] - r[v]);
    }
    r.swap(next);
    ++out.iterations;
    out.residual = residual;
    if (residual <= opts.tolerance) break;
  }
  return out;
}

inline void check_rwr_args(const Graph& g, NodeId source, const RwrOptions& opts) {
  detail::require(source < g.node_count(), "source " + std::to_string(source) + " out of range");
  detail::require(opts.restart > 0.0 && opts.restart < 1.0, "restart probability must lie in (0,1)");
  detail::require(opts.tolerance > 0.0, "tolerance must be positive");
}

}  // namespace detail

/// Random walk with restart from `source`. Direction is ignored.
inline RwrVector rwr(const Graph& g, NodeId source, const RwrOptions& opts = {}) {
  detail::check_rwr_args(g, source, opts);
  if (g.directed()) return detail::rwr_undirected(g.undirected(), source, opts);
  return detail::rwr_undirected(g, source, opts);
}

struct GoodnessField {
  std::vector<NodeId> sources;
  std::vector<double> scores;
};

namespace detail {

inline GoodnessField goodness_undirected(const Graph& ug, std::span<const NodeId> sources,
                                         const RwrOptions& opts, std::size_t max_sources) {
  detail::require(!sources.empty(), "at least one source is required");
  detail::require(sources.size() <= max_sources,
                  "too many sources (" + std::to_string(sources.size()) + " > " +
                      std::to_string(max_sources) + ")");
  for (std::size_t i = 0; i < sources.size(); ++i) {
    check_rwr_args(ug, sources[i], opts);
    for (std::size_t j = 0; j < i; ++j) {
      detail::require(sources[i] != sources[j],
                      "duplicate source " + std::to_string(sources[i]));
    }
  }
  std::vector<RwrVector> walks(sources.size());
  if (sources.size() > 1 && std::thread::hardware_concurrency() > 1) {
    std::vector<std::future<RwrVector>> pending;
    for (NodeId s : sources) {
      pending.push_back(std::async(std::launch::async, [&ug, s, &opts] {
        return rwr_undirected(ug, s, opts);
      }));
    }
    for (std::size_t i = 0; i < pending.size(); ++i) walks[i] = pending[i].get();
  } else {
    for (std::size_t i = 0; i < sources.size(); ++i) walks[i] = rwr_undirected(ug, sources[i], opts);
  }
  GoodnessField field;
  field.sources.assign(sources.begin(), sources.end());
  field.scores = std::move(walks[0].scores);
  for (std::size_t i = 1; i < walks.size(); ++i) {
    for (std::size_t v = 0; v < field.scores.size(); ++v) field.scores[v] *= walks[i].scores[v];
  }
  return field;
}

}  // namespace detail

/// Per-node product of the sources' RWR scores: the likelihood that all
/// walkers are found at the node in the steady state.
inline GoodnessField goodness(const Graph& g, std::span<const NodeId> sources,
                              const RwrOptions& opts = {}, std::size_t max_sources = 8) {
  if (g.directed()) return detail::goodness_undirected(g.undirected(), sources, opts, max_sources);
  return detail::goodness_undirected(g, sources, opts, max_sources);
}

struct ExtractOptions {
  std::size_t budget = 30;
  /// Longest path, in edges, considered in one discovery step.
  std::size_t max_path_length = 5;
  std::size_t max_sources = 8;
  RwrOptions rwr;
  std::optional<std::chrono::milliseconds> time_limit;
};

struct ConnectionSubgraph {
  std::vector<NodeId> sources;
  std::vector<NodeId> nodes;   // ascending
  std::vector<Edge> edges;     // induced; u < v for undirected graphs
  std::vector<double> goodness;  // aligned with nodes
  std::vector<std::vector<NodeId>> paths;  // in discovery order, endpoints included
  std::size_t budget = 0;

  double total_goodness() const {
    double sum = 0.0;
    for (double g : goodness) sum += g;
    return sum;
  }
};

namespace detail {

class PathSearch {
 public:
  PathSearch(const Graph& ug, const std::vector<double>& log_goodness, std::size_t max_interior)
      : g_(ug), log_g_(log_goodness), max_interior_(max_interior), slot_(ug.node_count(), {-1, -1}) {}

  struct Found {
    std::vector<NodeId> nodes;  // start, new nodes..., end (when closed)
    double mean = 0.0;
    bool closed = true;  // ends back in H

    std::size_t new_nodes() const { return nodes.size() - (closed ? 2 : 1); }
  };

  /// Best path that leaves H through outside nodes. In connect mode it must
  /// return to a different component of H (`component` gives a
  /// representative per H node) and the fewest new nodes wins. Otherwise it
  /// either returns to H at a node other than its start or simply ends at
  /// its last new node, and the highest geometric mean wins.
  template <typename ComponentOf, typename Deadline>
  std::optional<Found> best(const std::vector<char>& in_h, const std::vector<NodeId>& h_nodes,
                            ComponentOf component, bool connect, Deadline check_deadline) {
    arena_.clear();
    std::vector<std::int32_t> frontier;
    for (NodeId s : h_nodes) {
      frontier.push_back(static_cast<std::int32_t>(arena_.size()));
      arena_.push_back({0.0, s, -1, s, connect ? component(s) : s, 0});
    }
    std::optional<Candidate> best;
    std::vector<NodeId> touched;
    // Highest log-goodness any new node can contribute; bounds how far a
    // partial path's mean can still rise.
    double top = -std::numeric_limits<double>::infinity();
    for (NodeId v = 0; v < log_g_.size(); ++v) {
      if (!in_h[v]) top = std::max(top, log_g_[v]);
    }
    for (std::size_t hops = 1; hops <= max_interior_; ++hops) {
      check_deadline();
      touched.clear();
      // Outside connect mode, drop partial paths that cannot reach the
      // incumbent mean even if every remaining hop scored `top`. The bound
      // only depends on the partial sum, so surviving slots are unchanged.
      const bool prune = !connect && best.has_value();
      const double m = prune ? best->mean : 0.0;
      const double rest = static_cast<double>(max_interior_ - hops) * std::max(0.0, top - m);
      const double h = static_cast<double>(hops);
      for (std::int32_t ei : frontier) {
        const NodeId x = arena_[ei].node;
        const double base = arena_[ei].sum;
        for (NodeId y : g_.neighbors(x)) {
          if (in_h[y] || std::isinf(log_g_[y])) continue;
          if (prune) {
            const double sum = base + log_g_[y];
            if (sum - m * h + rest < -1e-9 * (std::abs(sum) + 1.0)) continue;
          }
          if (on_chain(ei, y)) continue;
          if (slot_[y][0] < 0) touched.push_back(y);
          offer(y, ei);
        }
      }
      frontier.clear();
      for (NodeId y : touched) {
        for (std::int32_t ei : slot_[y]) {
          if (ei < 0) continue;
          frontier.push_back(ei);
          const Entry& e = arena_[ei];
          if (!connect) {
            Candidate open{ei, y, e.sum / static_cast<double>(e.hops), e.hops, false};
            if (!best || better(open, *best, connect)) best = open;
          }
          for (NodeId w : g_.neighbors(y)) {
            if (!in_h[w]) continue;
            if (connect ? component(w) == e.key : w == e.start) continue;
            Candidate cand{ei, w, e.sum / static_cast<double>(e.hops), e.hops, true};
            if (!best || better(cand, *best, connect)) best = cand;
          }
        }
        slot_[y] = {-1, -1};
      }
      if (connect && best) break;
      if (frontier.empty()) break;
    }
    if (!best) return std::nullopt;
    Found found;
    found.nodes = sequence(*best);
    found.mean = best->mean;
    found.closed = best->closed;
    return found;
  }

 private:
  struct Entry {
    double sum;
    NodeId node;
    std::int32_t prev;
    NodeId start;
    NodeId key;
    std::uint32_t hops;
  };
  struct Candidate {
    std::int32_t entry;
    NodeId end;
    double mean;
    std::uint32_t hops;
    bool closed;
  };

  bool on_chain(std::int32_t ei, NodeId y) const {
    for (; ei >= 0; ei = arena_[ei].prev) {
      if (arena_[ei].node == y) return true;
    }
    return false;
  }

  std::vector<NodeId> chain(std::int32_t ei) const {
    std::vector<NodeId> seq;
    for (; ei >= 0; ei = arena_[ei].prev) seq.push_back(arena_[ei].node);
    std::reverse(seq.begin(), seq.end());
    return seq;
  }

  // Paths and their reversals are the same path; compare the smaller
  // orientation.
  static std::vector<NodeId> canonical(std::vector<NodeId> seq) {
    std::vector<NodeId> rev(seq.rbegin(), seq.rend());
    return std::min(seq, rev);
  }

  // Open paths keep their H endpoint first.
  std::vector<NodeId> sequence(const Candidate& c) const {
    auto seq = chain(c.entry);
    if (!c.closed) return seq;
    seq.push_back(c.end);
    return canonical(std::move(seq));
  }

  bool better(const Candidate& x, const Candidate& y, bool connect) const {
    if (connect && x.hops != y.hops) return x.hops < y.hops;
    if (x.mean != y.mean) return x.mean > y.mean;
    if (x.hops != y.hops) return x.hops < y.hops;
    return sequence(x) < sequence(y);
  }

  // Higher sum wins; exact ties go to the lexicographically smaller
  // prefix sequence.
  bool entry_better(double sum, std::int32_t parent, NodeId y, std::int32_t incumbent) const {
    const Entry& inc = arena_[incumbent];
    if (sum != inc.sum) return sum > inc.sum;
    auto a = chain(parent);
    a.push_back(y);
    return a < chain(incumbent);
  }

  // Keeps the best two entries per node with distinct keys, so a closing
  // edge can always find an entry whose start is compatible with it.
  void offer(NodeId y, std::int32_t parent) {
    const Entry& p = arena_[parent];
    const double sum = p.sum + log_g_[y];
    const NodeId key = p.key;
    auto make = [&] {
      arena_.push_back({sum, y, parent, arena_[parent].start, key, arena_[parent].hops + 1});
      return static_cast<std::int32_t>(arena_.size() - 1);
    };
    auto& s = slot_[y];
    if (s[0] >= 0 && arena_[s[0]].key == key) {
      if (entry_better(sum, parent, y, s[0])) s[0] = make();
      return;
    }
    if (s[1] >= 0 && arena_[s[1]].key == key) {
      if (entry_better(sum, parent, y, s[1])) {
        s[1] = make();
        if (entry_better(arena_[s[1]].sum, arena_[s[1]].prev, y, s[0])) std::swap(s[0], s[1]);
      }
      return;
    }
    if (s[0] < 0 || entry_better(sum, parent, y, s[0])) {
      s[1] = s[0];
      s[0] = make();
    } else if (s[1] < 0 || entry_better(sum, parent, y, s[1])) {
      s[1] = make();
    }
  }

  const Graph& g_;
  const std::vector<double>& log_g_;
  std::size_t max_interior_;
  std::vector<Entry> arena_;
  std::vector<std::array<std::int32_t, 2>> slot_;
};

/**
 * Joins three or more separate source groups at once through one centre
 * node, each group reaching it by a shortest path over outside nodes of
 * positive goodness (ties to the higher log-goodness sum). The centre
 * minimises the number of new nodes, then maximises their mean
 * log-goodness, then has the smallest id; any two arms together span at
 * most `max_len` edges. With three groups the best star is a smallest
 * connecting node set. Returns the arms, each running from a group node to
 * the centre, or nothing when no centre qualifies.
 */
template <typename Deadline>
std::optional<std::vector<std::vector<NodeId>>> star_connect(
    const Graph& ug, const std::vector<double>& log_g, const std::vector<char>& in_h,
    const std::vector<std::vector<NodeId>>& groups, std::size_t max_len, Deadline check_deadline) {
  constexpr std::uint32_t far = std::numeric_limits<std::uint32_t>::max();
  const std::size_t n = ug.node_count();
  const std::size_t q = groups.size();
  std::vector<std::uint32_t> group_of(n, far);
  for (std::size_t i = 0; i < q; ++i) {
    for (NodeId v : groups[i]) group_of[v] = static_cast<std::uint32_t>(i);
  }
  std::vector<std::vector<std::uint32_t>> dist(q, std::vector<std::uint32_t>(n, far));
  std::vector<std::vector<double>> sum(q, std::vector<double>(n, 0.0));
  std::vector<std::vector<NodeId>> prev(q, std::vector<NodeId>(n, 0));
  for (std::size_t i = 0; i < q; ++i) {
    check_deadline();
    std::vector<NodeId> layer(groups[i].begin(), groups[i].end());
    for (NodeId v : layer) dist[i][v] = 0;
    for (std::uint32_t d = 1; d <= max_len && !layer.empty(); ++d) {
      std::vector<NodeId> next;
      for (NodeId x : layer) {
        if (d > 1 && in_h[x]) continue;  // arms run through outside nodes only
        for (NodeId y : ug.neighbors(x)) {
          const bool outside = !in_h[y];
          if (outside && std::isinf(log_g[y])) continue;
          if (!outside && group_of[y] == i) continue;
          const double s = sum[i][x] + (outside ? log_g[y] : 0.0);
          if (dist[i][y] == far) {
            dist[i][y] = d;
            sum[i][y] = s;
            prev[i][y] = x;
            next.push_back(y);
          } else if (dist[i][y] == d && (s > sum[i][y] || (s == sum[i][y] && x < prev[i][y]))) {
            sum[i][y] = s;
            prev[i][y] = x;
          }
        }
      }
      layer = std::move(next);
    }
  }

  struct Choice {
    NodeId centre;
    std::size_t new_nodes;
    double mean;
  };
  std::optional<Choice> best;
  for (NodeId v = 0; v < n; ++v) {
    const bool outside = !in_h[v];
    if (outside && std::isinf(log_g[v])) continue;
    if (!outside && group_of[v] == far) continue;
    std::size_t new_nodes = outside ? 1 : 0;
    double total = outside ? log_g[v] : 0.0;
    std::uint32_t longest = 0, second = 0;
    bool reachable = true;
    for (std::size_t i = 0; i < q && reachable; ++i) {
      if (!outside && group_of[v] == i) continue;
      const std::uint32_t d = dist[i][v];
      if (d == far) {
        reachable = false;
        break;
      }
      new_nodes += d - 1;
      total += sum[i][v] - (outside ? log_g[v] : 0.0);
      if (d > longest) {
        second = longest;
        longest = d;
      } else if (d > second) {
        second = d;
      }
    }
    if (!reachable || longest + second > max_len) continue;
    const double mean = new_nodes ? total / static_cast<double>(new_nodes) : 0.0;
    if (!best || new_nodes < best->new_nodes ||
        (new_nodes == best->new_nodes && mean > best->mean)) {
      best = Choice{v, new_nodes, mean};
    }
  }
  if (!best) return std::nullopt;

  std::vector<std::vector<NodeId>> arms;
  const NodeId c = best->centre;
  for (std::size_t i = 0; i < q; ++i) {
    if (in_h[c] && group_of[c] == i) continue;
    std::vector<NodeId> arm{c};
    for (NodeId x = c; dist[i][x] > 0;) {
      x = prev[i][x];
      arm.push_back(x);
    }
    std::reverse(arm.begin(), arm.end());
    arms.push_back(std::move(arm));
  }
  return arms;
}

inline std::string describe_groups(const std::vector<std::vector<NodeId>>& groups) {
  std::string out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    out += i == 0 ? "{" : ", {";
    for (std::size_t j = 0; j < groups[i].size(); ++j) {
      if (j > 0) out += ",";
      out += std::to_string(groups[i][j]);
    }
    out += "}";
  }
  return out;
}

}  // namespace detail

/**
 * Budget-bounded connection subgraph for `sources`.
 *
 * Starting from H = sources, repeatedly adds the new nodes of one path
 * that leaves H and runs through nodes of positive goodness outside H,
 * using at most max_path_length edges:
 *   - while the sources are split across three or more components of the
 *     induced subgraph, all of them are first joined at once through the
 *     centre node needing the fewest new nodes (see star_connect); if no
 *     centre fits the length limit, or two components remain, only paths
 *     joining two components qualify, and the one with the fewest new
 *     nodes wins (then highest geometric mean);
 *   - afterwards a path may return to H or stop at its last new node, and
 *     the one whose new nodes have the highest geometric mean goodness
 *     wins (then fewer new nodes).
 * Remaining ties go to the lexicographically smallest node sequence. The
 * choice of path never depends on the budget; extraction stops at the
 * first chosen path that would overflow it, so a larger budget always
 * yields a superset.
 */
inline ConnectionSubgraph extract(const Graph& g, std::span<const NodeId> sources,
                                  const ExtractOptions& opts) {
  using Clock = std::chrono::steady_clock;
  const auto started = Clock::now();
  auto check_deadline = [&] {
    if (opts.time_limit && Clock::now() - started > *opts.time_limit) {
      throw Error(ErrorCode::timeout, "extraction exceeded its time limit of " +
                                          std::to_string(opts.time_limit->count()) + " ms");
    }
  };
  detail::require(opts.budget >= sources.size(),
                  "budget " + std::to_string(opts.budget) + " is smaller than the number of sources");
  detail::require(opts.max_path_length >= 1, "max path length must be at least 1");

  const Graph undirected_copy = g.directed() ? g.undirected() : Graph{};
  const Graph& ug = g.directed() ? undirected_copy : g;
  const GoodnessField field = detail::goodness_undirected(ug, sources, opts.rwr, opts.max_sources);
  check_deadline();

  const Components reach = weak_components(ug);
  {
    std::vector<std::vector<NodeId>> groups;
    std::vector<std::uint32_t> seen;
    for (NodeId s : sources) {
      const auto it = std::find(seen.begin(), seen.end(), reach.id[s]);
      if (it == seen.end()) {
        seen.push_back(reach.id[s]);
        groups.push_back({s});
      } else {
        groups[static_cast<std::size_t>(it - seen.begin())].push_back(s);
      }
    }
    if (groups.size() > 1) {
      throw Error(ErrorCode::insufficient_budget,
                  "sources are not connected in the graph: " + detail::describe_groups(groups));
    }
  }

  const std::size_t n = ug.node_count();
  std::vector<double> log_g(n);
  for (std::size_t v = 0; v < n; ++v) {
    log_g[v] = field.scores[v] > 0.0 ? std::log(field.scores[v])
                                     : -std::numeric_limits<double>::infinity();
  }

  ConnectionSubgraph out;
  out.sources.assign(sources.begin(), sources.end());
  out.budget = opts.budget;
  std::vector<char> in_h(n, 0);
  std::vector<NodeId> h_nodes;
  detail::DisjointSets sets(n);
  auto add = [&](NodeId x) {
    in_h[x] = 1;
    h_nodes.push_back(x);
    for (NodeId y : ug.neighbors(x)) {
      if (in_h[y]) sets.unite(x, y);
    }
  };
  for (NodeId s : sources) add(s);
  auto component = [&](NodeId x) { return sets.find(x); };
  auto source_groups = [&] {
    std::vector<std::vector<NodeId>> groups;
    std::vector<NodeId> reps;
    for (NodeId s : sources) {
      const NodeId r = component(s);
      const auto it = std::find(reps.begin(), reps.end(), r);
      if (it == reps.end()) {
        reps.push_back(r);
        groups.push_back({s});
      } else {
        groups[static_cast<std::size_t>(it - reps.begin())].push_back(s);
      }
    }
    return groups;
  };

  detail::PathSearch search(ug, log_g, opts.max_path_length - 1);
  for (;;) {
    check_deadline();
    const auto groups = source_groups();
    const bool connected = groups.size() == 1;
    if (connected && h_nodes.size() >= opts.budget) break;
    std::optional<std::vector<std::vector<NodeId>>> arms;
    if (groups.size() >= 3) {
      std::vector<std::vector<NodeId>> members(groups.size());
      for (NodeId v : h_nodes) {
        for (std::size_t i = 0; i < groups.size(); ++i) {
          if (component(v) == component(groups[i].front())) members[i].push_back(v);
        }
      }
      arms = detail::star_connect(ug, log_g, in_h, members, opts.max_path_length,
                                       check_deadline);
    }
    if (arms) {
      std::size_t new_nodes = 0;
      {
        std::vector<char> fresh(n, 0);
        for (const auto& arm : *arms) {
          for (NodeId v : arm) {
            if (!in_h[v] && !fresh[v]) {
              fresh[v] = 1;
              ++new_nodes;
            }
          }
        }
      }
      if (h_nodes.size() + new_nodes > opts.budget) {
        throw Error(ErrorCode::insufficient_budget,
                    "sources " + detail::describe_groups(groups) +
                        " cannot be connected within budget " + std::to_string(opts.budget));
      }
      for (auto& arm : *arms) {
        for (NodeId v : arm) {
          if (!in_h[v]) add(v);
        }
        out.paths.push_back(std::move(arm));
      }
      continue;
    }
    auto found = search.best(in_h, h_nodes, component, !connected, check_deadline);
    const std::size_t new_nodes = found ? found->new_nodes() : 0;
    if (!found || h_nodes.size() + new_nodes > opts.budget) {
      if (connected) break;
      const std::string limit =
          found ? "within budget " + std::to_string(opts.budget)
                : "by paths of at most " + std::to_string(opts.max_path_length) + " edges";
      throw Error(ErrorCode::insufficient_budget,
                  "sources " + detail::describe_groups(source_groups()) +
                      " cannot be connected " + limit);
    }
    for (std::size_t i = 1; i <= new_nodes; ++i) add(found->nodes[i]);
    out.paths.push_back(std::move(found->nodes));
  }

  out.nodes = h_nodes;
  std::sort(out.nodes.begin(), out.nodes.end());
  for (NodeId v : out.nodes) out.goodness.push_back(field.scores[v]);
  for (NodeId u : out.nodes) {
    for (NodeId v : g.neighbors(u)) {
      if (in_h[v] && (g.directed() || u < v)) out.edges.push_back({u, v});
    }
  }
  return out;
}

/// The extracted subgraph as a standalone graph; local id i is nodes[i].
inline Graph subgraph_of(const Graph& g, const ConnectionSubgraph& sub) {
  return g.induced(sub.nodes);
}

}  // namespace gmine
