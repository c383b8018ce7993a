#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "gmine/gtree.hpp"

namespace gmine {

/// Summary printed by `gmine build`.
struct BuildReport {
  std::uint64_t n = 0;
  std::uint64_t e = 0;
  std::uint32_t fanout = 0;
  std::uint32_t levels = 0;
  std::size_t tree_nodes = 0;
  std::size_t leaves = 0;
  std::size_t shallow_leaves = 0;
  std::vector<std::uint64_t> per_level_cut;
  std::uint64_t leaf_internal_edges = 0;
  double elapsed_seconds = 0.0;
  std::uint64_t file_bytes = 0;
};

inline BuildReport make_build_report(const GTree& tree, double elapsed_seconds,
                                     std::uint64_t file_bytes) {
  BuildReport r;
  r.n = tree.global_n;
  r.e = tree.global_e;
  r.fanout = tree.fanout;
  r.levels = tree.levels;
  r.tree_nodes = tree.nodes.size();
  r.leaves = tree.leaves().size();
  r.shallow_leaves = tree.shallow_leaf_count();
  r.per_level_cut = per_level_cuts(tree);
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) r.leaf_internal_edges += node.internal_edges;
  }
  r.elapsed_seconds = elapsed_seconds;
  r.file_bytes = file_bytes;
  return r;
}

inline nlohmann::json to_json(const BuildReport& r) {
  return {{"n", r.n},
          {"e", r.e},
          {"fanout", r.fanout},
          {"levels", r.levels},
          {"tree_nodes", r.tree_nodes},
          {"leaves", r.leaves},
          {"shallow_leaves", r.shallow_leaves},
          {"per_level_cut", r.per_level_cut},
          {"leaf_internal_edges", r.leaf_internal_edges},
          {"elapsed_seconds", r.elapsed_seconds},
          {"file_bytes", r.file_bytes}};
}

}  // namespace gmine
