// gmine: build G-Tree files, extract connection subgraphs, inspect trees
// and run the HTTP service. Reports go to stdout as JSON; diagnostics go
// to stderr as "error[<code>]: <message>".

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gmine/consub.hpp"
#include "gmine/error.hpp"
#include "gmine/generators.hpp"
#include "gmine/graph.hpp"
#include "gmine/gtree.hpp"
#include "gmine/gtree_file.hpp"
#include "gmine/json_io.hpp"
#include "gmine/navigator.hpp"
#include "gmine/report.hpp"
#include "gmine/service.hpp"

namespace {

using namespace gmine;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::io:
    case ErrorCode::parse:
    case ErrorCode::format:
    case ErrorCode::integrity: return 1;
    default: return 2;
  }
}

void print(const nlohmann::json& doc) {
  std::cout << doc.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
}

Graph read_graph(const std::string& path, const std::string& labels, bool directed) {
  EdgeListLoad load = load_edge_list_file(path, directed);
  if (load.dropped.duplicates + load.dropped.self_loops > 0) {
    std::cerr << "note: dropped " << load.dropped.duplicates << " duplicate edges and "
              << load.dropped.self_loops << " self-loops\n";
  }
  if (!labels.empty()) {
    return load.graph.with_labels(load_labels_file(labels, load.graph.node_count()));
  }
  return std::move(load.graph);
}

struct BuildArgs {
  std::string input;
  std::string labels;
  std::string out;
  std::uint32_t fanout = 5;
  std::uint32_t levels = 5;
  double epsilon = 0.05;
  std::uint64_t seed = 0;
  bool directed = false;
  bool compact = false;
  bool shallow = false;
};

int cmd_build(const BuildArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  Graph g = read_graph(a.input, a.labels, a.directed);
  if (a.compact) g = compact(g);
  GTreeBuildOptions opts;
  opts.fanout = a.fanout;
  opts.levels = a.levels;
  opts.epsilon = a.epsilon;
  opts.seed = a.seed;
  opts.strict_depth = !a.shallow;
  const GTreeBuild build = build_gtree(g, opts);
  write_gtree_file(a.out, build);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  print(to_json(make_build_report(build.tree, elapsed, std::filesystem::file_size(a.out))));
  return 0;
}

struct ExtractArgs {
  std::string graph;
  std::string labels;
  std::string gtree;
  std::vector<NodeId> source_ids;
  std::vector<std::string> source_labels;
  std::size_t budget = 30;
  double c = 0.15;
  std::size_t maxlen = 5;
  std::string out;
  bool directed = false;
  std::optional<long> timeout_ms;
};

NodeId resolve_label(const std::string& label, const Graph& g,
                     const std::optional<GTreeHandle>& handle) {
  std::vector<NodeId> hits;
  if (handle) {
    for (const auto& e : handle->label_lookup(label)) hits.push_back(e.global_id);
  } else {
    for (NodeId u = 0; u < g.node_count(); ++u) {
      if (!label.empty() && g.label(u) == label) hits.push_back(u);
    }
  }
  if (hits.empty()) throw Error(ErrorCode::not_found, "unknown label " + label);
  if (hits.size() > 1) throw Error(ErrorCode::contract, "label " + label + " is ambiguous");
  return hits.front();
}

int cmd_extract(const ExtractArgs& a) {
  Graph g = read_graph(a.graph, a.labels, a.directed);
  std::optional<GTreeHandle> handle;
  if (!a.gtree.empty()) handle.emplace(open_gtree_file(a.gtree));
  if (handle && !g.has_labels() && !handle->tree().label_index.empty()) {
    std::vector<std::string> labels(g.node_count());
    for (const auto& e : handle->tree().label_index) {
      if (e.global_id < labels.size()) labels[e.global_id] = e.label;
    }
    g = g.with_labels(std::move(labels));
  }
  std::vector<NodeId> sources = a.source_ids;
  for (const auto& label : a.source_labels) sources.push_back(resolve_label(label, g, handle));
  for (NodeId s : sources) {
    if (s >= g.node_count()) throw Error(ErrorCode::not_found, "unknown node " + std::to_string(s));
  }
  ExtractOptions opts;
  opts.budget = a.budget;
  opts.rwr.restart = a.c;
  opts.max_path_length = a.maxlen;
  if (a.timeout_ms) opts.time_limit = std::chrono::milliseconds(*a.timeout_ms);
  const ConnectionSubgraph sub = extract(g, sources, opts);
  if (!a.out.empty()) {
    std::ofstream out(a.out, std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot create " + a.out);
    write_edge_list(subgraph_of(g, sub), out, sub.nodes);
    if (!out) throw Error(ErrorCode::io, "write failure on " + a.out);
  }
  print(json::connection_subgraph(g, sub));
  return 0;
}

int cmd_metrics(const std::string& gtree, std::optional<TreeNodeId> leaf) {
  const GTreeHandle handle = open_gtree_file(gtree);
  if (leaf) {
    print(json::metrics(leaf_metrics(handle, *leaf)));
  } else {
    print(to_json(make_build_report(handle.tree(), 0.0, handle.layout().file_size)));
  }
  return 0;
}

int cmd_context(const std::string& gtree, TreeNodeId focus) {
  const GTreeHandle handle = open_gtree_file(gtree);
  print(json::context(handle.tree(), tomahawk_context(handle, focus)));
  return 0;
}

int cmd_search(const std::string& gtree, const std::string& label) {
  const GTreeHandle handle = open_gtree_file(gtree);
  print(json::search(label, find_node(handle, label)));
  return 0;
}

struct ServeArgs {
  std::string config;
  std::string host;
  std::optional<int> port;
  std::string data_dir;
  DatasetConfig dataset;
};

int cmd_serve(const ServeArgs& a) {
  ServiceConfig cfg;
  if (!a.config.empty()) {
    cfg = load_service_config(a.config);
  } else {
    apply_env_overrides(cfg);
  }
  if (!a.host.empty()) cfg.host = a.host;
  if (a.port) cfg.port = *a.port;
  if (!a.data_dir.empty()) cfg.data_dir = a.data_dir;
  if (!a.dataset.gtree.empty()) cfg.datasets.push_back(a.dataset);

  // Block termination signals before the server spawns workers so only the
  // waiter thread below sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(cfg);
  const int port = service.bind();
  std::cout << nlohmann::json{{"listening", {{"host", cfg.host}, {"port", port}}}}.dump() << '\n'
            << std::flush;
  std::atomic<bool> signalled{false};
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    signalled = true;
    std::cerr << "shutting down\n";
    // stop() is a no-op until the listen loop is up.
    service.wait_until_ready();
    service.stop();
  });
  service.run();
  // run() can also return on its own; wake the waiter so it can be joined.
  if (!signalled) pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

struct GenerateArgs {
  std::string kind = "planted";
  std::size_t n = 1000;
  std::size_t m = 5000;
  std::size_t blocks = 10;
  double intra = 0.8;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  Graph g;
  if (a.kind == "planted") {
    g = gen::planted_partition(a.n, a.m, a.blocks, a.intra, a.seed);
  } else if (a.kind == "random") {
    g = gen::random_graph(a.n, a.m, a.seed);
  } else if (a.kind == "tree") {
    g = gen::random_tree(a.n, a.seed);
  } else if (a.kind == "path") {
    g = gen::path(a.n);
  } else if (a.kind == "barbell") {
    g = gen::barbell();
  } else if (a.kind == "fixture16") {
    g = gen::fixture16();
  } else {
    throw Error(ErrorCode::contract, "unknown generator " + a.kind);
  }
  if (a.out.empty() || a.out == "-") {
    write_edge_list(g, std::cout);
  } else {
    std::ofstream out(a.out, std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot create " + a.out);
    write_edge_list(g, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph mining over hierarchical G-Tree files"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* b = app.add_subcommand("build", "Partition an edge list into a G-Tree file");
  b->add_option("--input,-i", build.input, "Edge-list file")->required();
  b->add_option("--labels", build.labels, "id<TAB>label file");
  b->add_option("--out,-o", build.out, "Output G-Tree file")->required();
  b->add_option("--fanout", build.fanout, "Communities per split")->capture_default_str();
  b->add_option("--levels", build.levels, "Tree levels including the root")->capture_default_str();
  b->add_option("--epsilon", build.epsilon, "Balance tolerance")->capture_default_str();
  b->add_option("--seed", build.seed, "Partitioner seed")->capture_default_str();
  b->add_flag("--directed", build.directed, "Read edges as directed");
  b->add_flag("--compact", build.compact,
              "Renumber present node ids densely (for extracted subgraphs)");
  b->add_flag("--shallow", build.shallow, "Allow graphs too small for the full depth");

  ExtractArgs ex;
  auto* e = app.add_subcommand("extract", "Extract a connection subgraph");
  e->add_option("--graph,-g", ex.graph, "Edge-list file")->required();
  e->add_option("--labels", ex.labels, "id<TAB>label file");
  e->add_option("--gtree", ex.gtree, "G-Tree file used to resolve labels");
  e->add_option("--source,-s", ex.source_ids, "Source node id (repeatable)");
  e->add_option("--source-label,-l", ex.source_labels, "Source node label (repeatable)");
  e->add_option("--budget,-b", ex.budget, "Maximum number of nodes")->capture_default_str();
  e->add_option("--c", ex.c, "Restart probability")->capture_default_str();
  e->add_option("--maxlen", ex.maxlen, "Longest path in edges")->capture_default_str();
  e->add_option("--timeout-ms", ex.timeout_ms, "Abort after this many milliseconds");
  e->add_option("--out,-o", ex.out, "Write the subgraph as an edge list");
  e->add_flag("--directed", ex.directed, "Read edges as directed");

  std::string gtree;
  std::optional<TreeNodeId> leaf;
  auto* m = app.add_subcommand("metrics", "Leaf metrics, or tree statistics without --leaf");
  m->add_option("--gtree", gtree, "G-Tree file")->required();
  m->add_option("--leaf", leaf, "Leaf tree-node id");

  TreeNodeId focus = 0;
  auto* c = app.add_subcommand("context", "Focus-plus-context view of a tree node");
  c->add_option("--gtree", gtree, "G-Tree file")->required();
  c->add_option("--focus", focus, "Tree-node id")->capture_default_str();

  std::string label;
  auto* s = app.add_subcommand("search", "Find nodes by exact label");
  s->add_option("--gtree", gtree, "G-Tree file")->required();
  s->add_option("--label", label, "Label")->required();

  ServeArgs serve;
  serve.dataset.id = "default";
  auto* v = app.add_subcommand("serve", "Run the HTTP service");
  v->add_option("--config", serve.config, "JSON config file");
  v->add_option("--host", serve.host, "Bind address");
  v->add_option("--port", serve.port, "Port; 0 picks a free one");
  v->add_option("--data-dir", serve.data_dir, "Base directory for dataset paths");
  v->add_option("--dataset-id", serve.dataset.id, "Id for a dataset given on the command line")
      ->capture_default_str();
  v->add_option("--gtree", serve.dataset.gtree, "G-Tree file for a command-line dataset");
  v->add_option("--graph", serve.dataset.graph, "Edge list enabling extraction");
  v->add_option("--labels", serve.dataset.labels, "id<TAB>label file for --graph");
  v->add_flag("--directed", serve.dataset.directed, "Read --graph as directed");

  GenerateArgs gen_args;
  auto* gcmd = app.add_subcommand("generate", "Write a seeded synthetic graph");
  gcmd->add_option("--kind", gen_args.kind, "planted, random, tree, path, barbell or fixture16")
      ->capture_default_str();
  gcmd->add_option("--n", gen_args.n, "Node count")->capture_default_str();
  gcmd->add_option("--m", gen_args.m, "Edge count")->capture_default_str();
  gcmd->add_option("--blocks", gen_args.blocks, "Planted block count")->capture_default_str();
  gcmd->add_option("--intra", gen_args.intra, "Planted intra-block edge fraction")
      ->capture_default_str();
  gcmd->add_option("--seed", gen_args.seed, "Generator seed")->capture_default_str();
  gcmd->add_option("--out,-o", gen_args.out, "Output file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*b) return cmd_build(build);
    if (*e) return cmd_extract(ex);
    if (*m) return cmd_metrics(gtree, leaf);
    if (*c) return cmd_context(gtree, focus);
    if (*s) return cmd_search(gtree, label);
    if (*v) return cmd_serve(serve);
    if (*gcmd) return cmd_generate(gen_args);
  } catch (const Error& err) {
    std::cerr << "error[" << code_name(err.code()) << "]: " << err.what() << '\n';
    return exit_code(err.code());
  } catch (const std::filesystem::filesystem_error& err) {
    std::cerr << "error[io-error]: " << err.what() << '\n';
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error[internal]: " << err.what() << '\n';
    return 2;
  }
  return 0;
}
