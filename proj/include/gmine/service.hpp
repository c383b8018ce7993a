#pragma once

// HTTP front end over one or more open G-Tree files. Every route lives
// under /api/v1 and answers JSON; failures use
// {"error": {"code": ..., "message": ...}}.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "gmine/consub.hpp"
#include "gmine/error.hpp"
#include "gmine/graph.hpp"
#include "gmine/gtree.hpp"
#include "gmine/gtree_file.hpp"
#include "gmine/json_io.hpp"
#include "gmine/navigator.hpp"

namespace gmine {

struct DatasetConfig {
  std::string id;
  std::string gtree;   // G-Tree file
  std::string graph;   // edge list; empty disables extraction
  std::string labels;  // optional "id<TAB>label" file for `graph`
  bool directed = false;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  /// Relative dataset paths resolve against this directory.
  std::string data_dir;
  std::size_t cache_capacity = 64;
  std::chrono::milliseconds extract_timeout{30000};
  std::vector<DatasetConfig> datasets;
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

inline std::optional<std::string> process_env(const char* name) {
  if (const char* v = std::getenv(name)) return std::string(v);
  return std::nullopt;
}

/// PORT and DATA_DIR from the environment win over file values.
inline void apply_env_overrides(ServiceConfig& cfg, const EnvLookup& env = process_env) {
  if (auto port = env("PORT")) {
    int value = 0;
    if (!detail::parse_int(detail::trim(*port), value) || value < 0 || value > 65535) {
      throw Error(ErrorCode::parse, "PORT must be an integer in [0, 65535], got \"" + *port + "\"");
    }
    cfg.port = value;
  }
  if (auto dir = env("DATA_DIR")) cfg.data_dir = *dir;
}

/**
 * {"host": "...", "port": 8080, "data_dir": "...", "cache_capacity": 64,
 *  "extract_timeout_ms": 30000,
 *  "datasets": [{"id": "...", "gtree": "...", "graph": "...",
 *                "labels": "...", "directed": false}]}
 */
inline ServiceConfig parse_service_config(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("config: ") + e.what());
  }
  ServiceConfig cfg;
  try {
    cfg.host = doc.value("host", cfg.host);
    cfg.port = doc.value("port", cfg.port);
    cfg.data_dir = doc.value("data_dir", cfg.data_dir);
    cfg.cache_capacity = doc.value("cache_capacity", cfg.cache_capacity);
    cfg.extract_timeout =
        std::chrono::milliseconds(doc.value("extract_timeout_ms", cfg.extract_timeout.count()));
    for (const auto& d : doc.value("datasets", nlohmann::json::array())) {
      DatasetConfig ds;
      ds.id = d.at("id").get<std::string>();
      ds.gtree = d.at("gtree").get<std::string>();
      ds.graph = d.value("graph", std::string());
      ds.labels = d.value("labels", std::string());
      ds.directed = d.value("directed", false);
      cfg.datasets.push_back(std::move(ds));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("config: ") + e.what());
  }
  return cfg;
}

inline ServiceConfig load_service_config(const std::string& path,
                                         const EnvLookup& env = process_env) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ServiceConfig cfg = parse_service_config(text);
  apply_env_overrides(cfg, env);
  return cfg;
}

/// One registered dataset: an open tree plus, optionally, the raw graph
/// that extraction runs on.
struct Dataset {
  std::string id;
  GTreeHandle handle;
  std::optional<Graph> graph;
};

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::contract:
    case ErrorCode::parse: return 400;
    case ErrorCode::infeasible:
    case ErrorCode::insufficient_budget:
    case ErrorCode::empty_graph: return 422;
    case ErrorCode::timeout: return 504;
    default: return 500;
  }
}

class Service {
 public:
  /// Opens and validates every dataset; throws on the first bad one.
  explicit Service(ServiceConfig cfg) : cfg_(std::move(cfg)) {
    for (const auto& d : cfg_.datasets) register_dataset(d);
    routes();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const ServiceConfig& config() const noexcept { return cfg_; }
  const std::map<std::string, Dataset>& datasets() const noexcept { return datasets_; }

  /// Binds the listening socket. Port 0 picks a free port. Returns the
  /// bound port.
  int bind() {
    int port = cfg_.port;
    if (port == 0) {
      port = server_.bind_to_any_port(cfg_.host);
      if (port < 0) throw Error(ErrorCode::io, "cannot bind " + cfg_.host);
    } else if (!server_.bind_to_port(cfg_.host, port)) {
      throw Error(ErrorCode::io, "cannot bind " + cfg_.host + ":" + std::to_string(port));
    }
    bound_port_ = port;
    return port;
  }

  /// Serves until stop(). Requires bind().
  void run() { server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }
  int port() const noexcept { return bound_port_; }

  // Handlers return (status, body); exposed for tests that skip the socket.
  using Reply = std::pair<int, std::string>;

  Reply list_datasets() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [id, ds] : datasets_) {
      const GTree& t = ds.handle.tree();
      out.push_back({{"id", id},
                     {"n", t.global_n},
                     {"e", t.global_e},
                     {"levels", t.levels},
                     {"fanout", t.fanout},
                     {"directed", t.directed},
                     {"tree_nodes", t.nodes.size()},
                     {"leaves", t.leaves().size()},
                     {"extraction", ds.graph.has_value()}});
    }
    return ok({{"datasets", std::move(out)}});
  }

  Reply context(const std::string& ds, const std::string& focus) const {
    return guarded([&] {
      const Dataset& d = dataset(ds);
      const TreeNodeId id = parse_id(focus, "focus");
      return ok(json::context(d.handle.tree(), tomahawk_context(d.handle, id)));
    });
  }

  Reply search(const std::string& ds, const std::string& label) const {
    return guarded([&] {
      const Dataset& d = dataset(ds);
      return ok(json::search(label, find_node(d.handle, label)));
    });
  }

  Reply leaf_subgraph(const std::string& ds, const std::string& leaf) const {
    return guarded([&] {
      const Dataset& d = dataset(ds);
      return ok(json::leaf_subgraph(*d.handle.load_leaf(parse_id(leaf, "leaf id"))));
    });
  }

  Reply leaf_metrics(const std::string& ds, const std::string& leaf) const {
    return guarded([&] {
      const Dataset& d = dataset(ds);
      return ok(json::metrics(gmine::leaf_metrics(d.handle, parse_id(leaf, "leaf id"))));
    });
  }

  Reply extract(const std::string& ds, const std::string& body) const {
    return guarded([&] {
      const Dataset& d = dataset(ds);
      const auto req = parse_body(body);
      const Graph& g = extraction_graph(d);
      const auto sources = resolve_sources(d, req);
      const ConnectionSubgraph sub = gmine::extract(g, sources, extract_options(req));
      return ok(json::connection_subgraph(g, sub));
    });
  }

  /// Extraction followed by a transient hierarchy over the result. Leaf
  /// members are reported with their ids in the dataset graph.
  Reply extract_and_partition(const std::string& ds, const std::string& body) const {
    return guarded([&] {
      const Dataset& d = dataset(ds);
      const auto req = parse_body(body);
      const Graph& g = extraction_graph(d);
      const auto sources = resolve_sources(d, req);
      const ConnectionSubgraph sub = gmine::extract(g, sources, extract_options(req));
      GTreeBuildOptions build_opts;
      try {
        build_opts.fanout = req.at("fanout").get<std::uint32_t>();
        build_opts.levels = req.at("levels").get<std::uint32_t>();
        build_opts.epsilon = req.value("epsilon", build_opts.epsilon);
        build_opts.seed = req.value("seed", std::uint64_t{0});
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::contract, std::string("request: ") + e.what());
      }
      build_opts.strict_depth = false;
      const GTreeBuild build = build_gtree(subgraph_of(g, sub), build_opts);
      return ok({{"subgraph", json::connection_subgraph(g, sub)},
                 {"tree", json::tree(build, sub.nodes)}});
    });
  }

 private:
  static Reply ok(const nlohmann::json& body) { return {200, dump(body)}; }

  static std::string dump(const nlohmann::json& body) {
    return body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  }

  template <typename F>
  static Reply guarded(F&& f) {
    try {
      return f();
    } catch (const Error& e) {
      return {http_status(e.code()), dump(json::error_body(e.code(), e.what()))};
    } catch (const std::bad_alloc&) {
      return {500, dump(json::error_body(ErrorCode::io, "out of memory"))};
    }
  }

  static TreeNodeId parse_id(const std::string& text, const char* what) {
    std::uint32_t id = 0;
    if (!detail::parse_int(std::string_view(text), id)) {
      throw Error(ErrorCode::contract, std::string(what) + " must be a non-negative integer");
    }
    return id;
  }

  static nlohmann::json parse_body(const std::string& body) {
    try {
      auto doc = nlohmann::json::parse(body);
      if (!doc.is_object()) throw Error(ErrorCode::parse, "request body must be a JSON object");
      return doc;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::parse, std::string("request body: ") + e.what());
    }
  }

  const Dataset& dataset(const std::string& id) const {
    const auto it = datasets_.find(id);
    if (it == datasets_.end()) throw Error(ErrorCode::not_found, "unknown dataset " + id);
    return it->second;
  }

  static const Graph& extraction_graph(const Dataset& d) {
    if (!d.graph) {
      throw Error(ErrorCode::contract, "dataset " + d.id + " has no source graph for extraction");
    }
    return *d.graph;
  }

  // Sources are node ids or labels; a label must name exactly one node.
  static std::vector<NodeId> resolve_sources(const Dataset& d, const nlohmann::json& req) {
    const auto it = req.find("sources");
    if (it == req.end() || !it->is_array()) {
      throw Error(ErrorCode::contract, "request needs a \"sources\" array");
    }
    std::vector<NodeId> out;
    for (const auto& s : *it) {
      if (s.is_number_unsigned()) {
        const auto id = s.get<std::uint64_t>();
        if (id >= d.graph->node_count()) {
          throw Error(ErrorCode::not_found, "unknown node " + std::to_string(id));
        }
        out.push_back(static_cast<NodeId>(id));
      } else if (s.is_string()) {
        const auto hits = d.handle.label_lookup(s.get<std::string>());
        if (hits.empty()) throw Error(ErrorCode::not_found, "unknown label " + s.get<std::string>());
        if (hits.size() > 1) {
          throw Error(ErrorCode::contract, "label " + s.get<std::string>() + " is ambiguous");
        }
        out.push_back(hits.front().global_id);
      } else {
        throw Error(ErrorCode::contract, "sources must be node ids or labels");
      }
    }
    return out;
  }

  ExtractOptions extract_options(const nlohmann::json& req) const {
    ExtractOptions opts;
    try {
      opts.budget = req.at("budget").get<std::size_t>();
      opts.rwr.restart = req.value("c", opts.rwr.restart);
      opts.max_path_length = req.value("maxlen", opts.max_path_length);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::contract, std::string("request: ") + e.what());
    }
    opts.time_limit = cfg_.extract_timeout;
    return opts;
  }

  std::string resolve(const std::string& path) const {
    if (path.empty() || cfg_.data_dir.empty()) return path;
    const std::filesystem::path p(path);
    return p.is_absolute() ? path : (std::filesystem::path(cfg_.data_dir) / p).string();
  }

  void register_dataset(const DatasetConfig& d) {
    detail::require(!d.id.empty(), "dataset id must not be empty");
    if (datasets_.count(d.id)) throw Error(ErrorCode::contract, "duplicate dataset id " + d.id);
    Dataset ds{d.id, open_gtree_file(resolve(d.gtree), {.cache_capacity = cfg_.cache_capacity}),
               std::nullopt};
    const GTree& tree = ds.handle.tree();
    if (!d.graph.empty()) {
      Graph g = load_edge_list_file(resolve(d.graph), d.directed).graph;
      if (!d.labels.empty()) g = g.with_labels(load_labels_file(resolve(d.labels), g.node_count()));
      if (g.node_count() != tree.global_n || g.edge_count() != tree.global_e ||
          g.directed() != tree.directed) {
        throw Error(ErrorCode::format, "dataset " + d.id + ": graph " + d.graph +
                                           " does not match its G-Tree (n=" +
                                           std::to_string(g.node_count()) + ", e=" +
                                           std::to_string(g.edge_count()) + " vs n=" +
                                           std::to_string(tree.global_n) + ", e=" +
                                           std::to_string(tree.global_e) + ")");
      }
      if (!g.has_labels() && !tree.label_index.empty()) {
        std::vector<std::string> labels(g.node_count());
        for (const auto& e : tree.label_index) labels[e.global_id] = e.label;
        g = g.with_labels(std::move(labels));
      }
      ds.graph = std::move(g);
    }
    datasets_.emplace(d.id, std::move(ds));
  }

  static void send(httplib::Response& res, const Reply& reply) {
    res.status = reply.first;
    res.set_content(reply.second, "application/json");
  }

  void routes() {
    server_.Get("/api/v1/datasets",
                [this](const httplib::Request&, httplib::Response& res) {
                  send(res, list_datasets());
                });
    server_.Get(R"(/api/v1/tree/([^/]+)/context)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  if (!req.has_param("focus")) {
                    send(res, {400, dump(json::error_body(ErrorCode::contract,
                                                          "missing focus parameter"))});
                    return;
                  }
                  send(res, context(req.matches[1], req.get_param_value("focus")));
                });
    server_.Get(R"(/api/v1/tree/([^/]+)/search)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  if (!req.has_param("label")) {
                    send(res, {400, dump(json::error_body(ErrorCode::contract,
                                                          "missing label parameter"))});
                    return;
                  }
                  send(res, search(req.matches[1], req.get_param_value("label")));
                });
    server_.Get(R"(/api/v1/leaf/([^/]+)/([^/]+)/subgraph)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  send(res, leaf_subgraph(req.matches[1], req.matches[2]));
                });
    server_.Get(R"(/api/v1/leaf/([^/]+)/([^/]+)/metrics)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  send(res, leaf_metrics(req.matches[1], req.matches[2]));
                });
    server_.Post(R"(/api/v1/extract/([^/]+))",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   send(res, extract(req.matches[1], req.body));
                 });
    server_.Post(R"(/api/v1/extract-and-partition/([^/]+))",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   send(res, extract_and_partition(req.matches[1], req.body));
                 });
    server_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.status == 404 && res.body.empty()) {
        res.set_content(dump(json::error_body(ErrorCode::not_found, "no such endpoint")),
                        "application/json");
      }
    });
    server_.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
          std::string what = "internal error";
          try {
            std::rethrow_exception(ep);
          } catch (const std::exception& e) {
            what = e.what();
          } catch (...) {
          }
          res.status = 500;
          res.set_content(dump(json::error_body(ErrorCode::io, what)), "application/json");
        });
  }

  ServiceConfig cfg_;
  std::map<std::string, Dataset> datasets_;
  httplib::Server server_;
  int bound_port_ = 0;
};

}  // namespace gmine
