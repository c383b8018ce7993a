#pragma once

/*
 * G-Tree file format, version 1. All integers little-endian, all offsets
 * absolute from the start of the file.
 *
 *   header        96 bytes   magic "GTRE", version, global_n, global_e,
 *                            fanout, levels, tree node count, flags and
 *                            the offset/length of every later section
 *   tree          80 bytes per tree node, ordered by id
 *   connectivity  16 bytes per record (a u32, b u32, weight u64)
 *   label index   (global u32, leaf u32, local u32, length u32, bytes)*
 *   leaf blocks   one self-contained block per leaf: local CSR, sorted
 *                 global ids and per-node labels
 *   trailer       20 bytes   CRC32 of header, tree, connectivity and label
 *                            sections, then "ERTG"
 *
 * Leaf blocks carry their own CRC32 in the owning tree record so a single
 * leaf can be verified without touching the others.
 */

#include <array>
#include <atomic>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/crc.hpp>

#include "gmine/error.hpp"
#include "gmine/graph.hpp"
#include "gmine/gtree.hpp"

namespace gmine {

inline constexpr std::array<char, 4> gtree_magic{'G', 'T', 'R', 'E'};
inline constexpr std::array<char, 4> gtree_trailer_magic{'E', 'R', 'T', 'G'};
inline constexpr std::uint32_t gtree_version = 1;
inline constexpr std::uint64_t gtree_header_size = 96;
inline constexpr std::uint64_t gtree_tree_record_size = 80;
inline constexpr std::uint64_t gtree_connectivity_record_size = 16;
inline constexpr std::uint64_t gtree_trailer_size = 20;

/// Random-access byte input. Implementations must allow concurrent reads.
class ByteSource {
 public:
  virtual ~ByteSource() = default;
  virtual std::uint64_t size() const = 0;
  virtual void read(std::uint64_t offset, std::span<std::uint8_t> out) = 0;
};

class MemorySource final : public ByteSource {
 public:
  explicit MemorySource(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}
  std::uint64_t size() const override { return bytes_.size(); }
  void read(std::uint64_t offset, std::span<std::uint8_t> out) override {
    if (offset > bytes_.size() || out.size() > bytes_.size() - offset) {
      throw Error(ErrorCode::io, "read past end of buffer", offset);
    }
    std::memcpy(out.data(), bytes_.data() + offset, out.size());
  }

 private:
  std::vector<std::uint8_t> bytes_;
};

class FileSource final : public ByteSource {
 public:
  explicit FileSource(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw Error(ErrorCode::io, "cannot open " + path);
    in_.seekg(0, std::ios::end);
    size_ = static_cast<std::uint64_t>(in_.tellg());
  }
  std::uint64_t size() const override { return size_; }
  void read(std::uint64_t offset, std::span<std::uint8_t> out) override {
    std::lock_guard lock(mutex_);
    in_.clear();
    in_.seekg(static_cast<std::streamoff>(offset));
    in_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!in_) throw Error(ErrorCode::io, "short read from " + path_, offset);
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::uint64_t size_ = 0;
  std::mutex mutex_;
};

/// Pass-through source that tallies every byte requested.
class CountingSource final : public ByteSource {
 public:
  explicit CountingSource(std::shared_ptr<ByteSource> inner) : inner_(std::move(inner)) {}
  std::uint64_t size() const override { return inner_->size(); }
  void read(std::uint64_t offset, std::span<std::uint8_t> out) override {
    inner_->read(offset, out);
    bytes_read_ += out.size();
    ++reads_;
  }
  std::uint64_t bytes_read() const noexcept { return bytes_read_; }
  std::uint64_t reads() const noexcept { return reads_; }

 private:
  std::shared_ptr<ByteSource> inner_;
  std::atomic<std::uint64_t> bytes_read_{0};
  std::atomic<std::uint64_t> reads_{0};
};

struct LeafBlockRef {
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
  std::uint32_t crc = 0;
};

/// Where each section lives, as recorded in the header.
struct GTreeLayout {
  std::uint64_t tree_offset = 0;
  std::uint64_t tree_length = 0;
  std::uint64_t connectivity_offset = 0;
  std::uint64_t connectivity_length = 0;
  std::uint64_t labels_offset = 0;
  std::uint64_t labels_length = 0;
  std::uint64_t leaves_offset = 0;
  std::uint64_t leaves_length = 0;
  std::uint64_t file_size = 0;

  /// Bytes a reader must touch to open the file: header, trailer and
  /// every resident section.
  std::uint64_t resident_bytes() const noexcept {
    return gtree_header_size + tree_length + connectivity_length + labels_length +
           gtree_trailer_size;
  }
};

namespace detail {

inline std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

class ByteWriter {
 public:
  std::vector<std::uint8_t> bytes;

  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void raw(std::string_view s) { bytes.insert(bytes.end(), s.begin(), s.end()); }

 private:
  void put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

// Bounds-checked little-endian cursor. Errors name the section and the
// absolute file offset.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::uint64_t base, std::string section)
      : bytes_(bytes), base_(base), section_(std::move(section)) {}

  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::string str(std::size_t len) {
    need(len);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
    pos_ += len;
    return s;
  }
  bool done() const noexcept { return pos_ == bytes_.size(); }
  std::uint64_t offset() const noexcept { return base_ + pos_; }
  [[noreturn]] void corrupt(const std::string& what) const {
    throw Error(ErrorCode::format, section_ + " section: " + what, offset());
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) corrupt("unexpected end of data");
  }
  std::uint64_t get(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::uint64_t base_;
  std::string section_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> encode_leaf(const LeafSubgraph& leaf) {
  ByteWriter w;
  const Graph& g = leaf.graph;
  w.u32(static_cast<std::uint32_t>(g.node_count()));
  w.u32(static_cast<std::uint32_t>(g.adjacency_entries()));
  for (std::uint64_t off : g.offsets()) w.u32(static_cast<std::uint32_t>(off));
  for (NodeId v : g.adjacency()) w.u32(v);
  for (NodeId id : leaf.global_ids) w.u32(id);
  for (NodeId u = 0; u < g.node_count(); ++u) {
    w.u32(static_cast<std::uint32_t>(g.label(u).size()));
    w.raw(g.label(u));
  }
  return std::move(w.bytes);
}

inline LeafSubgraph decode_leaf(std::span<const std::uint8_t> bytes, std::uint64_t base,
                                TreeNodeId id, bool directed, std::uint64_t expected_members) {
  ByteReader r(bytes, base, "leaf block " + std::to_string(id));
  const std::uint32_t n = r.u32();
  const std::uint32_t entries = r.u32();
  if (n != expected_members) r.corrupt("member count disagrees with tree record");
  std::vector<std::uint64_t> offsets(std::size_t{n} + 1);
  for (auto& off : offsets) off = r.u32();
  std::vector<NodeId> neighbors(entries);
  for (auto& v : neighbors) v = r.u32();
  LeafSubgraph leaf;
  leaf.leaf = id;
  leaf.global_ids.resize(n);
  for (auto& gid : leaf.global_ids) gid = r.u32();
  std::vector<std::string> labels(n);
  for (auto& label : labels) label = r.str(r.u32());
  if (!r.done()) r.corrupt("trailing bytes");
  try {
    leaf.graph = Graph::from_csr(directed, std::move(offsets), std::move(neighbors), std::move(labels));
  } catch (const Error& e) {
    r.corrupt(e.what());
  }
  for (std::size_t i = 1; i < leaf.global_ids.size(); ++i) {
    if (leaf.global_ids[i - 1] >= leaf.global_ids[i]) r.corrupt("global ids not increasing");
  }
  return leaf;
}

}  // namespace detail

/// Encodes a tree and its leaf subgraphs. Output is byte-for-byte
/// deterministic for identical input.
inline std::vector<std::uint8_t> serialize_gtree(const GTree& tree,
                                                 const std::map<TreeNodeId, LeafSubgraph>& leaves) {
  using detail::ByteWriter;
  for (const auto& node : tree.nodes) {
    detail::require(!node.is_leaf() || leaves.contains(node.id),
                    "missing leaf subgraph for tree node " + std::to_string(node.id));
    detail::require(node.is_leaf() ||
                        (node.children.back() - node.children.front() + 1 == node.children.size()),
                    "children must have contiguous ids");
  }
  const std::uint64_t tree_offset = gtree_header_size;
  const std::uint64_t tree_length = tree.nodes.size() * gtree_tree_record_size;

  // Connectivity section: per node, sibling records then parent-sibling records.
  const std::uint64_t conn_offset = tree_offset + tree_length;
  ByteWriter conn;
  std::vector<std::uint64_t> conn_at(tree.nodes.size()), ps_at(tree.nodes.size());
  for (const auto& node : tree.nodes) {
    conn_at[node.id] = conn_offset + conn.bytes.size();
    for (const auto& c : node.connectivity) {
      conn.u32(c.a);
      conn.u32(c.b);
      conn.u64(c.weight);
    }
    ps_at[node.id] = conn_offset + conn.bytes.size();
    for (const auto& c : node.parent_sibling_connectivity) {
      conn.u32(c.a);
      conn.u32(c.b);
      conn.u64(c.weight);
    }
  }

  const std::uint64_t labels_offset = conn_offset + conn.bytes.size();
  ByteWriter labels;
  for (const auto& e : tree.label_index) {
    labels.u32(e.global_id);
    labels.u32(e.leaf);
    labels.u32(e.local_index);
    labels.u32(static_cast<std::uint32_t>(e.label.size()));
    labels.raw(e.label);
  }

  const std::uint64_t leaves_offset = labels_offset + labels.bytes.size();
  ByteWriter blocks;
  std::map<TreeNodeId, LeafBlockRef> refs;
  for (const auto& [id, leaf] : leaves) {
    const auto block = detail::encode_leaf(leaf);
    refs[id] = {leaves_offset + blocks.bytes.size(), block.size(), detail::crc32(block)};
    blocks.bytes.insert(blocks.bytes.end(), block.begin(), block.end());
  }

  ByteWriter head;
  head.raw({gtree_magic.data(), gtree_magic.size()});
  head.u32(gtree_version);
  head.u64(tree.global_n);
  head.u64(tree.global_e);
  head.u16(static_cast<std::uint16_t>(tree.fanout));
  head.u16(static_cast<std::uint16_t>(tree.levels));
  head.u32(static_cast<std::uint32_t>(tree.nodes.size()));
  head.u32(tree.directed ? 1U : 0U);
  head.u32(0);
  head.u64(tree_offset);
  head.u64(conn_offset);
  head.u64(conn.bytes.size());
  head.u64(labels_offset);
  head.u64(labels.bytes.size());
  head.u64(leaves_offset);
  head.u64(blocks.bytes.size());

  ByteWriter records;
  for (const auto& node : tree.nodes) {
    records.u32(node.id);
    records.u32(node.parent ? *node.parent : 0xFFFFFFFFU);
    records.u16(static_cast<std::uint16_t>(node.level));
    records.u16(node.is_leaf() ? 1 : 0);
    records.u32(node.is_leaf() ? 0 : node.children.front());
    records.u32(static_cast<std::uint32_t>(node.children.size()));
    records.u32(static_cast<std::uint32_t>(node.connectivity.size()));
    records.u64(node.member_count);
    records.u64(node.internal_edges);
    records.u64(conn_at[node.id]);
    records.u64(ps_at[node.id]);
    records.u32(static_cast<std::uint32_t>(node.parent_sibling_connectivity.size()));
    const LeafBlockRef ref = node.is_leaf() ? refs.at(node.id) : LeafBlockRef{};
    records.u32(ref.crc);
    records.u64(ref.offset);
    records.u64(ref.length);
  }

  ByteWriter file;
  file.bytes.reserve(leaves_offset + blocks.bytes.size() + gtree_trailer_size);
  for (auto* part : {&head, &records, &conn, &labels, &blocks}) {
    file.bytes.insert(file.bytes.end(), part->bytes.begin(), part->bytes.end());
  }
  file.u32(detail::crc32(head.bytes));
  file.u32(detail::crc32(records.bytes));
  file.u32(detail::crc32(conn.bytes));
  file.u32(detail::crc32(labels.bytes));
  file.raw({gtree_trailer_magic.data(), gtree_trailer_magic.size()});
  return std::move(file.bytes);
}

inline void serialize(const GTree& tree, const std::map<TreeNodeId, LeafSubgraph>& leaves,
                      std::ostream& sink) {
  const auto bytes = serialize_gtree(tree, leaves);
  sink.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!sink) throw Error(ErrorCode::io, "write failure while serializing G-Tree");
}

inline void write_gtree_file(const std::string& path, const GTreeBuild& build) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot create " + path);
  serialize(build.tree, build.leaves, out);
}

struct OpenOptions {
  std::size_t cache_capacity = 64;
};

/**
 * Open G-Tree file: the tree, connectivity and label index are resident,
 * leaf blocks are read on demand through a bounded LRU cache. All const
 * members are safe to call concurrently.
 */
class GTreeHandle {
 public:
  const GTree& tree() const noexcept { return tree_; }
  const GTreeLayout& layout() const noexcept { return layout_; }
  const ByteSource& source() const noexcept { return *source_; }

  LeafBlockRef leaf_block(TreeNodeId id) const {
    const auto& node = tree_.node(id);
    if (!node.is_leaf()) {
      throw Error(ErrorCode::contract, "tree node " + std::to_string(id) + " is not a leaf");
    }
    return blocks_[id];
  }

  /// Reads exactly one leaf block on a miss; repeated calls return the
  /// same cached object.
  std::shared_ptr<const LeafSubgraph> load_leaf(TreeNodeId id) const {
    const LeafBlockRef ref = leaf_block(id);
    {
      std::lock_guard lock(cache_->mutex);
      if (auto hit = cache_->find(id)) {
        ++cache_->hits;
        return hit;
      }
    }
    std::vector<std::uint8_t> block(ref.length);
    source_->read(ref.offset, block);
    if (detail::crc32(block) != ref.crc) {
      throw Error(ErrorCode::integrity, "leaf block " + std::to_string(id) + " checksum mismatch",
                  ref.offset);
    }
    auto leaf = std::make_shared<const LeafSubgraph>(
        detail::decode_leaf(block, ref.offset, id, tree_.directed, tree_.node(id).member_count));
    std::lock_guard lock(cache_->mutex);
    if (auto raced = cache_->find(id)) return raced;
    ++cache_->misses;
    cache_->insert(id, leaf);
    return leaf;
  }

  /// Exact-match lookup; an empty result means not found.
  std::vector<LabelEntry> label_lookup(std::string_view label) const {
    return tree_.find_label(label);
  }

  std::size_t cache_hits() const {
    std::lock_guard lock(cache_->mutex);
    return cache_->hits;
  }
  std::size_t cache_misses() const {
    std::lock_guard lock(cache_->mutex);
    return cache_->misses;
  }
  std::size_t cached_leaves() const {
    std::lock_guard lock(cache_->mutex);
    return cache_->order.size();
  }

 private:
  struct LeafCache {
    std::size_t capacity = 64;
    std::list<std::pair<TreeNodeId, std::shared_ptr<const LeafSubgraph>>> order;  // MRU first
    std::unordered_map<TreeNodeId, decltype(order)::iterator> index;
    std::size_t hits = 0;
    std::size_t misses = 0;
    mutable std::mutex mutex;

    std::shared_ptr<const LeafSubgraph> find(TreeNodeId id) {
      const auto it = index.find(id);
      if (it == index.end()) return nullptr;
      order.splice(order.begin(), order, it->second);
      return it->second->second;
    }
    void insert(TreeNodeId id, std::shared_ptr<const LeafSubgraph> leaf) {
      if (capacity == 0) return;
      order.emplace_front(id, std::move(leaf));
      index[id] = order.begin();
      while (order.size() > capacity) {
        index.erase(order.back().first);
        order.pop_back();
      }
    }
  };

  friend GTreeHandle open_gtree(std::shared_ptr<ByteSource>, const OpenOptions&);

  std::shared_ptr<ByteSource> source_;
  GTree tree_;
  GTreeLayout layout_;
  std::vector<LeafBlockRef> blocks_;
  std::unique_ptr<LeafCache> cache_ = std::make_unique<LeafCache>();
};

/// Validates and loads the resident sections. Reads no leaf blocks.
inline GTreeHandle open_gtree(std::shared_ptr<ByteSource> source, const OpenOptions& opts = {}) {
  using detail::ByteReader;
  const std::uint64_t size = source->size();
  auto read = [&](std::uint64_t offset, std::uint64_t length) {
    std::vector<std::uint8_t> buf(length);
    source->read(offset, buf);
    return buf;
  };
  auto truncated = [&](const std::string& section, std::uint64_t at) -> Error {
    return Error(ErrorCode::format, "file truncated in " + section + " section", at);
  };

  if (size < gtree_header_size) throw truncated("header", size);
  const auto head = read(0, gtree_header_size);
  if (!std::equal(gtree_magic.begin(), gtree_magic.end(), head.begin())) {
    throw Error(ErrorCode::format, "bad magic, not a G-Tree file", 0);
  }
  ByteReader h(head, 0, "header");
  h.u32();  // magic
  const std::uint32_t version = h.u32();
  if (version != gtree_version) {
    throw Error(ErrorCode::format, "unsupported version " + std::to_string(version), 4);
  }
  // The trailer is the last thing in the file. When it looks intact, check
  // the header against it before trusting any offset the header holds.
  std::vector<std::uint8_t> trailer;
  if (size >= gtree_header_size + gtree_trailer_size) {
    trailer = read(size - gtree_trailer_size, gtree_trailer_size);
    if (std::equal(gtree_trailer_magic.begin(), gtree_trailer_magic.end(), trailer.begin() + 16)) {
      ByteReader t(trailer, size - gtree_trailer_size, "trailer");
      if (detail::crc32(head) != t.u32()) {
        throw Error(ErrorCode::integrity, "header section checksum mismatch", 0);
      }
    }
  }
  GTreeHandle handle;
  handle.source_ = source;
  handle.cache_->capacity = opts.cache_capacity;
  GTree& tree = handle.tree_;
  GTreeLayout& layout = handle.layout_;
  tree.global_n = h.u64();
  tree.global_e = h.u64();
  tree.fanout = h.u16();
  tree.levels = h.u16();
  const std::uint32_t node_count = h.u32();
  tree.directed = (h.u32() & 1U) != 0;
  h.u32();
  layout.tree_offset = h.u64();
  layout.tree_length = std::uint64_t{node_count} * gtree_tree_record_size;
  layout.connectivity_offset = h.u64();
  layout.connectivity_length = h.u64();
  layout.labels_offset = h.u64();
  layout.labels_length = h.u64();
  layout.leaves_offset = h.u64();
  layout.leaves_length = h.u64();
  layout.file_size = size;

  const std::pair<const char*, std::pair<std::uint64_t, std::uint64_t>> sections[] = {
      {"tree", {layout.tree_offset, layout.tree_length}},
      {"connectivity", {layout.connectivity_offset, layout.connectivity_length}},
      {"label index", {layout.labels_offset, layout.labels_length}},
      {"leaf blocks", {layout.leaves_offset, layout.leaves_length}},
  };
  std::uint64_t expected = gtree_header_size;
  for (const auto& [name, span] : sections) {
    if (span.first != expected) {
      throw Error(ErrorCode::format, std::string(name) + " section misplaced", span.first);
    }
    if (span.first + span.second > size) throw truncated(name, size);
    expected = span.first + span.second;
  }
  if (expected + gtree_trailer_size > size) throw truncated("trailer", size);
  if (expected + gtree_trailer_size < size) {
    throw Error(ErrorCode::format, "unexpected bytes after trailer", expected + gtree_trailer_size);
  }

  if (!std::equal(gtree_trailer_magic.begin(), gtree_trailer_magic.end(), trailer.begin() + 16)) {
    throw Error(ErrorCode::format, "bad trailer magic", expected + 16);
  }
  ByteReader t(trailer, expected, "trailer");
  const std::uint32_t crc_head = t.u32();
  const std::uint32_t crc_tree = t.u32();
  const std::uint32_t crc_conn = t.u32();
  const std::uint32_t crc_labels = t.u32();
  auto verify = [](std::span<const std::uint8_t> bytes, std::uint32_t crc, const char* name,
                   std::uint64_t at) {
    if (detail::crc32(bytes) != crc) {
      throw Error(ErrorCode::integrity, std::string(name) + " section checksum mismatch", at);
    }
  };
  verify(head, crc_head, "header", 0);
  const auto records = read(layout.tree_offset, layout.tree_length);
  verify(records, crc_tree, "tree", layout.tree_offset);
  const auto conn = read(layout.connectivity_offset, layout.connectivity_length);
  verify(conn, crc_conn, "connectivity", layout.connectivity_offset);
  const auto labels = read(layout.labels_offset, layout.labels_length);
  verify(labels, crc_labels, "label index", layout.labels_offset);

  auto conn_records = [&](std::uint64_t at, std::uint32_t count, ByteReader& owner) {
    std::vector<ConnectivityEdge> out;
    const std::uint64_t end = at + std::uint64_t{count} * gtree_connectivity_record_size;
    if (at < layout.connectivity_offset ||
        end > layout.connectivity_offset + layout.connectivity_length) {
      owner.corrupt("connectivity reference out of range");
    }
    const std::span<const std::uint8_t> all(conn);
    ByteReader c(all.subspan(at - layout.connectivity_offset, end - at), at, "connectivity");
    for (std::uint32_t i = 0; i < count; ++i) {
      ConnectivityEdge e{c.u32(), c.u32(), 0};
      e.weight = c.u64();
      out.push_back(e);
    }
    return out;
  };

  ByteReader r(records, layout.tree_offset, "tree");
  tree.nodes.resize(node_count);
  handle.blocks_.resize(node_count);
  for (std::uint32_t i = 0; i < node_count; ++i) {
    GTreeNode& node = tree.nodes[i];
    node.id = r.u32();
    if (node.id != i) r.corrupt("records out of order");
    const std::uint32_t parent = r.u32();
    if (parent != 0xFFFFFFFFU) {
      if (parent >= i) r.corrupt("parent id must precede child");
      node.parent = parent;
    }
    node.level = r.u16();
    const bool leaf = (r.u16() & 1U) != 0;
    const std::uint32_t first_child = r.u32();
    const std::uint32_t child_count = r.u32();
    const std::uint32_t conn_count = r.u32();
    node.member_count = r.u64();
    node.internal_edges = r.u64();
    const std::uint64_t conn_at = r.u64();
    const std::uint64_t ps_at = r.u64();
    const std::uint32_t ps_count = r.u32();
    LeafBlockRef& ref = handle.blocks_[i];
    ref.crc = r.u32();
    ref.offset = r.u64();
    ref.length = r.u64();
    if (leaf != (child_count == 0)) r.corrupt("leaf flag disagrees with child count");
    if (std::uint64_t{first_child} + child_count > node_count) r.corrupt("child range out of bounds");
    for (std::uint32_t c = 0; c < child_count; ++c) node.children.push_back(first_child + c);
    node.connectivity = conn_records(conn_at, conn_count, r);
    node.parent_sibling_connectivity = conn_records(ps_at, ps_count, r);
    if (leaf && (ref.offset < layout.leaves_offset ||
                 ref.offset + ref.length > layout.leaves_offset + layout.leaves_length)) {
      r.corrupt("leaf block out of range");
    }
  }
  if (node_count == 0 || tree.nodes[0].parent) {
    throw Error(ErrorCode::format, "tree section has no root", layout.tree_offset);
  }

  ByteReader l(labels, layout.labels_offset, "label index");
  while (!l.done()) {
    LabelEntry e;
    e.global_id = l.u32();
    e.leaf = l.u32();
    e.local_index = l.u32();
    e.label = l.str(l.u32());
    if (e.leaf >= node_count || !tree.nodes[e.leaf].is_leaf()) l.corrupt("entry names a non-leaf");
    tree.label_index.push_back(std::move(e));
  }
  return handle;
}

inline GTreeHandle open_gtree_file(const std::string& path, const OpenOptions& opts = {}) {
  return open_gtree(std::make_shared<FileSource>(path), opts);
}

/// Reads every leaf block through the cache.
inline std::map<TreeNodeId, LeafSubgraph> load_all_leaves(const GTreeHandle& handle) {
  std::map<TreeNodeId, LeafSubgraph> out;
  for (TreeNodeId id : handle.tree().leaves()) out.emplace(id, *handle.load_leaf(id));
  return out;
}

}  // namespace gmine
