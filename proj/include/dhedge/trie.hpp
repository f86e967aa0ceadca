#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "dhedge/core.hpp"

namespace dhedge {

/// Up to K symbols, oldest first, most recent last.
using Context = std::vector<SymbolId>;

class ContextTrie;

/// Read-only handle to one trie node. Valid until the next ingest.
class NodeView {
 public:
  std::uint64_t count() const;
  std::size_t child_count() const;
  std::uint64_t child_sum() const;
  std::optional<std::uint64_t> child(SymbolId s) const;

  /// Calls f(SymbolId, count) for each child in ascending id order.
  template <class F>
  void for_each_child(F&& f) const;

  /// Materialised (symbol, count) list, ascending by id.
  std::vector<std::pair<SymbolId, std::uint64_t>> children() const;

 private:
  friend class ContextTrie;
  NodeView(const ContextTrie* trie, std::uint32_t node) : trie_(trie), node_(node) {}

  const ContextTrie* trie_;
  std::uint32_t node_;
};

/// Frequency trie of bounded depth shared by the experts of orders 0..K.
///
/// Each ingest appends the symbol to a window of the K+1 most recent
/// symbols and bumps the count of every window suffix ending at the new
/// symbol, plus the root. A node at path c1..cj therefore counts the
/// occurrences of that substring, and its children count what followed it.
class ContextTrie {
 public:
  explicit ContextTrie(std::size_t max_context);

  void ingest(SymbolId s);

  /// Node reached by walking `ctx` from the root, oldest symbol first.
  std::optional<NodeView> lookup(std::span<const SymbolId> ctx) const;
  NodeView root() const { return NodeView(this, 0); }

  /// The min(k, n) most recently ingested symbols. k > K is a ConfigError.
  Context current_context(std::size_t k) const;

  std::size_t max_context() const { return max_context_; }
  std::uint64_t symbols_ingested() const { return nodes_[0].count; }
  bool empty() const { return symbols_ingested() == 0; }
  /// One past the largest symbol id ingested so far.
  std::size_t extent() const { return extent_; }
  std::size_t node_count() const { return nodes_.size(); }

  /// Every node as (path, count), depth-first with children in id order,
  /// which is lexicographic order of the id paths.
  std::vector<std::pair<Context, std::uint64_t>> dump() const;

  /// One `path<TAB>count` line per node in dump() order; the path is the
  /// space-separated ids and is empty for the root.
  void write_snapshot(std::ostream& out) const;

 private:
  friend class NodeView;

  struct Edge {
    SymbolId symbol;
    std::uint32_t child;
  };
  struct Node {
    std::uint64_t count = 0;
    std::vector<Edge> edges;  // sorted by symbol
  };

  std::uint32_t child_or_insert(std::uint32_t node, SymbolId s);
  std::optional<std::uint32_t> find_child(std::uint32_t node, SymbolId s) const;
  static void bump(Node& n);

  std::size_t max_context_;
  std::vector<Node> nodes_;
  std::deque<SymbolId> window_;
  std::size_t extent_ = 0;
};

template <class F>
void NodeView::for_each_child(F&& f) const {
  for (const auto& e : trie_->nodes_[node_].edges)
    f(e.symbol, trie_->nodes_[e.child].count);
}

}  // namespace dhedge
