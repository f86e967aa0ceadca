#include "dhedge/trie.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace dhedge {

std::uint64_t NodeView::count() const { return trie_->nodes_[node_].count; }

std::size_t NodeView::child_count() const {
  return trie_->nodes_[node_].edges.size();
}

std::uint64_t NodeView::child_sum() const {
  std::uint64_t sum = 0;
  for_each_child([&](SymbolId, std::uint64_t c) { sum += c; });
  return sum;
}

std::optional<std::uint64_t> NodeView::child(SymbolId s) const {
  auto idx = trie_->find_child(node_, s);
  if (!idx) return std::nullopt;
  return trie_->nodes_[*idx].count;
}

std::vector<std::pair<SymbolId, std::uint64_t>> NodeView::children() const {
  std::vector<std::pair<SymbolId, std::uint64_t>> out;
  out.reserve(child_count());
  for_each_child([&](SymbolId s, std::uint64_t c) { out.emplace_back(s, c); });
  return out;
}

ContextTrie::ContextTrie(std::size_t max_context)
    : max_context_(max_context), nodes_(1) {}

void ContextTrie::bump(Node& n) {
  if (n.count == std::numeric_limits<std::uint64_t>::max())
    throw std::overflow_error("trie count overflow");
  ++n.count;
}

std::optional<std::uint32_t> ContextTrie::find_child(std::uint32_t node,
                                                     SymbolId s) const {
  const auto& edges = nodes_[node].edges;
  auto it = std::lower_bound(edges.begin(), edges.end(), s,
                             [](const Edge& e, SymbolId v) { return e.symbol < v; });
  if (it == edges.end() || it->symbol != s) return std::nullopt;
  return it->child;
}

std::uint32_t ContextTrie::child_or_insert(std::uint32_t node, SymbolId s) {
  if (auto idx = find_child(node, s)) return *idx;
  auto child = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  auto& edges = nodes_[node].edges;
  auto it = std::lower_bound(edges.begin(), edges.end(), s,
                             [](const Edge& e, SymbolId v) { return e.symbol < v; });
  edges.insert(it, Edge{s, child});
  return child;
}

void ContextTrie::ingest(SymbolId s) {
  window_.push_back(s);
  if (window_.size() > max_context_ + 1) window_.pop_front();
  extent_ = std::max<std::size_t>(extent_, std::size_t{s.value} + 1);

  bump(nodes_[0]);
  for (std::size_t start = 0; start < window_.size(); ++start) {
    std::uint32_t node = 0;
    for (std::size_t i = start; i < window_.size(); ++i)
      node = child_or_insert(node, window_[i]);
    bump(nodes_[node]);
  }
}

std::optional<NodeView> ContextTrie::lookup(std::span<const SymbolId> ctx) const {
  std::uint32_t node = 0;
  for (SymbolId s : ctx) {
    auto next = find_child(node, s);
    if (!next) return std::nullopt;
    node = *next;
  }
  return NodeView(this, node);
}

Context ContextTrie::current_context(std::size_t k) const {
  if (k > max_context_)
    throw ConfigError(
        fmt::format("context order {} exceeds trie maximum {}", k, max_context_));
  std::size_t len = std::min(k, window_.size());
  return Context(window_.end() - static_cast<std::ptrdiff_t>(len), window_.end());
}

std::vector<std::pair<Context, std::uint64_t>> ContextTrie::dump() const {
  std::vector<std::pair<Context, std::uint64_t>> out;
  Context path;
  auto visit = [&](auto&& self, std::uint32_t node) -> void {
    out.emplace_back(path, nodes_[node].count);
    for (const auto& e : nodes_[node].edges) {
      path.push_back(e.symbol);
      self(self, e.child);
      path.pop_back();
    }
  };
  visit(visit, 0);
  return out;
}

void ContextTrie::write_snapshot(std::ostream& out) const {
  for (const auto& [path, count] : dump()) {
    std::string p;
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (i) p.push_back(' ');
      p += std::to_string(path[i].value);
    }
    out << p << '\t' << count << '\n';
  }
}

}  // namespace dhedge
