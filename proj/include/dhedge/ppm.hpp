#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dhedge/core.hpp"
#include "dhedge/trie.hpp"

namespace dhedge {

// Conditional distribution at a single trie node. Children get
// count(child)/count(node); whatever the children do not account for is
// the escape mass handed down to the next shorter context.
template <class Scalar>
struct NodeDistributionT {
  std::vector<std::pair<SymbolId, Scalar>> probs;  // ascending id
  Scalar escape{};
};

// Expert distribution for order k over symbol ids 0..extent-1 (dense).
template <class Scalar>
struct BlendedDistributionT {
  std::vector<Scalar> probs;
  std::size_t order = 0;

  Scalar sum() const {
    Scalar s{};
    for (const auto& p : probs) s += p;
    return s;
  }
};

using NodeDistribution = NodeDistributionT<double>;
using BlendedDistribution = BlendedDistributionT<double>;

template <class Scalar>
NodeDistributionT<Scalar> node_distribution(const NodeView& view) {
  if (view.count() == 0)
    throw DistributionError("distribution of a node with zero count");
  NodeDistributionT<Scalar> d;
  const Scalar total(view.count());
  std::uint64_t seen = 0;
  d.probs.reserve(view.child_count());
  view.for_each_child([&](SymbolId s, std::uint64_t c) {
    d.probs.emplace_back(s, Scalar(c) / total);
    seen += c;
  });
  d.escape = Scalar(view.count() - seen) / total;
  return d;
}

/// Blend conditioned on an explicit context (oldest first), computed
/// straight from the escape-product sum
///   P(s) = sum_{j=k..0} (prod_{i=k..j+1} escape_i) * P_j(s)
/// where k = ctx.size() and the order-j context is the last j symbols.
/// Contexts missing from the trie contribute nothing and escape with 1.
template <class Scalar>
BlendedDistributionT<Scalar> blended_distribution_at(const ContextTrie& trie,
                                                     std::span<const SymbolId> ctx) {
  if (trie.empty()) throw DistributionError("no symbols ingested");
  BlendedDistributionT<Scalar> out;
  out.order = ctx.size();
  out.probs.assign(trie.extent(), Scalar{});
  Scalar carry(1);
  for (std::size_t j = ctx.size() + 1; j-- > 0;) {
    auto node = trie.lookup(ctx.subspan(ctx.size() - j));
    if (!node) continue;
    auto nd = node_distribution<Scalar>(*node);
    for (const auto& [s, p] : nd.probs) out.probs[s.value] += carry * p;
    carry *= nd.escape;
  }
  return out;
}

/// Order-k expert distribution for the trie's own history. With fewer than
/// k symbols seen the blend starts at the longest available order.
template <class Scalar>
BlendedDistributionT<Scalar> blended_distribution(const ContextTrie& trie,
                                                  std::size_t k) {
  if (trie.empty()) throw DistributionError("no symbols ingested");
  const Context ctx = trie.current_context(k);
  auto out = blended_distribution_at<Scalar>(trie, ctx);
  out.order = k;
  return out;
}

/// Blends for every order 0..max_order in one pass. The order-j blend is
/// P_j + escape_j * blend_{j-1}, which shares the escape products between
/// orders instead of recomputing each chain.
template <class Scalar>
std::vector<BlendedDistributionT<Scalar>> all_order_distributions(
    const ContextTrie& trie, std::size_t max_order) {
  if (trie.empty()) throw DistributionError("no symbols ingested");
  const Context ctx = trie.current_context(max_order);
  const std::span<const SymbolId> full(ctx);
  const std::size_t extent = trie.extent();

  std::vector<BlendedDistributionT<Scalar>> out(max_order + 1);
  for (std::size_t j = 0; j <= max_order; ++j) {
    auto& cur = out[j];
    cur.order = j;
    if (j == 0) {
      cur.probs.assign(extent, Scalar{});
    } else {
      cur.probs = out[j - 1].probs;
    }
    if (j > ctx.size()) continue;
    auto node = trie.lookup(full.subspan(ctx.size() - j));
    if (!node) continue;
    auto nd = node_distribution<Scalar>(*node);
    if (j > 0)
      for (auto& p : cur.probs) p *= nd.escape;
    for (const auto& [s, p] : nd.probs) cur.probs[s.value] += p;
  }
  return out;
}

/// Index of the largest entry; ties go to the smallest id. Empty input
/// yields no prediction.
template <class Scalar>
std::optional<SymbolId> argmax_symbol(std::span<const Scalar> probs) {
  if (probs.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return SymbolId(static_cast<std::uint32_t>(best));
}

/// Expert of order k: argmax of its blend, or no prediction on an empty trie.
std::optional<SymbolId> expert_predict(const ContextTrie& trie, std::size_t k);

}  // namespace dhedge
