#include "dhedge/ppm.hpp"

namespace dhedge {

std::optional<SymbolId> expert_predict(const ContextTrie& trie, std::size_t k) {
  if (trie.empty()) return std::nullopt;
  auto blend = blended_distribution<double>(trie, k);
  return argmax_symbol<double>(blend.probs);
}

}  // namespace dhedge
