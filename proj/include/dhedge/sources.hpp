#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "dhedge/core.hpp"
#include "dhedge/trie.hpp"

namespace dhedge {

/// Portable seeded generator. std::mt19937_64's output sequence is fixed by
/// the standard; doubles are built from the top 53 bits so no
/// implementation-defined distribution is involved.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

struct ContextHash {
  std::size_t operator()(const Context& c) const noexcept;
};

/// Explicit order-m chain: context (m ids, oldest first) -> sparse row.
struct TransitionTable {
  using Row = std::vector<std::pair<SymbolId, double>>;

  std::size_t order = 0;
  std::vector<SymbolId> symbols;  // every symbol the table mentions, ascending
  std::unordered_map<Context, Row, ContextHash> rows;

  /// Rows must be non-negative and sum to 1 within 1e-12 (ConfigError).
  void validate() const;
};

/// Reads `ctx_1 .. ctx_m next probability` lines; '#' starts a comment.
/// The order is taken from the first record and must agree on every line.
TransitionTable load_transition_table(std::istream& in, Alphabet& alphabet);
TransitionTable load_transition_table(const std::filesystem::path& path,
                                      Alphabet& alphabet);

/// Complete random order-m table over `num_symbols` tokens named s0, s1, ...
/// Each row puts mass on `support` distinct successors.
TransitionTable random_transition_table(std::size_t order, std::size_t num_symbols,
                                        std::size_t support, std::uint64_t seed,
                                        Alphabet& alphabet);

/// A fixed-order Markov source, either from an explicit table or sampled
/// from the blended PPM distributions of a trained trie.
class MarkovSource {
 public:
  static MarkovSource explicit_markov(TransitionTable table, std::uint64_t seed = 0);
  static MarkovSource train_sampler(std::span<const SymbolId> seq, std::size_t order);

  std::size_t order() const { return order_; }
  std::uint64_t default_seed() const { return seed_; }

  /// Dense next-symbol distribution given everything emitted so far; only
  /// the last `order` symbols matter.
  std::vector<double> next_distribution(std::span<const SymbolId> history) const;
  SymbolId draw(std::span<const SymbolId> history, Rng& rng) const;

 private:
  MarkovSource() = default;

  std::size_t order_ = 0;
  std::uint64_t seed_ = 0;
  std::shared_ptr<const TransitionTable> table_;
  std::shared_ptr<const ContextTrie> trie_;
};

std::vector<SymbolId> sample(const MarkovSource& source, std::size_t n,
                             std::uint64_t seed);

struct Regime {
  std::size_t source = 0;
  std::size_t steps = 0;
};
using RegimeSchedule = std::vector<Regime>;

/// Concatenation of regimes. History is carried across boundaries and the
/// schedule repeats when more symbols are requested than it covers.
class RegimeSwitch {
 public:
  RegimeSwitch(std::vector<MarkovSource> sources, RegimeSchedule schedule);

  std::size_t total_steps() const { return total_; }
  std::vector<SymbolId> sample(std::size_t n, std::uint64_t seed) const;

 private:
  std::vector<MarkovSource> sources_;
  RegimeSchedule schedule_;
  std::size_t total_ = 0;
};

/// A generator description loaded from a spec file: named sources, an
/// optional regime schedule, and the alphabet they share.
///
///   source <name> table <path>
///   source <name> random order=<m> symbols=<n> support=<s> seed=<x>
///   source <name> trained <path> order=<m>
///   regime <name> <steps>
///
/// Paths are relative to the spec file. With no regime lines the spec must
/// define exactly one source.
class Generator {
 public:
  static Generator parse(std::istream& in, const std::filesystem::path& base_dir);
  static Generator load(const std::filesystem::path& path);

  const Alphabet& alphabet() const { return alphabet_; }
  /// Schedule total for regime specs, otherwise nullopt.
  std::optional<std::size_t> natural_length() const;
  std::vector<SymbolId> sample(std::size_t n, std::uint64_t seed) const;

 private:
  Alphabet alphabet_;
  std::vector<MarkovSource> sources_;
  std::optional<RegimeSwitch> regimes_;
};

}  // namespace dhedge
