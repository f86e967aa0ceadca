#include "dhedge/sources.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "dhedge/ppm.hpp"

namespace dhedge {

std::uint64_t Rng::below(std::uint64_t n) {
  // rejection sampling keeps the result unbiased and portable
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

std::size_t ContextHash::operator()(const Context& c) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (SymbolId s : c) {
    h ^= s.value;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h);
}

void TransitionTable::validate() const {
  for (const auto& [ctx, row] : rows) {
    if (ctx.size() != order)
      throw ConfigError(fmt::format("context of length {} in an order-{} table",
                                    ctx.size(), order));
    double total = 0.0;
    for (const auto& [s, p] : row) {
      if (!(p >= 0.0)) throw ConfigError("negative transition probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw ConfigError(fmt::format("transition row sums to {:.17g}", total));
  }
}

namespace {

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("line {}: bad probability '{}'", line_no, s));
  }
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

void finalize_symbols(TransitionTable& t) {
  std::set<SymbolId> seen;
  for (const auto& [ctx, row] : t.rows) {
    seen.insert(ctx.begin(), ctx.end());
    for (const auto& [s, p] : row) seen.insert(s);
  }
  t.symbols.assign(seen.begin(), seen.end());
  for (auto& [ctx, row] : t.rows)
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
}

}  // namespace

TransitionTable load_transition_table(std::istream& in, Alphabet& alphabet) {
  TransitionTable t;
  bool have_order = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = split_ws(strip_comment(line));
    if (toks.empty()) continue;
    if (toks.size() < 2)
      throw ConfigError(fmt::format("line {}: expected context, next, probability",
                                    line_no));
    const std::size_t order = toks.size() - 2;
    if (!have_order) {
      t.order = order;
      have_order = true;
    } else if (order != t.order) {
      throw ConfigError(fmt::format("line {}: context length {} but table order is {}",
                                    line_no, order, t.order));
    }
    Context ctx;
    for (std::size_t i = 0; i < order; ++i) ctx.push_back(alphabet.intern(toks[i]));
    SymbolId next = alphabet.intern(toks[order]);
    double p = parse_double(toks[order + 1], line_no);
    auto& row = t.rows[ctx];
    for (const auto& [s, q] : row)
      if (s == next)
        throw ConfigError(fmt::format("line {}: duplicate transition", line_no));
    row.emplace_back(next, p);
  }
  if (!have_order) throw ConfigError("empty transition table");
  finalize_symbols(t);
  t.validate();
  return t;
}

TransitionTable load_transition_table(const std::filesystem::path& path,
                                      Alphabet& alphabet) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  return load_transition_table(in, alphabet);
}

TransitionTable random_transition_table(std::size_t order, std::size_t num_symbols,
                                        std::size_t support, std::uint64_t seed,
                                        Alphabet& alphabet) {
  if (num_symbols < 1) throw ConfigError("random table needs at least one symbol");
  if (support < 1 || support > num_symbols)
    throw ConfigError(fmt::format("support {} not in [1, {}]", support, num_symbols));
  std::vector<SymbolId> ids;
  for (std::size_t i = 0; i < num_symbols; ++i)
    ids.push_back(alphabet.intern(fmt::format("s{}", i)));

  Rng rng(seed);
  TransitionTable t;
  t.order = order;
  std::size_t rows = 1;
  for (std::size_t i = 0; i < order; ++i) rows *= num_symbols;
  t.rows.reserve(rows);

  Context ctx(order);
  std::vector<std::size_t> digits(order, 0);
  std::vector<SymbolId> pool;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < order; ++i) ctx[i] = ids[digits[i]];

    pool = ids;
    TransitionTable::Row row;
    double total = 0.0;
    for (std::size_t j = 0; j < support; ++j) {
      auto pick = static_cast<std::size_t>(rng.below(pool.size()));
      // exponential weights give a skewed row, like a real activity log
      double w = -std::log1p(-rng.uniform());
      row.emplace_back(pool[pick], w);
      total += w;
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    for (auto& [s, w] : row) w /= total;
    t.rows.emplace(ctx, std::move(row));

    for (std::size_t i = order; i-- > 0;) {
      if (++digits[i] < num_symbols) break;
      digits[i] = 0;
    }
  }
  finalize_symbols(t);
  t.validate();
  return t;
}

MarkovSource MarkovSource::explicit_markov(TransitionTable table, std::uint64_t seed) {
  table.validate();
  if (table.symbols.empty()) throw ConfigError("transition table has no symbols");
  MarkovSource s;
  s.order_ = table.order;
  s.seed_ = seed;
  s.table_ = std::make_shared<const TransitionTable>(std::move(table));
  return s;
}

MarkovSource MarkovSource::train_sampler(std::span<const SymbolId> seq,
                                         std::size_t order) {
  if (seq.size() < order + 1)
    throw InputError(fmt::format("training needs more than {} symbols, got {}",
                                 order, seq.size()));
  auto trie = std::make_shared<ContextTrie>(order);
  for (SymbolId s : seq) trie->ingest(s);
  MarkovSource src;
  src.order_ = order;
  src.trie_ = std::move(trie);
  return src;
}

std::vector<double> MarkovSource::next_distribution(
    std::span<const SymbolId> history) const {
  const std::size_t len = std::min(order_, history.size());
  const auto ctx = history.subspan(history.size() - len);

  if (trie_) return blended_distribution_at<double>(*trie_, ctx).probs;

  const auto& t = *table_;
  std::vector<double> dist(t.symbols.back().value + 1, 0.0);
  const TransitionTable::Row* row = nullptr;
  if (len == order_) {
    auto it = t.rows.find(Context(ctx.begin(), ctx.end()));
    if (it != t.rows.end()) row = &it->second;
  }
  if (row) {
    for (const auto& [s, p] : *row) dist[s.value] = p;
  } else {
    // bootstrap and uncovered contexts: uniform over the table's symbols
    const double u = 1.0 / static_cast<double>(t.symbols.size());
    for (SymbolId s : t.symbols) dist[s.value] = u;
  }
  return dist;
}

SymbolId MarkovSource::draw(std::span<const SymbolId> history, Rng& rng) const {
  const auto dist = next_distribution(history);
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0.0) continue;
    last = i;
    acc += dist[i];
    if (u < acc) return SymbolId(static_cast<std::uint32_t>(i));
  }
  return SymbolId(static_cast<std::uint32_t>(last));
}

std::vector<SymbolId> sample(const MarkovSource& source, std::size_t n,
                             std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SymbolId> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(source.draw(out, rng));
  return out;
}

RegimeSwitch::RegimeSwitch(std::vector<MarkovSource> sources, RegimeSchedule schedule)
    : sources_(std::move(sources)), schedule_(std::move(schedule)) {
  if (schedule_.empty()) throw ConfigError("empty regime schedule");
  for (const auto& r : schedule_) {
    if (r.source >= sources_.size())
      throw ConfigError(fmt::format("regime refers to source {} of {}", r.source,
                                    sources_.size()));
    if (r.steps == 0) throw ConfigError("regime durations must be positive");
    total_ += r.steps;
  }
}

std::vector<SymbolId> RegimeSwitch::sample(std::size_t n, std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<SymbolId> out;
  out.reserve(n);
  std::size_t regime = 0;
  std::size_t left = schedule_[0].steps;
  while (out.size() < n) {
    if (left == 0) {
      regime = (regime + 1) % schedule_.size();
      left = schedule_[regime].steps;
    }
    out.push_back(sources_[schedule_[regime].source].draw(out, rng));
    --left;
  }
  return out;
}

namespace {

struct KeyValues {
  std::unordered_map<std::string, std::string> values;

  std::uint64_t get_uint(const std::string& key, std::size_t line_no) const {
    auto it = values.find(key);
    if (it == values.end())
      throw ConfigError(fmt::format("line {}: missing '{}='", line_no, key));
    std::uint64_t v = 0;
    const auto& s = it->second;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      throw ConfigError(fmt::format("line {}: '{}' is not a count", line_no, s));
    return v;
  }
};

KeyValues parse_kv(std::span<const std::string> toks, std::size_t line_no) {
  KeyValues kv;
  for (const auto& t : toks) {
    auto eq = t.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError(fmt::format("line {}: expected key=value, got '{}'", line_no, t));
    kv.values[t.substr(0, eq)] = t.substr(eq + 1);
  }
  return kv;
}

std::vector<SymbolId> read_token_file(const std::filesystem::path& p, Alphabet& a) {
  auto stream = open_stream(p.string(), StreamOptions{});
  return intern_all(stream, a);
}

}  // namespace

Generator Generator::parse(std::istream& in, const std::filesystem::path& base_dir) {
  Generator g;
  std::vector<std::string> names;
  std::vector<std::pair<std::string, std::size_t>> regime_lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = split_ws(strip_comment(line));
    if (toks.empty()) continue;
    if (toks[0] == "source") {
      if (toks.size() < 3)
        throw ConfigError(fmt::format("line {}: source <name> <kind> ...", line_no));
      const auto& name = toks[1];
      if (std::find(names.begin(), names.end(), name) != names.end())
        throw ConfigError(fmt::format("line {}: duplicate source '{}'", line_no, name));
      const auto& kind = toks[2];
      if (kind == "table") {
        if (toks.size() != 4)
          throw ConfigError(fmt::format("line {}: source <name> table <path>", line_no));
        g.sources_.push_back(MarkovSource::explicit_markov(
            load_transition_table(base_dir / toks[3], g.alphabet_)));
      } else if (kind == "random") {
        auto kv = parse_kv(std::span(toks).subspan(3), line_no);
        g.sources_.push_back(MarkovSource::explicit_markov(random_transition_table(
            kv.get_uint("order", line_no), kv.get_uint("symbols", line_no),
            kv.get_uint("support", line_no), kv.get_uint("seed", line_no),
            g.alphabet_)));
      } else if (kind == "trained") {
        if (toks.size() != 5)
          throw ConfigError(
              fmt::format("line {}: source <name> trained <path> order=<m>", line_no));
        auto kv = parse_kv(std::span(toks).subspan(4), line_no);
        auto seq = read_token_file(base_dir / toks[3], g.alphabet_);
        g.sources_.push_back(
            MarkovSource::train_sampler(seq, kv.get_uint("order", line_no)));
      } else {
        throw ConfigError(fmt::format("line {}: unknown source kind '{}'", line_no, kind));
      }
      names.push_back(name);
    } else if (toks[0] == "regime") {
      if (toks.size() != 3)
        throw ConfigError(fmt::format("line {}: regime <name> <steps>", line_no));
      KeyValues kv;
      kv.values["steps"] = toks[2];
      regime_lines.emplace_back(toks[1], kv.get_uint("steps", line_no));
    } else {
      throw ConfigError(fmt::format("line {}: unknown directive '{}'", line_no, toks[0]));
    }
  }
  if (g.sources_.empty()) throw ConfigError("generator spec defines no source");
  if (regime_lines.empty()) {
    if (g.sources_.size() != 1)
      throw ConfigError("several sources need a regime schedule");
  } else {
    RegimeSchedule schedule;
    for (const auto& [name, steps] : regime_lines) {
      auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end())
        throw ConfigError(fmt::format("regime refers to unknown source '{}'", name));
      schedule.push_back(Regime{static_cast<std::size_t>(it - names.begin()), steps});
    }
    g.regimes_.emplace(g.sources_, std::move(schedule));
  }
  return g;
}

Generator Generator::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  return parse(in, path.parent_path());
}

std::optional<std::size_t> Generator::natural_length() const {
  if (regimes_) return regimes_->total_steps();
  return std::nullopt;
}

std::vector<SymbolId> Generator::sample(std::size_t n, std::uint64_t seed) const {
  if (regimes_) return regimes_->sample(n, seed);
  return dhedge::sample(sources_.front(), n, seed);
}

}  // namespace dhedge
