#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dhedge {

// Error categories. The CLI maps them onto exit codes.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DistributionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense identity of an interned token. Ids are assigned in first-seen
/// order, which is also the tie-break order used by every argmax.
struct SymbolId {
  std::uint32_t value = 0;

  constexpr SymbolId() = default;
  constexpr explicit SymbolId(std::uint32_t v) : value(v) {}

  constexpr auto operator<=>(const SymbolId&) const = default;
};

/// Bijection between opaque tokens and dense ids.
class Alphabet {
 public:
  SymbolId intern(std::string_view token);
  std::optional<SymbolId> find(std::string_view token) const;
  const std::string& token(SymbolId id) const;

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::unordered_map<std::string, SymbolId> ids_;
  std::vector<std::string> tokens_;
};

enum class StreamFormat { kLines, kCsvColumn, kJsonlField };

StreamFormat parse_stream_format(std::string_view name);

struct StreamOptions {
  StreamFormat format = StreamFormat::kLines;
  // csv: 1-based column index or header name. jsonl: field name.
  std::string field;
};

/// Single-pass source of tokens in file order.
class SequenceStream {
 public:
  SequenceStream(std::unique_ptr<std::istream> owned, StreamOptions opts);
  SequenceStream(std::istream& borrowed, StreamOptions opts);

  static SequenceStream from_tokens(std::vector<std::string> tokens);

  /// Next token, or nullopt at end. Malformed records throw InputError
  /// naming the 1-based line number.
  std::optional<std::string> next();

  std::optional<std::size_t> known_length() const { return known_length_; }

 private:
  SequenceStream() = default;
  std::optional<std::string> next_from_input();

  std::unique_ptr<std::istream> owned_;
  std::istream* in_ = nullptr;
  StreamOptions opts_;
  std::size_t line_no_ = 0;
  bool header_done_ = false;
  std::size_t column_ = 0;  // resolved 0-based csv column

  std::vector<std::string> buffered_;
  std::size_t buffered_pos_ = 0;
  std::optional<std::size_t> known_length_;
};

/// Opens `path` ("-" reads stdin).
SequenceStream open_stream(const std::string& path, StreamOptions opts);

/// Splits one CSV record, honouring double-quoted fields.
std::vector<std::string> split_csv_record(std::string_view line);

/// Drains a stream into ids, growing `alphabet` as needed.
std::vector<SymbolId> intern_all(SequenceStream& stream, Alphabet& alphabet);

}  // namespace dhedge

template <>
struct std::hash<dhedge::SymbolId> {
  std::size_t operator()(dhedge::SymbolId s) const noexcept {
    return std::hash<std::uint32_t>{}(s.value);
  }
};
