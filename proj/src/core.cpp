#include "dhedge/core.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>

#include <fmt/format.h>
#include <json.hpp>

namespace dhedge {

SymbolId Alphabet::intern(std::string_view token) {
  if (token.empty()) throw InputError("cannot intern an empty token");
  std::string key(token);
  if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  SymbolId id(static_cast<std::uint32_t>(tokens_.size()));
  ids_.emplace(key, id);
  tokens_.push_back(std::move(key));
  return id;
}

std::optional<SymbolId> Alphabet::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Alphabet::token(SymbolId id) const {
  if (id.value >= tokens_.size())
    throw InputError(fmt::format("unknown symbol id {}", id.value));
  return tokens_[id.value];
}

StreamFormat parse_stream_format(std::string_view name) {
  if (name == "lines") return StreamFormat::kLines;
  if (name == "csv" || name == "csv-column") return StreamFormat::kCsvColumn;
  if (name == "jsonl" || name == "jsonl-field") return StreamFormat::kJsonlField;
  throw ConfigError(fmt::format("unknown stream format '{}'", name));
}

std::vector<std::string> split_csv_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw InputError("unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

SequenceStream::SequenceStream(std::unique_ptr<std::istream> owned,
                               StreamOptions opts)
    : owned_(std::move(owned)), in_(owned_.get()), opts_(std::move(opts)) {}

SequenceStream::SequenceStream(std::istream& borrowed, StreamOptions opts)
    : in_(&borrowed), opts_(std::move(opts)) {}

SequenceStream SequenceStream::from_tokens(std::vector<std::string> tokens) {
  SequenceStream s;
  s.known_length_ = tokens.size();
  s.buffered_ = std::move(tokens);
  return s;
}

std::optional<std::string> SequenceStream::next() {
  if (in_ == nullptr) {
    if (buffered_pos_ >= buffered_.size()) return std::nullopt;
    return buffered_[buffered_pos_++];
  }
  return next_from_input();
}

namespace {

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t") == std::string_view::npos;
}

}  // namespace

std::optional<std::string> SequenceStream::next_from_input() {
  std::string raw;
  while (std::getline(*in_, raw)) {
    ++line_no_;
    std::string_view line = strip_cr(raw);
    if (is_blank(line)) continue;

    switch (opts_.format) {
      case StreamFormat::kLines:
        return std::string(line);

      case StreamFormat::kCsvColumn: {
        std::vector<std::string> fields;
        try {
          fields = split_csv_record(line);
        } catch (const InputError& e) {
          throw InputError(fmt::format("line {}: {}", line_no_, e.what()));
        }
        if (!header_done_) {
          header_done_ = true;
          std::size_t idx = 0;
          auto [p, ec] = std::from_chars(opts_.field.data(),
                                         opts_.field.data() + opts_.field.size(), idx);
          if (ec == std::errc() && p == opts_.field.data() + opts_.field.size()) {
            if (idx == 0) throw ConfigError("csv column index is 1-based");
            column_ = idx - 1;
          } else {
            auto it = std::find(fields.begin(), fields.end(), opts_.field);
            if (it == fields.end())
              throw InputError(fmt::format("line {}: no csv column named '{}'",
                                           line_no_, opts_.field));
            column_ = static_cast<std::size_t>(it - fields.begin());
          }
          continue;
        }
        if (column_ >= fields.size() || fields[column_].empty())
          throw InputError(fmt::format("line {}: missing csv column {}", line_no_,
                                       column_ + 1));
        return fields[column_];
      }

      case StreamFormat::kJsonlField: {
        nlohmann::json rec;
        try {
          rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
          throw InputError(fmt::format("line {}: invalid json", line_no_));
        }
        if (!rec.is_object() || !rec.contains(opts_.field))
          throw InputError(
              fmt::format("line {}: missing field '{}'", line_no_, opts_.field));
        const auto& v = rec[opts_.field];
        std::string tok = v.is_string() ? v.get<std::string>() : v.dump();
        if (tok.empty())
          throw InputError(fmt::format("line {}: empty token", line_no_));
        return tok;
      }
    }
  }
  if (in_->bad()) throw IoError("read failure");
  return std::nullopt;
}

SequenceStream open_stream(const std::string& path, StreamOptions opts) {
  if ((opts.format != StreamFormat::kLines) && opts.field.empty())
    throw ConfigError("csv/jsonl formats need a column or field");
  if (path == "-") return SequenceStream(std::cin, std::move(opts));
  auto f = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*f) throw IoError(fmt::format("cannot open '{}'", path));
  return SequenceStream(std::move(f), std::move(opts));
}

std::vector<SymbolId> intern_all(SequenceStream& stream, Alphabet& alphabet) {
  std::vector<SymbolId> out;
  if (auto n = stream.known_length()) out.reserve(*n);
  while (auto tok = stream.next()) out.push_back(alphabet.intern(*tok));
  return out;
}

}  // namespace dhedge
