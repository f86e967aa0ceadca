#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "dhedge/core.hpp"

using namespace dhedge;

namespace {

std::vector<std::string> drain(SequenceStream s) {
  std::vector<std::string> out;
  while (auto t = s.next()) out.push_back(*t);
  return out;
}

std::vector<std::string> read_string(const std::string& text, StreamOptions opts) {
  std::istringstream in(text);
  return drain(SequenceStream(in, std::move(opts)));
}

}  // namespace

TEST_CASE("intern assigns dense ids in first-seen order") {
  Alphabet a;
  CHECK(a.intern("a") == SymbolId(0));
  CHECK(a.intern("a") == SymbolId(0));
  CHECK(a.intern("b") == SymbolId(1));
  CHECK(a.size() == 2);
  CHECK(a.token(SymbolId(1)) == "b");
  CHECK_FALSE(a.find("zz").has_value());
  CHECK_THROWS_AS(a.intern(""), InputError);
  CHECK_THROWS_AS(a.token(SymbolId(7)), InputError);
}

TEST_CASE("interning random token streams keeps ids contiguous and round-trips") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Alphabet a;
    std::set<std::string> distinct;
    std::uniform_int_distribution<int> pick(0, 30);
    for (int i = 0; i < 200; ++i) {
      std::string tok = "t" + std::to_string(pick(rng));
      distinct.insert(tok);
      SymbolId id = a.intern(tok);
      CHECK(a.token(id) == tok);
    }
    CHECK(a.size() == distinct.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(a.find(a.token(SymbolId(static_cast<std::uint32_t>(i)))) ==
            SymbolId(static_cast<std::uint32_t>(i)));
  }
}

TEST_CASE("lines format") {
  CHECK(read_string("a\nb\n", {}) == std::vector<std::string>{"a", "b"});
  CHECK(read_string("", {}).empty());
  CHECK(read_string("x\r\n\ny\n", {}) == std::vector<std::string>{"x", "y"});
}

TEST_CASE("csv column by index or header name") {
  StreamOptions by_index{StreamFormat::kCsvColumn, "2"};
  CHECK(read_string("t,x\n1,a\n2,b", by_index) == std::vector<std::string>{"a", "b"});
  StreamOptions by_name{StreamFormat::kCsvColumn, "x"};
  CHECK(read_string("t,x\n1,\"a,1\"\n2,b\n", by_name) ==
        std::vector<std::string>{"a,1", "b"});
}

TEST_CASE("csv errors name the offending line") {
  StreamOptions opts{StreamFormat::kCsvColumn, "3"};
  try {
    read_string("t,x,y\n1,a,p\n2,b\n", opts);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(read_string("t,x\n1,a\n", {StreamFormat::kCsvColumn, "nope"}),
                  InputError);
}

TEST_CASE("jsonl field") {
  StreamOptions opts{StreamFormat::kJsonlField, "sym"};
  CHECK(read_string("{\"sym\":\"a\"}\n{\"sym\":3}\n", opts) ==
        std::vector<std::string>{"a", "3"});
  try {
    read_string("{\"sym\":\"a\"}\n{oops\n", opts);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(read_string("{\"other\":1}\n", opts), InputError);
}

TEST_CASE("open_stream reads files and reports missing ones") {
  auto path = std::filesystem::temp_directory_path() / "dhedge_core_stream.txt";
  {
    std::ofstream f(path);
    f << "a\nb\na\n";
  }
  auto s = open_stream(path.string(), {});
  Alphabet a;
  auto seq = intern_all(s, a);
  CHECK(seq.size() == 3);
  CHECK(a.size() == 2);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(open_stream("/nonexistent/dir/file", {}), IoError);
  CHECK_THROWS_AS(open_stream(path.string(), {StreamFormat::kCsvColumn, ""}), ConfigError);
}

TEST_CASE("in-memory streams know their length") {
  auto s = SequenceStream::from_tokens({"x", "y"});
  CHECK(s.known_length() == 2u);
  CHECK(drain(std::move(s)) == std::vector<std::string>{"x", "y"});
}
