#include "dhedge/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dhedge/sources.hpp"

namespace dhedge {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

template <class T>
T parse_number(const std::string& s, const std::string& key) {
  T v{};
  if constexpr (std::is_floating_point_v<T>) {
    try {
      std::size_t used = 0;
      v = static_cast<T>(std::stod(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("{}: '{}' is not a number", key, s));
    }
  } else {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      throw ConfigError(fmt::format("{}: '{}' is not a count", key, s));
  }
  return v;
}

}  // namespace

ExperimentSuite ExperimentSuite::parse(std::istream& in,
                                       const std::filesystem::path& base_dir) {
  std::vector<double> gammas;
  std::vector<std::size_t> orders;
  ExperimentSuite suite;
  bool have_generator = false;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format("suite line {}: expected key = value", line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "generator") {
      suite.generator = base_dir / value;
      have_generator = true;
    } else if (key == "gammas") {
      for (const auto& w : words(value)) gammas.push_back(parse_number<double>(w, key));
    } else if (key == "max_orders") {
      for (const auto& w : words(value))
        orders.push_back(parse_number<std::size_t>(w, key));
    } else if (key == "seeds") {
      for (const auto& w : words(value)) {
        auto dash = w.find('-');
        if (dash == std::string::npos) {
          suite.seeds.push_back(parse_number<std::uint64_t>(w, key));
          continue;
        }
        auto lo = parse_number<std::uint64_t>(w.substr(0, dash), key);
        auto hi = parse_number<std::uint64_t>(w.substr(dash + 1), key);
        if (hi < lo) throw ConfigError(fmt::format("seeds: empty range '{}'", w));
        for (auto s = lo; s <= hi; ++s) suite.seeds.push_back(s);
      }
    } else if (key == "length") {
      suite.length = parse_number<std::size_t>(value, key);
    } else {
      throw ConfigError(fmt::format("suite line {}: unknown key '{}'", line_no, key));
    }
  }

  if (!have_generator) throw ConfigError("suite has no generator");
  if (gammas.empty() || orders.empty() || suite.seeds.empty())
    throw ConfigError("suite has no runs (gammas, max_orders and seeds are required)");
  if (suite.length == 0) throw ConfigError("suite length must be at least 1");

  for (double g : gammas) {
    for (std::size_t k : orders) {
      SuiteCell cell;
      cell.name = fmt::format("gamma={}/max_order={}", g, k);
      cell.config.max_order = k;
      cell.config.gamma = g;
      cell.config.horizon = suite.length;
      cell.config.validate();
      for (const auto& other : suite.cells)
        if (other.name == cell.name)
          throw ConfigError(fmt::format("duplicate suite cell {}", cell.name));
      suite.cells.push_back(std::move(cell));
    }
  }
  return suite;
}

ExperimentSuite ExperimentSuite::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  return parse(in, path.parent_path());
}

namespace {

class OutputFile {
 public:
  OutputFile(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      out_ = &fallback;
    } else {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw IoError(fmt::format("cannot write '{}'", path));
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }
  void close() {
    out_->flush();
    if (file_.is_open()) {
      file_.close();
      if (file_.fail()) throw IoError("write failure");
    }
  }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

struct RunArgs {
  std::string input;
  std::string format = "lines";
  std::string field;
  std::size_t max_order = 4;
  double gamma = 1.0;
  std::string beta = "auto";
  std::size_t horizon = 0;
  double initial_weight = 1.0;
  std::string out = "-";
  std::string summary;
  bool per_expert = false;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  PredictorConfig cfg;
  cfg.max_order = a.max_order;
  cfg.gamma = a.gamma;
  cfg.initial_weight = a.initial_weight;
  if (a.horizon > 0) cfg.horizon = a.horizon;
  if (a.beta != "auto") cfg.beta = parse_number<double>(a.beta, "--beta");
  cfg.validate();

  auto stream = open_stream(a.input, StreamOptions{parse_stream_format(a.format), a.field});
  auto trace = run_online(cfg, stream);

  OutputFile trace_out(a.out, out);
  write_trace_csv(trace, trace_out.stream(), a.per_expert);
  trace_out.close();

  // keep the summary off stdout when the trace is already there
  std::string summary_path = a.summary;
  std::ostream& summary_fallback = (a.out == "-" && a.summary.empty()) ? err : out;
  OutputFile summary_out(summary_path, summary_fallback);
  summary_out.stream() << trace_summary(trace).dump() << '\n';
  summary_out.close();
  return kExitOk;
}

struct GenArgs {
  std::string spec;
  std::uint64_t seed = 1;
  std::optional<std::size_t> length;
  std::string out = "-";
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  auto gen = Generator::load(a.spec);
  std::size_t n = 0;
  if (a.length) {
    n = *a.length;
  } else if (auto natural = gen.natural_length()) {
    n = *natural;
  } else {
    throw ConfigError("--length is required for a spec without regimes");
  }
  auto seq = gen.sample(n, a.seed);
  OutputFile f(a.out, out);
  for (SymbolId s : seq) f.stream() << gen.alphabet().token(s) << '\n';
  f.close();
  return kExitOk;
}

struct RunOutcome {
  std::size_t cell = 0;
  std::uint64_t seed = 0;
  double beta = 0.0;
  BoundReport report;
};

int cmd_verify_bound(const std::string& suite_path, const std::string& out_path,
                     std::size_t jobs, std::ostream& out,
                     std::ostream& err) {
  auto suite = ExperimentSuite::load(suite_path);
  const auto gen = Generator::load(suite.generator);

  const std::size_t total = suite.cells.size() * suite.seeds.size();
  std::vector<RunOutcome> results(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const std::size_t c = i / suite.seeds.size();
      const std::uint64_t seed = suite.seeds[i % suite.seeds.size()];
      const auto& cfg = suite.cells[c].config;
      auto seq = gen.sample(suite.length, seed);
      auto trace = run_online(cfg, seq);
      results[i] = RunOutcome{c, seed, trace.beta, verify_bound(trace, cfg)};
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, std::max<std::size_t>(total, 1));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  OutputFile f(out_path, out);
  auto& csv = f.stream();
  csv << "cell,gamma,max_order,experts,seed,beta,loss,best_expert,best_loss,bound,"
         "normalized_loss,normalized_bound,holds\n";
  for (const auto& r : results) {
    const auto& cfg = suite.cells[r.cell].config;
    csv << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", suite.cells[r.cell].name,
                       cfg.gamma, cfg.max_order, cfg.num_experts(), r.seed, r.beta,
                       r.report.loss, r.report.best_expert, r.report.best_loss,
                       r.report.bound, r.report.normalized_loss,
                       r.report.normalized_bound, r.report.holds ? 1 : 0);
  }
  f.close();

  std::size_t violations = 0;
  std::ostream& log = (out_path.empty() || out_path == "-") ? err : out;
  log << "cell,runs,mean_normalized_loss,mean_normalized_bound,violations\n";
  for (std::size_t c = 0; c < suite.cells.size(); ++c) {
    double nl = 0.0;
    double nb = 0.0;
    std::size_t bad = 0;
    for (std::size_t s = 0; s < suite.seeds.size(); ++s) {
      const auto& r = results[c * suite.seeds.size() + s];
      nl += r.report.normalized_loss;
      nb += r.report.normalized_bound;
      if (!r.report.holds) ++bad;
    }
    const double runs = static_cast<double>(suite.seeds.size());
    log << fmt::format("{},{},{:.6f},{:.6f},{}\n", suite.cells[c].name,
                       suite.seeds.size(), nl / runs, nb / runs, bad);
    violations += bad;
  }
  log << fmt::format("violations: {}/{}\n", violations, total);
  return violations == 0 ? kExitOk : kExitViolation;
}

int cmd_lemma_check(std::size_t cases, std::uint64_t seed, std::ostream& out) {
  Rng rng(seed);
  std::size_t maj_bad = 0;
  std::size_t ord_bad = 0;
  auto dump = [&](const char* what, const std::vector<double>& w,
                  const std::vector<double>* l, double gamma, unsigned m) {
    out << what << " counterexample: gamma=" << fmt::format("{}", gamma) << " M=" << m
        << " w=[" << fmt::format("{}", fmt::join(w, ",")) << "]";
    if (l) out << " l=[" << fmt::format("{}", fmt::join(*l, ",")) << "]";
    out << '\n';
  };

  for (std::size_t i = 0; i < cases; ++i) {
    const std::size_t k = 1 + static_cast<std::size_t>(rng.below(10));
    const double gamma = 1.0 - rng.uniform();  // (0, 1]
    const unsigned m = 1 + static_cast<unsigned>(rng.below(50));
    std::vector<double> w(k);
    for (auto& x : w) x = std::exp(40.0 * rng.uniform() - 20.0);
    if (!check_majorization(w, gamma, m)) {
      ++maj_bad;
      dump("majorization", w, nullptr, gamma, m);
    }

    std::vector<double> l(k);
    for (auto& x : l) x = rng.uniform();
    std::sort(w.begin(), w.end());
    std::sort(l.begin(), l.end(), std::greater<>());
    if (check_ordered_inequality(w, l, gamma, m) != LemmaOutcome::kHolds) {
      ++ord_bad;
      dump("ordered-inequality", w, &l, gamma, m);
    }
  }
  out << fmt::format("majorization: {} cases, {} violations\n", cases, maj_bad);
  out << fmt::format("ordered-inequality: {} cases, {} violations\n", cases, ord_bad);
  return (maj_bad + ord_bad) == 0 ? kExitOk : kExitViolation;
}

int cmd_trie(const RunArgs& a, std::ostream& out) {
  auto stream = open_stream(a.input, StreamOptions{parse_stream_format(a.format), a.field});
  Alphabet alphabet;
  ContextTrie trie(a.max_order);
  while (auto tok = stream.next()) trie.ingest(alphabet.intern(*tok));
  OutputFile f(a.out, out);
  trie.write_snapshot(f.stream());
  f.close();
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discounted HEDGE over PPM experts"};
  app.require_subcommand(1);

  auto unit_interval = CLI::Validator(
      [](std::string& s) -> std::string {
        try {
          double v = std::stod(s);
          if (v > 0.0 && v <= 1.0) return {};
        } catch (const std::exception&) {
        }
        return "must lie in (0,1]";
      },
      "(0,1]");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Predict a symbol stream online");
  run_cmd->add_option("--input", run.input, "Input file, '-' for stdin")->required();
  run_cmd->add_option("--format", run.format, "lines | csv | jsonl")
      ->check(CLI::IsMember({"lines", "csv", "csv-column", "jsonl", "jsonl-field"}));
  run_cmd->add_option("--field", run.field, "CSV column (1-based or name) or JSONL field");
  run_cmd->add_option("--max-order", run.max_order, "Largest expert order K");
  run_cmd->add_option("--gamma", run.gamma, "Discount factor")->check(unit_interval);
  run_cmd->add_option("--beta", run.beta, "Learning rate in (0,1] or 'auto'")
      ->check(unit_interval | CLI::IsMember({"auto"}));
  run_cmd->add_option("--horizon", run.horizon, "Horizon N for automatic beta")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--initial-weight", run.initial_weight, "Initial expert weight")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", run.out, "Trace CSV path, '-' for stdout");
  run_cmd->add_option("--summary", run.summary, "Summary JSON path");
  run_cmd->add_flag("--per-expert", run.per_expert, "Add p_k and L_k columns");

  GenArgs gen;
  std::size_t gen_length = 0;
  auto* gen_cmd = app.add_subcommand("gen", "Sample a synthetic sequence");
  gen_cmd->add_option("--spec", gen.spec, "Generator spec file")->required();
  gen_cmd->add_option("--seed", gen.seed, "RNG seed");
  auto* length_opt = gen_cmd->add_option("--length", gen_length, "Number of symbols");
  gen_cmd->add_option("--out", gen.out, "Output path, '-' for stdout");

  std::string suite_path;
  std::string verify_out = "-";
  std::size_t jobs = 0;
  auto* verify_cmd = app.add_subcommand("verify-bound", "Check the regret bound on a suite");
  verify_cmd->add_option("--suite", suite_path, "Suite file")->required();
  verify_cmd->add_option("--out", verify_out, "Per-run CSV path");
  verify_cmd->add_option("--jobs", jobs, "Worker threads (0 = all cores)");

  std::size_t cases = 1000;
  std::uint64_t lemma_seed = 1;
  auto* lemma_cmd = app.add_subcommand("lemma-check", "Randomised weight-ordering checks");
  lemma_cmd->add_option("--cases", cases, "Number of random cases")
      ->check(CLI::PositiveNumber);
  lemma_cmd->add_option("--seed", lemma_seed, "RNG seed");

  RunArgs trie_args;
  trie_args.max_order = 2;
  auto* trie_cmd = app.add_subcommand("trie", "Dump the context trie of a stream");
  trie_cmd->add_option("--input", trie_args.input, "Input file")->required();
  trie_cmd->add_option("--format", trie_args.format, "lines | csv | jsonl");
  trie_cmd->add_option("--field", trie_args.field, "CSV column or JSONL field");
  trie_cmd->add_option("--max-order", trie_args.max_order, "Trie context length K");
  trie_cmd->add_option("--out", trie_args.out, "Snapshot path");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) {
      if (run.beta == "auto" && run.horizon == 0) {
        err << "--beta auto needs --horizon\n" << run_cmd->help();
        return kExitUsage;
      }
      return cmd_run(run, out, err);
    }
    if (*gen_cmd) {
      if (length_opt->count() > 0) gen.length = gen_length;
      return cmd_gen(gen, out);
    }
    if (*verify_cmd) return cmd_verify_bound(suite_path, verify_out, jobs, out, err);
    if (*lemma_cmd) return cmd_lemma_check(cases, lemma_seed, out);
    if (*trie_cmd) return cmd_trie(trie_args, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace dhedge
