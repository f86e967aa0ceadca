#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dhedge/eval.hpp"

namespace dhedge {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitViolation = 3;

struct SuiteCell {
  std::string name;
  PredictorConfig config;  // beta left automatic; horizon = length
};

/// Grid of bound-validation runs read from a key = value file:
///
///   generator  = <generator spec path, relative to the suite file>
///   gammas     = 0.90 0.95 0.99 1.00
///   max_orders = 2 6 10
///   seeds      = 1-20            (ranges and single values, space separated)
///   length     = 5000
struct ExperimentSuite {
  std::filesystem::path generator;
  std::vector<SuiteCell> cells;
  std::vector<std::uint64_t> seeds;
  std::size_t length = 0;

  static ExperimentSuite parse(std::istream& in, const std::filesystem::path& base_dir);
  static ExperimentSuite load(const std::filesystem::path& path);
};

/// Entry point behind the `dhedge` binary. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dhedge
