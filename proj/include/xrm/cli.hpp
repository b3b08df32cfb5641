#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "xrm/dataset.hpp"
#include "xrm/solver.hpp"

namespace xrm::cli {

enum class Command { train, eval, sweep, bench };

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;       // bad input, parse error, bad configuration
inline constexpr int kExitMissingFile = 2;
inline constexpr int kExitDiverged = 3;

struct RunSpec {
  Command command = Command::train;
  std::filesystem::path data_path;
  std::filesystem::path model_path;
  std::filesystem::path output_path;
  SolverConfig config;
  SplitSpec split;
  // Grids for sweep; the other commands require exactly one value and copy
  // it into config.
  std::vector<double> lambdas{2.0};
  std::vector<int> components{10};
  std::vector<Index> sizes;  // bench
  bool standardize = false;
  bool timing = true;
};

/// Parses `xrm <command> [options]`. Returns nullopt after printing help, or
/// throws ConfigError (or CLI11's own errors) on bad arguments.
std::optional<RunSpec> parse_args(int argc, const char* const* argv);

int cmd_train(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_eval(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_bench(const RunSpec& spec, std::ostream& out, std::ostream& err);

/// parse_args followed by the matching cmd_*; maps every error to an exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace xrm::cli
