#pragma once

#include "dpp/cli/config.hpp"
#include "dpp/controller.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>

namespace dpp::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 1,
  kExitInvariantViolation = 2,
  kExitStatisticalFailure = 3,
};

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<std::filesystem::path> out;
  bool dump_traces = false;
  ControllerFault fault = ControllerFault::None;
};

/// trace.csv + summary.json under the output directory.
int cmd_simulate(const RunConfig& config, const Overrides& overrides, std::ostream& out);

/// Prints the bounds report; also writes bounds.json when an output directory is given.
int cmd_bounds(const RunConfig& config, const Overrides& overrides, std::ostream& out);

/// batch_summary.json plus a pass/fail table on `out`.
int cmd_verify(const RunConfig& config, const Overrides& overrides, std::ostream& out);

/// sweep.csv with columns V,T,time_avg_objective,time_avg_queue_sum.
int cmd_sweep(const RunConfig& config, const Overrides& overrides, std::ostream& out);

nlohmann::json bounds_report(const RunConfig& config, double epsilon, double delta);

/// Log-spaced slot counts in [1, T], strictly increasing, ending at T.
std::vector<std::size_t> log_checkpoints(std::size_t T, std::size_t count);

/// Entry point behind the dpp-lab binary.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace dpp::cli
