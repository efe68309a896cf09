#pragma once

#include "dpp/core.hpp"
#include "dpp/montecarlo.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpp::cli {

/// Malformed or inconsistent configuration; the message carries `file:line:`.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kServerScheduling = "server-scheduling-3x2";
inline constexpr const char* kServerSchedulingPooled = "server-scheduling-3x2-pooled";

struct BatchSection {
  std::optional<std::size_t> paths;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<std::set<Check>> checks;
  std::optional<double> c1;
  std::vector<double> queue_tail_levels;
  std::optional<std::size_t> calibration_paths;
};

struct SweepSection {
  std::vector<double> V;
  std::vector<double> epsilon;  // alternative to V: each entry runs at V = 1/epsilon
  std::size_t checkpoints = 20;
};

/// A parsed run configuration. `spec` already carries V.
struct RunConfig {
  explicit RunConfig(ProblemSpec problem_spec) : spec(std::move(problem_spec)) {}

  std::string source;
  std::string problem;  // builtin name, or "inline"
  ProblemSpec spec;
  double V = 0.0;
  std::size_t T = 10000;
  std::uint64_t seed = 1;
  std::filesystem::path output = ".";
  BatchSection batch;
  std::optional<SweepSection> sweep;
};

RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Same problem at a different V.
RunConfig with_V(const RunConfig& config, double V);

}  // namespace dpp::cli
