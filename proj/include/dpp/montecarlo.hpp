#pragma once

#include "dpp/analysis.hpp"
#include "dpp/controller.hpp"
#include "dpp/core.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dpp {

enum class Check { KeyFeature, QueueTail, XTail, GTail, Telescoping, Theorem2, Theorem3 };

std::string_view to_string(Check check);
std::optional<Check> parse_check(std::string_view name);
const std::vector<Check>& all_checks();

/// Deterministic per-path laws. Any violation fails a batch.
enum class Law {
  QueueUpdate,          // q_after = max(q_before + z, 0) bit-exactly
  InitialState,         // Q[1] = 0
  DriftBound,           // drift <= B^2/2 + q.z
  StepBound,            // | ||Q[t+1]|| - ||Q[t]|| | <= B
  Minimality,           // no action strictly better than the chosen one
  KeyFeature,           // exact E[V(z0 - z_opt) + q.z | q] <= 0
  TruncatedKeyFeature,  // same with min(q, C0 V), L = 1
  StoppedIncrement,     // |Y[t] - Y[t-1]| <= c2
  TruncatedIncrement,   // |G[t] - G[t-1]| <= 2 V z_max + C0 V B
  UnionDecomposition,   // X[T] != Y[T] implies max ||Q[t]|| > c1
  Telescoping,          // truncated telescoping and its lower bound, L = 1
};

std::string_view to_string(Law law);

struct InvariantViolation {
  Law law = Law::QueueUpdate;
  std::uint64_t path_id = 0;
  std::uint64_t seed = 0;
  std::size_t slot = 0;
  double value = 0.0;
  double limit = 0.0;
};

struct WilsonInterval {
  double lower = 0.0;
  double upper = 1.0;
};

inline constexpr double kWilsonZ95 = 1.959963984540054;

/// Wilson score interval for a binomial proportion.
WilsonInterval wilson_interval(std::size_t successes, std::size_t n, double z = kWilsonZ95);

/// Smallest Wilson upper bound attainable with n trials (zero successes).
double wilson_resolution_floor(std::size_t n, double z = kWilsonZ95);

struct TailEstimate {
  double frequency = 0.0;
  WilsonInterval interval;
  std::size_t num_paths = 0;
};

enum class TailStatistic { XT, GT, QueueNormMax };

/// Fraction of traces whose statistic exceeds `threshold` (X[T] >= t,
/// G[T] >= t, max_{t<=T} ||Q[t]|| > t) with its 95% Wilson interval.
/// Requires at least 30 traces; GT requires L = 1.
TailEstimate empirical_tail(std::span<const PathTrace> traces, TailStatistic statistic,
                            double threshold, double z_opt, const BoundConstants& constants);

struct BatchConfig {
  explicit BatchConfig(ProblemSpec problem) : spec(std::move(problem)) {}

  ProblemSpec spec;
  std::size_t num_paths = 100;
  std::size_t T = 1000;
  std::uint64_t master_seed = 1;
  double epsilon = 0.1;
  double delta = 0.05;
  std::set<Check> checks;
  std::optional<double> c1;               // default: calibrated to (T, delta)
  std::vector<double> queue_tail_levels;  // extra truncation levels for QueueTail
  std::size_t calibration_paths = 0;      // theorem checks: fitting batch; 0 -> max(30, num_paths / 2)
  ControllerFault fault = ControllerFault::None;
  unsigned threads = 0;                   // 0 -> DPP_LAB_THREADS or hardware concurrency
  std::optional<std::filesystem::path> dump_traces;
};

struct CheckResult {
  std::string name;
  std::string detail;
  double level = 0.0;  // c1, lambda, or M depending on the check
  double theoretical_bound = 0.0;
  double empirical_frequency = 0.0;
  WilsonInterval interval;
  std::size_t num_paths = 0;
  bool applicable = true;
  bool pass = false;
  std::optional<double> fitted_M;
};

struct BatchSummary {
  std::size_t num_paths = 0;
  std::size_t T = 0;
  std::uint64_t master_seed = 0;
  double z_opt = 0.0;
  double xi_star = 0.0;
  BoundConstants constants;

  std::vector<CheckResult> checks;
  std::vector<double> quantile_levels;
  std::vector<double> objective_quantiles;               // of per-path time-average z0
  std::vector<double> constraint_violation_quantiles;    // of per-path max_l time-average z_l
  std::size_t invariant_violations = 0;
  std::map<std::string, std::size_t> violations_by_law;
  std::optional<InvariantViolation> first_violation;
  std::size_t states_checked = 0;  // visited states run through the exact key-feature check
  double max_key_feature_value = 0.0;
  std::optional<double> fitted_M;

  bool invariants_hold() const { return invariant_violations == 0; }
  bool statistics_pass() const;
};

/// Runs num_paths independent paths (seed of path i = derive_seed(master_seed, i)),
/// asserts every deterministic law on each, and evaluates the requested checks.
/// The result depends only on the config, not on the worker count.
BatchSummary run_batch(const BatchConfig& config);

/// Worker count used when a config leaves `threads` at 0.
unsigned default_thread_count();

}  // namespace dpp
