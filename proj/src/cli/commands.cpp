#include "dpp/cli/commands.hpp"

#include "dpp/analysis.hpp"
#include "dpp/cli/json_io.hpp"
#include "dpp/montecarlo.hpp"
#include "dpp/oracle.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>

namespace dpp::cli {

using nlohmann::json;

namespace {

constexpr double kDefaultEpsilon = 0.1;
constexpr double kDefaultDelta = 0.05;
constexpr std::size_t kDefaultPaths = 100;

std::filesystem::path output_dir(const RunConfig& config, const Overrides& o) {
  const std::filesystem::path dir = o.out ? *o.out : config.output;
  std::filesystem::create_directories(dir);
  return dir;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw ConfigError(path.string() + ": cannot write");
  f << j.dump(2) << '\n';
}

std::string hex(std::uint64_t x) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::uint64_t seed_of(const RunConfig& c, const Overrides& o) { return o.seed ? *o.seed : c.seed; }
double epsilon_of(const RunConfig& c, const Overrides& o) {
  return o.epsilon ? *o.epsilon : c.batch.epsilon.value_or(kDefaultEpsilon);
}
double delta_of(const RunConfig& c, const Overrides& o) {
  return o.delta ? *o.delta : c.batch.delta.value_or(kDefaultDelta);
}

std::set<Check> default_checks(const ProblemSpec& spec) {
  std::set<Check> checks{Check::KeyFeature, Check::QueueTail, Check::XTail};
  if (spec.L() == 1) {
    checks.insert(Check::GTail);
    checks.insert(Check::Telescoping);
  }
  return checks;
}

std::string cell(double x) {
  std::ostringstream s;
  s << std::setprecision(4) << x;
  return s.str();
}

}  // namespace

std::vector<std::size_t> log_checkpoints(std::size_t T, std::size_t count) {
  if (T < 1 || count < 1) throw InvalidInput("log_checkpoints: T and count must be >= 1");
  std::vector<std::size_t> out;
  const double logT = std::log(static_cast<double>(T));
  for (std::size_t k = 1; k <= count; ++k) {
    const double v = std::exp(logT * static_cast<double>(k) / static_cast<double>(count));
    const auto t = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(v)), 1, T);
    if (out.empty() || t > out.back()) out.push_back(t);
  }
  if (out.back() != T) out.push_back(T);
  return out;
}

int cmd_simulate(const RunConfig& config, const Overrides& o, std::ostream& out) {
  const std::uint64_t seed = seed_of(config, o);
  const PathTrace trace = run_path(config.spec, seed, config.T, o.fault);
  const StationarySolution sol = solve_stationary_optimum(config.spec);
  const auto dir = output_dir(config, o);

  {
    std::ofstream csv(dir / "trace.csv");
    if (!csv) throw ConfigError((dir / "trace.csv").string() + ": cannot write");
    write_trace_csv(csv, trace);
  }

  const double objective = time_average(trace, Statistic::objective());
  std::vector<double> constraints;
  for (int l = 1; l <= config.spec.L(); ++l) {
    constraints.push_back(time_average(trace, Statistic::constraint(l)));
  }
  json summary{{"problem", config.problem},
               {"spec_digest", hex(config.spec.digest())},
               {"V", config.V},
               {"T", config.T},
               {"seed", seed},
               {"time_avg_objective", objective},
               {"time_avg_constraints", constraints},
               {"time_avg_queue_sum", time_average(trace, Statistic::queue_sum())},
               {"final_queue_norm", trace.queues().col(trace.queues().cols() - 1).norm()}};
  if (sol.lp_status == StationaryStatus::Optimal) {
    summary["z_opt"] = sol.z_opt;
    summary["gap"] = objective - sol.z_opt;
  } else {
    summary["z_opt"] = nullptr;
    summary["gap"] = nullptr;
  }
  write_json(dir / "summary.json", summary);
  out << summary.dump(2) << '\n';
  return kExitOk;
}

json bounds_report(const RunConfig& config, double epsilon, double delta) {
  if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0,1)");
  const ProblemSpec& spec = config.spec;
  const StationarySolution sol = solve_stationary_optimum(spec);
  const double xi_star = solve_max_slackness(spec);
  const double xi = working_slackness(xi_star);
  BoundConstants k = compute_constants(spec, xi, 1.0);
  k = with_truncation_level(k, calibrated_truncation_level(k, config.T, delta));
  const double lambda = calibrated_lambda(k, config.T, delta);

  json j{{"problem", config.problem},
         {"spec_digest", hex(spec.digest())},
         {"L", spec.L()},
         {"V", spec.V()},
         {"T", config.T},
         {"epsilon", epsilon},
         {"delta", delta},
         {"stationary", sol},
         {"xi", xi},
         {"constants", k},
         {"lambda", lambda},
         {"queue_tail_bound", queue_tail_bound(k, k.c1)},
         {"xtail_bound", xtail_bound(k, config.T, lambda)},
         {"vacuity_crossover", vacuity_crossover(k)}};

  json times{{"multi", convergence_time_multi(epsilon, delta)},
             {"single_constraint_spec", spec.L() == 1}};
  if (single_constraint_applicable(spec.z_max(), spec.B(), xi, epsilon)) {
    times["single"] = convergence_time_single(epsilon, delta);
    times["single_note"] = spec.L() == 1 ? "applicable" : "formula value; the theorem needs L = 1";
  } else {
    times["single"] = nullptr;
    times["single_note"] = "not applicable: epsilon outside (0, C0/B]";
  }
  j["convergence_time"] = std::move(times);

  const BoundConstants at_eps = compute_constants(spec.z_max(), spec.B(), 1.0 / epsilon, xi, 1.0);
  const ConvergenceChain chain = convergence_chain(
      at_eps.C, epsilon, delta, static_cast<double>(convergence_time_multi(epsilon, delta)));
  j["rate_at_inverse_epsilon"] = json{{"V", 1.0 / epsilon},
                                      {"C", at_eps.C},
                                      {"rate", chain.rate},
                                      {"six_C_epsilon", chain.six_c_eps}};
  return j;
}

int cmd_bounds(const RunConfig& config, const Overrides& o, std::ostream& out) {
  const json j = bounds_report(config, epsilon_of(config, o), delta_of(config, o));
  if (o.out) write_json(output_dir(config, o) / "bounds.json", j);
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_verify(const RunConfig& config, const Overrides& o, std::ostream& out) {
  BatchConfig batch(config.spec);
  batch.num_paths = o.paths ? *o.paths : config.batch.paths.value_or(kDefaultPaths);
  if (batch.num_paths < 1) throw ConfigError(config.source + ": paths must be >= 1");
  batch.T = config.T;
  batch.master_seed = seed_of(config, o);
  batch.epsilon = epsilon_of(config, o);
  batch.delta = delta_of(config, o);
  batch.checks = config.batch.checks ? *config.batch.checks : default_checks(config.spec);
  batch.c1 = config.batch.c1;
  batch.queue_tail_levels = config.batch.queue_tail_levels;
  batch.calibration_paths = config.batch.calibration_paths.value_or(0);
  batch.fault = o.fault;
  const auto dir = output_dir(config, o);
  if (o.dump_traces) batch.dump_traces = dir / "traces";

  const BatchSummary summary = run_batch(batch);
  write_json(dir / "batch_summary.json", json(summary));

  out << std::left << std::setw(22) << "check" << std::setw(12) << "bound" << std::setw(12)
      << "frequency" << std::setw(24) << "wilson95" << std::setw(8) << "paths" << "result\n";
  for (const CheckResult& c : summary.checks) {
    const std::string interval = "[" + cell(c.interval.lower) + ", " + cell(c.interval.upper) + "]";
    out << std::setw(22) << c.name << std::setw(12) << cell(c.theoretical_bound) << std::setw(12)
        << cell(c.empirical_frequency) << std::setw(24) << interval << std::setw(8) << c.num_paths
        << (!c.applicable ? "n/a" : c.pass ? "PASS" : "FAIL") << '\n';
  }
  out << "invariant violations: " << summary.invariant_violations << '\n';
  if (summary.first_violation) {
    const InvariantViolation& v = *summary.first_violation;
    out << "first violation: law=" << to_string(v.law) << " path=" << v.path_id
        << " seed=" << v.seed << " slot=" << v.slot << " value=" << format_double(v.value)
        << " limit=" << format_double(v.limit) << '\n';
    out << "replay: dpp-lab simulate --config " << config.source << " --seed " << v.seed << '\n';
    return kExitInvariantViolation;
  }
  return summary.statistics_pass() ? kExitOk : kExitStatisticalFailure;
}

int cmd_sweep(const RunConfig& config, const Overrides& o, std::ostream& out) {
  if (!config.sweep) throw ConfigError(config.source + ": sweep requires a 'sweep' section");
  std::vector<double> Vs = config.sweep->V;
  for (double eps : config.sweep->epsilon) Vs.push_back(1.0 / eps);
  const std::vector<std::size_t> checkpoints = log_checkpoints(config.T, config.sweep->checkpoints);
  const std::uint64_t seed = seed_of(config, o);
  const auto dir = output_dir(config, o);

  std::ofstream csv(dir / "sweep.csv");
  if (!csv) throw ConfigError((dir / "sweep.csv").string() + ": cannot write");
  csv << "V,T,time_avg_objective,time_avg_queue_sum\n";
  for (double V : Vs) {
    const PathTrace trace = run_path(config.spec.with_V(V), seed, config.T, o.fault);
    CompensatedSum objective, queue_sum;
    std::size_t next = 0;
    for (std::size_t i = 0; i < config.T; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      objective += trace.objective()[col];
      queue_sum += trace.queues().col(col).sum();
      if (i + 1 == checkpoints[next]) {
        const auto n = static_cast<double>(i + 1);
        csv << format_double(V) << ',' << (i + 1) << ',' << format_double(objective.value() / n)
            << ',' << format_double(queue_sum.value() / n) << '\n';
        ++next;
      }
    }
  }
  out << "wrote " << (dir / "sweep.csv").string() << " (" << Vs.size() << " V values, "
      << checkpoints.size() << " checkpoints)\n";
  return kExitOk;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"dpp-lab: drift-plus-penalty simulation and bound verification"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<double> epsilon, delta;
  std::optional<std::string> out_dir;
  bool dump = false;
  std::string chaos;

  std::vector<CLI::App*> subs;
  for (const auto& [name, help] :
       {std::pair{"simulate", "run one path; write trace.csv and summary.json"},
        std::pair{"bounds", "print bound constants and convergence times"},
        std::pair{"verify", "run a verification batch"},
        std::pair{"sweep", "time averages vs T for several V"}}) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "YAML run configuration")->required();
    sub->add_option("--seed", seed, "seed (master seed for verify)");
    sub->add_option("--paths", paths, "number of paths (verify)");
    sub->add_option("--epsilon", epsilon, "accuracy parameter");
    sub->add_option("--delta", delta, "failure probability");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--dump-traces", dump, "write one CSV per path under <out>/traces (verify)");
#if DPP_LAB_ENABLE_CHAOS
    sub->add_option("--chaos", chaos, "inject a controller fault (test builds)")
        ->check(CLI::IsMember({"skip-minimization"}));
#endif
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitConfigError;
  }

  Overrides o;
  o.seed = seed;
  o.paths = paths;
  o.epsilon = epsilon;
  o.delta = delta;
  if (out_dir) o.out = *out_dir;
  o.dump_traces = dump;
  if (chaos == "skip-minimization") o.fault = ControllerFault::SkipMinimization;

  try {
    if (o.paths && *o.paths == 0) throw ConfigError("--paths must be >= 1");
    if (o.epsilon && !(*o.epsilon > 0.0)) throw ConfigError("--epsilon must be > 0");
    if (o.delta && !(*o.delta > 0.0 && *o.delta < 1.0)) throw ConfigError("--delta must lie in (0,1)");
    const RunConfig config = load_config(config_path);
    if (subs[0]->parsed()) return cmd_simulate(config, o, out);
    if (subs[1]->parsed()) return cmd_bounds(config, o, out);
    if (subs[2]->parsed()) return cmd_verify(config, o, out);
    return cmd_sweep(config, o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const SlacknessError& e) {
    err << "slackness error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
}

}  // namespace dpp::cli
