#include "dpp/montecarlo.hpp"

#include "dpp/events.hpp"
#include "dpp/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <thread>

namespace dpp {

namespace {

constexpr std::uint64_t kCalibrationStream = 0xca11b7a7e0000001ULL;
constexpr std::uint64_t kValidationStream = 0x7a11da7e00000002ULL;
constexpr std::size_t kMinTailPaths = 30;

struct CheckName {
  Check check;
  std::string_view name;
};

constexpr CheckName kCheckNames[] = {
    {Check::KeyFeature, "key_feature"}, {Check::QueueTail, "queue_tail"},
    {Check::XTail, "x_tail"},           {Check::GTail, "g_tail"},
    {Check::Telescoping, "telescoping"}, {Check::Theorem2, "theorem2"},
    {Check::Theorem3, "theorem3"},
};

// What to assert and measure on each path of one batch.
struct PathPlan {
  const ProblemSpec* spec = nullptr;
  std::size_t T = 0;
  ControllerFault fault = ControllerFault::None;
  double z_opt = 0.0;
  BoundConstants k;
  bool key_feature = false;
  bool truncated = false;  // L = 1 and V >= B/C0
  bool telescoping = false;
  std::vector<double> tail_levels;
  const std::filesystem::path* dump = nullptr;
};

struct PathReport {
  double avg_objective = 0.0;
  double max_avg_constraint = 0.0;
  double x_T = 0.0;
  double g_T = 0.0;
  double max_queue_norm = 0.0;
  std::size_t states_checked = 0;
  double max_key_feature = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> law_counts = std::vector<std::size_t>(11, 0);
  std::optional<InvariantViolation> first;
};

class Recorder {
 public:
  Recorder(PathReport& report, std::uint64_t path_id, std::uint64_t seed)
      : report_(report), path_id_(path_id), seed_(seed) {}

  void fail(Law law, std::size_t slot, double value, double limit) {
    ++report_.law_counts[static_cast<std::size_t>(law)];
    if (!report_.first) report_.first = InvariantViolation{law, path_id_, seed_, slot, value, limit};
  }

 private:
  PathReport& report_;
  std::uint64_t path_id_;
  std::uint64_t seed_;
};

double tolerance(double scale) { return kLawTolerance * std::max(1.0, scale); }

// Per-worker accumulation of per-slot queue-tail exceedances: counts[level][t-1].
using TailCounts = std::vector<std::vector<std::uint32_t>>;

PathReport analyze_path(const PathPlan& plan, std::uint64_t path_id, std::uint64_t seed,
                        TailCounts& tail_counts) {
  const ProblemSpec& spec = *plan.spec;
  const PathTrace trace = run_path(spec, seed, plan.T, plan.fault);
  PathReport rep;
  Recorder rec(rep, path_id, seed);

  if (plan.dump) {
    std::ofstream out(*plan.dump / ("path_" + std::to_string(path_id) + ".csv"));
    if (!out) throw InvalidInput("cannot write trace dump under " + plan.dump->string());
    write_trace_csv(out, trace);
  }

  const Matrix& Q = trace.queues();
  const Matrix& Z = trace.constraints();
  const Vector& z0 = trace.objective();
  const double V = spec.V();
  const double B = spec.B();
  const double cap = plan.k.C0 * V;
  const double c2 = plan.k.c2;
  const double g_step = 2.0 * V * spec.z_max() + cap * B;
  const DppController controller(V, spec.tie_break(), plan.fault);

  if (!Q.col(0).isZero(0.0)) rec.fail(Law::InitialState, 1, Q.col(0).norm(), 0.0);

  CompensatedSum x, g;
  bool stopped = false;
  double norm_prev = 0.0;
  for (std::size_t i = 0; i < plan.T; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const std::size_t t = i + 1;
    const auto q = Q.col(col);
    const auto q_next = Q.col(col + 1);
    const auto z = Z.col(col);

    const Vector expected = queue_update(q, z);
    if (!(expected.array() == q_next.array()).all()) {
      rec.fail(Law::QueueUpdate, t, (expected - q_next).cwiseAbs().maxCoeff(), 0.0);
    }

    const double qz = q.dot(z);
    const double drift_limit = 0.5 * B * B + qz;
    if (trace.drifts()[col] > drift_limit + tolerance(std::abs(drift_limit))) {
      rec.fail(Law::DriftBound, t, trace.drifts()[col], drift_limit);
    }

    const double norm_next = q_next.norm();
    if (std::abs(norm_next - norm_prev) > B + tolerance(norm_next)) {
      rec.fail(Law::StepBound, t, std::abs(norm_next - norm_prev), B);
    }

    const auto& actions = spec.event(trace.event_ids()[i]).actions;
    const Choice best = select_action(q, actions, V, spec.tie_break());
    const ActionVector& taken = actions[trace.action_indices()[i]];
    const double taken_value = V * taken.z0 + q.dot(taken.z);
    if (taken_value > best.value) rec.fail(Law::Minimality, t, taken_value, best.value);

    if (plan.key_feature) {
      const double e = exact_conditional_dpp_expectation(spec, q, plan.z_opt, controller);
      ++rep.states_checked;
      rep.max_key_feature = std::max(rep.max_key_feature, e);
      if (e > kLawTolerance) rec.fail(Law::KeyFeature, t, e, 0.0);
      if (plan.truncated) {
        const double et =
            exact_conditional_truncated_expectation(spec, q[0], plan.z_opt, cap, controller);
        if (et > kLawTolerance) rec.fail(Law::TruncatedKeyFeature, t, et, 0.0);
      }
    }

    const double norm = norm_prev;  // ||Q[t]||
    rep.max_queue_norm = std::max(rep.max_queue_norm, norm);
    for (std::size_t j = 0; j < plan.tail_levels.size(); ++j) {
      if (norm > plan.tail_levels[j]) ++tail_counts[j][i];
    }
    if (norm > plan.k.c1) stopped = true;

    const double penalty = V * (z0[col] - plan.z_opt);
    const double increment = penalty + qz;
    x += increment;
    const double y_step = stopped ? 0.0 : increment;
    if (std::abs(y_step) > c2 + tolerance(c2)) rec.fail(Law::StoppedIncrement, t, y_step, c2);
    if (plan.truncated) {
      const double g_inc = penalty + std::min(q[0], cap) * z[0];
      g += g_inc;
      if (std::abs(g_inc) > g_step + tolerance(g_step)) {
        rec.fail(Law::TruncatedIncrement, t, g_inc, g_step);
      }
    }
    norm_prev = norm_next;
  }

  rep.x_T = x.value();
  rep.g_T = g.value();
  // X[T] and Y[T] can only differ once the stopping time has fired.
  if (stopped && !(rep.max_queue_norm > plan.k.c1)) {
    rec.fail(Law::UnionDecomposition, plan.T, rep.max_queue_norm, plan.k.c1);
  }

  if (plan.telescoping) {
    const TelescopingReport tr = check_telescoping(trace, plan.k);
    if (!tr.pass) {
      const bool gap = tr.lhs_gap > tr.bound;
      rec.fail(Law::Telescoping, tr.n_J, gap ? tr.lhs_gap : tr.average,
               gap ? tr.bound : tr.lower_bound);
    }
  }

  rep.avg_objective = time_average(trace, Statistic::objective());
  rep.max_avg_constraint = -std::numeric_limits<double>::infinity();
  for (int l = 1; l <= spec.L(); ++l) {
    rep.max_avg_constraint =
        std::max(rep.max_avg_constraint, time_average(trace, Statistic::constraint(l)));
  }
  return rep;
}

struct PoolResult {
  std::vector<PathReport> reports;
  TailCounts tail_counts;
};

PoolResult run_pool(const PathPlan& plan, std::size_t num_paths, std::uint64_t master_seed,
                    unsigned threads) {
  PoolResult result;
  result.reports.resize(num_paths);
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, num_paths));
  std::vector<TailCounts> counts(
      workers, TailCounts(plan.tail_levels.size(), std::vector<std::uint32_t>(plan.T, 0)));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);

  auto work = [&](std::size_t w) {
    try {
      for (std::size_t i = next++; i < num_paths; i = next++) {
        result.reports[i] = analyze_path(plan, i, derive_seed(master_seed, i), counts[w]);
      }
    } catch (...) {
      errors[w] = std::current_exception();
      next = num_paths;
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (std::thread& th : pool) th.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Integer sums: order-independent, hence worker-count invariant.
  result.tail_counts = std::move(counts[0]);
  for (std::size_t w = 1; w < workers; ++w) {
    for (std::size_t j = 0; j < plan.tail_levels.size(); ++j) {
      for (std::size_t i = 0; i < plan.T; ++i) result.tail_counts[j][i] += counts[w][j][i];
    }
  }
  return result;
}

void merge_laws(BatchSummary& summary, const std::vector<PathReport>& reports) {
  for (const PathReport& r : reports) {
    for (std::size_t law = 0; law < r.law_counts.size(); ++law) {
      if (r.law_counts[law] == 0) continue;
      summary.invariant_violations += r.law_counts[law];
      summary.violations_by_law[std::string(to_string(static_cast<Law>(law)))] += r.law_counts[law];
    }
    if (r.first && !summary.first_violation) summary.first_violation = r.first;
    if (r.states_checked > 0) {
      summary.max_key_feature_value =
          summary.states_checked == 0 ? r.max_key_feature
                                      : std::max(summary.max_key_feature_value, r.max_key_feature);
      summary.states_checked += r.states_checked;
    }
  }
}

// Nearest-rank quantile of a sorted sample.
double quantile(const std::vector<double>& sorted, double p) {
  const auto n = static_cast<double>(sorted.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(p * n)));
  return sorted[std::min(rank, sorted.size()) - 1];
}

CheckResult statistical(std::string name, std::size_t exceed, std::size_t n, double bound,
                        double level, std::string detail) {
  CheckResult c;
  c.name = std::move(name);
  c.level = level;
  c.theoretical_bound = bound;
  c.num_paths = n;
  c.empirical_frequency = static_cast<double>(exceed) / static_cast<double>(n);
  c.interval = wilson_interval(exceed, n);
  c.detail = std::move(detail);
  if (n < kMinTailPaths) {
    c.applicable = false;
    c.pass = true;
    c.detail += "; fewer than 30 paths";
    return c;
  }
  c.pass = !(c.interval.lower > bound);
  return c;
}

CheckResult not_applicable(std::string name, std::string why) {
  CheckResult c;
  c.name = std::move(name);
  c.applicable = false;
  c.pass = true;
  c.detail = std::move(why);
  return c;
}

CheckResult deterministic(std::string name, std::size_t violations, std::size_t n,
                          std::size_t states, std::string detail) {
  CheckResult c;
  c.name = std::move(name);
  c.num_paths = n;
  c.theoretical_bound = 0.0;
  c.empirical_frequency = states == 0 ? 0.0 : static_cast<double>(violations) / states;
  c.interval = wilson_interval(std::min(violations, std::max<std::size_t>(states, 1)),
                               std::max<std::size_t>(states, 1));
  c.pass = violations == 0;
  c.detail = std::move(detail);
  return c;
}

double path_M(const PathReport& r, double z_opt, double epsilon) {
  return std::max((r.avg_objective - z_opt) / epsilon, r.max_avg_constraint / epsilon);
}

// Fit M on a calibration batch and validate it on a disjoint one.
CheckResult theorem_check(std::string name, const ProblemSpec& base, std::size_t T,
                          const BatchConfig& config, BatchSummary& summary, unsigned threads) {
  const double eps = config.epsilon;
  const ProblemSpec spec = base.with_V(1.0 / eps);
  const StationarySolution sol = solve_stationary_optimum(spec);
  const double xi = working_slackness(solve_max_slackness(spec));
  BoundConstants k = compute_constants(spec, xi, 1.0);
  k = with_truncation_level(k, calibrated_truncation_level(k, T, config.delta));

  PathPlan plan;
  plan.spec = &spec;
  plan.T = T;
  plan.fault = config.fault;
  plan.z_opt = sol.z_opt;
  plan.k = k;

  const std::size_t n_cal =
      config.calibration_paths > 0 ? config.calibration_paths
                                   : std::max<std::size_t>(kMinTailPaths, config.num_paths / 2);
  const PoolResult cal = run_pool(plan, n_cal, config.master_seed ^ kCalibrationStream, threads);
  const PoolResult val =
      run_pool(plan, config.num_paths, config.master_seed ^ kValidationStream, threads);
  merge_laws(summary, cal.reports);
  merge_laws(summary, val.reports);

  std::vector<double> fit;
  for (const PathReport& r : cal.reports) fit.push_back(path_M(r, sol.z_opt, eps));
  std::sort(fit.begin(), fit.end());
  const double M = quantile(fit, 0.95);

  std::size_t ok = 0;
  for (const PathReport& r : val.reports) {
    if (path_M(r, sol.z_opt, eps) <= M) ++ok;
  }
  CheckResult c;
  c.name = std::move(name);
  c.level = M;
  c.fitted_M = M;
  c.theoretical_bound = 1.0 - 2.0 * config.delta;
  c.num_paths = val.reports.size();
  c.empirical_frequency = static_cast<double>(ok) / static_cast<double>(c.num_paths);
  c.interval = wilson_interval(ok, c.num_paths);
  c.pass = c.interval.lower >= c.theoretical_bound;
  c.detail = "V=" + format_double(spec.V()) + " T=" + std::to_string(T) + " calibration=" +
             std::to_string(n_cal) + "; pass iff Wilson lower >= 1-2delta";
  return c;
}

}  // namespace

std::string_view to_string(Check check) {
  for (const CheckName& c : kCheckNames) {
    if (c.check == check) return c.name;
  }
  return "unknown";
}

std::optional<Check> parse_check(std::string_view name) {
  for (const CheckName& c : kCheckNames) {
    if (c.name == name) return c.check;
  }
  return std::nullopt;
}

const std::vector<Check>& all_checks() {
  static const std::vector<Check> checks = [] {
    std::vector<Check> out;
    for (const CheckName& c : kCheckNames) out.push_back(c.check);
    return out;
  }();
  return checks;
}

std::string_view to_string(Law law) {
  switch (law) {
    case Law::QueueUpdate: return "queue_update";
    case Law::InitialState: return "initial_state";
    case Law::DriftBound: return "drift_bound";
    case Law::StepBound: return "step_bound";
    case Law::Minimality: return "minimality";
    case Law::KeyFeature: return "key_feature";
    case Law::TruncatedKeyFeature: return "truncated_key_feature";
    case Law::StoppedIncrement: return "stopped_increment";
    case Law::TruncatedIncrement: return "truncated_increment";
    case Law::UnionDecomposition: return "union_decomposition";
    case Law::Telescoping: return "telescoping";
  }
  return "unknown";
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) throw InvalidInput("wilson_interval: n must be >= 1");
  if (successes > n) throw InvalidInput("wilson_interval: successes exceed n");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  WilsonInterval w;
  w.lower = successes == 0 ? 0.0 : std::clamp(centre - half, 0.0, 1.0);
  w.upper = successes == n ? 1.0 : std::clamp(centre + half, 0.0, 1.0);
  return w;
}

double wilson_resolution_floor(std::size_t n, double z) {
  return wilson_interval(0, n, z).upper;
}

TailEstimate empirical_tail(std::span<const PathTrace> traces, TailStatistic statistic,
                            double threshold, double z_opt, const BoundConstants& constants) {
  if (traces.size() < kMinTailPaths) {
    throw InvalidInput("empirical_tail needs at least 30 traces, got " +
                       std::to_string(traces.size()));
  }
  std::size_t exceed = 0;
  for (const PathTrace& trace : traces) {
    if (statistic == TailStatistic::QueueNormMax) {
      double m = 0.0;
      for (std::size_t i = 0; i < trace.size(); ++i) {
        m = std::max(m, trace.queues().col(static_cast<Eigen::Index>(i)).norm());
      }
      if (m > threshold) ++exceed;
      continue;
    }
    if (statistic == TailStatistic::GT && trace.L() != 1) {
      throw InvalidInput("empirical_tail: GT requires L = 1");
    }
    const DerivedProcesses p = build_processes(trace, z_opt, constants);
    const double value = statistic == TailStatistic::XT ? p.x.back() : p.g->back();
    if (value >= threshold) ++exceed;
  }
  TailEstimate est;
  est.num_paths = traces.size();
  est.frequency = static_cast<double>(exceed) / static_cast<double>(traces.size());
  est.interval = wilson_interval(exceed, traces.size());
  return est;
}

bool BatchSummary::statistics_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("DPP_LAB_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

BatchSummary run_batch(const BatchConfig& config) {
  const ProblemSpec& spec = config.spec;
  if (config.num_paths < 1) throw InvalidInput("num_paths must be >= 1");
  if (config.T < 1) throw InvalidInput("T must be >= 1");
  if (!(config.epsilon > 0.0)) throw InvalidInput("epsilon must be > 0");
  if (!(config.delta > 0.0 && config.delta < 1.0)) throw InvalidInput("delta must lie in (0,1)");
  for (Check c : {Check::Theorem3, Check::GTail, Check::Telescoping}) {
    if (config.checks.count(c) && spec.L() != 1) {
      throw InvalidInput(std::string(to_string(c)) + " requires L = 1");
    }
  }
  const unsigned threads = config.threads > 0 ? config.threads : default_thread_count();
  const auto wants = [&](Check c) { return config.checks.count(c) > 0; };

  const StationarySolution sol = solve_stationary_optimum(spec);
  if (sol.lp_status != StationaryStatus::Optimal) {
    throw SlacknessError("stationary problem is infeasible");
  }
  const double xi = working_slackness(solve_max_slackness(spec));
  BoundConstants k = compute_constants(spec, xi, 1.0);
  k = with_truncation_level(k, config.c1 ? *config.c1
                                         : calibrated_truncation_level(k, config.T, config.delta));
  const bool truncation_ok = spec.L() == 1 && spec.V() * k.C0 >= spec.B();

  BatchSummary summary;
  summary.num_paths = config.num_paths;
  summary.T = config.T;
  summary.master_seed = config.master_seed;
  summary.z_opt = sol.z_opt;
  summary.xi_star = sol.xi_star;
  summary.constants = k;

  PathPlan plan;
  plan.spec = &spec;
  plan.T = config.T;
  plan.fault = config.fault;
  plan.z_opt = sol.z_opt;
  plan.k = k;
  plan.key_feature = wants(Check::KeyFeature);
  plan.truncated = truncation_ok;
  plan.telescoping = truncation_ok && (wants(Check::Telescoping) || spec.L() == 1);
  if (wants(Check::QueueTail)) {
    plan.tail_levels.push_back(k.c1);
    for (double level : config.queue_tail_levels) {
      if (!(level > 0.0)) throw InvalidInput("queue tail levels must be > 0");
      plan.tail_levels.push_back(level);
    }
  }
  if (config.dump_traces) {
    std::filesystem::create_directories(*config.dump_traces);
    plan.dump = &*config.dump_traces;
  }

  const PoolResult pool = run_pool(plan, config.num_paths, config.master_seed, threads);
  merge_laws(summary, pool.reports);
  const std::size_t n = config.num_paths;

  std::vector<double> objective, violation;
  for (const PathReport& r : pool.reports) {
    objective.push_back(r.avg_objective);
    violation.push_back(r.max_avg_constraint);
  }
  std::sort(objective.begin(), objective.end());
  std::sort(violation.begin(), violation.end());
  summary.quantile_levels = {0.05, 0.25, 0.5, 0.75, 0.95};
  for (double p : summary.quantile_levels) {
    summary.objective_quantiles.push_back(quantile(objective, p));
    summary.constraint_violation_quantiles.push_back(quantile(violation, p));
  }

  if (wants(Check::KeyFeature)) {
    const std::size_t v = summary.violations_by_law.count("key_feature")
                              ? summary.violations_by_law.at("key_feature")
                              : 0;
    summary.checks.push_back(deterministic("key_feature", v, n, summary.states_checked,
                                           "exact conditional expectation <= 1e-9 on every "
                                           "visited state; max = " +
                                               format_double(summary.max_key_feature_value)));
  }
  if (wants(Check::Telescoping)) {
    if (!truncation_ok) {
      summary.checks.push_back(not_applicable("telescoping", "requires V >= B/C0"));
    } else {
      const std::size_t v = summary.violations_by_law.count("telescoping")
                                ? summary.violations_by_law.at("telescoping")
                                : 0;
      summary.checks.push_back(deterministic("telescoping", v, n, n,
                                             "truncated telescoping gap and lower bound per path"));
    }
  }
  if (wants(Check::QueueTail)) {
    for (std::size_t j = 0; j < plan.tail_levels.size(); ++j) {
      const auto& counts = pool.tail_counts[j];
      const std::size_t worst = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
      const double level = plan.tail_levels[j];
      const double bound = queue_tail_bound(k, level);
      CheckResult c = statistical(j == 0 ? "queue_tail" : "queue_tail@" + format_double(level),
                                  worst, n, bound, level,
                                  "max over t of Pr(||Q[t]|| > c1)");
      if (bound >= 1.0) c.detail += "; bound vacuous";
      summary.checks.push_back(std::move(c));
    }
  }
  if (wants(Check::XTail)) {
    const double lambda = calibrated_lambda(k, config.T, config.delta);
    std::size_t exceed = 0;
    for (const PathReport& r : pool.reports) exceed += r.x_T >= lambda ? 1 : 0;
    summary.checks.push_back(statistical("x_tail", exceed, n, xtail_bound(k, config.T, lambda),
                                         lambda, "Pr(X[T] >= lambda)"));
  }
  if (wants(Check::GTail)) {
    if (!truncation_ok) {
      summary.checks.push_back(not_applicable("g_tail", "requires V >= B/C0"));
    } else {
      const double level = g_tail_bound(k, config.T, config.delta);
      std::size_t exceed = 0;
      for (const PathReport& r : pool.reports) exceed += r.g_T >= level ? 1 : 0;
      summary.checks.push_back(
          statistical("g_tail", exceed, n, config.delta, level, "Pr(G[T] >= lambda)"));
    }
  }
  if (wants(Check::Theorem2)) {
    CheckResult c = theorem_check("theorem2", spec,
                                  convergence_time_multi(config.epsilon, config.delta), config,
                                  summary, threads);
    summary.fitted_M = c.fitted_M;
    summary.checks.push_back(std::move(c));
  }
  if (wants(Check::Theorem3)) {
    if (!single_constraint_applicable(spec.z_max(), spec.B(), xi, config.epsilon)) {
      summary.checks.push_back(not_applicable("theorem3", "epsilon outside (0, C0/B]"));
    } else {
      CheckResult c = theorem_check("theorem3", spec,
                                    convergence_time_single(config.epsilon, config.delta), config,
                                    summary, threads);
      if (!summary.fitted_M) summary.fitted_M = c.fitted_M;
      summary.checks.push_back(std::move(c));
    }
  }
  return summary;
}

}  // namespace dpp
