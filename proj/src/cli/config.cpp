#include "dpp/cli/config.hpp"

#include "dpp/events.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

namespace dpp::cli {

namespace {

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& message) const {
    std::string prefix = source_ + ":";
    if (at.IsDefined() && at.Mark().line >= 0) prefix += std::to_string(at.Mark().line + 1) + ":";
    throw ConfigError(prefix + " " + message);
  }

  [[noreturn]] void fail_top(const std::string& message) const {
    throw ConfigError(source_ + ": " + message);
  }

  void expect_map(const YAML::Node& node, std::string_view what) const {
    if (!node.IsMap()) fail(node, std::string(what) + " must be a mapping");
  }

  void allow_keys(const YAML::Node& node, std::initializer_list<std::string_view> allowed) const {
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(kv.first, "unknown key '" + key + "'");
      }
    }
  }

  template <typename T>
  T scalar(const YAML::Node& node, std::string_view name) const {
    if (!node.IsScalar()) fail(node, "'" + std::string(name) + "' must be a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::BadConversion&) {
      fail(node, "'" + std::string(name) + "' has an invalid value '" + node.Scalar() + "'");
    }
  }

  double positive(const YAML::Node& node, std::string_view name) const {
    const double v = scalar<double>(node, name);
    if (!(v > 0.0) || !std::isfinite(v)) fail(node, "'" + std::string(name) + "' must be > 0");
    return v;
  }

  std::size_t count(const YAML::Node& node, std::string_view name) const {
    const auto v = scalar<std::size_t>(node, name);
    if (v < 1) fail(node, "'" + std::string(name) + "' must be >= 1");
    return v;
  }

  std::vector<double> list(const YAML::Node& node, std::string_view name) const {
    if (!node.IsSequence() || node.size() == 0) {
      fail(node, "'" + std::string(name) + "' must be a nonempty list");
    }
    std::vector<double> out;
    for (const auto& item : node) out.push_back(positive(item, name));
    return out;
  }

  ProblemSpec problem(const YAML::Node& root, double V, std::string& name) const {
    const YAML::Node node = root["problem"];
    if (!node) fail_top("missing required key 'problem'");
    const YAML::Node means_node = root["arrival_means"];

    if (node.IsScalar()) {
      name = node.as<std::string>();
      std::array<double, 3> means = kServerArrivalMeans;
      if (means_node) {
        if (!means_node.IsSequence() || means_node.size() != 3) {
          fail(means_node, "'arrival_means' must list 3 values");
        }
        for (std::size_t i = 0; i < 3; ++i) means[i] = scalar<double>(means_node[i], "arrival_means");
      }
      try {
        if (name == kServerScheduling) return build_server_scheduling_spec(means, V);
        if (name == kServerSchedulingPooled) return build_pooled_scheduling_spec(means, V);
      } catch (const InvalidInput& e) {
        fail(means_node ? means_node : node, e.what());
      }
      fail(node, "unknown builtin problem '" + name + "' (known: " + kServerScheduling + ", " +
                     kServerSchedulingPooled + ")");
    }

    if (means_node) fail(means_node, "'arrival_means' applies only to builtin problems");
    expect_map(node, "problem");
    allow_keys(node, {"L", "z_max", "B", "events"});
    name = "inline";
    for (const char* key : {"L", "z_max", "B", "events"}) {
      if (!node[key]) fail(node, std::string("problem: missing required key '") + key + "'");
    }
    const int L = static_cast<int>(count(node["L"], "L"));
    const double z_max = positive(node["z_max"], "z_max");
    const double B = positive(node["B"], "B");
    const YAML::Node events = node["events"];
    if (!events.IsSequence() || events.size() == 0) fail(events, "'events' must be a nonempty list");

    std::vector<EventOutcome> outcomes;
    for (const auto& ev : events) {
      expect_map(ev, "event");
      allow_keys(ev, {"probability", "actions"});
      if (!ev["probability"] || !ev["actions"]) {
        fail(ev, "event needs 'probability' and 'actions'");
      }
      EventOutcome out;
      out.id = outcomes.size();
      out.probability = scalar<double>(ev["probability"], "probability");
      const YAML::Node actions = ev["actions"];
      if (!actions.IsSequence() || actions.size() == 0) fail(actions, "'actions' must be a nonempty list");
      for (const auto& a : actions) {
        if (!a.IsSequence() || a.size() != static_cast<std::size_t>(L) + 1) {
          fail(a, "each action is a list [z0, z_1, ..., z_L] of length " + std::to_string(L + 1));
        }
        ActionVector act;
        act.z0 = scalar<double>(a[0], "z0");
        act.z.resize(L);
        for (int l = 0; l < L; ++l) act.z[l] = scalar<double>(a[l + 1], "z");
        out.actions.push_back(std::move(act));
      }
      outcomes.push_back(std::move(out));
    }
    try {
      return ProblemSpec(std::move(outcomes), L, z_max, B, V);
    } catch (const InvalidInput& e) {
      fail(node, e.what());
    }
  }

  BatchSection batch(const YAML::Node& node) const {
    expect_map(node, "batch");
    allow_keys(node, {"paths", "epsilon", "delta", "checks", "c1", "queue_tail_levels",
                      "calibration_paths"});
    BatchSection b;
    if (node["paths"]) b.paths = count(node["paths"], "paths");
    if (node["epsilon"]) b.epsilon = positive(node["epsilon"], "epsilon");
    if (node["delta"]) {
      b.delta = positive(node["delta"], "delta");
      if (*b.delta >= 1.0) fail(node["delta"], "'delta' must lie in (0,1)");
    }
    if (node["c1"]) b.c1 = positive(node["c1"], "c1");
    if (node["queue_tail_levels"]) b.queue_tail_levels = list(node["queue_tail_levels"], "queue_tail_levels");
    if (node["calibration_paths"]) b.calibration_paths = count(node["calibration_paths"], "calibration_paths");
    if (const YAML::Node checks = node["checks"]) {
      if (!checks.IsSequence()) fail(checks, "'checks' must be a list");
      b.checks.emplace();
      for (const auto& c : checks) {
        const std::string name = scalar<std::string>(c, "checks");
        const std::optional<Check> parsed = parse_check(name);
        if (!parsed) fail(c, "unknown check '" + name + "'");
        b.checks->insert(*parsed);
      }
    }
    return b;
  }

  SweepSection sweep(const YAML::Node& node) const {
    expect_map(node, "sweep");
    allow_keys(node, {"V", "epsilon", "checkpoints"});
    SweepSection s;
    if (node["V"] && node["epsilon"]) fail(node, "sweep takes either 'V' or 'epsilon', not both");
    if (node["V"]) s.V = list(node["V"], "V");
    if (node["epsilon"]) s.epsilon = list(node["epsilon"], "epsilon");
    if (s.V.empty() && s.epsilon.empty()) fail(node, "sweep needs a nonempty 'V' or 'epsilon' list");
    if (node["checkpoints"]) s.checkpoints = count(node["checkpoints"], "checkpoints");
    return s;
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
  const Parser p(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) p.fail_top("top level must be a mapping");
  p.allow_keys(root, {"problem", "arrival_means", "V", "T", "seed", "output", "batch", "sweep"});

  if (!root["V"]) p.fail_top("missing required key 'V'");
  const double V = p.positive(root["V"], "V");
  std::string name;
  RunConfig cfg(p.problem(root, V, name));
  cfg.source = source;
  cfg.problem = name;
  cfg.V = V;
  if (root["T"]) cfg.T = p.count(root["T"], "T");
  if (root["seed"]) cfg.seed = p.scalar<std::uint64_t>(root["seed"], "seed");
  if (root["output"]) cfg.output = p.scalar<std::string>(root["output"], "output");
  if (root["batch"]) cfg.batch = p.batch(root["batch"]);
  if (root["sweep"]) cfg.sweep = p.sweep(root["sweep"]);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

RunConfig with_V(const RunConfig& config, double V) {
  RunConfig out = config;
  out.spec = config.spec.with_V(V);
  out.V = V;
  return out;
}

}  // namespace dpp::cli
