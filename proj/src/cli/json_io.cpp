#include "dpp/cli/json_io.hpp"

namespace dpp {

using nlohmann::json;

namespace {

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

void to_json(json& j, const BoundConstants& k) {
  j = json{{"C0", k.C0}, {"r", k.r},     {"rho", k.rho}, {"D", finite_or_null(k.D)},
           {"log_D", k.log_D}, {"c1", k.c1}, {"c2", k.c2},  {"C", k.C},
           {"C2", k.C2}, {"xi", k.xi},   {"B", k.B},     {"z_max", k.z_max},
           {"V", k.V}};
}

BoundConstants bound_constants_from_json(const json& j) {
  const auto get = [&](const char* key) {
    if (!j.contains(key)) throw InvalidInput(std::string("bound constants: missing '") + key + "'");
    return j.at(key).get<double>();
  };
  BoundConstants k;
  k.C0 = get("C0");
  k.r = get("r");
  k.rho = get("rho");
  k.log_D = get("log_D");
  k.D = j.at("D").is_null() ? std::exp(k.log_D) : get("D");
  k.c1 = get("c1");
  k.c2 = get("c2");
  k.C = get("C");
  k.C2 = get("C2");
  k.xi = get("xi");
  k.B = get("B");
  k.z_max = get("z_max");
  k.V = get("V");
  return k;
}

void to_json(json& j, const StationarySolution& s) {
  j = json{{"lp_status", s.lp_status == StationaryStatus::Optimal ? "Optimal" : "Infeasible"},
           {"xi_star", s.xi_star}};
  if (s.lp_status == StationaryStatus::Optimal) {
    j["z_opt"] = s.z_opt;
    json policy = json::array();
    for (const Vector& pi : s.policy) policy.push_back(std::vector<double>(pi.begin(), pi.end()));
    j["policy"] = std::move(policy);
  } else {
    j["z_opt"] = nullptr;
    j["policy"] = nullptr;
  }
}

void to_json(json& j, const WilsonInterval& w) { j = json::array({w.lower, w.upper}); }

void to_json(json& j, const InvariantViolation& v) {
  j = json{{"law", to_string(v.law)}, {"path_id", v.path_id}, {"seed", v.seed},
           {"slot", v.slot},          {"value", finite_or_null(v.value)},
           {"limit", finite_or_null(v.limit)}};
}

void to_json(json& j, const CheckResult& c) {
  j = json{{"name", c.name},
           {"detail", c.detail},
           {"level", finite_or_null(c.level)},
           {"theoretical_bound", c.theoretical_bound},
           {"empirical_frequency", c.empirical_frequency},
           {"wilson_interval", c.interval},
           {"num_paths", c.num_paths},
           {"applicable", c.applicable},
           {"pass", c.pass}};
  j["fitted_M"] = c.fitted_M ? json(*c.fitted_M) : json(nullptr);
}

void to_json(json& j, const BatchSummary& s) {
  j = json{{"num_paths", s.num_paths},
           {"T", s.T},
           {"master_seed", s.master_seed},
           {"z_opt", s.z_opt},
           {"xi_star", s.xi_star},
           {"constants", s.constants},
           {"checks", s.checks},
           {"quantile_levels", s.quantile_levels},
           {"objective_quantiles", s.objective_quantiles},
           {"constraint_violation_quantiles", s.constraint_violation_quantiles},
           {"invariant_violations", s.invariant_violations},
           {"violations_by_law", s.violations_by_law},
           {"states_checked", s.states_checked},
           {"invariants_hold", s.invariants_hold()},
           {"statistics_pass", s.statistics_pass()}};
  j["first_violation"] = s.first_violation ? json(*s.first_violation) : json(nullptr);
  j["max_key_feature_value"] =
      s.states_checked > 0 ? finite_or_null(s.max_key_feature_value) : json(nullptr);
  j["fitted_M"] = s.fitted_M ? json(*s.fitted_M) : json(nullptr);
}

}  // namespace dpp
