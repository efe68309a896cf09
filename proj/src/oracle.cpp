#include "dpp/oracle.hpp"

#include "dpp/simplex.hpp"

#include <algorithm>

namespace dpp {

namespace {

struct PolicyLayout {
  std::vector<Eigen::Index> offset;  // first variable of each event
  Eigen::Index size = 0;
};

PolicyLayout layout_of(const ProblemSpec& spec) {
  PolicyLayout layout;
  for (const EventOutcome& e : spec.events()) {
    layout.offset.push_back(layout.size);
    layout.size += static_cast<Eigen::Index>(e.actions.size());
  }
  return layout;
}

// Rows: E[z_l] over the stacked policy variables, one row per constraint.
Matrix expectation_rows(const ProblemSpec& spec, const PolicyLayout& layout, Eigen::Index width) {
  Matrix rows = Matrix::Zero(spec.L(), width);
  for (std::size_t w = 0; w < spec.num_events(); ++w) {
    const EventOutcome& e = spec.events()[w];
    for (std::size_t a = 0; a < e.actions.size(); ++a) {
      rows.col(layout.offset[w] + static_cast<Eigen::Index>(a)) = e.probability * e.actions[a].z;
    }
  }
  return rows;
}

Matrix simplex_rows(const ProblemSpec& spec, const PolicyLayout& layout, Eigen::Index width) {
  Matrix rows = Matrix::Zero(static_cast<Eigen::Index>(spec.num_events()), width);
  for (std::size_t w = 0; w < spec.num_events(); ++w) {
    const auto k = static_cast<Eigen::Index>(spec.events()[w].actions.size());
    rows.row(static_cast<Eigen::Index>(w)).segment(layout.offset[w], k).setOnes();
  }
  return rows;
}

std::vector<Vector> unpack_policy(const ProblemSpec& spec, const PolicyLayout& layout,
                                  const Vector& x) {
  std::vector<Vector> policy;
  for (std::size_t w = 0; w < spec.num_events(); ++w) {
    const auto k = static_cast<Eigen::Index>(spec.events()[w].actions.size());
    Vector pi = x.segment(layout.offset[w], k).cwiseMax(0.0);
    pi /= pi.sum();
    policy.push_back(std::move(pi));
  }
  return policy;
}

}  // namespace

double max_slackness_value(const ProblemSpec& spec) {
  // Variables: the policy, then s' = s + shift >= 0 where s is the uniform slack.
  const PolicyLayout layout = layout_of(spec);
  const Eigen::Index n = layout.size + 1;
  const double shift = spec.B() + 1.0;

  LinearProgram lp;
  lp.cost = Vector::Zero(n);
  lp.cost[n - 1] = -1.0;
  lp.A_ub = expectation_rows(spec, layout, n);
  lp.A_ub.col(n - 1).setOnes();
  lp.b_ub = Vector::Constant(spec.L(), shift);
  lp.A_eq = simplex_rows(spec, layout, n);
  lp.b_eq = Vector::Ones(static_cast<Eigen::Index>(spec.num_events()));

  const LpResult res = solve_lp(lp);
  if (res.status != LpStatus::Optimal) {
    throw ConsistencyError("max slackness LP did not reach an optimum");
  }
  return res.x[n - 1] - shift;
}

double solve_max_slackness(const ProblemSpec& spec) {
  const double xi = max_slackness_value(spec);
  if (!(xi > 0.0)) {
    throw SlacknessError("no stationary policy satisfies every constraint with positive slack "
                         "(max-min slack = " + format_double(xi) + ")");
  }
  return xi;
}

StationarySolution solve_stationary_optimum(const ProblemSpec& spec, double margin) {
  const PolicyLayout layout = layout_of(spec);
  const Eigen::Index n = layout.size;

  LinearProgram lp;
  lp.cost = Vector::Zero(n);
  for (std::size_t w = 0; w < spec.num_events(); ++w) {
    const EventOutcome& e = spec.events()[w];
    for (std::size_t a = 0; a < e.actions.size(); ++a) {
      lp.cost[layout.offset[w] + static_cast<Eigen::Index>(a)] = e.probability * e.actions[a].z0;
    }
  }
  lp.A_ub = expectation_rows(spec, layout, n);
  lp.b_ub = Vector::Constant(spec.L(), -margin);
  lp.A_eq = simplex_rows(spec, layout, n);
  lp.b_eq = Vector::Ones(static_cast<Eigen::Index>(spec.num_events()));

  StationarySolution sol;
  sol.xi_star = max_slackness_value(spec);
  const LpResult res = solve_lp(lp);
  if (res.status != LpStatus::Optimal) {
    sol.lp_status = StationaryStatus::Infeasible;
    return sol;
  }
  sol.lp_status = StationaryStatus::Optimal;
  sol.z_opt = res.objective;
  sol.policy = unpack_policy(spec, layout, res.x);
  return sol;
}

std::optional<Vector> marginal_action_distribution(const ProblemSpec& spec,
                                                   const StationarySolution& solution) {
  if (solution.policy.size() != spec.num_events()) return std::nullopt;
  const std::size_t k = spec.events().front().actions.size();
  Vector marginal = Vector::Zero(static_cast<Eigen::Index>(k));
  for (std::size_t w = 0; w < spec.num_events(); ++w) {
    if (spec.events()[w].actions.size() != k) return std::nullopt;
    marginal += spec.events()[w].probability * solution.policy[w];
  }
  return marginal;
}

double exact_conditional_dpp_expectation(const ProblemSpec& spec, const Eigen::Ref<const Vector>& q,
                                         double z_opt, const DppController& controller) {
  if (q.size() != spec.L()) throw InvalidInput("exact_conditional_dpp_expectation: dimension");
  CompensatedSum sum;
  for (const EventOutcome& e : spec.events()) {
    const Choice c = controller.choose(q, e.actions);
    const ActionVector& a = e.actions[c.index];
    sum += e.probability * (controller.V() * (a.z0 - z_opt) + q.dot(a.z));
  }
  return sum.value();
}

double exact_conditional_dpp_expectation(const ProblemSpec& spec, const Eigen::Ref<const Vector>& q,
                                         double z_opt) {
  return exact_conditional_dpp_expectation(spec, q, z_opt,
                                           DppController(spec.V(), spec.tie_break()));
}

double exact_conditional_truncated_expectation(const ProblemSpec& spec, double q, double z_opt,
                                               double cap, const DppController& controller) {
  if (spec.L() != 1) throw InvalidInput("truncated expectation requires L = 1");
  Vector qv(1);
  qv[0] = q;
  const double truncated = std::min(q, cap);
  CompensatedSum sum;
  for (const EventOutcome& e : spec.events()) {
    const Choice c = controller.choose(qv, e.actions);
    const ActionVector& a = e.actions[c.index];
    sum += e.probability * (controller.V() * (a.z0 - z_opt) + truncated * a.z[0]);
  }
  return sum.value();
}

}  // namespace dpp
