#pragma once

#include "dpp/controller.hpp"
#include "dpp/core.hpp"

#include <optional>
#include <vector>

namespace dpp {

enum class StationaryStatus { Optimal, Infeasible };

/// Best randomized stationary policy for a finite-support instance.
struct StationarySolution {
  double z_opt = 0.0;
  std::vector<Vector> policy;  // policy[w][a] = Pr(action a | event w)
  double xi_star = 0.0;        // maximal uniform slackness, may be <= 0
  StationaryStatus lp_status = StationaryStatus::Infeasible;
};

/// Solves min E[z0] s.t. E[z_l] <= -margin for every l over per-event action
/// distributions. `margin` = 0 gives z^opt; xi_star is filled in as well.
StationarySolution solve_stationary_optimum(const ProblemSpec& spec, double margin = 0.0);

/// max over stationary policies of min_l (-E[z_l]); no sign check.
double max_slackness_value(const ProblemSpec& spec);

/// Same value, but throws SlacknessError when it is not strictly positive.
double solve_max_slackness(const ProblemSpec& spec);

/// The slackness every bound constant uses: half the maximal slackness.
inline double working_slackness(double xi_star) { return 0.5 * xi_star; }

/// Sum_w Pr(w) pi(.|w): the overall action frequency, when every event
/// offers the same number of actions (index-aligned). Empty otherwise.
std::optional<Vector> marginal_action_distribution(const ProblemSpec& spec,
                                                   const StationarySolution& solution);

/// Exact E[V(z0 - z_opt) + sum_l q_l z_l | Q = q] under the controller's
/// deterministic choice, by enumerating the event support.
double exact_conditional_dpp_expectation(const ProblemSpec& spec, const Eigen::Ref<const Vector>& q,
                                         double z_opt, const DppController& controller);
double exact_conditional_dpp_expectation(const ProblemSpec& spec, const Eigen::Ref<const Vector>& q,
                                         double z_opt);

/// L = 1 only: exact E[V(z0 - z_opt) + min(q, cap) z_1 | Q_1 = q]; the
/// controller still acts on the untruncated q.
double exact_conditional_truncated_expectation(const ProblemSpec& spec, double q, double z_opt,
                                               double cap, const DppController& controller);

}  // namespace dpp
