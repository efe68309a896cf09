#pragma once

#include "dpp/core.hpp"

#include <initializer_list>
#include <vector>

namespace dpp::testing {

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline ActionVector act(double z0, std::initializer_list<double> z) { return {z0, vec(z)}; }

/// One event, probability 1, with the given actions.
inline ProblemSpec single_event_spec(std::vector<ActionVector> actions, double z_max, double B,
                                     double V) {
  const int L = static_cast<int>(actions.front().z.size());
  EventOutcome e{0, 1.0, std::move(actions)};
  return ProblemSpec({e}, L, z_max, B, V);
}

}  // namespace dpp::testing
