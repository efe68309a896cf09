#pragma once

#include "dpp/core.hpp"

#include <span>

namespace dpp {

/// Faults injected into the decision rule for negative-control runs.
enum class ControllerFault {
  None,
  SkipMinimization,  // always takes action 0 instead of minimizing
};

struct Choice {
  std::size_t index = 0;
  double value = 0.0;  // V*z0 + sum_l q_l z_l of the chosen action
};

/// Per-slot drift-plus-penalty rule: argmin over `actions` of
/// V*z0 + sum_l q_l z_l, lowest index on exact ties. Takes only the realized
/// action set, never event probabilities.
Choice select_action(const Eigen::Ref<const Vector>& q, std::span<const ActionVector> actions,
                     double V, TieBreak tie_break = TieBreak::LowestIndex);

/// The decision rule as a value: trade-off V plus an optional injected fault.
class DppController {
 public:
  explicit DppController(double V, TieBreak tie_break = TieBreak::LowestIndex,
                         ControllerFault fault = ControllerFault::None)
      : V_(V), tie_break_(tie_break), fault_(fault) {}

  Choice choose(const Eigen::Ref<const Vector>& q, std::span<const ActionVector> actions) const;

  double V() const { return V_; }
  ControllerFault fault() const { return fault_; }

 private:
  double V_;
  TieBreak tie_break_;
  ControllerFault fault_;
};

/// Virtual queues of one path plus the controller acting on them.
class DppState {
 public:
  explicit DppState(const ProblemSpec& spec, ControllerFault fault = ControllerFault::None);

  /// Observes event `event_id` at slot t (must equal slot()), acts, updates the queues.
  SlotRecord step(std::size_t event_id, std::uint64_t t);

  const Vector& queues() const { return q_; }
  std::uint64_t slot() const { return t_; }
  const DppController& controller() const { return controller_; }

 private:
  const ProblemSpec* spec_;
  DppController controller_;
  Vector q_;
  std::uint64_t t_ = 1;
};

/// Runs T slots from Q[1] = 0 with events drawn from EventStream(spec, seed).
PathTrace run_path(const ProblemSpec& spec, std::uint64_t seed, std::size_t T,
                   ControllerFault fault = ControllerFault::None);

}  // namespace dpp
