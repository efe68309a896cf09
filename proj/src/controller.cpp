#include "dpp/controller.hpp"

#include "dpp/events.hpp"

namespace dpp {

Choice select_action(const Eigen::Ref<const Vector>& q, std::span<const ActionVector> actions,
                     double V, TieBreak /*tie_break*/) {
  // LowestIndex is the only rule: a later action must be strictly better to win.
  Choice best{0, V * actions[0].z0 + q.dot(actions[0].z)};
  for (std::size_t k = 1; k < actions.size(); ++k) {
    const double value = V * actions[k].z0 + q.dot(actions[k].z);
    if (value < best.value) best = Choice{k, value};
  }
  return best;
}

Choice DppController::choose(const Eigen::Ref<const Vector>& q,
                             std::span<const ActionVector> actions) const {
  if (fault_ == ControllerFault::SkipMinimization) {
    return Choice{0, V_ * actions[0].z0 + q.dot(actions[0].z)};
  }
  return select_action(q, actions, V_, tie_break_);
}

DppState::DppState(const ProblemSpec& spec, ControllerFault fault)
    : spec_(&spec), controller_(spec.V(), spec.tie_break(), fault), q_(Vector::Zero(spec.L())) {}

SlotRecord DppState::step(std::size_t event_id, std::uint64_t t) {
  if (t != t_) {
    throw InvalidInput("DppState::step: expected slot " + std::to_string(t_) + ", got " +
                       std::to_string(t));
  }
  const EventOutcome& event = spec_->event(event_id);
  const Choice choice = controller_.choose(q_, event.actions);
  SlotRecord r;
  r.t = t;
  r.event_id = event_id;
  r.action_index = choice.index;
  r.action = event.actions[choice.index];
  r.q_before = q_;
  r.q_after = queue_update(q_, r.action.z);
  r.drift = drift(r.q_before, r.q_after);
  q_ = r.q_after;
  ++t_;
  return r;
}

PathTrace run_path(const ProblemSpec& spec, std::uint64_t seed, std::size_t T,
                   ControllerFault fault) {
  if (T < 1) throw InvalidInput("run_path: T must be >= 1");
  const EventStream stream(spec, seed);
  const DppController controller(spec.V(), spec.tie_break(), fault);
  PathTrace trace(spec.digest(), seed, spec.L(), T);
  Matrix& queues = trace.queues();
  for (std::size_t i = 0; i < T; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const std::size_t e = stream.sample(i + 1);
    const auto& actions = spec.events()[e].actions;
    const Choice choice = controller.choose(queues.col(col), actions);
    const ActionVector& a = actions[choice.index];
    queues.col(col + 1) = queue_update(queues.col(col), a.z);
    trace.set_slot(i, e, choice.index, a);
  }
  return trace;
}

}  // namespace dpp
