#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when no stationary policy meets every constraint with positive margin.
class SlacknessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A derived constant left the range its formula guarantees.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class OutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Absolute tolerance for every per-slot law asserted on a trace.
inline constexpr double kLawTolerance = 1e-9;

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  CompensatedSum& operator+=(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
    return *this;
  }
  CompensatedSum& operator+=(const CompensatedSum& other) {
    *this += other.sum_;
    *this += other.carry_;
    return *this;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// One decision z = (z0, z_1..z_L): objective cost z0 plus the L constraint increments.
struct ActionVector {
  double z0 = 0.0;
  Vector z;
};

struct EventOutcome {
  std::size_t id = 0;
  double probability = 0.0;
  std::vector<ActionVector> actions;
};

enum class TieBreak { LowestIndex };

/// A stochastic optimization instance with a finite i.i.d. event support.
///
/// Construction validates everything the bound constants depend on: the
/// probabilities form a distribution, every action has dimension L+1, and
/// every action respects |z0| <= z_max and ||z|| <= B.
class ProblemSpec {
 public:
  ProblemSpec(std::vector<EventOutcome> events, int num_constraints, double z_max, double B,
              double V, TieBreak tie_break = TieBreak::LowestIndex);

  const std::vector<EventOutcome>& events() const { return events_; }
  const EventOutcome& event(std::size_t id) const;
  std::size_t num_events() const { return events_.size(); }
  int L() const { return num_constraints_; }
  double z_max() const { return z_max_; }
  double B() const { return B_; }
  double V() const { return V_; }
  TieBreak tie_break() const { return tie_break_; }

  /// Copy of this spec with a different trade-off parameter.
  ProblemSpec with_V(double V) const;

  /// FNV-1a over the canonical binary content (events, actions, constants).
  std::uint64_t digest() const;

 private:
  std::vector<EventOutcome> events_;
  int num_constraints_;
  double z_max_;
  double B_;
  double V_;
  TieBreak tie_break_;
};

/// Q_l[t+1] = max{Q_l[t] + z_l[t], 0}, evaluated lazily as an Eigen expression.
template <typename DerivedQ, typename DerivedZ>
auto queue_update(const Eigen::MatrixBase<DerivedQ>& q, const Eigen::MatrixBase<DerivedZ>& z) {
  using Scalar = typename DerivedQ::Scalar;
  if (q.size() != z.size()) {
    throw InvalidInput("queue_update: dimension mismatch (" + std::to_string(q.size()) + " vs " +
                       std::to_string(z.size()) + ")");
  }
  return (q + z).cwiseMax(Scalar(0));
}

/// Lyapunov drift: half the change in squared queue norm across one slot.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar drift(const Eigen::MatrixBase<DerivedA>& q_before,
                                const Eigen::MatrixBase<DerivedB>& q_after) {
  if (q_before.size() != q_after.size()) {
    throw InvalidInput("drift: dimension mismatch");
  }
  return typename DerivedA::Scalar(0.5) * (q_after.squaredNorm() - q_before.squaredNorm());
}

struct SlotRecord {
  std::uint64_t t = 1;
  std::size_t event_id = 0;
  std::size_t action_index = 0;
  ActionVector action;
  Vector q_before;
  Vector q_after;
  double drift = 0.0;
};

/// drift <= B^2/2 + sum_l q_before[l] z_l + tolerance.
bool drift_upper_bound_check(const SlotRecord& record, double B);

/// Per-slot record of one sample path, stored column-wise.
///
/// Column i of `constraints()` is z[i+1]; column i of `queues()` is Q[i+1],
/// so `queues()` has T+1 columns and column 0 is the all-zero initial state.
class PathTrace {
 public:
  PathTrace() = default;
  PathTrace(std::uint64_t spec_digest, std::uint64_t seed, int L, std::size_t T);

  std::uint64_t spec_digest() const { return spec_digest_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return event_ids_.size(); }
  bool empty() const { return event_ids_.empty(); }
  int L() const { return static_cast<int>(queues_.rows()); }

  /// Writes slot index i (0-based, slot t = i+1); q_after must already be set by the caller.
  void set_slot(std::size_t i, std::size_t event_id, std::size_t action_index, const ActionVector& a);

  const std::vector<std::uint32_t>& event_ids() const { return event_ids_; }
  const std::vector<std::uint32_t>& action_indices() const { return action_indices_; }
  const Vector& objective() const { return objective_; }
  const Matrix& constraints() const { return constraints_; }
  const Matrix& queues() const { return queues_; }
  const Vector& drifts() const { return drifts_; }
  Matrix& queues() { return queues_; }
  Vector& drifts() { return drifts_; }

  /// Materializes slot index i (0-based) as a SlotRecord.
  SlotRecord record(std::size_t i) const;

 private:
  std::uint64_t spec_digest_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::uint32_t> event_ids_;
  std::vector<std::uint32_t> action_indices_;
  Vector objective_;
  Matrix constraints_;
  Matrix queues_;
  Vector drifts_;
};

struct Statistic {
  enum class Kind { Objective, Constraint, QueueSum };
  Kind kind = Kind::Objective;
  int l = 0;  // 1-based constraint index, used only for Kind::Constraint

  static Statistic objective() { return {Kind::Objective, 0}; }
  static Statistic constraint(int l) { return {Kind::Constraint, l}; }
  static Statistic queue_sum() { return {Kind::QueueSum, 0}; }
};

/// (1/T) sum over all T slots of the selected quantity. QueueSum averages
/// sum_l Q_l[t] over t = 1..T (the queue state seen at the start of each slot).
double time_average(const PathTrace& trace, Statistic which);

/// CSV with header `t,event_id,action_index,z0,z_1..z_L,q_1..q_L,drift`;
/// q columns hold Q[t+1]; floats use the shortest round-trip decimal form.
void write_trace_csv(std::ostream& out, const PathTrace& trace);
PathTrace read_trace_csv(std::istream& in, int L);

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);

}  // namespace dpp
