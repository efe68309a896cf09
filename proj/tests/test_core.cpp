#include "dpp/controller.hpp"
#include "dpp/core.hpp"
#include "dpp/events.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace dpp {
namespace {

using testing::act;
using testing::vec;

TEST(QueueUpdate, ClampsAtZero) {
  const Vector q = queue_update(vec({2.0}), vec({-3.0}));
  EXPECT_EQ(q[0], 0.0);
}

TEST(QueueUpdate, Componentwise) {
  const Vector q = queue_update(vec({1.5, 0.0}), vec({0.7, -0.2}));
  EXPECT_DOUBLE_EQ(q[0], 2.2);
  EXPECT_EQ(q[1], 0.0);
}

TEST(QueueUpdate, Identity) {
  const Vector q = queue_update(vec({5.0}), vec({0.0}));
  EXPECT_EQ(q[0], 5.0);
}

TEST(QueueUpdate, DimensionMismatchThrows) {
  EXPECT_THROW(queue_update(vec({1.0}), vec({1.0, 2.0})), InvalidInput);
}

TEST(QueueUpdate, AcceptsFloatScalars) {
  Eigen::Vector2f q(1.0f, 0.5f), z(-2.0f, 0.25f);
  const Eigen::Vector2f out = queue_update(q, z);
  EXPECT_EQ(out[0], 0.0f);
  EXPECT_EQ(out[1], 0.75f);
}

TEST(Drift, Examples) {
  EXPECT_EQ(drift(vec({0.0}), vec({0.0})), 0.0);
  EXPECT_EQ(drift(vec({3.0}), vec({4.0})), 3.5);
  EXPECT_EQ(drift(vec({1.0, 2.0}), vec({2.0, 2.0})), 1.5);
  EXPECT_THROW(drift(vec({1.0}), vec({1.0, 2.0})), InvalidInput);
}

SlotRecord record_of(const Vector& q, const Vector& z) {
  SlotRecord r;
  r.q_before = q;
  r.action = {0.0, z};
  r.q_after = queue_update(q, z);
  r.drift = drift(r.q_before, r.q_after);
  return r;
}

TEST(DriftUpperBound, EqualityAtEmptyQueue) {
  const SlotRecord r = record_of(vec({0.0}), vec({1.0}));
  EXPECT_EQ(r.drift, 0.5);
  EXPECT_TRUE(drift_upper_bound_check(r, 1.0));
}

TEST(DriftUpperBound, NegativeIncrement) {
  const SlotRecord r = record_of(vec({3.0}), vec({-1.0}));
  EXPECT_EQ(r.drift, -2.5);
  EXPECT_TRUE(drift_upper_bound_check(r, std::sqrt(3.0)));
}

TEST(DriftUpperBound, DetectsInconsistentRecord) {
  SlotRecord r = record_of(vec({3.0}), vec({-1.0}));
  r.drift = 10.0;
  EXPECT_FALSE(drift_upper_bound_check(r, std::sqrt(3.0)));
}

TEST(DriftUpperBound, HoldsOnEverySlotOfABenchmarkPath) {
  const ProblemSpec spec = build_server_scheduling_spec(kServerArrivalMeans, 10.0);
  const PathTrace trace = run_path(spec, 11, 5000);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    ASSERT_TRUE(drift_upper_bound_check(trace.record(i), spec.B())) << "slot " << i + 1;
  }
}

TEST(ProblemSpec, RejectsBadInputs) {
  const auto make = [](double p0, double p1, ActionVector a) {
    std::vector<EventOutcome> ev{{0, p0, {act(0.0, {0.0})}}, {1, p1, {std::move(a)}}};
    return ProblemSpec(ev, 1, 1.0, 1.0, 1.0);
  };
  EXPECT_NO_THROW(make(0.5, 0.5, act(1.0, {1.0})));
  EXPECT_THROW(make(0.5, 0.6, act(1.0, {1.0})), InvalidInput);    // sum != 1
  EXPECT_THROW(make(0.5, 0.5, act(1.5, {0.0})), InvalidInput);    // |z0| > z_max
  EXPECT_THROW(make(0.5, 0.5, act(0.0, {1.5})), InvalidInput);    // ||z|| > B
  EXPECT_THROW(make(0.5, 0.5, act(0.0, {0.1, 0.1})), InvalidInput);  // dimension
  EXPECT_THROW(make(1.0, 0.0, act(0.0, {0.0})), InvalidInput);    // zero probability

  std::vector<EventOutcome> empty_actions{{0, 1.0, {}}};
  EXPECT_THROW(ProblemSpec(empty_actions, 1, 1.0, 1.0, 1.0), InvalidInput);
  EXPECT_THROW(ProblemSpec({}, 1, 1.0, 1.0, 1.0), InvalidInput);
  std::vector<EventOutcome> ok{{0, 1.0, {act(0.0, {0.0})}}};
  EXPECT_THROW(ProblemSpec(ok, 1, 1.0, 1.0, 0.0), InvalidInput);
  EXPECT_THROW(ProblemSpec(ok, 0, 1.0, 1.0, 1.0), InvalidInput);
}

TEST(ProblemSpec, DigestTracksContent) {
  const ProblemSpec a = build_server_scheduling_spec(kServerArrivalMeans, 10.0);
  const ProblemSpec b = build_server_scheduling_spec(kServerArrivalMeans, 10.0);
  EXPECT_EQ(a.digest(), b.digest());
  EXPECT_NE(a.digest(), a.with_V(11.0).digest());
  EXPECT_NE(a.digest(), build_server_scheduling_spec({0.5, 0.7, 0.3}, 10.0).digest());
}

TEST(TimeAverage, ConstantObjective) {
  const ProblemSpec spec = testing::single_event_spec({act(1.1, {0.0})}, 2.0, 1.0, 1.0);
  const PathTrace trace = run_path(spec, 1, 10);
  EXPECT_DOUBLE_EQ(time_average(trace, Statistic::objective()), 1.1);
}

TEST(TimeAverage, AlternatingConstraint) {
  // Cost favours +1 at an empty queue and -1 once the queue is positive.
  const ProblemSpec spec =
      testing::single_event_spec({act(0.0, {1.0}), act(0.5, {-1.0})}, 1.0, 1.0, 1.0);
  const PathTrace trace = run_path(spec, 1, 4);
  EXPECT_EQ(trace.constraints()(0, 0), 1.0);
  EXPECT_EQ(trace.constraints()(0, 1), -1.0);
  EXPECT_EQ(time_average(trace, Statistic::constraint(1)), 0.0);
  EXPECT_THROW(time_average(PathTrace(), Statistic::objective()), InvalidInput);
  EXPECT_THROW(time_average(trace, Statistic::constraint(2)), InvalidInput);
}

TEST(TimeAverage, QueueSumAveragesStartOfSlotState) {
  const ProblemSpec spec = testing::single_event_spec({act(0.0, {1.0})}, 1.0, 1.0, 1.0);
  const PathTrace trace = run_path(spec, 1, 4);  // Q[t] = 0,1,2,3
  EXPECT_DOUBLE_EQ(time_average(trace, Statistic::queue_sum()), 1.5);
}

TEST(PathTrace, ChainConsistencyAndNonnegativity) {
  const ProblemSpec spec = build_server_scheduling_spec(kServerArrivalMeans, 10.0);
  const PathTrace trace = run_path(spec, 5, 2000);
  EXPECT_TRUE(trace.record(0).q_before.isZero(0.0));
  EXPECT_GE(trace.queues().minCoeff(), 0.0);
  for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
    const SlotRecord a = trace.record(i);
    const SlotRecord b = trace.record(i + 1);
    ASSERT_EQ(a.q_after, b.q_before);
    ASSERT_EQ(a.q_after, Vector(queue_update(a.q_before, a.action.z)));
    ASSERT_EQ(a.drift, drift(a.q_before, a.q_after));
  }
}

TEST(PathTrace, CsvRoundTripIsExact) {
  const ProblemSpec spec = build_server_scheduling_spec(kServerArrivalMeans, 7.5);
  const PathTrace trace = run_path(spec, 9, 300);
  std::stringstream csv;
  write_trace_csv(csv, trace);
  const std::string text = csv.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,event_id,action_index,z0,z_1,z_2,z_3,q_1,q_2,q_3,drift");

  const PathTrace back = read_trace_csv(csv, 3);
  ASSERT_EQ(back.size(), trace.size());
  EXPECT_EQ(back.event_ids(), trace.event_ids());
  EXPECT_EQ(back.action_indices(), trace.action_indices());
  EXPECT_EQ(back.objective(), trace.objective());
  EXPECT_EQ(back.constraints(), trace.constraints());
  EXPECT_EQ(back.queues(), trace.queues());
  EXPECT_EQ(back.drifts(), trace.drifts());
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(1.1), "1.1");
  EXPECT_EQ(format_double(0.1 + 0.2), "0.30000000000000004");
  EXPECT_EQ(std::stod(format_double(M_PI)), M_PI);
}

}  // namespace
}  // namespace dpp
