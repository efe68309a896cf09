#include "dpp/events.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace dpp {
namespace {

using testing::act;

TEST(EventStream, SingleEventSupport) {
  const ProblemSpec spec = testing::single_event_spec({act(0.0, {0.0})}, 1.0, 1.0, 1.0);
  EventStream s(spec, 123);
  for (std::uint64_t t = 1; t <= 100; ++t) EXPECT_EQ(s.sample(t), 0u);
}

TEST(EventStream, SampleIsPureInSeedAndSlot) {
  std::vector<EventOutcome> ev{{0, 0.5, {act(0.0, {0.0})}}, {1, 0.5, {act(0.0, {0.0})}}};
  const ProblemSpec spec(ev, 1, 1.0, 1.0, 1.0);
  EventStream a(spec, 42), b(spec, 42);
  const std::size_t first = a.sample(7);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(a.sample(7), first);
  for (int i = 0; i < 20; ++i) b.next();
  EXPECT_EQ(b.sample(7), first);
  EXPECT_EQ(b.cursor(), 21u);

  EventStream c(spec, 42);
  for (std::uint64_t t = 1; t <= 50; ++t) EXPECT_EQ(c.next(), a.sample(t));
}

TEST(EventStream, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(9, 4), derive_seed(9, 4));
}

TEST(ServerScheduling, ProbabilitiesAndActions) {
  const ProblemSpec spec = build_server_scheduling_spec(kServerArrivalMeans, 10.0);
  ASSERT_EQ(spec.num_events(), 8u);
  EXPECT_EQ(spec.L(), 3);
  EXPECT_EQ(spec.z_max(), 2.0);
  EXPECT_DOUBLE_EQ(spec.B(), std::sqrt(3.0));

  // a = (1,1,0) has id 0b110 = 6.
  EXPECT_NEAR(spec.event(6).probability, 0.5 * 0.7 * 0.6, 1e-15);
  double total = 0.0;
  for (const auto& e : spec.events()) total += e.probability;
  EXPECT_NEAR(total, 1.0, 1e-15);

  const auto& a0 = spec.event(0).actions;  // a = (0,0,0)
  ASSERT_EQ(a0.size(), 3u);
  EXPECT_EQ(a0[0].z0, 1.0);
  EXPECT_EQ(a0[0].z, testing::vec({-1.0, -1.0, 0.0}));
  EXPECT_EQ(a0[1].z0, 1.0);
  EXPECT_EQ(a0[2].z0, 2.0);
  EXPECT_EQ(a0[2].z, testing::vec({0.0, -1.0, -1.0}));
}

TEST(ServerScheduling, BIsTheLargestActionNorm) {
  const ProblemSpec spec = build_server_scheduling_spec(kServerArrivalMeans, 1.0);
  double largest = 0.0;
  for (const auto& e : spec.events()) {
    for (const auto& a : e.actions) largest = std::max(largest, a.z.norm());
  }
  EXPECT_DOUBLE_EQ(largest, std::sqrt(3.0));
}

TEST(ServerScheduling, RejectsMeansOutsideUnitInterval) {
  EXPECT_THROW(build_server_scheduling_spec({0.0, 0.5, 0.5}, 1.0), InvalidInput);
  EXPECT_THROW(build_server_scheduling_spec({0.5, 1.0, 0.5}, 1.0), InvalidInput);
  EXPECT_THROW(build_pooled_scheduling_spec({0.5, 0.5, -0.1}, 1.0), InvalidInput);
}

TEST(PooledScheduling, SingleConstraint) {
  const ProblemSpec spec = build_pooled_scheduling_spec(kServerArrivalMeans, 10.0);
  EXPECT_EQ(spec.L(), 1);
  EXPECT_EQ(spec.B(), 2.0);
  // a = (0,1,1) (id 3): services give z = 2-1, 2-1, 2-2.
  const auto& a = spec.event(3).actions;
  EXPECT_EQ(a[0].z[0], 1.0);
  EXPECT_EQ(a[1].z[0], 1.0);
  EXPECT_EQ(a[2].z[0], 0.0);
}

TEST(ServerScheduling, ArrivalMeansConverge) {
  const ProblemSpec spec = build_server_scheduling_spec(kServerArrivalMeans, 1.0);
  EventStream s(spec, 2024);
  const std::size_t n = 1000000;
  double mean[3] = {0, 0, 0};
  std::vector<double> counts(8, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t id = s.next();
    counts[id] += 1.0;
    mean[0] += (id >> 2) & 1;
    mean[1] += (id >> 1) & 1;
    mean[2] += id & 1;
  }
  for (int l = 0; l < 3; ++l) EXPECT_NEAR(mean[l] / n, kServerArrivalMeans[l], 0.005);

  // Chi-square goodness of fit, 7 degrees of freedom; 0.001 critical value 24.32.
  double chi2 = 0.0;
  for (std::size_t id = 0; id < 8; ++id) {
    const double expected = spec.event(id).probability * n;
    chi2 += (counts[id] - expected) * (counts[id] - expected) / expected;
  }
  EXPECT_LT(chi2, 24.32);
}

}  // namespace
}  // namespace dpp
