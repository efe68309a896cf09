#include "dpp/analysis.hpp"
#include "dpp/controller.hpp"
#include "dpp/events.hpp"
#include "dpp/oracle.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace dpp {
namespace {

using testing::act;

const double kSqrt3 = std::sqrt(3.0);

TEST(Constants, BenchmarkExampleValues) {
  const BoundConstants k = compute_constants(2.0, kSqrt3, 10.0, 0.1, 1.0);
  EXPECT_NEAR(k.C0, 82.9975, 1e-12);
  // 0.3 / (18 + 0.1 sqrt3), evaluated independently.
  EXPECT_NEAR(k.r, 0.016507820093752304, 1e-15);
  EXPECT_NEAR(k.rho, 1.0 - k.r * 0.1 / 4.0, 1e-15);
  EXPECT_NEAR(k.c2, 2.0 * 10.0 * 2.0 + kSqrt3 * 1.0, 1e-12);
  EXPECT_NEAR(k.C2, 4.0 + 82.9975 * kSqrt3, 1e-10);
}

TEST(Constants, WorkingSlacknessOnBenchmark) {
  // xi = xi*/2 = 1/15; reference values from an independent 40-digit evaluation.
  const BoundConstants k = compute_constants(2.0, kSqrt3, 10.0, 1.0 / 15.0, 1.0);
  EXPECT_NEAR(k.C0, 124.49833333333333, 1e-10);
  EXPECT_NEAR(k.r, 0.011040287632924446, 1e-15);
  EXPECT_NEAR(k.rho, 0.99981599520611793, 1e-15);
  EXPECT_NEAR(k.log_D, 18.407686874063664, 1e-10);
  EXPECT_NEAR(k.C, 903.26124601336865, 1e-8);
  EXPECT_NEAR(k.C2, 219.63743879097927, 1e-10);
  EXPECT_NEAR(k.D, std::exp(18.407686874063664), 1e-9 * k.D);

  const BoundConstants pooled = compute_constants(2.0, 2.0, 10.0, 0.45, 1.0);
  EXPECT_NEAR(pooled.C0, 18.655416666666666, 1e-10);
  EXPECT_NEAR(pooled.log_D, 13.098924252969425, 1e-10);
  EXPECT_NEAR(pooled.C, 165.65053401558705, 1e-8);
}

TEST(Constants, SpecOverloadUsesSpecBounds) {
  const ProblemSpec spec = build_server_scheduling_spec(kServerArrivalMeans, 100.0);
  const BoundConstants a = compute_constants(spec, 1.0 / 15.0, 5.0);
  const BoundConstants b = compute_constants(2.0, kSqrt3, 100.0, 1.0 / 15.0, 5.0);
  EXPECT_EQ(a.C0, b.C0);
  EXPECT_EQ(a.log_D, b.log_D);
  EXPECT_NEAR(a.log_D, 137.64279330964768, 1e-9);
}

TEST(Constants, RateMatchesGenericMomentLemma) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double B = 0.1 + 5.0 * u(rng);
    const double xi = B * u(rng);
    const double beta = xi / 2.0;
    const double r_generic = beta / (B * B + B * beta / 3.0);
    const BoundConstants k = compute_constants(2.0, B, 10.0, xi, 1.0);
    EXPECT_NEAR(k.r, r_generic, 1e-12 * r_generic);

    // Generic D = (e^{r gamma} - rho) e^{r sigma} / (1 - rho), gamma = B, sigma = C0 V.
    const double rho = 1.0 - k.r * beta / 2.0;
    EXPECT_NEAR(k.rho, rho, 1e-15);
    const double log_generic = std::log((std::exp(k.r * B) - rho) / (1.0 - rho)) + k.r * k.C0 * k.V;
    EXPECT_NEAR(k.log_D, log_generic, 1e-9 * std::max(1.0, log_generic));
    EXPECT_GE(k.log_D, 0.0);
  }
}

TEST(Constants, FailsClosed) {
  EXPECT_THROW(compute_constants(2.0, kSqrt3, 10.0, 0.0, 1.0), SlacknessError);
  EXPECT_THROW(compute_constants(2.0, kSqrt3, 10.0, -0.1, 1.0), SlacknessError);
  EXPECT_THROW(compute_constants(2.0, kSqrt3, 10.0, 2.0, 1.0), InvalidInput);
  EXPECT_THROW(compute_constants(2.0, kSqrt3, 10.0, 0.1, 0.0), InvalidInput);
}

TEST(Azuma, Examples) {
  EXPECT_NEAR(azuma_bound(100, 1.0, 30.0), std::exp(-4.5), 1e-15);
  EXPECT_NEAR(azuma_bound(100, 1.0, 30.0), 0.011108996538242306, 1e-15);
  EXPECT_NEAR(azuma_bound(100, 1.0, 1e-12), 1.0, 1e-15);
  const double b = azuma_bound(50, 2.0, 7.0);
  EXPECT_NEAR(azuma_bound(50, 2.0, 14.0), std::pow(b, 4), 1e-15);
  EXPECT_THROW(azuma_bound(0, 1.0, 1.0), InvalidInput);
  EXPECT_THROW(azuma_bound(1, 0.0, 1.0), InvalidInput);
}

TEST(QueueTail, InversionAndClamp) {
  const BoundConstants k = compute_constants(2.0, kSqrt3, 10.0, 1.0 / 15.0, 1.0);
  const double delta = 0.01;
  EXPECT_NEAR(queue_tail_bound(k, (k.log_D - std::log(delta)) / k.r), delta, 1e-12);
  EXPECT_EQ(queue_tail_bound(k, 1e-9), 1.0);
  const double crossover = vacuity_crossover(k);
  EXPECT_NEAR(queue_tail_bound(k, crossover), 1.0, 1e-12);
  EXPECT_LT(queue_tail_bound(k, crossover * 1.01), 1.0);
  EXPECT_GT(crossover, k.C0 * k.V);
}

TEST(XTail, CalibratedBoundEqualsDelta) {
  const BoundConstants base = compute_constants(2.0, kSqrt3, 10.0, 1.0 / 15.0, 1.0);
  for (std::uint64_t T : {100u, 10000u}) {
    for (double delta : {0.05, 0.01}) {
      const BoundConstants k = with_truncation_level(base, calibrated_truncation_level(base, T, delta));
      const double lambda = calibrated_lambda(k, T, delta);
      EXPECT_NEAR(xtail_bound(k, T, lambda), delta, 1e-12);
    }
  }
}

TEST(XTail, VanishesAndIsMonotone) {
  const BoundConstants base = compute_constants(2.0, kSqrt3, 10.0, 1.0 / 15.0, 1.0);
  const BoundConstants huge = with_truncation_level(base, 1e6);
  EXPECT_LT(xtail_bound(huge, 1, 1e9), 1e-12);
  double prev = 2.0;
  for (double lambda = 1e3; lambda < 1e7; lambda *= 1.7) {
    const double v = xtail_bound(huge, 1000, lambda);
    EXPECT_LE(v, prev);
    prev = v;
  }
  prev = 2.0;
  for (double c1 = 100.0; c1 < 1e5; c1 *= 1.5) {
    const BoundConstants k = with_truncation_level(base, c1);
    const double v = xtail_bound(k, 1000, 1e3 * k.c2);
    EXPECT_LE(v, prev + 1e-15);
    prev = v;
  }
}

TEST(ConvergenceTime, Examples) {
  EXPECT_EQ(convergence_time_multi(0.1, 0.05), 5020u);
  EXPECT_EQ(convergence_time_single(0.1, 0.05), 898u);
  const double two_over_e = 2.0 / std::exp(1.0);
  EXPECT_EQ(convergence_time_multi(0.1, two_over_e),
            static_cast<std::uint64_t>(std::ceil(std::log(10.0) * std::log(10.0) / 0.01)));
  EXPECT_EQ(convergence_time_multi(0.5, two_over_e), 4u);  // max{log^2 2, 1} = 1
  EXPECT_EQ(convergence_time_single(0.1, 1.0 / std::exp(1.0)), 100u);
  EXPECT_THROW(convergence_time_multi(0.0, 0.05), InvalidInput);
  EXPECT_THROW(convergence_time_single(0.1, 1.0), InvalidInput);
}

TEST(ConvergenceTime, HalvingEpsilonQuadruples) {
  for (double delta : {0.2, 0.05, 0.001}) {
    for (double eps = 0.4; eps > 1e-3; eps /= 2.0) {
      EXPECT_GE(convergence_time_multi(eps / 2.0, delta), 4 * convergence_time_multi(eps, delta) - 4);
    }
  }
}

TEST(ConvergenceTime, SingleNeverExceedsMulti) {
  for (double eps : {0.5, 0.2, 0.1, 0.05, 0.01}) {
    for (double delta : {0.3, 0.1, 0.05, 0.01, 0.001}) {
      EXPECT_LE(convergence_time_single(eps, delta), convergence_time_multi(eps, delta));
    }
  }
}

TEST(ConvergenceTime, SingleRange) {
  const BoundConstants k = compute_constants(2.0, 2.0, 10.0, 0.45, 1.0);
  EXPECT_EQ(convergence_time_single(0.1, 0.05, k), 898u);
  EXPECT_THROW(convergence_time_single(k.C0 / k.B * 1.01, 0.05, k), OutOfRange);
  EXPECT_TRUE(single_constraint_applicable(2.0, 2.0, 0.45, 0.1));
  EXPECT_TRUE(single_constraint_applicable(2.0, 2.0, 0.45, 100.0));
  // Only a slackness close to B makes the range finite: here eps <= 16.
  EXPECT_TRUE(single_constraint_applicable(1.0, 1.0, 1.0, 16.0));
  EXPECT_FALSE(single_constraint_applicable(1.0, 1.0, 1.0, 16.5));
}

TEST(ConvergenceChain, DominatesStepByStep) {
  for (double eps : {0.1, 0.05, 0.02}) {
    for (double delta : {0.05, 0.01}) {
      const double C = 903.26;
      const auto T = static_cast<double>(convergence_time_multi(eps, delta));
      const ConvergenceChain ch = convergence_chain(C, eps, delta, T);
      EXPECT_LE(ch.rate, ch.log_expanded * (1.0 + 1e-9));
      EXPECT_LE(ch.log_expanded, ch.linearized * (1.0 + 1e-9));
      EXPECT_LE(ch.linearized, ch.six_c_eps * (1.0 + 1e-9));
    }
  }
  // log T = 2 log(1/eps) + log(max{log^2(1/eps) log(2/delta), log^3(2/delta)}).
  const ConvergenceChain ch = convergence_chain(1.0, 0.1, 0.05, 5020.0);
  EXPECT_NEAR(ch.log_expanded, 0.23099530670146468, 1e-12);
  EXPECT_NEAR(ch.rate, 0.23099116978620807, 1e-12);
}

TEST(GTail, Scaling) {
  const BoundConstants k = compute_constants(2.0, 2.0, 10.0, 0.45, 1.0);
  EXPECT_NEAR(g_tail_bound(k, 100, 1.0 / std::exp(1.0)), 2.0 * k.C2 * k.V * 10.0, 1e-9);
  EXPECT_NEAR(g_tail_bound(k, 400, 0.05), 2.0 * g_tail_bound(k, 100, 0.05), 1e-9);
  EXPECT_THROW(g_tail_bound(k, 0, 0.05), InvalidInput);
}

TEST(Processes, ZeroTrace) {
  const ProblemSpec spec = testing::single_event_spec({act(0.5, {0.0})}, 1.0, 1.0, 1.0);
  const PathTrace trace = run_path(spec, 1, 20);
  const BoundConstants k = compute_constants(spec, 0.5, 3.0);
  const DerivedProcesses p = build_processes(trace, 0.5, k);
  for (double x : p.x) EXPECT_EQ(x, 0.0);
  EXPECT_FALSE(p.tau.has_value());
  EXPECT_EQ(p.visit_slots.size(), 21u);
}

TEST(Processes, SingleSlot) {
  const ProblemSpec spec = build_server_scheduling_spec(kServerArrivalMeans, 10.0);
  const PathTrace trace = run_path(spec, 2, 1);
  const BoundConstants k = compute_constants(spec, 1.0 / 15.0, 10.0);
  const DerivedProcesses p = build_processes(trace, 1.1, k);
  ASSERT_EQ(p.x.size(), 2u);
  EXPECT_DOUBLE_EQ(p.x[1], 10.0 * (trace.objective()[0] - 1.1));
  EXPECT_FALSE(p.g.has_value());
}

TEST(Processes, StoppedProcessFreezes) {
  const ProblemSpec spec = build_server_scheduling_spec(kServerArrivalMeans, 30.0);
  const PathTrace trace = run_path(spec, 6, 20000);
  const double z_opt = solve_stationary_optimum(spec).z_opt;
  const BoundConstants k = compute_constants(spec, 1.0 / 15.0, 40.0);  // small level, so tau fires
  const DerivedProcesses p = build_processes(trace, z_opt, k);
  ASSERT_TRUE(p.tau.has_value());

  std::size_t tau = 0;
  for (std::size_t t = 1; t <= trace.size(); ++t) {
    if (trace.queues().col(static_cast<Eigen::Index>(t - 1)).norm() > 40.0) {
      tau = t;
      break;
    }
  }
  EXPECT_EQ(*p.tau, tau);
  for (std::size_t t = 0; t < tau; ++t) EXPECT_EQ(p.y[t], p.x[t]);
  for (std::size_t t = tau; t <= trace.size(); ++t) EXPECT_EQ(p.y[t], p.x[tau - 1]);
  for (std::size_t t = 1; t <= trace.size(); ++t) {
    ASSERT_LE(std::abs(p.y[t] - p.y[t - 1]), k.c2 + 1e-9 * std::max(1.0, std::abs(p.y[t])));
  }
  EXPECT_NE(p.x.back(), p.y.back());
}

TEST(Processes, TruncationRoutesAgreeBelowCap) {
  const ProblemSpec spec = build_pooled_scheduling_spec(kServerArrivalMeans, 10.0);
  const double z_opt = solve_stationary_optimum(spec).z_opt;
  const BoundConstants k = compute_constants(spec, 0.45, 1e6);
  const PathTrace trace = run_path(spec, 12, 10000);
  ASSERT_LE(trace.queues().maxCoeff(), k.C0 * k.V);
  const DerivedProcesses p = build_processes(trace, z_opt, k);
  ASSERT_TRUE(p.g.has_value());
  EXPECT_EQ(p.x, *p.g);
  EXPECT_EQ(p.x, p.y);
  const double step = 2.0 * k.V * k.z_max + k.C0 * k.V * k.B;
  for (std::size_t t = 1; t < p.g->size(); ++t) {
    ASSERT_LE(std::abs((*p.g)[t] - (*p.g)[t - 1]), step + 1e-9);
  }
}

TEST(Telescoping, NeverLeavesCap) {
  const ProblemSpec spec = build_pooled_scheduling_spec(kServerArrivalMeans, 10.0);
  const BoundConstants k = compute_constants(spec, 0.45, 100.0);
  const PathTrace trace = run_path(spec, 21, 5000);
  const TelescopingReport r = check_telescoping(trace, k);
  EXPECT_EQ(r.n_J, trace.size() + 1);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.lhs_gap, r.bound);
  EXPECT_GE(r.average, r.lower_bound);
}

TEST(Telescoping, ZeroTrace) {
  const ProblemSpec spec = testing::single_event_spec({act(0.5, {0.0})}, 1.0, 1.0, 10.0);
  const BoundConstants k = compute_constants(spec, 0.5, 1.0);
  const TelescopingReport r = check_telescoping(run_path(spec, 1, 50), k);
  EXPECT_EQ(r.lhs_gap, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Telescoping, GrowingQueuePassesTheCap) {
  // Q1[t] = t - 1; C0 V = 9.875, so the last visit below the cap is t = 10.
  const ProblemSpec spec = testing::single_event_spec({act(0.0, {1.0})}, 1.0, 1.0, 1.0);
  const BoundConstants k = compute_constants(spec, 0.5, 1.0);
  ASSERT_DOUBLE_EQ(k.C0 * k.V, 9.875);
  const TelescopingReport r = check_telescoping(run_path(spec, 1, 50), k);
  EXPECT_EQ(r.n_J, 10u);
  EXPECT_DOUBLE_EQ(r.lhs_gap, 40.5 - 36.0);  // |0+1+...+8 - 9^2/2|
  EXPECT_DOUBLE_EQ(r.bound, 2.5 * 9.0);
  EXPECT_TRUE(r.pass);
}

TEST(Telescoping, RejectsMultiConstraint) {
  const ProblemSpec spec = build_server_scheduling_spec(kServerArrivalMeans, 10.0);
  const BoundConstants k = compute_constants(spec, 1.0 / 15.0, 1.0);
  EXPECT_THROW(check_telescoping(run_path(spec, 1, 10), k), InvalidInput);
}

}  // namespace
}  // namespace dpp
