#pragma once

#include "dpp/core.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace dpp {

/// Closed-form constants of the sample-path analysis for one (spec, xi, c1).
///
///   C0  = (4 z_max + B^2/V - xi^2/(4V)) / xi       queue drift threshold is C0*V
///   r   = 3 xi / (6 B^2 + B xi)                     exponential-moment rate
///   rho = 1 - r xi / 4
///   D   = (4 e^{rB} + r xi - 4) e^{r C0 V} / (r xi) queue moment bound, >= 1
///   c2  = 2 V z_max + B c1                          stopped-process step bound
///   C   = 2 sqrt2 (2 z_max + B/(rV) + B/(rV) log((8e^{rB} + 2 r xi - 8)/(r xi)) + B C0)
///   C2  = 2 z_max + C0 B
///
/// log_D is kept alongside D because e^{r C0 V} overflows for large V.
struct BoundConstants {
  double C0 = 0.0;
  double r = 0.0;
  double rho = 0.0;
  double D = 0.0;
  double log_D = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double C = 0.0;
  double C2 = 0.0;
  double xi = 0.0;
  double B = 0.0;
  double z_max = 0.0;
  double V = 0.0;
};

BoundConstants compute_constants(double z_max, double B, double V, double xi, double c1);
BoundConstants compute_constants(const ProblemSpec& spec, double xi, double c1);

/// Same constants with a different truncation level (only c1 and c2 change).
BoundConstants with_truncation_level(const BoundConstants& k, double c1);

/// c1 = (1/r) log(2 D T / delta): the level at which T*D*e^{-r c1} = delta/2.
double calibrated_truncation_level(const BoundConstants& k, std::uint64_t T, double delta);

/// lambda = sqrt(2 T log(2/delta)) * c2, so the Azuma term equals delta/2.
double calibrated_lambda(const BoundConstants& k, std::uint64_t T, double delta);

/// Smallest c1 with D e^{-r c1} <= 1; below it the queue tail bound is vacuous.
double vacuity_crossover(const BoundConstants& k);

/// exp(-lambda^2 / (2 T c2^2)), clamped to [0,1].
double azuma_bound(std::uint64_t T, double c2, double lambda);

/// min(1, D e^{-r c1}).
double queue_tail_bound(const BoundConstants& k, double c1);

/// min(1, azuma_bound(T, k.c2, lambda) + T D e^{-r k.c1}).
double xtail_bound(const BoundConstants& k, std::uint64_t T, double lambda);

/// 2 C2 V sqrt(T) log(1/delta): the level G[T] exceeds with probability <= delta.
double g_tail_bound(const BoundConstants& k, std::uint64_t T, double delta);

/// ceil((1/eps^2) max{log^2(1/eps) log(2/delta), log^3(2/delta)}).
std::uint64_t convergence_time_multi(double epsilon, double delta);

/// ceil((1/eps^2) log^2(1/delta)).
std::uint64_t convergence_time_single(double epsilon, double delta);

/// As above, but enforces eps <= C0/B for constants computed at V = 1/eps.
std::uint64_t convergence_time_single(double epsilon, double delta, const BoundConstants& k);

/// True when eps lies in (0, C0/B] with C0 evaluated at V = 1/eps.
bool single_constraint_applicable(double z_max, double B, double xi, double epsilon);

/// C * max{log T log^{1/2}(2/delta), log^{3/2}(2/delta)} / sqrt(T).
double multi_constraint_rate(double C, double T, double delta);

/// The chain of upper bounds used to turn the convergence-time choice of T
/// into an O(eps) gap; each entry should dominate the previous one.
struct ConvergenceChain {
  double rate = 0.0;            // multi_constraint_rate at the given T
  double log_expanded = 0.0;    // log T replaced by 2 log(1/eps) + 2 log(max{...}^{1/2})
  double linearized = 0.0;      // numerator bounded by 3 log(1/eps) ... + 3 log^{3/2}
  double six_c_eps = 0.0;       // 6 C eps
};
ConvergenceChain convergence_chain(double C, double epsilon, double delta, double T);

/// Processes derived from one trace.
///
/// x[t] = sum_{i<=t} (V(z0[i] - z_opt) + sum_l Q_l[i] z_l[i]), x[0] = 0.
/// tau is the first slot t <= T with ||Q[t]|| > c1; y[t] = x[min(t, tau-1)].
/// g (L = 1 only) replaces Q_1 by min(Q_1, C0 V) in the increment.
/// visit_slots (L = 1 only) lists every t in 1..T+1 with Q_1[t] in [0, C0 V].
struct DerivedProcesses {
  std::vector<double> x;
  std::optional<std::size_t> tau;
  std::vector<double> y;
  std::optional<std::vector<double>> g;
  std::vector<std::size_t> visit_slots;
};

DerivedProcesses build_processes(const PathTrace& trace, double z_opt, const BoundConstants& k);

struct TelescopingReport {
  std::size_t n_J = 1;
  double lhs_gap = 0.0;      // |sum_{t<n_J} (Q1 ^ C0V) z1 - Q1[n_J]^2 / 2|
  double bound = 0.0;        // (5/2) B^2 (n_J - 1)
  double average = 0.0;      // (1/T) sum_{t<=T} (Q1 ^ C0V) z1
  double lower_bound = 0.0;  // -(5/2) B^2
  bool pass = false;
};

/// Evaluates the truncated-telescoping bound and the lower bound on the
/// truncated drift average for an L = 1 trace. Requires V >= B/C0.
TelescopingReport check_telescoping(const PathTrace& trace, const BoundConstants& k);

}  // namespace dpp
