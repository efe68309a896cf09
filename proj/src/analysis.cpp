#include "dpp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dpp {

namespace {

// ceil that ignores representation noise on exact integers (e.g. log(e) != 1).
std::uint64_t ceil_slots(double x) {
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, x)) return static_cast<std::uint64_t>(nearest);
  return static_cast<std::uint64_t>(std::ceil(x));
}

void check_epsilon_delta(double epsilon, double delta) {
  if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0,1)");
}

}  // namespace

BoundConstants compute_constants(double z_max, double B, double V, double xi, double c1) {
  if (!(xi > 0.0)) throw SlacknessError("compute_constants: xi must be > 0");
  if (xi > B) throw InvalidInput("compute_constants: xi must not exceed B");
  if (!(c1 > 0.0)) throw InvalidInput("compute_constants: c1 must be > 0");
  if (!(V > 0.0) || !(B > 0.0) || !(z_max > 0.0)) {
    throw InvalidInput("compute_constants: z_max, B, V must be > 0");
  }

  BoundConstants k;
  k.xi = xi;
  k.B = B;
  k.z_max = z_max;
  k.V = V;
  k.C0 = (4.0 * z_max + B * B / V - xi * xi / (4.0 * V)) / xi;
  if (!(k.C0 > 0.0)) throw ConsistencyError("compute_constants: C0 <= 0");

  k.r = 3.0 * xi / (6.0 * B * B + B * xi);
  k.rho = 1.0 - k.r * xi / 4.0;
  if (!(k.rho > 0.0 && k.rho < 1.0)) throw ConsistencyError("compute_constants: rho outside (0,1)");

  const double rxi = k.r * xi;
  const double numerator = 4.0 * std::expm1(k.r * B) + rxi;  // 4e^{rB} + r xi - 4
  k.log_D = std::log(numerator) - std::log(rxi) + k.r * k.C0 * V;
  k.D = std::exp(k.log_D);
  if (!(k.log_D >= 0.0)) throw ConsistencyError("compute_constants: D < 1");

  const double scale = B / (k.r * V);
  const double inner = (8.0 * std::expm1(k.r * B) + 2.0 * rxi) / rxi;
  k.C = 2.0 * std::numbers::sqrt2 * (2.0 * z_max + scale + scale * std::log(inner) + B * k.C0);
  k.C2 = 2.0 * z_max + k.C0 * B;
  return with_truncation_level(k, c1);
}

BoundConstants compute_constants(const ProblemSpec& spec, double xi, double c1) {
  return compute_constants(spec.z_max(), spec.B(), spec.V(), xi, c1);
}

BoundConstants with_truncation_level(const BoundConstants& k, double c1) {
  if (!(c1 > 0.0)) throw InvalidInput("truncation level c1 must be > 0");
  BoundConstants out = k;
  out.c1 = c1;
  out.c2 = 2.0 * k.V * k.z_max + k.B * c1;
  return out;
}

double calibrated_truncation_level(const BoundConstants& k, std::uint64_t T, double delta) {
  if (T < 1) throw InvalidInput("T must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0,1)");
  return (std::log(2.0 * static_cast<double>(T) / delta) + k.log_D) / k.r;
}

double calibrated_lambda(const BoundConstants& k, std::uint64_t T, double delta) {
  return std::sqrt(2.0 * static_cast<double>(T) * std::log(2.0 / delta)) * k.c2;
}

double vacuity_crossover(const BoundConstants& k) { return k.log_D / k.r; }

double azuma_bound(std::uint64_t T, double c2, double lambda) {
  if (T < 1 || !(c2 > 0.0) || !(lambda > 0.0)) {
    throw InvalidInput("azuma_bound: requires T >= 1, c2 > 0, lambda > 0");
  }
  const double exponent = -lambda * lambda / (2.0 * static_cast<double>(T) * c2 * c2);
  return std::clamp(std::exp(exponent), 0.0, 1.0);
}

double queue_tail_bound(const BoundConstants& k, double c1) {
  if (!(c1 > 0.0)) throw InvalidInput("queue_tail_bound: c1 must be > 0");
  return std::min(1.0, std::exp(k.log_D - k.r * c1));
}

double xtail_bound(const BoundConstants& k, std::uint64_t T, double lambda) {
  const double bad_events = std::exp(std::log(static_cast<double>(T)) + k.log_D - k.r * k.c1);
  return std::min(1.0, azuma_bound(T, k.c2, lambda) + bad_events);
}

double g_tail_bound(const BoundConstants& k, std::uint64_t T, double delta) {
  if (T < 1) throw InvalidInput("g_tail_bound: T must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("g_tail_bound: delta must lie in (0,1)");
  return 2.0 * k.C2 * k.V * std::sqrt(static_cast<double>(T)) * std::log(1.0 / delta);
}

std::uint64_t convergence_time_multi(double epsilon, double delta) {
  check_epsilon_delta(epsilon, delta);
  const double l_eps = std::log(1.0 / epsilon);
  const double l_delta = std::log(2.0 / delta);
  const double m = std::max(l_eps * l_eps * l_delta, l_delta * l_delta * l_delta);
  return ceil_slots(m / (epsilon * epsilon));
}

std::uint64_t convergence_time_single(double epsilon, double delta) {
  check_epsilon_delta(epsilon, delta);
  const double l = std::log(1.0 / delta);
  return ceil_slots(l * l / (epsilon * epsilon));
}

std::uint64_t convergence_time_single(double epsilon, double delta, const BoundConstants& k) {
  if (epsilon > k.C0 / k.B) {
    throw OutOfRange("single-constraint convergence time needs epsilon <= C0/B = " +
                     format_double(k.C0 / k.B));
  }
  return convergence_time_single(epsilon, delta);
}

bool single_constraint_applicable(double z_max, double B, double xi, double epsilon) {
  if (!(epsilon > 0.0) || !(xi > 0.0)) return false;
  const double V = 1.0 / epsilon;
  const double C0 = (4.0 * z_max + B * B / V - xi * xi / (4.0 * V)) / xi;
  return epsilon <= C0 / B;
}

double multi_constraint_rate(double C, double T, double delta) {
  const double l2 = std::log(2.0 / delta);
  const double m = std::max(std::log(T) * std::sqrt(l2), std::pow(l2, 1.5));
  return C * m / std::sqrt(T);
}

ConvergenceChain convergence_chain(double C, double epsilon, double delta, double T) {
  check_epsilon_delta(epsilon, delta);
  const double l_eps = std::log(1.0 / epsilon);
  const double l2 = std::log(2.0 / delta);
  const double m = std::max(l_eps * std::sqrt(l2), std::pow(l2, 1.5));
  ConvergenceChain chain;
  chain.rate = multi_constraint_rate(C, T, delta);
  chain.log_expanded =
      C * std::max((2.0 * l_eps + 2.0 * std::log(m)) * std::sqrt(l2), std::pow(l2, 1.5)) / (m / epsilon);
  chain.linearized = C * (3.0 * l_eps * std::sqrt(l2) + 3.0 * std::pow(l2, 1.5)) / (m / epsilon);
  chain.six_c_eps = 6.0 * C * epsilon;
  return chain;
}

DerivedProcesses build_processes(const PathTrace& trace, double z_opt, const BoundConstants& k) {
  const std::size_t T = trace.size();
  const Matrix& Q = trace.queues();
  const Matrix& Z = trace.constraints();
  const Vector& z0 = trace.objective();
  const bool single = trace.L() == 1;
  const double cap = k.C0 * k.V;

  DerivedProcesses p;
  p.x.assign(T + 1, 0.0);
  if (single) p.g.emplace(T + 1, 0.0);
  for (std::size_t i = 0; i < T; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const double penalty = k.V * (z0[col] - z_opt);
    p.x[i + 1] = p.x[i] + penalty + Q.col(col).dot(Z.col(col));
    if (single) {
      (*p.g)[i + 1] = (*p.g)[i] + penalty + std::min(Q(0, col), cap) * Z(0, col);
    }
    if (!p.tau && Q.col(col).norm() > k.c1) p.tau = i + 1;
  }
  p.y.resize(T + 1);
  for (std::size_t t = 0; t <= T; ++t) {
    p.y[t] = p.tau ? p.x[std::min(t, *p.tau - 1)] : p.x[t];
  }
  if (single) {
    for (std::size_t t = 1; t <= T + 1; ++t) {
      const double q = Q(0, static_cast<Eigen::Index>(t - 1));
      if (q >= 0.0 && q <= cap) p.visit_slots.push_back(t);
    }
  }
  return p;
}

TelescopingReport check_telescoping(const PathTrace& trace, const BoundConstants& k) {
  if (trace.L() != 1) throw InvalidInput("check_telescoping requires L = 1");
  if (trace.empty()) throw InvalidInput("check_telescoping: empty trace");
  if (k.V * k.C0 < k.B) throw InvalidInput("check_telescoping requires V >= B/C0");

  const std::size_t T = trace.size();
  const double cap = k.C0 * k.V;
  const auto q = [&](std::size_t t) { return trace.queues()(0, static_cast<Eigen::Index>(t - 1)); };
  const auto z = [&](std::size_t t) {
    return trace.constraints()(0, static_cast<Eigen::Index>(t - 1));
  };

  TelescopingReport rep;
  for (std::size_t t = T + 1; t >= 1; --t) {
    if (q(t) <= cap) {
      rep.n_J = t;
      break;
    }
  }

  CompensatedSum head;
  double magnitude = 0.0;
  for (std::size_t t = 1; t < rep.n_J; ++t) {
    const double term = std::min(q(t), cap) * z(t);
    head += term;
    magnitude += std::abs(term);
  }
  const double half_sq = 0.5 * q(rep.n_J) * q(rep.n_J);
  rep.lhs_gap = std::abs(head.value() - half_sq);
  rep.bound = 2.5 * k.B * k.B * static_cast<double>(rep.n_J - 1);

  CompensatedSum all;
  double all_magnitude = 0.0;
  for (std::size_t t = 1; t <= T; ++t) {
    const double term = std::min(q(t), cap) * z(t);
    all += term;
    all_magnitude += std::abs(term);
  }
  rep.average = all.value() / static_cast<double>(T);
  rep.lower_bound = -2.5 * k.B * k.B;

  // Absolute 1e-9, widened by the rounding scale of the sums involved.
  const double tol_gap = kLawTolerance * std::max(1.0, magnitude + half_sq);
  const double tol_avg = kLawTolerance * std::max(1.0, all_magnitude / static_cast<double>(T));
  rep.pass = rep.lhs_gap <= rep.bound + tol_gap && rep.average >= rep.lower_bound - tol_avg;
  return rep;
}

}  // namespace dpp
