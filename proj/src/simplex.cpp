#include "dpp/simplex.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace dpp {

namespace {

constexpr int kMaxIterations = 100000;

// Tableau over [structural | slack | artificial] columns with the current
// basis. Reduced costs and the objective value are carried alongside.
struct Tableau {
  Matrix a;
  Vector rhs;
  std::vector<Eigen::Index> basis;
  Vector reduced;
  double objective = 0.0;

  void pivot(Eigen::Index r, Eigen::Index c) {
    const double p = a(r, c);
    a.row(r) /= p;
    rhs[r] /= p;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i == r) continue;
      const double f = a(i, c);
      if (f != 0.0) {
        a.row(i) -= f * a.row(r);
        rhs[i] -= f * rhs[r];
        if (rhs[i] < 0.0 && rhs[i] > -1e-12) rhs[i] = 0.0;
      }
    }
    const double d = reduced[c];
    if (d != 0.0) {
      objective += d * rhs[r];
      reduced -= d * a.row(r).transpose();
    }
    basis[static_cast<std::size_t>(r)] = c;
  }

  void set_costs(const Vector& cost) {
    reduced = cost;
    objective = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double cb = cost[basis[static_cast<std::size_t>(i)]];
      if (cb != 0.0) {
        reduced -= cb * a.row(i).transpose();
        objective += cb * rhs[i];
      }
    }
  }
};

enum class Outcome { Optimal, Unbounded };

// Bland: lowest-index improving column; ratio ties broken by lowest basic index.
Outcome iterate(Tableau& tab, Eigen::Index allowed_columns, double tol, int& iterations) {
  while (true) {
    if (++iterations > kMaxIterations) throw ConsistencyError("simplex: iteration limit reached");
    Eigen::Index entering = -1;
    for (Eigen::Index j = 0; j < allowed_columns; ++j) {
      if (tab.reduced[j] < -tol) {
        entering = j;
        break;
      }
    }
    if (entering < 0) return Outcome::Optimal;

    Eigen::Index leaving = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < tab.a.rows(); ++i) {
      const double coef = tab.a(i, entering);
      if (coef <= tol) continue;
      const double ratio = tab.rhs[i] / coef;
      const double tie = 1e-12 * (1.0 + std::abs(best_ratio));
      if (leaving < 0 || ratio < best_ratio - tie) {
        best_ratio = ratio;
        leaving = i;
      } else if (ratio <= best_ratio + tie &&
                 tab.basis[static_cast<std::size_t>(i)] <
                     tab.basis[static_cast<std::size_t>(leaving)]) {
        leaving = i;
      }
    }
    if (leaving < 0) return Outcome::Unbounded;
    tab.pivot(leaving, entering);
  }
}

}  // namespace

LpResult solve_lp(const LinearProgram& lp, double tol) {
  const Eigen::Index n = lp.cost.size();
  const Eigen::Index m_ub = lp.A_ub.rows();
  const Eigen::Index m_eq = lp.A_eq.rows();
  if ((m_ub > 0 && (lp.A_ub.cols() != n || lp.b_ub.size() != m_ub)) ||
      (m_eq > 0 && (lp.A_eq.cols() != n || lp.b_eq.size() != m_eq))) {
    throw InvalidInput("solve_lp: inconsistent dimensions");
  }
  const Eigen::Index m = m_ub + m_eq;
  const Eigen::Index n_real = n + m_ub;  // structural + slack columns
  const Eigen::Index n_total = n_real + m;

  Tableau tab;
  tab.a = Matrix::Zero(m, n_total);
  tab.rhs = Vector::Zero(m);
  tab.basis.resize(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m_ub; ++i) {
    tab.a.row(i).head(n) = lp.A_ub.row(i);
    tab.a(i, n + i) = 1.0;
    tab.rhs[i] = lp.b_ub[i];
  }
  for (Eigen::Index i = 0; i < m_eq; ++i) {
    tab.a.row(m_ub + i).head(n) = lp.A_eq.row(i);
    tab.rhs[m_ub + i] = lp.b_eq[i];
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab.rhs[i] < 0.0) {
      tab.a.row(i) *= -1.0;
      tab.rhs[i] = -tab.rhs[i];
    }
    tab.a(i, n_real + i) = 1.0;
    tab.basis[static_cast<std::size_t>(i)] = n_real + i;
  }

  LpResult result;
  // Phase 1: minimize the sum of artificials.
  Vector phase1 = Vector::Zero(n_total);
  phase1.tail(m).setOnes();
  tab.set_costs(phase1);
  iterate(tab, n_real, tol, result.iterations);
  const double infeasibility_tol = 1e-9 * std::max(1.0, tab.rhs.cwiseAbs().maxCoeff());
  if (tab.objective > infeasibility_tol) {
    result.status = LpStatus::Infeasible;
    return result;
  }
  // Drive zero-level artificials out of the basis where a real column allows it.
  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab.basis[static_cast<std::size_t>(i)] < n_real) continue;
    for (Eigen::Index j = 0; j < n_real; ++j) {
      if (std::abs(tab.a(i, j)) > tol) {
        tab.pivot(i, j);
        break;
      }
    }
  }

  // Phase 2 on the original costs; artificials never re-enter.
  Vector phase2 = Vector::Zero(n_total);
  phase2.head(n) = lp.cost;
  tab.set_costs(phase2);
  if (iterate(tab, n_real, tol, result.iterations) == Outcome::Unbounded) {
    result.status = LpStatus::Unbounded;
    return result;
  }

  result.status = LpStatus::Optimal;
  result.x = Vector::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index b = tab.basis[static_cast<std::size_t>(i)];
    if (b < n) result.x[b] = std::max(0.0, tab.rhs[i]);
  }
  result.objective = lp.cost.dot(result.x);
  return result;
}

}  // namespace dpp
