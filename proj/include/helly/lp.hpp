#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "helly/errors.hpp"
#include "helly/linalg.hpp"
#include "helly/log.hpp"

namespace helly {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  double objective = 0.0;
  Vec x;                   // structural variables only
  std::vector<int> basis;  // row -> variable index (>= nv means artificial)
};

// Two-phase tableau simplex for min c^T x s.t. A x = b, x >= 0, with Bland's
// rule throughout (smallest-index entering, smallest-index tie-break on the
// ratio test) so cycling cannot occur. Problem sizes here are tiny; the dense
// tableau is the simplest thing that is easy to audit.
inline LpSolution solve_standard_lp(const Matrix& a, const Vec& b, const Vec& c,
                                    double feas_tol = 1e-8) {
  const int r = a.rows();
  const int nv = a.cols();
  const int rhs = nv + r;
  const double tol = 1e-9;

  Matrix t(r + 1, nv + r + 1);
  std::vector<int> basis(r);
  for (int i = 0; i < r; ++i) {
    const double sign = b[i] < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < nv; ++j) t(i, j) = sign * a(i, j);
    t(i, nv + i) = 1.0;
    t(i, rhs) = sign * b[i];
    basis[i] = nv + i;
  }

  auto pivot = [&](int pr, int pc) {
    const double inv = 1.0 / t(pr, pc);
    for (int j = 0; j <= rhs; ++j) t(pr, j) *= inv;
    t(pr, pc) = 1.0;
    for (int i = 0; i <= r; ++i) {
      if (i == pr) continue;
      const double f = t(i, pc);
      if (f == 0.0) continue;
      for (int j = 0; j <= rhs; ++j) t(i, j) -= f * t(pr, j);
      t(i, pc) = 0.0;
    }
    for (int i = 0; i < r; ++i)
      if (t(i, rhs) < 0.0 && t(i, rhs) > -1e-11) t(i, rhs) = 0.0;
    basis[pr] = pc;
  };

  // Runs simplex on the current cost row; returns false on unbounded.
  auto iterate = [&](int col_limit) -> bool {
    const long max_iter = 20000L + 200L * (rhs + 1);
    for (long it = 0; it < max_iter; ++it) {
      int pc = -1;
      for (int j = 0; j < col_limit; ++j) {
        if (t(r, j) < -tol) {
          pc = j;
          break;
        }
      }
      if (pc < 0) return true;
      int pr = -1;
      double best = 0.0;
      for (int i = 0; i < r; ++i) {
        if (t(i, pc) > tol) {
          const double ratio = t(i, rhs) / t(i, pc);
          if (pr < 0 || ratio < best - 1e-12 ||
              (ratio < best + 1e-12 && basis[i] < basis[pr])) {
            pr = i;
            best = ratio;
          }
        }
      }
      if (pr < 0) return false;
      pivot(pr, pc);
    }
    fail(Errc::no_convergence, "simplex: iteration limit");
  };

  // Phase 1: minimize the sum of artificials.
  for (int j = 0; j <= rhs; ++j) {
    double s = 0.0;
    for (int i = 0; i < r; ++i) s += t(i, j);
    t(r, j) = (j >= nv && j < rhs) ? 0.0 : -s;
  }
  iterate(rhs);
  LpSolution sol;
  if (-t(r, rhs) > feas_tol) {
    sol.status = LpStatus::infeasible;
    sol.objective = -t(r, rhs);
    return sol;
  }
  // Drive remaining artificials out of the basis where possible; rows where
  // no structural pivot exists are redundant and stay parked at zero.
  for (int i = 0; i < r; ++i) {
    if (basis[i] < nv) continue;
    int pc = -1;
    for (int j = 0; j < nv; ++j) {
      if (std::fabs(t(i, j)) > 1e-7) {
        pc = j;
        break;
      }
    }
    if (pc >= 0) pivot(i, pc);
  }

  // Phase 2 cost row.
  for (int j = 0; j <= rhs; ++j) t(r, j) = 0.0;
  for (int j = 0; j < nv; ++j) t(r, j) = c[j];
  for (int i = 0; i < r; ++i) {
    if (basis[i] < nv && c[basis[i]] != 0.0) {
      const double f = c[basis[i]];
      for (int j = 0; j <= rhs; ++j) t(r, j) -= f * t(i, j);
    }
  }
  if (!iterate(nv)) {
    sol.status = LpStatus::unbounded;
    return sol;
  }

  sol.status = LpStatus::optimal;
  sol.objective = -t(r, rhs);
  sol.x.assign(nv, 0.0);
  for (int i = 0; i < r; ++i)
    if (basis[i] < nv) sol.x[basis[i]] = std::max(0.0, t(i, rhs));
  sol.basis = basis;
  return sol;
}

struct SupportSolution {
  LpStatus status = LpStatus::infeasible;
  double value = 0.0;
  Vec x;
};

// max <objective, x> over {x : <rows_i, x> <= rhs_i}, x free.
inline SupportSolution maximize_direction(const std::vector<Vec>& rows, const Vec& rhs,
                                          const Vec& objective) {
  const int r = static_cast<int>(rows.size());
  const int n = static_cast<int>(objective.size());
  Matrix a(r, 2 * n + r);
  Vec b(r), c(2 * n + r, 0.0);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < n; ++j) {
      a(i, j) = rows[i][j];
      a(i, n + j) = -rows[i][j];
    }
    a(i, 2 * n + i) = 1.0;
    b[i] = rhs[i];
  }
  for (int j = 0; j < n; ++j) {
    c[j] = -objective[j];
    c[n + j] = objective[j];
  }
  LpSolution lp = solve_standard_lp(a, b, c);
  SupportSolution out;
  out.status = lp.status;
  if (lp.status == LpStatus::optimal) {
    out.value = -lp.objective;
    out.x.assign(n, 0.0);
    for (int j = 0; j < n; ++j) out.x[j] = lp.x[j] - lp.x[n + j];
  }
  return out;
}

struct ChebyshevBall {
  LpStatus status = LpStatus::infeasible;
  Vec center;
  double radius = 0.0;
};

// Largest inscribed ball of {x : <rows_i, x> <= rhs_i}; radius is +inf when
// the inflation LP is unbounded.
inline ChebyshevBall chebyshev_center(const std::vector<Vec>& rows, const Vec& rhs) {
  const int r = static_cast<int>(rows.size());
  ChebyshevBall ball;
  check(r > 0, Errc::value_error, "chebyshev_center: no constraints");
  const int n = static_cast<int>(rows[0].size());
  Matrix a(r, 2 * n + 1 + r);
  Vec b(r), c(2 * n + 1 + r, 0.0);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < n; ++j) {
      a(i, j) = rows[i][j];
      a(i, n + j) = -rows[i][j];
    }
    a(i, 2 * n) = norm2(rows[i]);
    a(i, 2 * n + 1 + i) = 1.0;
    b[i] = rhs[i];
  }
  c[2 * n] = -1.0;
  LpSolution lp = solve_standard_lp(a, b, c);
  ball.status = lp.status;
  if (lp.status == LpStatus::unbounded) {
    ball.radius = std::numeric_limits<double>::infinity();
    return ball;
  }
  if (lp.status != LpStatus::optimal) return ball;
  ball.radius = -lp.objective;
  ball.center.assign(n, 0.0);
  for (int j = 0; j < n; ++j) ball.center[j] = lp.x[j] - lp.x[n + j];
  return ball;
}

struct HullMembership {
  bool inside = false;
  std::vector<int> support;  // indices with positive coefficient
  Vec coefficients;          // full-length, zero off the support
};

// Convex-hull membership by phase-1 feasibility of sum rho_j p_j = target,
// sum rho_j = 1, rho >= 0. The basic solution has at most dim+1 positive
// entries, which is exactly the Caratheodory support the callers need.
inline HullMembership hull_membership(const std::vector<Vec>& points, const Vec& target,
                                      double tol = 1e-8) {
  const int k = static_cast<int>(points.size());
  const int n = static_cast<int>(target.size());
  Matrix a(n + 1, k);
  Vec b(n + 1), c(k, 0.0);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < n; ++i) a(i, j) = points[j][i];
    a(n, j) = 1.0;
  }
  for (int i = 0; i < n; ++i) b[i] = target[i];
  b[n] = 1.0;
  LpSolution lp = solve_standard_lp(a, b, c, tol);
  HullMembership out;
  if (lp.status != LpStatus::optimal) return out;
  out.inside = true;
  out.coefficients = lp.x;
  for (int j = 0; j < k; ++j)
    if (lp.x[j] > 1e-11) out.support.push_back(j);
  return out;
}

struct RayExitSolution {
  bool feasible = false;
  double t = 0.0;
  Vec point;                 // t * direction
  std::vector<int> support;  // indices with positive coefficient
  Vec coefficients;
};

// Furthest point of conv(points) along the ray {t * direction : t >= 0}:
// max t s.t. sum rho_j p_j = t * direction, sum rho_j = 1, rho >= 0. With t
// basic at the optimum, at most dim of the rho can be basic, so the support
// size is at most dim.
inline RayExitSolution ray_exit_lp(const std::vector<Vec>& points, const Vec& direction) {
  const int k = static_cast<int>(points.size());
  const int n = static_cast<int>(direction.size());
  Matrix a(n + 1, k + 1);
  Vec b(n + 1, 0.0), c(k + 1, 0.0);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < n; ++i) a(i, j) = points[j][i];
    a(n, j) = 1.0;
  }
  for (int i = 0; i < n; ++i) a(i, k) = -direction[i];
  b[n] = 1.0;
  c[k] = -1.0;
  LpSolution lp = solve_standard_lp(a, b, c);
  RayExitSolution out;
  if (lp.status != LpStatus::optimal) return out;
  out.feasible = true;
  out.t = lp.x[k];
  out.point = scaled(direction, out.t);
  out.coefficients.assign(k, 0.0);
  for (int j = 0; j < k; ++j) {
    out.coefficients[j] = lp.x[j];
    if (lp.x[j] > 1e-11) out.support.push_back(j);
  }
  return out;
}

}  // namespace helly
