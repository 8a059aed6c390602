#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "helly/errors.hpp"
#include "helly/linalg.hpp"
#include "helly/log.hpp"

namespace helly {

// Exponents kappa_j = c_j <A^{-1} u_j, u_j> attached to an approximate
// decomposition A = sum c_j u_j u_j^T with I <= A. They always sum to n
// (trace identity), and gamma kappa_j >= c_j holds with gamma the largest
// eigenvalue of A, which is the gamma this struct carries: with it both
// I <= A <= gamma I and the per-index domination are simultaneously true.
struct BLWeights {
  std::vector<Vec> u;
  Vec c;
  Vec kappa;
  SymMatrix a;
  double gamma = 1.0;
};

inline BLWeights kappa_weights(const std::vector<Vec>& u, const Vec& c) {
  check(!u.empty(), Errc::value_error, "kappa_weights: empty input");
  const int n = static_cast<int>(u[0].size());
  const int m = static_cast<int>(u.size());
  check(static_cast<int>(c.size()) == m, Errc::value_error, "kappa_weights: weight count mismatch");
  for (int j = 0; j < m; ++j) {
    check(static_cast<int>(u[j].size()) == n, Errc::value_error, "kappa_weights: mixed dimensions");
    check(c[j] > 0.0, Errc::value_error, "kappa_weights: weights must be positive");
  }

  BLWeights w;
  w.u = u;
  w.c = c;
  w.a = SymMatrix::outer_sum(u, c);
  const SandwichCertificate cert = sandwich_gamma(w.a);
  check(cert.lambda_min >= 1.0 - 1e-7, Errc::not_dominating_identity,
        "kappa_weights: lambda_min " + fmt_sci(cert.lambda_min));
  w.gamma = std::max(1.0, cert.lambda_max);

  Lu af(w.a.full());
  check(!af.singular, Errc::singular_matrix, "kappa_weights: decomposition matrix singular");
  w.kappa.resize(m);
  double total = 0.0;
  for (int j = 0; j < m; ++j) {
    w.kappa[j] = c[j] * dot(af.solve(u[j]), u[j]);
    check(w.kappa[j] > 0.0, Errc::internal_check_failed, "kappa_weights: nonpositive exponent");
    total += w.kappa[j];
  }
  check(std::fabs(total - n) <= 1e-9, Errc::internal_check_failed,
        "kappa_weights: exponents sum to " + std::to_string(total));
  for (int j = 0; j < m; ++j)
    check(w.gamma * w.kappa[j] >= c[j] - 1e-9, Errc::internal_check_failed,
          "kappa_weights: domination failure at index " + std::to_string(j));
  return w;
}

namespace detail {

// log det(sum_j kappa_j lambda_j u_j u_j^T); fails if not positive definite.
inline double log_det_weighted(const BLWeights& w, const Vec& lambdas) {
  SymMatrix m(static_cast<int>(w.u[0].size()));
  for (std::size_t j = 0; j < w.u.size(); ++j) m.add_outer(w.u[j], w.kappa[j] * lambdas[j]);
  int sign = 0;
  const double ld = Lu(m.full()).log_abs_det(&sign);
  check(sign > 0, Errc::internal_check_failed, "log_det_weighted: matrix not positive definite");
  return ld;
}

}  // namespace detail

// Proposition-style determinant inequality in log space:
//   n log gamma + log det(sum kappa_j lambda_j u_j u_j^T) >= sum kappa_j log lambda_j.
struct DetInequality {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

inline DetInequality check_det_inequality(const BLWeights& w, const Vec& lambdas) {
  const int n = static_cast<int>(w.u[0].size());
  check(lambdas.size() == w.u.size(), Errc::value_error,
        "check_det_inequality: lambda count mismatch");
  for (double l : lambdas)
    check(l > 0.0, Errc::value_error, "check_det_inequality: lambdas must be positive");
  DetInequality out;
  out.lhs = n * std::log(w.gamma) + detail::log_det_weighted(w, lambdas);
  out.rhs = 0.0;
  for (std::size_t j = 0; j < lambdas.size(); ++j) out.rhs += w.kappa[j] * std::log(lambdas[j]);
  out.holds = out.lhs >= out.rhs - 1e-12 * std::max(1.0, std::fabs(out.rhs));
  return out;
}

// Coordinate descent on G(lambda) = log det(sum kappa lambda u u^T)
// - sum kappa log lambda, started at lambda = 1 (always visited, so the
// estimate never exceeds the lambda = 1 value). Each coordinate minimum is
// closed-form via the rank-one determinant update; log lambda is kept in
// [-3, 3], which only shrinks the searched region and therefore never breaks
// the certified lower bound F >= gamma^{-n}.
struct BLSearchResult {
  double f_estimate = 1.0;
  double d_estimate = 1.0;
  Vec lambdas;
  bool converged = false;
};

inline BLSearchResult bl_gaussian_search(const BLWeights& w, int iterations = 200) {
  check(iterations > 0, Errc::value_error, "bl_gaussian_search: iterations must be positive");
  const int n = static_cast<int>(w.u[0].size());
  const int m = static_cast<int>(w.u.size());

  Vec lam(m, 1.0);
  auto objective = [&](const Vec& l) {
    double g = detail::log_det_weighted(w, l);
    for (int j = 0; j < m; ++j) g -= w.kappa[j] * std::log(l[j]);
    return g;
  };

  double g_cur = objective(lam);
  double g_best = g_cur;
  Vec lam_best = lam;
  bool converged = false;
  for (int sweep = 0; sweep < iterations && !converged; ++sweep) {
    converged = true;
    for (int j = 0; j < m; ++j) {
      SymMatrix mm(n);
      for (int k = 0; k < m; ++k) mm.add_outer(w.u[k], w.kappa[k] * lam[k]);
      Lu mf(mm.full());
      if (mf.singular) continue;
      const double q = w.kappa[j] * lam[j] * dot(mf.solve(w.u[j]), w.u[j]);
      const double kap = w.kappa[j];
      if (q <= 1e-12 || q >= 1.0 - 1e-12 || std::fabs(1.0 - kap) <= 1e-12) continue;
      double tau = kap * (1.0 - q) / (q * (1.0 - kap));
      if (!(tau > 0.0)) continue;
      const double log_new = std::clamp(std::log(lam[j]) + std::log(tau), -3.0, 3.0);
      Vec trial = lam;
      trial[j] = std::exp(log_new);
      if (trial[j] == lam[j]) continue;
      const double g_trial = objective(trial);
      if (g_trial < g_cur - 1e-14 * std::max(1.0, std::fabs(g_cur))) {
        lam = std::move(trial);
        g_cur = g_trial;
        converged = false;
        if (g_cur < g_best) {
          g_best = g_cur;
          lam_best = lam;
        }
      }
    }
  }

  BLSearchResult out;
  out.f_estimate = std::exp(g_best);
  out.d_estimate = std::exp(-0.5 * g_best);
  out.lambdas = std::move(lam_best);
  out.converged = converged;
  if (!converged)
    logf(LogLevel::info, "bl_gaussian_search: sweep budget exhausted at G=%.6e", g_best);

  const double floor = std::pow(w.gamma, -n) - 1e-9;
  check(out.f_estimate >= floor, Errc::internal_check_failed,
        "bl_gaussian_search: estimate below the certified floor");
  check(out.d_estimate <= std::pow(w.gamma, 0.5 * n) * (1.0 + 1e-7), Errc::internal_check_failed,
        "bl_gaussian_search: implied constant above gamma^(n/2)");
  return out;
}

}  // namespace helly
