#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "helly/errors.hpp"
#include "helly/linalg.hpp"
#include "helly/log.hpp"

namespace helly {

// Spectral ratio achievable by a d*n sized subset: ((sqrt(d)+1)/(sqrt(d)-1))^2.
inline double gamma_d(double d) {
  check(d > 1.0, Errc::value_error, "gamma_d: requires d > 1");
  const double r = std::sqrt(d);
  const double g = (r + 1.0) / (r - 1.0);
  return g * g;
}

// A reweighted subset sigma of an approximate decomposition of the identity
// whose rank-one sum A is sandwiched between I and gamma_d * I.
struct SparseDecomposition {
  std::vector<int> sigma;  // selected indices, ascending
  Vec weights;             // final weights on u_j, aligned with sigma
  SymMatrix a;             // sum of weights[j] u_j u_j^T after rescaling
  SandwichCertificate certificate;
  double d = 0.0;
};

// Deterministic barrier-potential selection: q = ceil(d n) greedy steps, each
// adding one input direction (repeats allowed, weights accumulate) while two
// shifting spectral barriers keep all eigenvalues inside (l, u). The final
// matrix divided by the lower barrier lands in [I, gamma_d I]; that sandwich
// certificate, checked a posteriori by an eigensolve, is the conformance
// surface of the routine.
inline SparseDecomposition bss_select(const std::vector<Vec>& u, const Vec& a, double d) {
  check(!u.empty(), Errc::value_error, "bss_select: empty input");
  const int n = static_cast<int>(u[0].size());
  const int m = static_cast<int>(u.size());
  check(static_cast<int>(a.size()) == m, Errc::value_error, "bss_select: weight count mismatch");
  check(d > 1.0, Errc::value_error, "bss_select: d must exceed 1");
  for (int j = 0; j < m; ++j) {
    check(static_cast<int>(u[j].size()) == n, Errc::value_error, "bss_select: mixed dimensions");
    check(a[j] > 0.0, Errc::value_error, "bss_select: weights must be positive");
    check(std::fabs(norm2(u[j]) - 1.0) <= 1e-9, Errc::value_error,
          "bss_select: directions must be unit vectors");
  }
  {
    const double resid = SymMatrix::outer_sum(u, a).identity_residual();
    check(resid <= 1e-5, Errc::invalid_decomposition,
          "bss_select: input decomposition residual " + fmt_sci(resid));
  }

  const int q = static_cast<int>(std::ceil(d * n - 1e-12));
  check(q >= n, Errc::value_error, "bss_select: budget below dimension");
  const double rd = std::sqrt(d);
  const double delta_l = 1.0;
  const double delta_u = (rd + 1.0) / (rd - 1.0);
  double lb = -n * rd;
  double ub = n * (d + rd) / (rd - 1.0);

  std::vector<Vec> w(u.begin(), u.end());
  for (int j = 0; j < m; ++j) w[j] = scaled(u[j], std::sqrt(a[j]));

  SymMatrix acc(n);
  Vec total(m, 0.0);
  for (int step = 0; step < q; ++step) {
    const double lp = lb + delta_l, up = ub + delta_u;
    SymEigen eig(acc);
    check(eig.values.front() > lp && eig.values.back() < up, Errc::barrier_stall,
          "bss_select: spectrum escaped barriers at step " + std::to_string(step));
    double dphi_u = 0.0, dphi_l = 0.0;
    for (double ev : eig.values) {
      dphi_u += 1.0 / (ub - ev) - 1.0 / (up - ev);
      dphi_l += 1.0 / (ev - lp) - 1.0 / (ev - lb);
    }

    int pick = -1;
    double pick_gap = 0.0, pick_t = 0.0;
    for (int j = 0; j < m; ++j) {
      double pu1 = 0.0, pu2 = 0.0, pl1 = 0.0, pl2 = 0.0;
      for (int i = 0; i < n; ++i) {
        double wt = 0.0;
        for (int k = 0; k < n; ++k) wt += eig.vectors(k, i) * w[j][k];
        const double w2 = wt * wt;
        const double ru = up - eig.values[i], rl = eig.values[i] - lp;
        pu1 += w2 / ru;
        pu2 += w2 / (ru * ru);
        pl1 += w2 / rl;
        pl2 += w2 / (rl * rl);
      }
      const double upper = pu2 / dphi_u + pu1;
      const double lower = pl2 / dphi_l - pl1;
      const double gap = lower - upper;
      if (gap < -1e-12 * (std::fabs(lower) + std::fabs(upper))) continue;
      if (pick < 0 || gap < pick_gap) {
        pick = j;
        pick_gap = gap;
        pick_t = 2.0 / (upper + lower);
      }
    }
    check(pick >= 0, Errc::barrier_stall,
          "bss_select: no admissible vector at step " + std::to_string(step));
    acc.add_outer(u[pick], pick_t * a[pick]);
    total[pick] += pick_t * a[pick];
    lb = lp;
    ub = up;
  }

  SparseDecomposition out;
  out.d = d;
  out.a = SymMatrix(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) out.a.set(i, j, acc(i, j) / lb);
  for (int j = 0; j < m; ++j)
    if (total[j] > 0.0) {
      out.sigma.push_back(j);
      out.weights.push_back(total[j] / lb);
    }
  out.certificate = sandwich_gamma(out.a);
  logf(LogLevel::info, "bss_select: n=%d m=%d d=%.3g |sigma|=%zu lambda_min=%.9f gamma=%.6f", n,
       m, d, out.sigma.size(), out.certificate.lambda_min, out.certificate.gamma_achieved);
  check(static_cast<int>(out.sigma.size()) <= q, Errc::internal_check_failed,
        "bss_select: selected more than ceil(d n) directions");
  check(out.certificate.lambda_min >= 1.0 - 1e-7, Errc::internal_check_failed,
        "bss_select: rescaled matrix fails to dominate the identity");
  check(out.certificate.gamma_achieved <= gamma_d(d) * (1.0 + 1e-7), Errc::internal_check_failed,
        "bss_select: sandwich ratio exceeds gamma_d");
  return out;
}

// Lift of a centered decomposition in R^n to a symmetric-style one in
// R^{n+1}: v_j = sqrt(n/(n+1)) (-u_j, 1/sqrt(n)), b_j = (n+1)/n a_j. The
// barycenter identity of the input is exactly what makes the off-diagonal
// block of sum b_j v_j v_j^T vanish.
struct LiftedDecomposition {
  std::vector<Vec> v;
  Vec b;
};

inline LiftedDecomposition lift_decomposition(const std::vector<Vec>& u, const Vec& a) {
  check(!u.empty(), Errc::value_error, "lift_decomposition: empty input");
  const int n = static_cast<int>(u[0].size());
  const int m = static_cast<int>(u.size());
  check(static_cast<int>(a.size()) == m, Errc::value_error,
        "lift_decomposition: weight count mismatch");
  for (int j = 0; j < m; ++j)
    check(a[j] > 0.0, Errc::value_error, "lift_decomposition: weights must be positive");

  const double resid_id = SymMatrix::outer_sum(u, a).identity_residual();
  check(resid_id <= 1e-5, Errc::invalid_decomposition,
        "lift_decomposition: identity residual " + fmt_sci(resid_id));
  Vec bary(n, 0.0);
  for (int j = 0; j < m; ++j) axpy(a[j], u[j], bary);
  check(norm2(bary) <= 1e-5, Errc::invalid_decomposition,
        "lift_decomposition: barycenter residual " + fmt_sci(norm2(bary)));

  const double scale = std::sqrt(static_cast<double>(n) / (n + 1));
  LiftedDecomposition out;
  out.v.resize(m);
  out.b.resize(m);
  for (int j = 0; j < m; ++j) {
    Vec v(n + 1);
    for (int i = 0; i < n; ++i) v[i] = -scale * u[j][i];
    v[n] = scale / std::sqrt(static_cast<double>(n));
    out.v[j] = std::move(v);
    out.b[j] = a[j] * (n + 1.0) / n;
  }
  const double lifted_resid = SymMatrix::outer_sum(out.v, out.b).identity_residual();
  check(lifted_resid <= 1e-4, Errc::internal_check_failed,
        "lift_decomposition: lifted identity residual " + fmt_sci(lifted_resid));
  return out;
}

}  // namespace helly
