#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "helly/errors.hpp"
#include "helly/linalg.hpp"
#include "helly/log.hpp"
#include "helly/model.hpp"

namespace helly {

// {shape y + center : |y| <= 1} with shape symmetric positive definite.
struct Ellipsoid {
  Vec center;
  SymMatrix shape;
};

struct MveeDiagnostics {
  double kkt_residual = 0.0;
  double min_slack = 0.0;
  double barrier_t = 0.0;
  int newton_steps = 0;
};

namespace detail {

// Symmetric parameter basis: pairs (k, l) with k <= l; off-diagonal entries
// move both mirrored slots.
struct SymBasis {
  std::vector<std::pair<int, int>> pairs;
  explicit SymBasis(int n) {
    for (int k = 0; k < n; ++k)
      for (int l = k; l < n; ++l) pairs.emplace_back(k, l);
  }
  int size() const { return static_cast<int>(pairs.size()); }
};

inline bool cholesky_pd(const SymMatrix& a) {
  const int n = a.order();
  Matrix l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) return false;
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return true;
}

// (S_kl a): the action of a basis matrix on a vector.
inline Vec basis_apply(int n, int k, int l, const Vec& a) {
  Vec v(n, 0.0);
  v[k] += a[l];
  if (k != l) v[l] += a[k];
  return v;
}

// Error-free transforms. Constraint slacks 1 - <a,c> - |Ba| shrink to ~1/t
// at the end of the barrier path while the operands stay O(1), so plain
// double evaluation leaves only ~eps/s relative accuracy; carrying the
// cancellation in doubled precision keeps the slacks (and hence the duals
// 1/(t s)) accurate to full relative precision.
struct TwoFold {
  double hi = 0.0, lo = 0.0;
};

inline TwoFold two_sum(double a, double b) {
  const double s = a + b;
  const double bv = s - a;
  return {s, (a - (s - bv)) + (b - bv)};
}

inline TwoFold two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

inline TwoFold tf_add(const TwoFold& a, const TwoFold& b) {
  TwoFold s = two_sum(a.hi, b.hi);
  s.lo += a.lo + b.lo;
  return two_sum(s.hi, s.lo);
}

inline TwoFold tf_neg(const TwoFold& a) { return {-a.hi, -a.lo}; }

// 1 - <a,c> - |Ba| in doubled precision; also exports Ba and |Ba| rounded to
// working precision for the direction vectors, which need no compensation.
inline double compensated_slack(const SymMatrix& b, const Vec& c, const Vec& a, Vec* ba,
                                double* ba_norm) {
  const int n = b.order();
  TwoFold q;  // |Ba|^2
  std::vector<TwoFold> y(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    TwoFold acc;
    for (int j = 0; j < n; ++j) acc = tf_add(acc, two_prod(b(k, j), a[j]));
    y[k] = acc;
    q = tf_add(q, two_prod(acc.hi, acc.hi));
    q = tf_add(q, {2.0 * acc.hi * acc.lo, 0.0});
  }
  for (int k = 0; k < n; ++k) (*ba)[k] = y[k].hi + y[k].lo;
  const double r0 = std::sqrt(q.hi);
  if (!(r0 > 0.0)) {
    *ba_norm = 0.0;
    return -1.0;
  }
  // One refinement step gives |Ba| = r0 + (q - r0^2) / (2 r0) to doubled
  // precision.
  const TwoFold resid = tf_add(q, tf_neg(two_prod(r0, r0)));
  const double corr = (resid.hi + resid.lo) / (2.0 * r0);
  *ba_norm = r0 + corr;
  TwoFold dotac;
  for (int j = 0; j < n; ++j) dotac = tf_add(dotac, two_prod(a[j], c[j]));
  TwoFold s = tf_add({1.0, 0.0}, tf_neg(dotac));
  s = tf_add(s, tf_neg(two_sum(r0, corr)));
  return s.hi + s.lo;
}

// Exact-KKT refinement of a barrier iterate on its near-active rows. The
// central path at finite t carries a phantom dual 1/(t s_i) on every row, so
// rows passing close to the ball (slack ~1e-3) bias the stationarity
// identity by ~1e-5, enough to push genuinely light contacts past the
// tangency detection threshold downstream. Newton on the square equality
// system over the candidate set A = {j : slack_j <= 1e-2},
//   sum_j lambda_j sym(theta_j a_j^T) = B^{-1}      (stationarity)
//   sum_j lambda_j a_j = 0                          (free-center case only)
//   1 - <a_j, c> - |B a_j| = 0,  j in A             (tangency)
// converges quadratically from the warm start and is free of the
// parameter-grid floor that limits the t-scaled certificate. Rows whose
// multipliers converge negative are dropped and the solve repeated. If the
// refined point keeps every dropped row strictly feasible it is a true
// stationary point of the full problem, because it solves the relaxation
// exactly. Returns the certified KKT residual and commits (b_io, c_io) on
// success; returns +infinity and leaves them untouched on failure, in which
// case the caller keeps the barrier certificate.
inline double polish_kkt(const HalfspaceFamily::Expanded& exp, bool fixed_center,
                         const SymBasis& basis, SymMatrix& b_io, Vec& c_io) {
  constexpr double kFail = std::numeric_limits<double>::infinity();
  const int n = b_io.order();
  const int m = static_cast<int>(exp.rows.size());
  const int nb = basis.size();
  const int nc = fixed_center ? 0 : n;

  SymMatrix b = b_io;
  Vec c = c_io;
  std::vector<int> active;
  {
    Vec ba(n, 0.0);
    double nu = 0.0;
    for (int i = 0; i < m; ++i)
      if (compensated_slack(b, c, exp.rows[i], &ba, &nu) <= 1e-2) active.push_back(i);
  }
  if (static_cast<int>(active.size()) < n) return kFail;
  const double base_logdet = Lu(b.full()).log_abs_det();

  // Geometry caches shared by the residual and Jacobian builders; they always
  // describe the point of the most recent residual() call.
  std::vector<Vec> r, th;
  Vec nu, tang;
  Matrix w(n, n);
  auto residual = [&](const SymMatrix& bb, const Vec& cc, const Vec& ll, Vec* out) -> bool {
    const int q = static_cast<int>(active.size());
    r.assign(static_cast<std::size_t>(q), Vec(static_cast<std::size_t>(n), 0.0));
    th.assign(static_cast<std::size_t>(q), Vec());
    nu.assign(static_cast<std::size_t>(q), 0.0);
    tang.assign(static_cast<std::size_t>(q), 0.0);
    for (int j = 0; j < q; ++j) {
      tang[j] = compensated_slack(bb, cc, exp.rows[active[j]], &r[j], &nu[j]);
      if (!(nu[j] > 0.0)) return false;
      th[j] = scaled(r[j], 1.0 / nu[j]);
    }
    Lu bf(bb.full());
    if (bf.singular) return false;
    w = bf.inverse();
    out->assign(static_cast<std::size_t>(nb + nc + q), 0.0);
    for (int al = 0; al < nb; ++al) {
      auto [k, l] = basis.pairs[al];
      double st = -w(k, l);
      for (int j = 0; j < q; ++j) {
        const Vec& a = exp.rows[active[j]];
        st += ll[j] * 0.5 * (th[j][k] * a[l] + a[k] * th[j][l]);
      }
      (*out)[al] = st;
    }
    if (!fixed_center)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int j = 0; j < q; ++j) s += ll[j] * exp.rows[active[j]][k];
        (*out)[nb + k] = s;
      }
    for (int j = 0; j < q; ++j) (*out)[nb + nc + j] = tang[j];
    return true;
  };
  Vec lam, f;
  int budget = 240;  // total Newton iterations across drop passes
  for (int pass = 0; pass <= m; ++pass) {
    const int q = static_cast<int>(active.size());
    const int nn = nb + nc + q;

    // (Re)fit multipliers for the current active set by linear least squares
    // on the stationarity/barycenter block; Newton then polishes jointly.
    {
      if (!residual(b, c, Vec(static_cast<std::size_t>(q), 0.0), &f)) return kFail;
      Matrix mt(q, q);
      Vec rhs(static_cast<std::size_t>(q), 0.0);
      std::vector<Vec> cols(static_cast<std::size_t>(q), Vec(static_cast<std::size_t>(nb + nc), 0.0));
      for (int j = 0; j < q; ++j) {
        const Vec& a = exp.rows[active[j]];
        for (int al = 0; al < nb; ++al) {
          auto [k, l] = basis.pairs[al];
          const double ww = k == l ? 1.0 : 2.0;  // Frobenius weight on mirrored entries
          cols[j][al] = ww * 0.5 * (th[j][k] * a[l] + a[k] * th[j][l]);
        }
        if (!fixed_center)
          for (int k = 0; k < n; ++k) cols[j][nb + k] = a[k];
      }
      for (int i = 0; i < q; ++i)
        for (int j = i; j < q; ++j) {
          double s = 0.0;
          for (int al = 0; al < nb + nc; ++al) s += cols[i][al] * cols[j][al];
          mt(i, j) = s;
          mt(j, i) = s;
        }
      for (int j = 0; j < q; ++j) {
        double s = 0.0;
        for (int al = 0; al < nb; ++al) {
          auto [k, l] = basis.pairs[al];
          s += cols[j][al] * w(k, l);
        }
        rhs[j] = s;
      }
      lam.assign(static_cast<std::size_t>(q), 0.0);
      for (double ridge = 1e-12;; ridge *= 100.0) {
        Matrix mr = mt;
        for (int i = 0; i < q; ++i) mr(i, i) += ridge * std::max(1.0, mt(i, i));
        Lu mf(mr);
        if (!mf.singular) {
          lam = mf.solve(rhs);
          break;
        }
        if (ridge > 1.0) return kFail;
      }
    }

    if (!residual(b, c, lam, &f)) return kFail;
    double fn = norm_inf(f);
    double wfro = 0.0;
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) wfro += w(k, l) * w(k, l);
    const double tol = 1e-12 * std::max(1.0, std::sqrt(wfro));
    while (budget > 0 && fn > tol) {
      --budget;
      // Analytic Jacobian at the point of the last residual() call.
      Matrix jac(nn, nn);
      for (int be = 0; be < nb; ++be) {
        auto [p, pq] = basis.pairs[be];
        Matrix ew(n, n);  // S_pq W
        for (int col = 0; col < n; ++col) {
          ew(p, col) += w(pq, col);
          if (p != pq) ew(pq, col) += w(p, col);
        }
        Matrix wew(n, n);  // W S_pq W = -d(B^{-1}) along S_pq
        for (int k = 0; k < n; ++k)
          for (int col = 0; col < n; ++col) {
            double s = 0.0;
            for (int t2 = 0; t2 < n; ++t2) s += w(k, t2) * ew(t2, col);
            wew(k, col) = s;
          }
        for (int al = 0; al < nb; ++al) {
          auto [k, l] = basis.pairs[al];
          jac(al, be) += wew(k, l);
        }
        for (int j = 0; j < static_cast<int>(active.size()); ++j) {
          const Vec& a = exp.rows[active[j]];
          const Vec ea = basis_apply(n, p, pq, a);
          const double te = dot(th[j], ea);
          for (int al = 0; al < nb; ++al) {
            auto [k, l] = basis.pairs[al];
            const double dthk = (ea[k] - th[j][k] * te) / nu[j];
            const double dthl = (ea[l] - th[j][l] * te) / nu[j];
            jac(al, be) += lam[j] * 0.5 * (dthk * a[l] + a[k] * dthl);
          }
          jac(nb + nc + j, be) = -te;
        }
      }
      for (int j = 0; j < static_cast<int>(active.size()); ++j) {
        const Vec& a = exp.rows[active[j]];
        if (!fixed_center)
          for (int k = 0; k < n; ++k) {
            jac(nb + nc + j, nb + k) = -a[k];
            jac(nb + k, nb + nc + j) = a[k];
          }
        for (int al = 0; al < nb; ++al) {
          auto [k, l] = basis.pairs[al];
          jac(al, nb + nc + j) = 0.5 * (th[j][k] * a[l] + a[k] * th[j][l]);
        }
      }

      // Newton direction; on a singular Jacobian (redundant tangencies leave
      // the multipliers underdetermined) fall back to ridged normal equations,
      // which picks the least-norm correction on the solution manifold.
      Vec step;
      Vec rhs_neg(static_cast<std::size_t>(nn));
      for (int i = 0; i < nn; ++i) rhs_neg[i] = -f[i];
      {
        Lu jf(jac);
        if (!jf.singular) {
          step = jf.solve(rhs_neg);
        } else {
          Matrix jtj(nn, nn);
          Vec jtf(static_cast<std::size_t>(nn), 0.0);
          for (int i = 0; i < nn; ++i)
            for (int j = i; j < nn; ++j) {
              double s = 0.0;
              for (int k = 0; k < nn; ++k) s += jac(k, i) * jac(k, j);
              jtj(i, j) = s;
              jtj(j, i) = s;
            }
          for (int i = 0; i < nn; ++i) {
            double s = 0.0;
            for (int k = 0; k < nn; ++k) s += jac(k, i) * rhs_neg[k];
            jtf[i] = s;
          }
          bool solved = false;
          for (double ridge = 1e-12; ridge <= 1.0; ridge *= 100.0) {
            Matrix jr = jtj;
            for (int i = 0; i < nn; ++i) jr(i, i) += ridge * std::max(1.0, jtj(i, i));
            Lu jrf(jr);
            if (!jrf.singular) {
              step = jrf.solve(jtf);
              solved = true;
              break;
            }
          }
          if (!solved) return kFail;
        }
      }

      double alpha = 1.0;
      bool moved = false;
      for (; alpha > 1e-10; alpha *= 0.5) {
        SymMatrix bt = b;
        Vec ct = c;
        Vec lt = lam;
        for (int al = 0; al < nb; ++al) {
          auto [k, l] = basis.pairs[al];
          bt.add(k, l, alpha * step[al]);
        }
        if (!fixed_center)
          for (int k = 0; k < n; ++k) ct[k] += alpha * step[nb + k];
        for (int j = 0; j < static_cast<int>(active.size()); ++j)
          lt[j] += alpha * step[nb + nc + j];
        if (!cholesky_pd(bt)) continue;
        Vec ft;
        if (!residual(bt, ct, lt, &ft)) continue;
        const double fnt = norm_inf(ft);
        if (fnt >= fn * (1.0 - 0.25 * alpha)) continue;
        b = bt;
        c = ct;
        lam = lt;
        f = ft;
        fn = fnt;
        moved = true;
        break;
      }
      if (!moved) break;
    }
    if (fn > tol) return kFail;

    // Multipliers must end non-negative; a converged negative one identifies
    // a row that is not active at the optimum.
    int worst = -1;
    double worst_val = -1e-9;
    for (int j = 0; j < static_cast<int>(active.size()); ++j)
      if (lam[j] < worst_val) {
        worst_val = lam[j];
        worst = j;
      }
    if (worst < 0) break;
    active.erase(active.begin() + worst);
    if (static_cast<int>(active.size()) < n) return kFail;
    if (pass == m) return kFail;
  }

  // Certify against the full row set with the cleaned multipliers.
  for (double& l : lam) l = std::max(l, 0.0);
  if (!residual(b, c, lam, &f)) return kFail;
  double r1 = 0.0, wf = 0.0, comp = 0.0;
  for (int al = 0; al < nb; ++al) {
    auto [k, l] = basis.pairs[al];
    const double dup = k == l ? 1.0 : 2.0;
    r1 += dup * f[al] * f[al];
    wf += dup * w(k, l) * w(k, l);
  }
  r1 = std::sqrt(r1) / std::max(1.0, std::sqrt(wf));
  double r2 = 0.0;
  if (!fixed_center) {
    double bn = 0.0, dual_sum = 0.0;
    for (int k = 0; k < n; ++k) bn += f[nb + k] * f[nb + k];
    for (double l : lam) dual_sum += l;
    r2 = std::sqrt(bn) / std::max(1.0, dual_sum);
  }
  for (int j = 0; j < static_cast<int>(active.size()); ++j)
    comp = std::max(comp, std::fabs(lam[j] * tang[j]));
  double min_slack = std::numeric_limits<double>::infinity();
  {
    Vec ba(static_cast<std::size_t>(n), 0.0);
    double nrm = 0.0;
    for (int i = 0; i < m; ++i)
      min_slack = std::min(min_slack, compensated_slack(b, c, exp.rows[i], &ba, &nrm));
  }
  if (min_slack < -1e-9) return kFail;
  if (Lu(b.full()).log_abs_det() < base_logdet - 1e-7) return kFail;
  const double cert = std::max(std::max(r1, r2), std::max(comp, std::max(0.0, -min_slack)));
  b_io = b;
  c_io = c;
  logf(LogLevel::debug, "mvee: polish active=%d cert=%.3e min_slack=%.3e",
       static_cast<int>(active.size()), cert, min_slack);
  return cert;
}

}  // namespace detail

// Maximum-volume inscribed ellipsoid of a polytope whose constraints are
// normalized to <a_i, x> <= 1, by damped Newton steps on the log-barrier
//   F_t = -t log det B - sum_i log(1 - <a_i, c> - |B a_i|),
// with the center pinned at the origin for symmetric families, followed by an
// exact-KKT polish on the rows left nearly tangent by the barrier phase.
inline Ellipsoid compute_mvee(const Polytope& p, MveeDiagnostics* diag_out = nullptr) {
  const HalfspaceFamily::Expanded& exp = p.expanded();
  const int n = p.dim();
  const int m = static_cast<int>(exp.rows.size());
  for (double b : exp.rhs)
    check(std::fabs(b - 1.0) <= 1e-9, Errc::value_error,
          "compute_mvee: offsets must be normalized to 1");
  const bool fixed_center = p.family().symmetric;
  const detail::SymBasis basis(n);
  const int nb = basis.size();
  const int dim = nb + (fixed_center ? 0 : n);

  SymMatrix b = SymMatrix::identity(n);
  Vec c(n, 0.0);
  {
    const double rho = 0.95 * p.inradius();
    for (int i = 0; i < n; ++i) b.set(i, i, rho);
    if (!fixed_center) c = p.interior_point();
  }

  Vec slack(m), nrm(m);
  std::vector<Vec> r(m), theta(m);
  auto refresh = [&](const SymMatrix& bb, const Vec& cc) -> bool {
    for (int i = 0; i < m; ++i) {
      r[i].assign(n, 0.0);
      slack[i] = detail::compensated_slack(bb, cc, exp.rows[i], &r[i], &nrm[i]);
      if (nrm[i] <= 0.0 || slack[i] <= 0.0) return false;
      theta[i] = scaled(r[i], 1.0 / nrm[i]);
    }
    return true;
  };
  check(refresh(b, c), Errc::internal_check_failed, "mvee: infeasible start");

  auto objective = [&](const SymMatrix& bb, double t) {
    double f = -t * Lu(bb.full()).log_abs_det();
    for (int i = 0; i < m; ++i) f -= std::log(slack[i]);
    return f;
  };

  // Stationarity residual of F_t scaled by 1/t; this is exactly the final
  // KKT metric, so the Newton loop can stop against the real target.
  auto kkt_now = [&](const Matrix& w, double t) {
    Matrix station(n, n);
    Vec bary(n, 0.0);
    double dual_sum = 0.0;
    for (int i = 0; i < m; ++i) {
      const double lam = 1.0 / (t * slack[i]);
      dual_sum += lam;
      for (int k = 0; k < n; ++k) {
        bary[k] += lam * exp.rows[i][k];
        for (int l = 0; l < n; ++l)
          station(k, l) +=
              lam * 0.5 * (theta[i][k] * exp.rows[i][l] + exp.rows[i][k] * theta[i][l]);
      }
    }
    double r1 = 0.0, wnorm = 0.0;
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        const double d = station(k, l) - w(k, l);
        r1 += d * d;
        wnorm += w(k, l) * w(k, l);
      }
    r1 = std::sqrt(r1) / std::max(1.0, std::sqrt(wnorm));
    const double r2 = fixed_center ? 0.0 : norm2(bary) / std::max(1.0, dual_sum);
    return std::max(r1, r2);
  };

  // The final barrier value trades off two hard limits. Contacts should end
  // with slack ~1/(t c_j) small enough that the polish phase picks them up as
  // active candidates; but entries of B near 1 move on a grid of spacing
  // ~2e-16, and one grid step perturbs the t-scaled stationarity residual by
  // ~t*eps/4, which caps how small the barrier certificate can get. t = 1e8
  // pulls every contact of weight >= 1e-6 inside the polish window while
  // keeping the grid floor near 3e-9, so the barrier result alone still
  // certifies when the polish declines.
  int total_steps = 0;
  double t = 1.0;
  const double t_final = 1e8;
  SymMatrix best_b = b;
  Vec best_c = c;
  double best_final_kkt = std::numeric_limits<double>::infinity();
  for (;;) {
    double best_kkt = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 80; ++iter) {
      ++total_steps;
      Lu bf(b.full());
      check(!bf.singular, Errc::internal_check_failed, "mvee: shape matrix singular");
      Matrix w = bf.inverse();  // B^{-1}, symmetric up to roundoff
      const double know = kkt_now(w, t);
      if (t == t_final && know < best_final_kkt) {
        best_final_kkt = know;
        best_b = b;
        best_c = c;
      }
      if (know <= 2e-9) break;
      if (know < 1e-6 && know > 0.9 * best_kkt) break;  // rounding floor reached
      best_kkt = std::min(best_kkt, know);

      // Gradient.
      Vec g(dim, 0.0);
      for (int al = 0; al < nb; ++al) {
        auto [k, l] = basis.pairs[al];
        g[al] = -t * (k == l ? w(k, k) : 2.0 * w(k, l));
      }
      for (int i = 0; i < m; ++i) {
        const double inv_s = 1.0 / slack[i];
        for (int al = 0; al < nb; ++al) {
          auto [k, l] = basis.pairs[al];
          double dn = theta[i][k] * exp.rows[i][l];
          if (k != l) dn += theta[i][l] * exp.rows[i][k];
          g[al] += inv_s * dn;
        }
        if (!fixed_center)
          for (int k = 0; k < n; ++k) g[nb + k] += inv_s * exp.rows[i][k];
      }

      // Hessian: log-det block plus per-constraint barrier blocks.
      Matrix h(dim, dim);
      {
        std::vector<Matrix> pw(nb);
        for (int al = 0; al < nb; ++al) {
          auto [k, l] = basis.pairs[al];
          Matrix pa(n, n);  // W S_kl
          for (int i = 0; i < n; ++i) {
            pa(i, l) += w(i, k);
            if (k != l) pa(i, k) += w(i, l);
          }
          pw[al] = std::move(pa);
        }
        for (int al = 0; al < nb; ++al)
          for (int be = al; be < nb; ++be) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
              for (int j = 0; j < n; ++j) s += pw[al](i, j) * pw[be](j, i);
            h(al, be) += t * s;
            if (be != al) h(be, al) += t * s;
          }
      }
      for (int i = 0; i < m; ++i) {
        const double inv_s = 1.0 / slack[i];
        Vec ds(dim, 0.0);  // derivative of -s_i
        Matrix d(n, nb);   // columns S_kl a_i
        for (int al = 0; al < nb; ++al) {
          auto [k, l] = basis.pairs[al];
          Vec col = detail::basis_apply(n, k, l, exp.rows[i]);
          for (int j = 0; j < n; ++j) d(j, al) = col[j];
          ds[al] = dot(theta[i], col);
        }
        if (!fixed_center)
          for (int k = 0; k < n; ++k) ds[nb + k] = exp.rows[i][k];
        // (1/s^2) ds ds^T
        for (int al = 0; al < dim; ++al) {
          if (ds[al] == 0.0) continue;
          const double f = inv_s * inv_s * ds[al];
          for (int be = al; be < dim; ++be) {
            h(al, be) += f * ds[be];
            if (be != al) h(be, al) += f * ds[be];
          }
        }
        // (1/(s n)) D^T (I - theta theta^T) D on the B-block
        Matrix proj_d(n, nb);
        for (int al = 0; al < nb; ++al) {
          double td = 0.0;
          for (int j = 0; j < n; ++j) td += theta[i][j] * d(j, al);
          for (int j = 0; j < n; ++j) proj_d(j, al) = d(j, al) - theta[i][j] * td;
        }
        const double f = inv_s / nrm[i];
        for (int al = 0; al < nb; ++al)
          for (int be = al; be < nb; ++be) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += d(j, al) * proj_d(j, be);
            h(al, be) += f * s;
            if (be != al) h(be, al) += f * s;
          }
      }

      // Jacobi-equilibrated solve of H delta = -g with escalating ridge.
      Vec scale(dim);
      for (int i = 0; i < dim; ++i) scale[i] = 1.0 / std::sqrt(std::max(h(i, i), 1e-300));
      Matrix hs(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) hs(i, j) = h(i, j) * scale[i] * scale[j];
      Vec gs(dim);
      for (int i = 0; i < dim; ++i) gs[i] = -g[i] * scale[i];
      Vec delta;
      for (double ridge = 0.0;; ridge = ridge == 0.0 ? 1e-12 : ridge * 100.0) {
        Matrix hr = hs;
        for (int i = 0; i < dim; ++i) hr(i, i) += ridge;
        Lu hf(hr);
        if (!hf.singular) {
          delta = hf.solve(gs);
          break;
        }
        check(ridge < 1.0, Errc::no_convergence, "mvee: Hessian solve failed");
      }
      for (int i = 0; i < dim; ++i) delta[i] *= scale[i];

      double decrement = 0.0;
      for (int i = 0; i < dim; ++i) decrement -= g[i] * delta[i];
      if (decrement <= 0.0) break;
      // In the damped phase (large decrement) demand objective decrease; in
      // the quadratic phase take any feasible step, because at large t the
      // objective is too large for its ulp to resolve the remaining descent.
      const bool quadratic_phase = decrement <= 0.1;
      const double f0 = quadratic_phase ? 0.0 : objective(b, t);

      double alpha = 1.0;
      bool moved = false;
      for (; alpha > 1e-13; alpha *= 0.5) {
        SymMatrix bt = b;
        Vec ct = c;
        for (int al = 0; al < nb; ++al) {
          auto [k, l] = basis.pairs[al];
          bt.add(k, l, alpha * delta[al]);
        }
        if (!fixed_center)
          for (int k = 0; k < n; ++k) ct[k] += alpha * delta[nb + k];
        if (!detail::cholesky_pd(bt)) continue;
        if (!refresh(bt, ct)) continue;
        if (!quadratic_phase && objective(bt, t) > f0 - 0.25 * alpha * decrement) continue;
        b = bt;
        c = ct;
        moved = true;
        break;
      }
      logf(LogLevel::debug, "mvee: t=%.1e iter=%d kkt=%.3e dec=%.3e alpha=%.1e", t, iter, know,
           decrement, moved ? alpha : 0.0);
      if (!moved) {
        check(refresh(b, c), Errc::internal_check_failed, "mvee: state corrupted");
        break;
      }
    }
    if (t >= t_final) break;
    t = std::min(t * 16.0, t_final);
  }

  // The last accepted step may land on a slightly worse grid point than one
  // visited earlier in the final stage; keep whichever certifies best.
  {
    Lu bf(b.full());
    if (bf.singular || kkt_now(bf.inverse(), t) > best_final_kkt) {
      b = best_b;
      c = best_c;
      check(refresh(b, c), Errc::internal_check_failed, "mvee: state corrupted");
    }
  }

  // The barrier certificate is the stationarity residual with path duals
  // 1 / (t s_i); the polished certificate uses the cleaned active-set
  // multipliers instead and is free of the phantom duals on inactive rows.
  double kkt = kkt_now(Lu(b.full()).inverse(), t);
  {
    SymMatrix bp = b;
    Vec cp = c;
    const double polished = detail::polish_kkt(exp, fixed_center, basis, bp, cp);
    if (polished < kkt) {
      b = bp;
      c = cp;
      kkt = polished;
    }
  }

  MveeDiagnostics diag;
  diag.barrier_t = t;
  diag.newton_steps = total_steps;
  diag.kkt_residual = kkt;
  diag.min_slack = std::numeric_limits<double>::infinity();
  {
    Vec ba(n, 0.0);
    double nrm = 0.0;
    for (int i = 0; i < m; ++i)
      diag.min_slack =
          std::min(diag.min_slack, detail::compensated_slack(b, c, exp.rows[i], &ba, &nrm));
  }
  logf(LogLevel::info, "mvee: n=%d m=%d steps=%d kkt=%.3e min_slack=%.3e", n, m,
       diag.newton_steps, diag.kkt_residual, diag.min_slack);
  if (diag_out != nullptr) *diag_out = diag;
  check(diag.kkt_residual <= 1e-8, Errc::no_convergence,
        "mvee: KKT residual " + fmt_sci(diag.kkt_residual));

  Ellipsoid e;
  e.center = c;
  e.shape = b;
  return e;
}

struct JohnPosition {
  Polytope polytope;  // image of the input under `map`
  AffineMap map;      // x -> B^{-1}(x - center)
  Ellipsoid mvee;
  MveeDiagnostics diag;
};

// Apply the affine map sending the maximum-volume inscribed ellipsoid to the
// unit ball; the image polytope keeps offsets 1 and member order.
inline JohnPosition to_john_position(const Polytope& p) {
  MveeDiagnostics diag;
  Ellipsoid e = compute_mvee(p, &diag);
  const int n = p.dim();
  Matrix w = Lu(e.shape.full()).inverse();
  HalfspaceFamily f;
  f.dim = n;
  f.symmetric = p.family().symmetric;
  for (const Halfspace& h : p.family().members) {
    const double denom = 1.0 - dot(h.a, e.center);
    check(denom > 0.0, Errc::internal_check_failed, "john position: center not interior");
    f.members.push_back({scaled(e.shape.mul(h.a), 1.0 / denom), 1.0});
  }
  AffineMap map;
  map.linear = w;
  map.shift = scaled(w.mul(e.center), -1.0);
  JohnPosition jp{Polytope(std::move(f)), std::move(map), std::move(e), diag};
  // The unit ball is inscribed by construction; certify it.
  for (const auto& h : jp.polytope.family().members)
    check(norm2(h.a) <= 1.0 + 1e-9, Errc::internal_check_failed,
          "john position: unit ball not inscribed");
  return jp;
}

struct Decomposition {
  std::vector<int> members;   // member index per kept contact
  std::vector<Vec> contacts;  // unit contact directions
  Vec weights;
  double residual_identity = 0.0;
  double residual_barycenter = 0.0;
};

// Contact points and John weights of a polytope already in John position.
// In symmetric mode one direction per touching strip is used and only the
// identity equations are solved; otherwise expanded one-sided contacts enter
// and the barycenter equations are appended. Weights come from
// non-negative least squares; near-zero ones are dropped.
inline Decomposition john_decomposition(const Polytope& p, bool symmetric,
                                        double tau_contact = 1e-6) {
  const int n = p.dim();
  if (symmetric)
    check(p.family().symmetric, Errc::value_error,
          "john_decomposition: symmetric mode needs a symmetric family");

  std::vector<Vec> u;
  std::vector<int> member;
  auto consider = [&](const Vec& a, int idx) {
    const double nrm = norm2(a);
    if (1.0 - nrm > tau_contact) return;
    Vec dir = scaled(a, 1.0 / nrm);
    for (std::size_t j = 0; j < u.size(); ++j) {
      if (norm2(sub(u[j], dir)) <= 1e-8) return;                // duplicate
      if (symmetric && norm2(add(u[j], dir)) <= 1e-8) return;   // same strip line
    }
    u.push_back(std::move(dir));
    member.push_back(idx);
  };
  if (symmetric) {
    for (int i = 0; i < p.family().size(); ++i) consider(p.family().members[i].a, i);
  } else {
    const auto& exp = p.expanded();
    for (std::size_t i = 0; i < exp.rows.size(); ++i) consider(exp.rows[i], exp.member[i]);
  }
  const int k = static_cast<int>(u.size());
  const int needed = symmetric ? n : n + 1;
  check(k >= needed, Errc::contact_deficit,
        "found " + std::to_string(k) + " contacts, need at least " + std::to_string(needed));

  // Least-squares system: vec(sum c uu^T) = vec(I) with off-diagonal rows
  // weighted sqrt(2) so the objective is the Frobenius norm, plus the
  // barycenter rows in the non-symmetric case. Rows are equilibrated to unit
  // norm for the solve; residuals are reported in the original metric.
  const int id_rows = n * (n + 1) / 2;
  const int rows = id_rows + (symmetric ? 0 : n);
  Matrix a(rows, k);
  Vec b(rows, 0.0);
  {
    int row = 0;
    const double sq2 = std::sqrt(2.0);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j, ++row) {
        const double wgt = i == j ? 1.0 : sq2;
        for (int c = 0; c < k; ++c) a(row, c) = wgt * u[c][i] * u[c][j];
        b[row] = i == j ? 1.0 : 0.0;
      }
    if (!symmetric)
      for (int i = 0; i < n; ++i, ++row)
        for (int c = 0; c < k; ++c) a(row, c) = u[c][i];
  }
  Matrix as = a;
  Vec bs = b;
  for (int rix = 0; rix < rows; ++rix) {
    double s = 0.0;
    for (int c = 0; c < k; ++c) s += a(rix, c) * a(rix, c);
    s = std::sqrt(s);
    if (s < 1e-14) continue;
    for (int c = 0; c < k; ++c) as(rix, c) /= s;
    bs[rix] /= s;
  }
  NnlsResult sol = nnls(as, bs);

  Decomposition dec;
  SymMatrix sum(n);
  Vec bary(n, 0.0);
  for (int c = 0; c < k; ++c) {
    if (sol.x[c] < 1e-10) continue;
    dec.members.push_back(member[c]);
    dec.contacts.push_back(u[c]);
    dec.weights.push_back(sol.x[c]);
    sum.add_outer(u[c], sol.x[c]);
    axpy(sol.x[c], u[c], bary);
  }
  dec.residual_identity = sum.identity_residual();
  dec.residual_barycenter = symmetric ? 0.0 : norm2(bary);
  logf(LogLevel::info, "john_decomposition: %zu contacts kept, residuals %.3e / %.3e",
       dec.contacts.size(), dec.residual_identity, dec.residual_barycenter);
  check(dec.residual_identity <= 1e-5, Errc::residual_too_large,
        "identity residual " + fmt_sci(dec.residual_identity));
  check(dec.residual_barycenter <= 1e-5, Errc::residual_too_large,
        "barycenter residual " + fmt_sci(dec.residual_barycenter));
  return dec;
}

struct JohnForm {
  AffineMap map;
  Decomposition decomposition;
  MveeDiagnostics mvee;
};

struct JohnPipeline {
  Polytope positioned;
  JohnForm form;
};

inline JohnPipeline john_pipeline(const Polytope& p, bool symmetric) {
  JohnPosition jp = to_john_position(p);
  Decomposition dec = john_decomposition(jp.polytope, symmetric);
  return JohnPipeline{std::move(jp.polytope),
                      JohnForm{std::move(jp.map), std::move(dec), jp.diag}};
}

}  // namespace helly
