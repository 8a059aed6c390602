#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "helly/errors.hpp"
#include "helly/linalg.hpp"
#include "helly/log.hpp"
#include "helly/model.hpp"
#include "helly/rng.hpp"

namespace helly {

// log Gamma(half/2) by the exact recursion Gamma(x+1) = x Gamma(x) from
// Gamma(1/2) = sqrt(pi) and Gamma(1) = 1; "half" counts half-integers.
inline double log_gamma_half(int half) {
  check(half >= 1, Errc::value_error, "log_gamma_half: argument must be positive");
  double l = half % 2 == 0 ? 0.0 : 0.5 * std::log(std::numbers::pi);
  for (int k = half; k > 2; k -= 2) l += std::log((k - 2) / 2.0);
  return l;
}

inline double log_factorial(int n) {
  check(n >= 0, Errc::value_error, "log_factorial: negative argument");
  double l = 0.0;
  for (int k = 2; k <= n; ++k) l += std::log(static_cast<double>(k));
  return l;
}

// omega_n = pi^{n/2} / Gamma(n/2 + 1), the volume of the unit ball.
inline double log_unit_ball_volume(int n) {
  check(n >= 1, Errc::value_error, "log_unit_ball_volume: dimension must be positive");
  return 0.5 * n * std::log(std::numbers::pi) - log_gamma_half(n + 2);
}

inline double unit_ball_volume(int n) { return std::exp(log_unit_ball_volume(n)); }

struct VolumeEstimate {
  double value = 0.0;
  double ci99_low = 0.0;
  double ci99_high = 0.0;
  std::string method;  // "exact" or "mc"
  long long samples = 0;
};

namespace detail {

constexpr long long kVertexBudgetM = 48;
constexpr int kVertexBudgetN = 6;

}  // namespace detail

// All vertices of a bounded H-polytope by enumeration of n-subsets of the
// constraints: solve each nonsingular square system and keep feasible
// solutions; duplicates from degenerate vertices are merged.
inline std::vector<Vec> enumerate_vertices(const Polytope& p) {
  const HalfspaceFamily::Expanded& exp = p.expanded();
  const int n = p.dim();
  const int m = static_cast<int>(exp.rows.size());
  check(m <= detail::kVertexBudgetM && n <= detail::kVertexBudgetN, Errc::budget_exceeded,
        "enumerate_vertices: combinatorial budget is m <= 48, n <= 6");

  std::vector<double> row_norm(m);
  for (int i = 0; i < m; ++i) row_norm[i] = norm2(exp.rows[i]);

  std::vector<Vec> verts;
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (;;) {
    Matrix a(n, n);
    Vec b(n);
    for (int r = 0; r < n; ++r) {
      for (int cidx = 0; cidx < n; ++cidx) a(r, cidx) = exp.rows[idx[r]][cidx];
      b[r] = exp.rhs[idx[r]];
    }
    Lu f(a);
    if (!f.singular) {
      Vec x = f.solve(b);
      bool feasible = true;
      for (int i = 0; i < m && feasible; ++i)
        feasible = dot(exp.rows[i], x) - exp.rhs[i] <= 1e-8 * std::max(1.0, row_norm[i]);
      if (feasible) verts.push_back(std::move(x));
    }
    // next n-subset of {0..m-1}, lexicographic
    int i = n - 1;
    while (i >= 0 && idx[i] == m - n + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < n; ++j) idx[j] = idx[j - 1] + 1;
  }

  std::sort(verts.begin(), verts.end());
  std::vector<Vec> unique;
  for (const Vec& v : verts) {
    bool dup = false;
    for (auto it = unique.rbegin(); it != unique.rend(); ++it) {
      if (v[0] - (*it)[0] > 1e-7) break;
      double d2 = 0.0;
      for (int k = 0; k < n; ++k) d2 += (v[k] - (*it)[k]) * (v[k] - (*it)[k]);
      if (std::sqrt(d2) <= 1e-7) {
        dup = true;
        break;
      }
    }
    if (!dup) unique.push_back(v);
  }
  logf(LogLevel::debug, "enumerate_vertices: n=%d m=%d -> %zu vertices", n, m, unique.size());
  return unique;
}

namespace detail {

// Orthonormal basis of the hyperplane orthogonal to a (Householder
// complement): columns 1..n-1 of the reflection sending e_1 to a/|a|.
inline std::vector<Vec> hyperplane_basis(const Vec& a) {
  const int n = static_cast<int>(a.size());
  Vec w = scaled(a, 1.0 / norm2(a));
  w[0] += w[0] >= 0.0 ? 1.0 : -1.0;
  const double ww = dot(w, w);
  std::vector<Vec> basis;
  for (int c = 1; c < n; ++c) {
    Vec col(n, 0.0);
    col[c] = 1.0;
    const double f = 2.0 * w[c] / ww;
    for (int r = 0; r < n; ++r) col[r] -= f * w[r];
    basis.push_back(std::move(col));
  }
  return basis;
}

// Volume of a convex polytope given its full vertex set, its H-description,
// and a relatively interior point, by recursive pyramids over facets. The
// vertex list is authoritative; constraints only serve to group vertices
// into facets (and project one level down).
inline double poly_volume_rec(int dim, const std::vector<Vec>& verts,
                              const std::vector<Vec>& rows, const Vec& rhs,
                              const Vec& inner) {
  if (verts.size() < static_cast<std::size_t>(dim) + 1) return 0.0;
  if (dim == 1) {
    double lo = verts[0][0], hi = verts[0][0];
    for (const Vec& v : verts) {
      lo = std::min(lo, v[0]);
      hi = std::max(hi, v[0]);
    }
    return hi - lo;
  }

  double vol = 0.0;
  for (std::size_t f = 0; f < rows.size(); ++f) {
    const double nf = norm2(rows[f]);
    if (nf <= 1e-12) continue;
    const double h = (rhs[f] - dot(rows[f], inner)) / nf;
    if (h <= 1e-12) continue;  // interior point sits on (or outside) this plane

    std::vector<Vec> incident;
    for (const Vec& v : verts)
      if (std::fabs(dot(rows[f], v) - rhs[f]) <= 1e-7 * std::max(1.0, nf)) incident.push_back(v);
    if (incident.size() < static_cast<std::size_t>(dim)) continue;

    const std::vector<Vec> basis = hyperplane_basis(rows[f]);
    const Vec& origin = incident.front();
    std::vector<Vec> sub_verts;
    for (const Vec& v : incident) {
      Vec w(dim - 1);
      for (int c = 0; c < dim - 1; ++c) {
        double s = 0.0;
        for (int r = 0; r < dim; ++r) s += basis[c][r] * (v[r] - origin[r]);
        w[c] = s;
      }
      sub_verts.push_back(std::move(w));
    }

    std::vector<Vec> sub_rows;
    Vec sub_rhs;
    for (std::size_t g = 0; g < rows.size(); ++g) {
      if (g == f) continue;
      Vec pr(dim - 1);
      for (int c = 0; c < dim - 1; ++c) pr[c] = dot(basis[c], rows[g]);
      const double pn = norm2(pr);
      if (pn <= 1e-9 * std::max(1.0, norm2(rows[g]))) continue;  // parallel to the facet
      const double pb = rhs[g] - dot(rows[g], origin);
      bool dup = false;
      for (std::size_t k = 0; k < sub_rows.size() && !dup; ++k) {
        const double kn = norm2(sub_rows[k]);
        double diff = std::fabs(sub_rhs[k] / kn - pb / pn);
        for (int c = 0; c < dim - 1; ++c)
          diff += std::fabs(sub_rows[k][c] / kn - pr[c] / pn);
        dup = diff <= 1e-9;
      }
      if (dup) continue;
      sub_rows.push_back(std::move(pr));
      sub_rhs.push_back(pb);
    }

    Vec centroid(dim - 1, 0.0);
    for (const Vec& w : sub_verts) axpy(1.0 / sub_verts.size(), w, centroid);
    vol += h * poly_volume_rec(dim - 1, sub_verts, sub_rows, sub_rhs, centroid) / dim;
  }
  return vol;
}

}  // namespace detail

// Exact volume by pyramid decomposition from the interior point over facets,
// with facet areas computed recursively in facet coordinates.
inline VolumeEstimate volume_exact(const Polytope& p) {
  const std::vector<Vec> verts = enumerate_vertices(p);
  check(verts.size() >= static_cast<std::size_t>(p.dim()) + 1, Errc::internal_check_failed,
        "volume_exact: fewer vertices than dimension plus one");
  const HalfspaceFamily::Expanded& exp = p.expanded();
  VolumeEstimate est;
  est.value = detail::poly_volume_rec(p.dim(), verts, exp.rows, exp.rhs, p.interior_point());
  est.ci99_low = est.value;
  est.ci99_high = est.value;
  est.method = "exact";
  logf(LogLevel::info, "volume_exact: n=%d vertices=%zu volume=%.12g", p.dim(), verts.size(),
       est.value);
  return est;
}

// Hit-or-miss Monte Carlo in the bounding box. Every sample's coordinates
// are derived from its own counter range, so the result depends only on
// (samples, seed), not on how the sample range is split across workers.
inline VolumeEstimate volume_mc(const Polytope& p, long long samples, std::uint64_t seed,
                                int workers = 1) {
  check(samples > 0, Errc::value_error, "volume_mc: sample count must be positive");
  check(workers >= 1, Errc::value_error, "volume_mc: worker count must be positive");
  const int n = p.dim();
  const Vec& lo = p.box_low();
  const Vec& hi = p.box_high();
  double box_vol = 1.0;
  for (int k = 0; k < n; ++k) box_vol *= hi[k] - lo[k];

  const CounterRng rng(seed, 0x766f6c756d65ULL);  // stream tag: "volume"
  auto count_hits = [&](long long first, long long last) {
    long long hits = 0;
    Vec x(n);
    for (long long i = first; i < last; ++i) {
      const std::uint64_t base = static_cast<std::uint64_t>(i) * n;
      for (int k = 0; k < n; ++k) x[k] = lo[k] + (hi[k] - lo[k]) * rng.u01(base + k);
      if (p.contains(x)) ++hits;
    }
    return hits;
  };

  long long hits = 0;
  if (workers == 1) {
    hits = count_hits(0, samples);
  } else {
    std::vector<long long> partial(workers, 0);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      const long long first = samples * w / workers;
      const long long last = samples * (w + 1) / workers;
      pool.emplace_back([&, w, first, last] { partial[w] = count_hits(first, last); });
    }
    for (std::thread& t : pool) t.join();
    for (long long h : partial) hits += h;
  }

  const double phat = static_cast<double>(hits) / static_cast<double>(samples);
  const double sigma = std::sqrt(phat * (1.0 - phat) / static_cast<double>(samples));
  const double z99 = 2.5758293035489;
  VolumeEstimate est;
  est.value = box_vol * phat;
  est.ci99_low = std::max(0.0, box_vol * (phat - z99 * sigma));
  est.ci99_high = box_vol * (phat + z99 * sigma);
  est.method = "mc";
  est.samples = samples;
  logf(LogLevel::info, "volume_mc: n=%d samples=%lld hits=%lld estimate=%.9g", n, samples,
       static_cast<long long>(hits), est.value);
  return est;
}

struct VolumePolicy {
  bool force_exact = false;
  bool force_mc = false;
  long long samples = 1'000'000;
  std::uint64_t seed = 0;
  int workers = 1;
};

inline bool exact_volume_in_budget(const Polytope& p) {
  return static_cast<long long>(p.expanded().rows.size()) <= detail::kVertexBudgetM &&
         p.dim() <= detail::kVertexBudgetN;
}

// Exact volume when the vertex-enumeration budget allows, Monte Carlo
// otherwise; the bounds being verified are loose enough for either.
inline VolumeEstimate measure_volume(const Polytope& p, const VolumePolicy& policy = {}) {
  check(!(policy.force_exact && policy.force_mc), Errc::value_error,
        "measure_volume: conflicting method overrides");
  if (policy.force_exact) return volume_exact(p);
  if (policy.force_mc) return volume_mc(p, policy.samples, policy.seed, policy.workers);
  if (exact_volume_in_budget(p)) return volume_exact(p);
  return volume_mc(p, policy.samples, policy.seed, policy.workers);
}

// Ratio vol(Q) / vol(P), with the interval propagated from both factors.
struct VolumeRatio {
  VolumeEstimate numerator;
  VolumeEstimate denominator;
  double estimate = 0.0;
  double ci99_low = 0.0;
  double ci99_high = 0.0;
  std::string method;  // "exact" if both factors exact, else "mc"
  long long samples = 0;
};

inline VolumeRatio volume_ratio(const Polytope& q, const Polytope& p,
                                const VolumePolicy& policy = {}) {
  VolumePolicy qp = policy;
  qp.seed = policy.seed * 2 + 1;  // decorrelate the two measurements
  VolumeRatio r;
  r.numerator = measure_volume(q, qp);
  r.denominator = measure_volume(p, policy);
  check(r.denominator.ci99_low > 0.0, Errc::internal_check_failed,
        "volume_ratio: denominator interval reaches zero");
  r.estimate = r.numerator.value / r.denominator.value;
  r.ci99_low = r.numerator.ci99_low / r.denominator.ci99_high;
  r.ci99_high = r.numerator.ci99_high / r.denominator.ci99_low;
  r.method = r.numerator.method == "exact" && r.denominator.method == "exact" ? "exact" : "mc";
  r.samples = std::max(r.numerator.samples, r.denominator.samples);
  return r;
}

}  // namespace helly
