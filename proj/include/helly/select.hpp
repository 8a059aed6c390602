#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "helly/blieb.hpp"
#include "helly/errors.hpp"
#include "helly/john.hpp"
#include "helly/linalg.hpp"
#include "helly/log.hpp"
#include "helly/lp.hpp"
#include "helly/model.hpp"
#include "helly/sparsify.hpp"
#include "helly/volume.hpp"

namespace helly {

enum class SelectionAlgorithm { symmetric, lifted, naszodi };

inline std::string to_string(SelectionAlgorithm a) {
  switch (a) {
    case SelectionAlgorithm::symmetric: return "symmetric";
    case SelectionAlgorithm::lifted: return "lifted";
    case SelectionAlgorithm::naszodi: return "naszodi";
  }
  fail(Errc::value_error, "unknown selection algorithm");
}

inline SelectionAlgorithm algorithm_from_string(const std::string& s) {
  if (s == "symmetric") return SelectionAlgorithm::symmetric;
  if (s == "lifted") return SelectionAlgorithm::lifted;
  if (s == "naszodi") return SelectionAlgorithm::naszodi;
  fail(Errc::value_error, "unknown algorithm '" + s + "'");
}

// Natural log of the certified volume-ratio bound for each algorithm:
//   symmetric:  (2/sqrt(pi) * (sqrt(d)+1)/(sqrt(d)-1))^n * Gamma(n/2+1)
//   lifted:     gamma_d^{(n+1)/2} n^{n/2} (n+1)^{3(n+1)/2} / (pi^{n/2} n!)
//               * Gamma(n/2+1)
//   naszodi:    pi^{n/2} 2^n (n+1)^n n^{n/2} sqrt(n!) / Gamma(n/2+1)
// All Gamma factors are half-integer and evaluated by exact recursion.
inline double certified_bound(SelectionAlgorithm algo, int n, double d = 0.0) {
  check(n >= 1, Errc::value_error, "certified_bound: dimension must be positive");
  const double log_pi = std::log(std::numbers::pi);
  switch (algo) {
    case SelectionAlgorithm::symmetric:
      check(d > 1.0, Errc::value_error, "certified_bound: need d > 1");
      return n * std::log(2.0) - 0.5 * n * log_pi + 0.5 * n * std::log(gamma_d(d)) +
             log_gamma_half(n + 2);
    case SelectionAlgorithm::lifted:
      check(d > 1.0, Errc::value_error, "certified_bound: need d > 1");
      return 0.5 * (n + 1) * std::log(gamma_d(d)) + 0.5 * n * std::log(static_cast<double>(n)) +
             1.5 * (n + 1) * std::log(n + 1.0) - 0.5 * n * log_pi - log_factorial(n) +
             log_gamma_half(n + 2);
    case SelectionAlgorithm::naszodi:
      return 0.5 * n * log_pi + n * std::log(2.0) + n * std::log(n + 1.0) +
             0.5 * n * std::log(static_cast<double>(n)) + 0.5 * log_factorial(n) -
             log_gamma_half(n + 2);
  }
  fail(Errc::value_error, "unknown selection algorithm");
}

// Context lower bound for the symmetric case: log of the guaranteed
// |P|^{1/n} >= 2 / sqrt(e log(1+d)), scaled to a full volume exponent.
inline double symmetric_log_volume_floor(int n, double d) {
  check(n >= 1 && d > 1.0, Errc::value_error, "symmetric_log_volume_floor: bad arguments");
  return n * std::log(2.0 / std::sqrt(std::numbers::e * std::log1p(d)));
}

namespace detail {

inline void validate_unit_system(const std::vector<Vec>& contacts, const Vec& weights,
                                 const char* who) {
  check(!contacts.empty(), Errc::value_error, std::string(who) + ": empty contact list");
  check(contacts.size() == weights.size(), Errc::value_error,
        std::string(who) + ": contact/weight count mismatch");
  const std::size_t n = contacts[0].size();
  for (std::size_t j = 0; j < contacts.size(); ++j) {
    check(contacts[j].size() == n, Errc::value_error,
          std::string(who) + ": inconsistent dimensions");
    check(std::fabs(norm2(contacts[j]) - 1.0) <= 1e-9, Errc::value_error,
          std::string(who) + ": contact " + std::to_string(j) + " is not unit");
    check(weights[j] > 0.0, Errc::value_error,
          std::string(who) + ": weight " + std::to_string(j) + " is not positive");
  }
}

inline std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// The John solver requires offsets normalized to 1; arbitrary affine images
// of an instance arrive with other offsets, so pipelines renormalize first.
// Member order is preserved, hence selected indices refer to the original
// family, and the certified/measured ratios are affine-invariant anyway.
inline Polytope normalized_input(const Polytope& p) {
  for (const Halfspace& h : p.family().members)
    if (std::fabs(h.b - 1.0) > 1e-9) return Polytope(normalize_family(p.family()).first);
  return p;
}

}  // namespace detail

// Greedy Dvoretzky-Rogers sequence: v_1 is the heaviest contact (ties by
// index), then each v_k maximizes the distance to the span of the previous
// picks. For a genuine John decomposition that distance is guaranteed to be
// at least sqrt((n-k+1)/n) at every step.
inline std::vector<int> dr_select(const std::vector<Vec>& contacts, const Vec& weights) {
  detail::validate_unit_system(contacts, weights, "dr_select");
  const int n = static_cast<int>(contacts[0].size());
  const int m = static_cast<int>(contacts.size());
  SymMatrix sum(n);
  for (int j = 0; j < m; ++j) sum.add_outer(contacts[j], weights[j]);
  check(sum.identity_residual() <= 1e-5, Errc::invalid_decomposition,
        "dr_select: identity residual " + fmt_sci(sum.identity_residual()));

  std::vector<int> picked;
  std::vector<Vec> basis;  // orthonormal basis of span(v_1..v_k)
  std::vector<char> used(m, 0);
  auto residual_vec = [&](const Vec& u) {
    Vec w = u;
    for (const Vec& q : basis) axpy(-dot(w, q), q, w);
    return w;
  };
  for (int k = 1; k <= n; ++k) {
    int best = -1;
    double best_score = -1.0;
    for (int j = 0; j < m; ++j) {
      if (used[j]) continue;
      const double score = k == 1 ? weights[j] : norm2(residual_vec(contacts[j]));
      if (score > best_score) {
        best = j;
        best_score = score;
      }
    }
    check(best >= 0, Errc::invalid_decomposition, "dr_select: ran out of contacts");
    Vec w = residual_vec(contacts[best]);
    const double dist = norm2(w);
    const double floor = std::sqrt((n - k + 1) / static_cast<double>(n)) - 1e-9;
    check(dist >= floor, Errc::invalid_decomposition,
          "dr_select: step " + std::to_string(k) + " distance " + fmt_sci(dist) +
              " below " + fmt_sci(floor));
    // One re-orthogonalization pass keeps the basis orthonormal to roundoff.
    for (const Vec& q : basis) axpy(-dot(w, q), q, w);
    basis.push_back(scaled(w, 1.0 / norm2(w)));
    picked.push_back(best);
    used[best] = 1;
  }
  return picked;
}

struct CaratheodoryResult {
  std::vector<int> indices;  // ascending, size <= n+1
  Vec coefficients;          // positive, sums to 1, aligned with indices
  double residual = 0.0;     // | sum rho_i p_i - target |
};

// Convex-combination certificate for a point of conv(points) with support at
// most n+1: a basic feasible solution of the moment LP has at most one
// positive coefficient per row, and a least-squares refit on that support
// sharpens the coefficients to roundoff.
inline CaratheodoryResult caratheodory_reduce(const Vec& target, const std::vector<Vec>& points) {
  check(!points.empty(), Errc::value_error, "caratheodory_reduce: empty point list");
  const int n = static_cast<int>(target.size());
  const int m = static_cast<int>(points.size());
  for (const Vec& p : points)
    check(static_cast<int>(p.size()) == n, Errc::value_error,
          "caratheodory_reduce: inconsistent dimensions");

  Matrix a(n + 1, m);
  Vec b(n + 1);
  for (int r = 0; r < n; ++r) {
    for (int j = 0; j < m; ++j) a(r, j) = points[j][r];
    b[r] = target[r];
  }
  for (int j = 0; j < m; ++j) a(n, j) = 1.0;
  b[n] = 1.0;
  const LpSolution sol = solve_standard_lp(a, b, Vec(m, 0.0));
  check(sol.status == LpStatus::optimal, Errc::not_in_hull,
        "caratheodory_reduce: target outside the hull (phase-1 gap " +
            fmt_sci(sol.objective) + ")");

  std::vector<int> support;
  for (int j = 0; j < m; ++j)
    if (sol.x[j] > 1e-12) support.push_back(j);

  // Refit on the support; drop coefficients the refit sends to zero.
  Vec rho;
  for (;;) {
    check(!support.empty(), Errc::not_in_hull, "caratheodory_reduce: empty support");
    const int p = static_cast<int>(support.size());
    Matrix g(p, p);
    Vec rhs(p, 0.0);
    for (int i = 0; i < p; ++i) {
      for (int j = i; j < p; ++j) {
        double s = 1.0;  // the sum-to-one row contributes 1 to every entry
        for (int r = 0; r < n; ++r) s += points[support[i]][r] * points[support[j]][r];
        g(i, j) = s;
        g(j, i) = s;
      }
      rhs[i] = 1.0 + dot(points[support[i]], target);
    }
    Lu f(g);
    if (f.singular) {
      rho.assign(p, 0.0);
      for (int i = 0; i < p; ++i) rho[i] = sol.x[support[i]];
      break;
    }
    rho = f.solve(rhs);
    const auto smallest = std::min_element(rho.begin(), rho.end());
    if (*smallest > 1e-12) break;
    support.erase(support.begin() + (smallest - rho.begin()));
  }

  CaratheodoryResult res;
  res.indices = support;
  res.coefficients = rho;
  double sum = 0.0;
  Vec recon(n, 0.0);
  for (std::size_t i = 0; i < support.size(); ++i) {
    sum += rho[i];
    axpy(rho[i], points[support[i]], recon);
  }
  axpy(-1.0, target, recon);
  res.residual = norm2(recon);
  check(static_cast<int>(support.size()) <= n + 1, Errc::internal_check_failed,
        "caratheodory_reduce: support exceeds n+1");
  check(std::fabs(sum - 1.0) <= 1e-9, Errc::not_in_hull,
        "caratheodory_reduce: coefficient sum off by " + fmt_sci(sum - 1.0));
  check(res.residual <= 1e-8, Errc::not_in_hull,
        "caratheodory_reduce: reconstruction residual " + fmt_sci(res.residual));
  return res;
}

struct RayExit {
  Vec z;                     // exit point t* direction
  double t_star = 0.0;
  std::vector<int> indices;  // supporting points, ascending, size <= n
  Vec coefficients;          // convex combination of the supporting points
};

// Boundary point of conv(points) along a unit direction, via the gauge LP
// min sum(lambda) s.t. sum lambda_j p_j = direction, lambda >= 0: the optimum
// is 1/t*, and a basic optimal solution uses at most n points.
inline RayExit ray_exit(const Vec& direction, const std::vector<Vec>& points) {
  check(!points.empty(), Errc::value_error, "ray_exit: empty point list");
  const int n = static_cast<int>(direction.size());
  const int m = static_cast<int>(points.size());
  check(std::fabs(norm2(direction) - 1.0) <= 1e-9, Errc::value_error,
        "ray_exit: direction is not unit");
  for (const Vec& p : points)
    check(static_cast<int>(p.size()) == n, Errc::value_error,
          "ray_exit: inconsistent dimensions");

  Matrix a(n, m);
  for (int r = 0; r < n; ++r)
    for (int j = 0; j < m; ++j) a(r, j) = points[j][r];
  const LpSolution sol = solve_standard_lp(a, direction, Vec(m, 1.0));
  check(sol.status == LpStatus::optimal, Errc::origin_not_interior,
        "ray_exit: direction not in the cone of the points");
  check(sol.objective > 1e-12, Errc::origin_not_interior, "ray_exit: degenerate gauge");

  RayExit res;
  res.t_star = 1.0 / sol.objective;
  res.z = scaled(direction, res.t_star);
  for (int j = 0; j < m; ++j) {
    if (sol.x[j] > 1e-12) {
      res.indices.push_back(j);
      res.coefficients.push_back(sol.x[j] / sol.objective);
    }
  }
  check(static_cast<int>(res.indices.size()) <= n, Errc::internal_check_failed,
        "ray_exit: support exceeds n");
  check(res.t_star >= 1.0 / n - 1e-8, Errc::origin_not_interior,
        "ray_exit: exit radius " + fmt_sci(res.t_star) + " below 1/n");
  Vec recon(n, 0.0);
  for (std::size_t i = 0; i < res.indices.size(); ++i)
    axpy(res.coefficients[i], points[res.indices[i]], recon);
  axpy(-1.0, res.z, recon);
  check(norm2(recon) <= 1e-8 * std::max(1.0, res.t_star), Errc::internal_check_failed,
        "ray_exit: reconstruction residual " + fmt_sci(norm2(recon)));
  return res;
}

struct MeasuredRatio {
  double estimate = 0.0;
  double ci99_low = 0.0;
  double ci99_high = 0.0;
  std::string method;
  long long samples = 0;
};

struct SelectionReport {
  std::string algorithm;
  bool has_d = false;
  double d = 0.0;
  std::vector<int> selected;  // indices into the original family, ascending
  int s = 0;
  double gamma_achieved = 1.0;
  double certified_log_ratio = 0.0;
  Vec kappa;                               // BL weights used (empty for naszodi)
  std::map<std::string, double> residuals; // named diagnostics, serialized as-is
  std::string instance_digest;             // binds the report to its input
  bool measured = false;
  MeasuredRatio measured_ratio;
  bool bound_satisfied = false;
};

inline HalfspaceFamily subfamily(const HalfspaceFamily& f, const std::vector<int>& indices) {
  check(!indices.empty(), Errc::value_error, "subfamily: empty index list");
  HalfspaceFamily out;
  out.dim = f.dim;
  out.symmetric = f.symmetric;
  int prev = -1;
  for (int i : indices) {
    check(i > prev, Errc::value_error, "subfamily: indices must be ascending and distinct");
    check(i < f.size(), Errc::value_error, "subfamily: index out of range");
    out.members.push_back(f.members[i]);
    prev = i;
  }
  return out;
}

// Measures vol(intersection of selected members) / vol(P) and records
// whether the certified bound holds: the upper confidence limit must stay
// below the bound and may not fall below 1 (the intersection contains P).
inline void measure_report(const Polytope& p, SelectionReport& rep,
                           const VolumePolicy& policy = {}) {
  Polytope q(subfamily(p.family(), rep.selected));
  const VolumeRatio vr = volume_ratio(q, p, policy);
  rep.measured = true;
  rep.measured_ratio.estimate = vr.estimate;
  rep.measured_ratio.ci99_low = vr.ci99_low;
  rep.measured_ratio.ci99_high = vr.ci99_high;
  rep.measured_ratio.method = vr.method;
  rep.measured_ratio.samples = vr.samples;
  const double cap = std::exp(rep.certified_log_ratio) * (1.0 + 1e-6);
  rep.bound_satisfied =
      vr.ci99_high <= cap && vr.ci99_high >= 1.0 - 1e-9 && rep.measured_ratio.estimate > 0.0;
  logf(LogLevel::info, "measure_report: %s ratio=%.6g cap=%.6g satisfied=%d",
       rep.algorithm.c_str(), vr.estimate, cap, rep.bound_satisfied ? 1 : 0);
}

// Pipeline for symmetric strip families: John position, one contact per
// touching strip, then spectral sparsification of the strip directions. The
// certified ratio only depends on n and d.
inline SelectionReport select_symmetric(const Polytope& p, double d) {
  check(p.family().symmetric, Errc::value_error,
        "select_symmetric: input must be a symmetric strip family");
  check(d > 1.0, Errc::value_error, "select_symmetric: need d > 1");
  const int n = p.dim();
  const Polytope work = detail::normalized_input(p);
  const JohnPipeline pipe = john_pipeline(work, true);
  const Decomposition& dec = pipe.form.decomposition;
  const SparseDecomposition sp = bss_select(dec.contacts, dec.weights, d);

  std::vector<Vec> sel_u;
  for (int j : sp.sigma) sel_u.push_back(dec.contacts[j]);
  const BLWeights bl = kappa_weights(sel_u, sp.weights);

  SelectionReport rep;
  rep.algorithm = to_string(SelectionAlgorithm::symmetric);
  rep.has_d = true;
  rep.d = d;
  std::vector<int> sel;
  for (int j : sp.sigma) sel.push_back(dec.members[j]);
  rep.selected = detail::sorted_unique(std::move(sel));
  rep.s = static_cast<int>(rep.selected.size());
  check(rep.s <= static_cast<int>(std::ceil(d * n - 1e-12)), Errc::internal_check_failed,
        "select_symmetric: cardinality " + std::to_string(rep.s) + " exceeds dn");
  rep.gamma_achieved = sp.certificate.gamma_achieved;
  rep.certified_log_ratio = certified_bound(SelectionAlgorithm::symmetric, n, d);
  rep.kappa = bl.kappa;
  rep.residuals["identity"] = dec.residual_identity;
  rep.residuals["barycenter"] = dec.residual_barycenter;
  rep.instance_digest = instance_digest(p.family());
  return rep;
}

// Pipeline for general halfspace families: lift the centered
// John decomposition to R^{n+1}, sparsify there, then patch the barycenter
// with a Caratheodory certificate for the correction vector
// w = -(1/(n(n+1))) sum kappa_j u_j over the selected contacts.
inline SelectionReport select_halfspaces_lifted(const Polytope& p, double d) {
  check(d > 1.0, Errc::value_error, "select_halfspaces_lifted: need d > 1");
  const int n = p.dim();
  const Polytope work = detail::normalized_input(p);
  const JohnPipeline pipe = john_pipeline(work, false);
  const Decomposition& dec = pipe.form.decomposition;
  const LiftedDecomposition lift = lift_decomposition(dec.contacts, dec.weights);
  const SparseDecomposition sp = bss_select(lift.v, lift.b, d);

  std::vector<Vec> sel_v;
  for (int j : sp.sigma) sel_v.push_back(lift.v[j]);
  const BLWeights bl = kappa_weights(sel_v, sp.weights);
  double kappa_sum = 0.0;
  for (double k : bl.kappa) kappa_sum += k;
  check(std::fabs(kappa_sum - (n + 1)) <= 1e-9, Errc::internal_check_failed,
        "select_halfspaces_lifted: lifted kappa sum off by " + fmt_sci(kappa_sum - (n + 1)));

  Vec w(n, 0.0);
  for (std::size_t i = 0; i < sp.sigma.size(); ++i)
    axpy(-bl.kappa[i] / (n * (n + 1.0)), dec.contacts[sp.sigma[i]], w);
  const double w_norm = norm2(w);
  check(w_norm <= 1.0 / n + 1e-9, Errc::internal_check_failed,
        "select_halfspaces_lifted: |w| = " + fmt_sci(w_norm) + " exceeds 1/n");
  const CaratheodoryResult car = caratheodory_reduce(w, dec.contacts);

  SelectionReport rep;
  rep.algorithm = to_string(SelectionAlgorithm::lifted);
  rep.has_d = true;
  rep.d = d;
  std::vector<int> sel;
  for (int j : sp.sigma) sel.push_back(dec.members[j]);
  for (int j : car.indices) sel.push_back(dec.members[j]);
  rep.selected = detail::sorted_unique(std::move(sel));
  rep.s = static_cast<int>(rep.selected.size());
  const int cap = static_cast<int>(std::ceil(d * (n + 1) - 1e-12)) + (n + 1);
  check(rep.s <= cap, Errc::internal_check_failed,
        "select_halfspaces_lifted: cardinality " + std::to_string(rep.s) + " exceeds (d+1)(n+1)");
  rep.gamma_achieved = sp.certificate.gamma_achieved;
  rep.certified_log_ratio = certified_bound(SelectionAlgorithm::lifted, n, d);
  rep.kappa = bl.kappa;
  rep.residuals["identity"] = dec.residual_identity;
  rep.residuals["barycenter"] = dec.residual_barycenter;
  rep.residuals["w_norm"] = w_norm;
  rep.residuals["caratheodory"] = car.residual;
  rep.instance_digest = instance_digest(p.family());
  return rep;
}

// Basis-plus-ray pipeline: a Dvoretzky-Rogers basis plus the face hit by the
// ray from the origin away from the basis centroid. At most 2n members.
inline SelectionReport select_naszodi(const Polytope& p) {
  const int n = p.dim();
  const Polytope work = detail::normalized_input(p);
  const JohnPipeline pipe = john_pipeline(work, false);
  const Decomposition& dec = pipe.form.decomposition;
  const std::vector<int> dr = dr_select(dec.contacts, dec.weights);

  Vec w(n, 0.0);
  for (int j : dr) axpy(1.0 / (n + 1.0), dec.contacts[j], w);
  const double w_norm = norm2(w);
  // Degenerate centroid: any ray works for the bound, so aim away from v_1.
  const Vec dir =
      w_norm < 1e-12 ? scaled(dec.contacts[dr[0]], -1.0) : scaled(w, -1.0 / w_norm);
  const RayExit ray = ray_exit(dir, dec.contacts);

  SelectionReport rep;
  rep.algorithm = to_string(SelectionAlgorithm::naszodi);
  std::vector<int> sel;
  for (int j : dr) sel.push_back(dec.members[j]);
  for (int j : ray.indices) sel.push_back(dec.members[j]);
  rep.selected = detail::sorted_unique(std::move(sel));
  rep.s = static_cast<int>(rep.selected.size());
  check(rep.s <= 2 * n, Errc::internal_check_failed,
        "select_naszodi: cardinality " + std::to_string(rep.s) + " exceeds 2n");
  rep.certified_log_ratio = certified_bound(SelectionAlgorithm::naszodi, n);
  rep.residuals["identity"] = dec.residual_identity;
  rep.residuals["barycenter"] = dec.residual_barycenter;
  rep.residuals["centroid_norm"] = w_norm;
  rep.residuals["exit_radius"] = ray.t_star;
  rep.instance_digest = instance_digest(p.family());
  return rep;
}

inline SelectionReport run_selection(const Polytope& p, SelectionAlgorithm algo, double d) {
  switch (algo) {
    case SelectionAlgorithm::symmetric: return select_symmetric(p, d);
    case SelectionAlgorithm::lifted: return select_halfspaces_lifted(p, d);
    case SelectionAlgorithm::naszodi: return select_naszodi(p);
  }
  fail(Errc::value_error, "unknown selection algorithm");
}

inline nlohmann::json report_to_json(const SelectionReport& r) {
  nlohmann::json j;
  j["algorithm"] = r.algorithm;
  if (r.has_d)
    j["d"] = r.d;
  else
    j["d"] = nullptr;
  j["selected"] = r.selected;
  j["s"] = r.s;
  j["gamma_achieved"] = r.gamma_achieved;
  j["certified_log_ratio"] = r.certified_log_ratio;
  if (r.measured) {
    nlohmann::json m;
    m["estimate"] = r.measured_ratio.estimate;
    m["ci99"] = {r.measured_ratio.ci99_low, r.measured_ratio.ci99_high};
    m["method"] = r.measured_ratio.method;
    m["samples"] = r.measured_ratio.samples;
    j["measured_ratio"] = m;
  } else {
    j["measured_ratio"] = nullptr;
  }
  j["bound_satisfied"] = r.bound_satisfied;
  j["residuals"] = r.residuals;
  j["instance_digest"] = r.instance_digest;
  return j;
}

inline std::string serialize_report(const SelectionReport& r) { return report_to_json(r).dump(); }

inline SelectionReport report_from_json(const nlohmann::json& j) {
  auto need = [&](const char* key) {
    check(j.contains(key), Errc::schema_error, std::string("report: missing field '") + key + "'");
    return j.at(key);
  };
  SelectionReport r;
  check(need("algorithm").is_string(), Errc::schema_error, "report: algorithm must be a string");
  r.algorithm = j.at("algorithm").get<std::string>();
  algorithm_from_string(r.algorithm);  // reject unknown names early
  const nlohmann::json& dj = need("d");
  if (!dj.is_null()) {
    check(dj.is_number(), Errc::schema_error, "report: d must be a number or null");
    r.has_d = true;
    r.d = dj.get<double>();
  }
  const nlohmann::json& sel = need("selected");
  check(sel.is_array(), Errc::schema_error, "report: selected must be an array");
  for (const auto& v : sel) {
    check(v.is_number_integer(), Errc::schema_error, "report: selected entries must be integers");
    r.selected.push_back(v.get<int>());
  }
  check(need("s").is_number_integer(), Errc::schema_error, "report: s must be an integer");
  r.s = j.at("s").get<int>();
  check(r.s == static_cast<int>(r.selected.size()), Errc::schema_error,
        "report: s does not match the selected list");
  check(need("gamma_achieved").is_number(), Errc::schema_error,
        "report: gamma_achieved must be a number");
  r.gamma_achieved = j.at("gamma_achieved").get<double>();
  check(need("certified_log_ratio").is_number(), Errc::schema_error,
        "report: certified_log_ratio must be a number");
  r.certified_log_ratio = j.at("certified_log_ratio").get<double>();
  check(std::isfinite(r.certified_log_ratio), Errc::value_error,
        "report: certified_log_ratio must be finite");
  const nlohmann::json& mj = need("measured_ratio");
  if (!mj.is_null()) {
    check(mj.is_object() && mj.contains("estimate") && mj.contains("ci99") &&
              mj.contains("method") && mj.contains("samples"),
          Errc::schema_error, "report: malformed measured_ratio");
    r.measured = true;
    r.measured_ratio.estimate = mj.at("estimate").get<double>();
    const auto& ci = mj.at("ci99");
    check(ci.is_array() && ci.size() == 2, Errc::schema_error, "report: ci99 must be a pair");
    r.measured_ratio.ci99_low = ci.at(0).get<double>();
    r.measured_ratio.ci99_high = ci.at(1).get<double>();
    r.measured_ratio.method = mj.at("method").get<std::string>();
    check(r.measured_ratio.method == "exact" || r.measured_ratio.method == "mc",
          Errc::schema_error, "report: method must be 'exact' or 'mc'");
    r.measured_ratio.samples = mj.at("samples").get<long long>();
  }
  check(need("bound_satisfied").is_boolean(), Errc::schema_error,
        "report: bound_satisfied must be a boolean");
  r.bound_satisfied = j.at("bound_satisfied").get<bool>();
  const nlohmann::json& res = need("residuals");
  check(res.is_object(), Errc::schema_error, "report: residuals must be an object");
  for (auto it = res.begin(); it != res.end(); ++it) {
    check(it.value().is_number(), Errc::schema_error, "report: residual values must be numbers");
    r.residuals[it.key()] = it.value().get<double>();
  }
  check(need("instance_digest").is_string(), Errc::schema_error,
        "report: instance_digest must be a string");
  r.instance_digest = j.at("instance_digest").get<std::string>();
  return r;
}

inline SelectionReport parse_report(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::schema_error, std::string("report: ") + e.what());
  }
  return report_from_json(j);
}

}  // namespace helly
