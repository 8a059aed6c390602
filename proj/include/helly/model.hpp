#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "helly/errors.hpp"
#include "helly/linalg.hpp"
#include "helly/log.hpp"
#include "helly/lp.hpp"
#include "helly/rng.hpp"

namespace helly {

// <a, x> <= b; in a symmetric family the member stands for |<a, x>| <= b.
struct Halfspace {
  Vec a;
  double b = 0.0;
};

struct HalfspaceFamily {
  int dim = 0;
  bool symmetric = false;
  std::vector<Halfspace> members;

  int size() const { return static_cast<int>(members.size()); }

  // One-sided rows for geometric computations; a symmetric member i expands
  // to the antipodal pair, both mapping back to member i.
  struct Expanded {
    std::vector<Vec> rows;
    Vec rhs;
    std::vector<int> member;
  };

  Expanded expanded() const {
    Expanded e;
    for (int i = 0; i < size(); ++i) {
      e.rows.push_back(members[i].a);
      e.rhs.push_back(members[i].b);
      e.member.push_back(i);
      if (symmetric) {
        e.rows.push_back(scaled(members[i].a, -1.0));
        e.rhs.push_back(members[i].b);
        e.member.push_back(i);
      }
    }
    return e;
  }
};

inline void validate_family(const HalfspaceFamily& f) {
  check(f.dim >= 1, Errc::schema_error, "dim must be a positive integer");
  for (int i = 0; i < f.size(); ++i) {
    const Halfspace& h = f.members[i];
    check(static_cast<int>(h.a.size()) == f.dim, Errc::schema_error,
          "halfspace " + std::to_string(i) + ": normal length does not match dim");
    check(std::isfinite(h.b), Errc::value_error,
          "halfspace " + std::to_string(i) + ": offset not finite");
    double norm = 0.0;
    for (double v : h.a) {
      check(std::isfinite(v), Errc::value_error,
            "halfspace " + std::to_string(i) + ": normal entry not finite");
      norm += std::fabs(v);
    }
    check(norm > 0.0, Errc::value_error,
          "halfspace " + std::to_string(i) + ": zero normal vector");
    if (f.symmetric)
      check(h.b > 0.0, Errc::value_error,
            "halfspace " + std::to_string(i) + ": symmetric member needs positive offset");
  }
}

inline HalfspaceFamily family_from_json(const nlohmann::json& j) {
  check(j.is_object(), Errc::schema_error, "instance must be a JSON object");
  for (const std::string key : {"dim", "symmetric", "halfspaces"})
    check(j.contains(key), Errc::schema_error, "missing field '" + key + "'");
  HalfspaceFamily f;
  check(j["dim"].is_number_integer(), Errc::schema_error, "'dim' must be an integer");
  f.dim = j["dim"].get<int>();
  check(j["symmetric"].is_boolean(), Errc::schema_error, "'symmetric' must be a boolean");
  f.symmetric = j["symmetric"].get<bool>();
  check(j["halfspaces"].is_array(), Errc::schema_error, "'halfspaces' must be an array");
  for (const auto& hj : j["halfspaces"]) {
    check(hj.is_object() && hj.contains("a") && hj.contains("b"), Errc::schema_error,
          "halfspace entries need fields 'a' and 'b'");
    check(hj["a"].is_array(), Errc::schema_error, "'a' must be an array of numbers");
    Halfspace h;
    for (const auto& v : hj["a"]) {
      check(v.is_number(), Errc::schema_error, "'a' must contain only numbers");
      h.a.push_back(v.get<double>());
    }
    check(hj["b"].is_number(), Errc::schema_error, "'b' must be a number");
    h.b = hj["b"].get<double>();
    f.members.push_back(std::move(h));
  }
  validate_family(f);
  return f;
}

inline HalfspaceFamily parse_family(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::schema_error, std::string("invalid JSON: ") + e.what());
  }
  return family_from_json(j);
}

inline HalfspaceFamily parse_family(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_family(ss.str());
}

inline nlohmann::json family_to_json(const HalfspaceFamily& f) {
  nlohmann::json j;
  j["dim"] = f.dim;
  j["symmetric"] = f.symmetric;
  j["halfspaces"] = nlohmann::json::array();
  for (const Halfspace& h : f.members) j["halfspaces"].push_back({{"a", h.a}, {"b", h.b}});
  return j;
}

inline std::string serialize_family(const HalfspaceFamily& f) {
  return family_to_json(f).dump();
}

// FNV-1a 64 over the canonical serialization; binds reports to instances.
inline std::string instance_digest(const HalfspaceFamily& f) {
  const std::string s = serialize_family(f);
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// x -> linear x + shift
struct AffineMap {
  Matrix linear;
  Vec shift;
};

// Image family of f under x -> linear x + shift: normals transform by the
// inverse transpose, offsets pick up the shift term.
inline HalfspaceFamily transform_family(const HalfspaceFamily& f, const Matrix& linear,
                                        const Vec& shift) {
  validate_family(f);
  check(linear.rows() == f.dim && linear.cols() == f.dim, Errc::value_error,
        "transform_family: map has wrong shape");
  if (f.symmetric)
    check(norm_inf(shift) == 0.0, Errc::value_error,
          "transform_family: nonzero shift breaks a symmetric family");
  Lu lt(linear.transposed());
  check(!lt.singular, Errc::singular_matrix, "transform_family: map not invertible");
  HalfspaceFamily out;
  out.dim = f.dim;
  out.symmetric = f.symmetric;
  for (const Halfspace& h : f.members) {
    Halfspace nh;
    nh.a = lt.solve(h.a);
    nh.b = h.b + dot(nh.a, shift);
    out.members.push_back(std::move(nh));
  }
  return out;
}

// Bounded polytope with non-empty interior; both are certified on
// construction so downstream geometry can rely on them.
class Polytope {
 public:
  explicit Polytope(HalfspaceFamily f) : family_(std::move(f)) {
    validate_family(family_);
    check(family_.size() > 0, Errc::unbounded, "no constraints: polytope is all of space");
    exp_ = family_.expanded();
    ChebyshevBall ball = chebyshev_center(exp_.rows, exp_.rhs);
    check(ball.status != LpStatus::infeasible, Errc::empty_interior, "constraints infeasible");
    check(std::isfinite(ball.radius), Errc::unbounded, "inscribed ball radius unbounded");
    check(ball.radius > 1e-9, Errc::empty_interior,
          "inscribed ball radius " + std::to_string(ball.radius));
    interior_ = ball.center;
    inradius_ = ball.radius;
    box_lo_.assign(family_.dim, 0.0);
    box_hi_.assign(family_.dim, 0.0);
    Vec dir(family_.dim, 0.0);
    for (int k = 0; k < family_.dim; ++k) {
      dir[k] = 1.0;
      SupportSolution hi = maximize_direction(exp_.rows, exp_.rhs, dir);
      check(hi.status == LpStatus::optimal, Errc::unbounded,
            "unbounded in coordinate +" + std::to_string(k));
      dir[k] = -1.0;
      SupportSolution lo = maximize_direction(exp_.rows, exp_.rhs, dir);
      check(lo.status == LpStatus::optimal, Errc::unbounded,
            "unbounded in coordinate -" + std::to_string(k));
      dir[k] = 0.0;
      box_hi_[k] = hi.value;
      box_lo_[k] = -lo.value;
    }
  }

  const HalfspaceFamily& family() const { return family_; }
  const HalfspaceFamily::Expanded& expanded() const { return exp_; }
  int dim() const { return family_.dim; }
  const Vec& interior_point() const { return interior_; }
  double inradius() const { return inradius_; }
  const Vec& box_low() const { return box_lo_; }
  const Vec& box_high() const { return box_hi_; }

  bool contains(const Vec& x, double tol = 0.0) const {
    for (std::size_t i = 0; i < exp_.rows.size(); ++i)
      if (dot(exp_.rows[i], x) > exp_.rhs[i] + tol) return false;
    return true;
  }

 private:
  HalfspaceFamily family_;
  HalfspaceFamily::Expanded exp_;
  Vec interior_;
  double inradius_ = 0.0;
  Vec box_lo_, box_hi_;
};

// Translate so the inscribed-ball center sits at the origin, then scale each
// member to offset exactly 1. Symmetric families are never translated (the
// origin is already the center); index order is preserved. Returns the
// normalized family and the map that was applied to points.
inline std::pair<HalfspaceFamily, AffineMap> normalize_family(const HalfspaceFamily& f) {
  validate_family(f);
  check(f.size() > 0, Errc::unbounded, "no constraints");
  HalfspaceFamily::Expanded exp = f.expanded();
  AffineMap map;
  map.linear = Matrix::identity(f.dim);
  map.shift.assign(f.dim, 0.0);

  HalfspaceFamily out;
  out.dim = f.dim;
  out.symmetric = f.symmetric;
  if (f.symmetric) {
    for (const Halfspace& h : f.members)
      out.members.push_back({scaled(h.a, 1.0 / h.b), 1.0});
  } else {
    ChebyshevBall ball = chebyshev_center(exp.rows, exp.rhs);
    check(ball.status != LpStatus::infeasible, Errc::empty_interior, "constraints infeasible");
    check(std::isfinite(ball.radius), Errc::unbounded, "inscribed ball radius unbounded");
    check(ball.radius > 1e-9, Errc::empty_interior,
          "inscribed ball radius " + std::to_string(ball.radius));
    for (const Halfspace& h : f.members) {
      const double slack = h.b - dot(h.a, ball.center);
      check(slack > 0.0, Errc::empty_interior, "degenerate constraint at center");
      out.members.push_back({scaled(h.a, 1.0 / slack), 1.0});
    }
    for (int k = 0; k < f.dim; ++k) map.shift[k] = -ball.center[k];
  }
  validate_family(out);
  // Certify boundedness on the normalized family.
  HalfspaceFamily::Expanded oe = out.expanded();
  Vec dir(f.dim, 0.0);
  for (int k = 0; k < f.dim; ++k) {
    for (double s : {1.0, -1.0}) {
      dir[k] = s;
      check(maximize_direction(oe.rows, oe.rhs, dir).status == LpStatus::optimal,
            Errc::unbounded, "unbounded in coordinate " + std::to_string(k));
    }
    dir[k] = 0.0;
  }
  return {out, map};
}

enum class InstanceKind { cube, cross, simplex, random };

inline InstanceKind instance_kind_from_name(const std::string& s) {
  if (s == "cube") return InstanceKind::cube;
  if (s == "cross") return InstanceKind::cross;
  if (s == "simplex") return InstanceKind::simplex;
  if (s == "random") return InstanceKind::random;
  fail(Errc::value_error, "unknown shape '" + s + "'");
}

namespace detail {

// Unit outer normals of the regular simplex: the centered frame
// e_i - 1/(n+1) in R^{n+1} lives in the hyperplane 1^T y = 0; a Householder
// reflection taking 1/sqrt(n+1) to e_{n+1} drops it into R^n.
inline std::vector<Vec> simplex_normals(int n) {
  const int np = n + 1;
  Vec w(np, 1.0 / std::sqrt(static_cast<double>(np)));
  w[n] -= 1.0;  // w = v - e_{n+1}, reflection H = I - 2 w w^T / |w|^2
  const double wn2 = dot(w, w);
  std::vector<Vec> normals;
  for (int i = 0; i < np; ++i) {
    Vec y(np, -1.0 / np);
    y[i] += 1.0;
    const double f = 2.0 * dot(w, y) / wn2;
    for (int k = 0; k < np; ++k) y[k] -= f * w[k];
    // Last coordinate is now 0 up to roundoff; keep the first n, normalized.
    Vec a(y.begin(), y.begin() + n);
    const double nrm = norm2(a);
    normals.push_back(scaled(a, 1.0 / nrm));
  }
  return normals;
}

inline bool family_bounded(const HalfspaceFamily& f) {
  HalfspaceFamily::Expanded e = f.expanded();
  Vec dir(f.dim, 0.0);
  for (int k = 0; k < f.dim; ++k) {
    for (double s : {1.0, -1.0}) {
      dir[k] = s;
      if (maximize_direction(e.rows, e.rhs, dir).status != LpStatus::optimal) return false;
    }
    dir[k] = 0.0;
  }
  return true;
}

}  // namespace detail

// Canonical test families, all containing the origin in the interior with
// offsets 1. `m` only matters for `random`; `symmetric` asks for strip form
// (cube and cross only). Random instances are tangent to the unit sphere and
// redrawn (bounded seed stream) until the result is bounded.
inline HalfspaceFamily generate_instance(InstanceKind kind, int n, int m, std::uint64_t seed,
                                         bool symmetric = false) {
  check(n >= 1, Errc::value_error, "dimension must be at least 1");
  HalfspaceFamily f;
  f.dim = n;
  f.symmetric = symmetric;
  switch (kind) {
    case InstanceKind::cube: {
      for (int i = 0; i < n; ++i) {
        Vec e(n, 0.0);
        e[i] = 1.0;
        f.members.push_back({e, 1.0});
        if (!symmetric) f.members.push_back({scaled(e, -1.0), 1.0});
      }
      return f;
    }
    case InstanceKind::cross: {
      check(n <= 16, Errc::value_error, "cross-polytope generator limited to n <= 16");
      const double inv = 1.0 / std::sqrt(static_cast<double>(n));
      const std::uint64_t total = 1ULL << n;
      for (std::uint64_t bits = 0; bits < total; ++bits) {
        if (symmetric && (bits & 1ULL) != 0) continue;  // keep one of each pair
        Vec a(n);
        for (int k = 0; k < n; ++k) a[k] = (bits >> k) & 1ULL ? -inv : inv;
        f.members.push_back({a, 1.0});
      }
      return f;
    }
    case InstanceKind::simplex: {
      check(!symmetric, Errc::value_error, "simplex is not centrally symmetric");
      for (const Vec& a : detail::simplex_normals(n)) f.members.push_back({a, 1.0});
      return f;
    }
    case InstanceKind::random: {
      check(m >= n + 1, Errc::value_error, "random instance needs m >= n+1 halfspaces");
      for (std::uint64_t attempt = 0; attempt < 32; ++attempt) {
        CounterRng rng(seed, attempt);
        f.members.clear();
        const std::uint64_t stride = CounterRng::sphere_stride(n);
        for (int i = 0; i < m; ++i)
          f.members.push_back({rng.sphere_point(n, stride * static_cast<std::uint64_t>(i)), 1.0});
        if (detail::family_bounded(f)) {
          logf(LogLevel::debug, "random instance bounded after %llu attempt(s)",
               static_cast<unsigned long long>(attempt + 1));
          return f;
        }
      }
      fail(Errc::unbounded, "random instance stayed unbounded after 32 draws; increase m");
    }
  }
  fail(Errc::value_error, "unknown instance kind");
}

}  // namespace helly
