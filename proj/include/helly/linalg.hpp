#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "helly/errors.hpp"

namespace helly {

using Vec = std::vector<double>;

inline double dot(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

inline double norm_inf(const Vec& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

inline Vec scaled(const Vec& x, double a) {
  Vec y(x);
  for (double& v : y) v *= a;
  return y;
}

inline Vec add(const Vec& x, const Vec& y) {
  Vec z(x);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += y[i];
  return z;
}

inline Vec sub(const Vec& x, const Vec& y) {
  Vec z(x);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] -= y[i];
  return z;
}

// y += a * x
inline void axpy(double a, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// Dense row-major matrix; sizes here are tiny (n <= ~12 for geometry,
// a few hundred rows for LP tableaus), so no blocking is attempted.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), d_(static_cast<std::size_t>(rows) * cols, fill) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return d_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return d_[static_cast<std::size_t>(i) * cols_ + j]; }

  Vec mul(const Vec& x) const {
    Vec y(rows_, 0.0);
    for (int i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  // A^T x
  Vec mul_t(const Vec& x) const {
    Vec y(cols_, 0.0);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) y[j] += (*this)(i, j) * x[i];
    return y;
  }

  Matrix mul(const Matrix& b) const {
    Matrix c(rows_, b.cols_);
    for (int i = 0; i < rows_; ++i)
      for (int k = 0; k < cols_; ++k) {
        const double a = (*this)(i, k);
        if (a == 0.0) continue;
        for (int j = 0; j < b.cols_; ++j) c(i, j) += a * b(k, j);
      }
    return c;
  }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : d_) m = std::max(m, std::fabs(v));
    return m;
  }

  Vec column(int j) const {
    Vec c(rows_);
    for (int i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

 private:
  int rows_, cols_;
  std::vector<double> d_;
};

// Symmetric matrix with full storage; every write mirrors both triangles so
// symmetry is exact by construction.
class SymMatrix {
 public:
  explicit SymMatrix(int n = 0) : n_(n), d_(static_cast<std::size_t>(n) * n, 0.0) {}

  static SymMatrix identity(int n) {
    SymMatrix m(n);
    for (int i = 0; i < n; ++i) m.set(i, i, 1.0);
    return m;
  }

  // sum_j w_j u_j u_j^T
  static SymMatrix outer_sum(const std::vector<Vec>& u, const Vec& w) {
    check(!u.empty(), Errc::value_error, "outer_sum: empty vector list");
    SymMatrix m(static_cast<int>(u[0].size()));
    for (std::size_t j = 0; j < u.size(); ++j) m.add_outer(u[j], w[j]);
    return m;
  }

  int order() const { return n_; }

  double operator()(int i, int j) const { return d_[static_cast<std::size_t>(i) * n_ + j]; }

  void set(int i, int j, double v) {
    d_[static_cast<std::size_t>(i) * n_ + j] = v;
    d_[static_cast<std::size_t>(j) * n_ + i] = v;
  }

  void add(int i, int j, double v) {
    d_[static_cast<std::size_t>(i) * n_ + j] += v;
    if (i != j) d_[static_cast<std::size_t>(j) * n_ + i] += v;
  }

  // A += w * u u^T
  void add_outer(const Vec& u, double w) {
    for (int i = 0; i < n_; ++i) {
      const double wi = w * u[i];
      for (int j = 0; j <= i; ++j) {
        d_[static_cast<std::size_t>(i) * n_ + j] += wi * u[j];
        if (i != j) d_[static_cast<std::size_t>(j) * n_ + i] = d_[static_cast<std::size_t>(i) * n_ + j];
      }
    }
  }

  Matrix full() const {
    Matrix m(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m(i, j) = (*this)(i, j);
    return m;
  }

  Vec mul(const Vec& x) const {
    Vec y(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      for (int j = 0; j < n_; ++j) s += (*this)(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  // x^T A x
  double quad(const Vec& x) const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) {
      double r = 0.0;
      for (int j = 0; j < n_; ++j) r += (*this)(i, j) * x[j];
      s += x[i] * r;
    }
    return s;
  }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
  }

  // Frobenius distance to the identity.
  double identity_residual() const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        const double r = (*this)(i, j) - (i == j ? 1.0 : 0.0);
        s += r * r;
      }
    return std::sqrt(s);
  }

 private:
  int n_;
  std::vector<double> d_;
};

// LU factorization with partial pivoting.
struct Lu {
  Matrix lu;
  std::vector<int> perm;
  double parity = 1.0;
  bool singular = false;

  explicit Lu(Matrix a) : lu(std::move(a)) {
    const int n = lu.rows();
    check(n == lu.cols(), Errc::value_error, "lu: matrix not square");
    perm.resize(n);
    const double floor = 1e-12 * std::max(lu.max_abs(), 1e-300);
    for (int k = 0; k < n; ++k) {
      int piv = k;
      for (int i = k + 1; i < n; ++i)
        if (std::fabs(lu(i, k)) > std::fabs(lu(piv, k))) piv = i;
      if (std::fabs(lu(piv, k)) <= floor) {
        singular = true;
        perm[k] = k;
        continue;
      }
      if (piv != k) {
        for (int j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
        parity = -parity;
      }
      perm[k] = piv;
      const double inv = 1.0 / lu(k, k);
      for (int i = k + 1; i < n; ++i) {
        const double f = lu(i, k) * inv;
        lu(i, k) = f;
        if (f == 0.0) continue;
        for (int j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      }
    }
  }

  double det() const {
    if (singular) return 0.0;
    double d = parity;
    for (int i = 0; i < lu.rows(); ++i) d *= lu(i, i);
    return d;
  }

  // log|det| and its sign; requires a nonsingular factorization.
  double log_abs_det(int* sign = nullptr) const {
    check(!singular, Errc::singular_matrix, "log_abs_det of singular matrix");
    double s = parity, l = 0.0;
    for (int i = 0; i < lu.rows(); ++i) {
      l += std::log(std::fabs(lu(i, i)));
      if (lu(i, i) < 0.0) s = -s;
    }
    if (sign != nullptr) *sign = s > 0.0 ? 1 : -1;
    return l;
  }

  Vec solve(Vec b) const {
    check(!singular, Errc::singular_matrix, "solve with singular matrix");
    const int n = lu.rows();
    // Rows were swapped in full during factorization, so the permutation must
    // be applied to b before substitution, in the same order it was built.
    for (int k = 0; k < n; ++k)
      if (perm[k] != k) std::swap(b[k], b[perm[k]]);
    for (int k = 0; k < n; ++k)
      for (int i = k + 1; i < n; ++i) b[i] -= lu(i, k) * b[k];
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j < n; ++j) b[i] -= lu(i, j) * b[j];
      b[i] /= lu(i, i);
    }
    return b;
  }

  Matrix inverse() const {
    const int n = lu.rows();
    Matrix inv(n, n);
    Vec e(n, 0.0);
    for (int j = 0; j < n; ++j) {
      e[j] = 1.0;
      Vec col = solve(e);
      e[j] = 0.0;
      for (int i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    return inv;
  }
};

// det(A + u v^T) = det(A) (1 + <A^{-1} u, v>); A must be comfortably
// invertible, otherwise the identity is numerically meaningless.
inline double det_rank_one_update(const Matrix& a, const Vec& u, const Vec& v) {
  Lu f(a);
  check(!f.singular, Errc::singular_matrix, "det_rank_one_update: base matrix singular");
  return f.det() * (1.0 + dot(f.solve(u), v));
}

namespace detail {

// Householder reduction of a symmetric matrix to tridiagonal form with
// accumulated transform: on exit z holds Q with A = Q T Q^T, d the diagonal
// of T and e its subdiagonal (e[0] unused).
inline void tridiagonalize(Matrix& z, Vec& d, Vec& e) {
  const int n = z.rows();
  for (int i = n - 1; i >= 1; --i) {
    const int l = i - 1;
    double h = 0.0, scale = 0.0;
    if (l > 0) {
      for (int k = 0; k <= l; ++k) scale += std::fabs(z(i, k));
      if (scale == 0.0) {
        e[i] = z(i, l);
      } else {
        for (int k = 0; k <= l; ++k) {
          z(i, k) /= scale;
          h += z(i, k) * z(i, k);
        }
        double f = z(i, l);
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        z(i, l) = f - g;
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          z(j, i) = z(i, j) / h;
          g = 0.0;
          for (int k = 0; k <= j; ++k) g += z(j, k) * z(i, k);
          for (int k = j + 1; k <= l; ++k) g += z(k, j) * z(i, k);
          e[j] = g / h;
          f += e[j] * z(i, j);
        }
        const double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          f = z(i, j);
          e[j] = g = e[j] - hh * f;
          for (int k = 0; k <= j; ++k) z(j, k) -= f * e[k] + g * z(i, k);
        }
      }
    } else {
      e[i] = z(i, l);
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    const int l = i - 1;
    if (d[i] != 0.0) {
      for (int j = 0; j <= l; ++j) {
        double g = 0.0;
        for (int k = 0; k <= l; ++k) g += z(i, k) * z(k, j);
        for (int k = 0; k <= l; ++k) z(k, j) -= g * z(k, i);
      }
    }
    d[i] = z(i, i);
    z(i, i) = 1.0;
    for (int j = 0; j <= l; ++j) {
      z(j, i) = 0.0;
      z(i, j) = 0.0;
    }
  }
}

// QL iteration with implicit shifts on the tridiagonal (d, e), rotating the
// columns of z along; eigenvalues land in d.
inline void ql_implicit(Vec& d, Vec& e, Matrix& z) {
  const int n = static_cast<int>(d.size());
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
        if (std::fabs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        check(iter++ < 50, Errc::no_convergence, "eigensolver: QL iteration limit");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i = m - 1;
        bool underflow = false;
        for (; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (int k = 0; k < n; ++k) {
            f = z(k, i + 1);
            z(k, i + 1) = s * z(k, i) + c * f;
            z(k, i) = c * z(k, i) - s * f;
          }
        }
        if (underflow && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace detail

// Full symmetric eigendecomposition, eigenvalues ascending, eigenvectors in
// the matching columns of `vectors`.
struct SymEigen {
  Vec values;
  Matrix vectors;

  explicit SymEigen(const SymMatrix& a) {
    const int n = a.order();
    check(n > 0, Errc::value_error, "eigensolver: empty matrix");
    vectors = a.full();
    values.assign(n, 0.0);
    Vec e(n, 0.0);
    if (n == 1) {
      values[0] = vectors(0, 0);
      vectors(0, 0) = 1.0;
      return;
    }
    detail::tridiagonalize(vectors, values, e);
    detail::ql_implicit(values, e, vectors);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int x, int y) { return values[x] < values[y]; });
    Vec sorted(n);
    Matrix v(n, n);
    for (int j = 0; j < n; ++j) {
      sorted[j] = values[order[j]];
      for (int i = 0; i < n; ++i) v(i, j) = vectors(i, order[j]);
    }
    values = std::move(sorted);
    vectors = std::move(v);
  }

  // A^{-1} x through the eigenbasis; requires strictly positive spectrum.
  Vec inverse_apply(const Vec& x) const {
    const int n = static_cast<int>(values.size());
    check(values[0] > 0.0, Errc::singular_matrix, "inverse_apply: non-positive eigenvalue");
    Vec y = vectors.mul_t(x);
    for (int i = 0; i < n; ++i) y[i] /= values[i];
    return vectors.mul(y);
  }
};

// Spectral sandwich certificate for a PSD matrix measured against the
// identity: lambda_min I <= A <= lambda_max I with gamma = ratio.
struct SandwichCertificate {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double gamma_achieved = std::numeric_limits<double>::infinity();
  bool dominates_identity = false;
};

inline SandwichCertificate sandwich_gamma(const SymMatrix& a) {
  SymEigen eig(a);
  SandwichCertificate cert;
  cert.lambda_min = eig.values.front();
  cert.lambda_max = eig.values.back();
  if (cert.lambda_min > 0.0) cert.gamma_achieved = cert.lambda_max / cert.lambda_min;
  cert.dominates_identity = cert.lambda_min >= 1.0 - 1e-7;
  return cert;
}

// det(sum_{j in subset} c_j u_j u_j^T)
inline double det_outer_subset(const std::vector<Vec>& u, const Vec& c,
                               const std::vector<int>& subset) {
  const int n = static_cast<int>(u[0].size());
  SymMatrix a(n);
  for (int j : subset) a.add_outer(u[j], c[j]);
  return Lu(a.full()).det();
}

struct NnlsResult {
  Vec x;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Lawson-Hanson active-set method for min ||Ax - b||_2 subject to x >= 0.
inline NnlsResult nnls(const Matrix& a, const Vec& b, double dual_tol = -1.0,
                       int max_outer = -1) {
  const int m = a.rows(), k = a.cols();
  NnlsResult res;
  res.x.assign(k, 0.0);
  if (dual_tol < 0.0) {
    dual_tol = 1e-12 * std::max(1.0, a.max_abs() * norm_inf(b) * m);
  }
  if (max_outer < 0) max_outer = 3 * k + 30;

  std::vector<char> passive(k, 0);
  Vec resid = b;  // b - A x, x = 0

  auto solve_passive = [&](const std::vector<int>& idx) -> Vec {
    const int p = static_cast<int>(idx.size());
    Matrix g(p, p);
    Vec rhs(p, 0.0);
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j <= i; ++j) {
        double s = 0.0;
        for (int r = 0; r < m; ++r) s += a(r, idx[i]) * a(r, idx[j]);
        g(i, j) = s;
        g(j, i) = s;
      }
      double s = 0.0;
      for (int r = 0; r < m; ++r) s += a(r, idx[i]) * b[r];
      rhs[i] = s;
    }
    Lu f(g);
    if (f.singular) {
      // Gram matrix can go rank-deficient with duplicated columns; a tiny
      // ridge keeps the step well defined without visibly moving the optimum.
      const double ridge = 1e-12 * std::max(1.0, g.max_abs());
      for (int i = 0; i < p; ++i) g(i, i) += ridge;
      f = Lu(g);
      check(!f.singular, Errc::singular_matrix, "nnls: passive Gram matrix singular");
    }
    return f.solve(rhs);
  };

  for (int outer = 0; outer < max_outer; ++outer) {
    // Dual vector w = A^T (b - A x); pick the most positive inactive entry.
    int enter = -1;
    double best = dual_tol;
    for (int j = 0; j < k; ++j) {
      if (passive[j]) continue;
      double w = 0.0;
      for (int r = 0; r < m; ++r) w += a(r, j) * resid[r];
      if (w > best) {
        best = w;
        enter = j;
      }
    }
    if (enter < 0) {
      res.converged = true;
      break;
    }
    passive[enter] = 1;

    for (int inner = 0; inner < 3 * k + 30; ++inner) {
      std::vector<int> idx;
      for (int j = 0; j < k; ++j)
        if (passive[j]) idx.push_back(j);
      Vec z = solve_passive(idx);
      bool all_pos = true;
      for (double v : z)
        if (v <= 0.0) all_pos = false;
      if (all_pos) {
        for (std::size_t i = 0; i < idx.size(); ++i) res.x[idx[i]] = z[i];
        break;
      }
      double alpha = 1.0;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (z[i] <= 0.0) {
          const double xi = res.x[idx[i]];
          alpha = std::min(alpha, xi / (xi - z[i]));
        }
      }
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const int j = idx[i];
        res.x[j] += alpha * (z[i] - res.x[j]);
        if (res.x[j] <= 1e-14) {
          res.x[j] = 0.0;
          passive[j] = 0;
        }
      }
    }

    resid = b;
    for (int j = 0; j < k; ++j) {
      if (res.x[j] == 0.0) continue;
      for (int r = 0; r < m; ++r) resid[r] -= a(r, j) * res.x[j];
    }
    res.iterations = outer + 1;
  }
  res.residual = norm2(resid);
  return res;
}

}  // namespace helly
