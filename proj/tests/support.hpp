#pragma once

#include <vector>

#include "helly/linalg.hpp"
#include "helly/rng.hpp"

namespace helly::testing {

// Fraction-free Bareiss elimination in long double; exact for the small
// integer matrices used as determinant oracles.
inline double det_bareiss(const Matrix& a) {
  const int n = a.rows();
  std::vector<std::vector<long double>> m(n, std::vector<long double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[i][j] = a(i, j);
  long double prev = 1.0L;
  long double sign = 1.0L;
  for (int k = 0; k < n - 1; ++k) {
    if (m[k][k] == 0.0L) {
      int p = -1;
      for (int i = k + 1; i < n; ++i)
        if (m[i][k] != 0.0L) {
          p = i;
          break;
        }
      if (p < 0) return 0.0;
      std::swap(m[k], m[p]);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j)
        m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
    prev = m[k][k];
  }
  return static_cast<double>(sign * m[n - 1][n - 1]);
}

// Cofactor expansion, n <= 7; second independent determinant oracle.
inline double det_cofactor(const Matrix& a) {
  const int n = a.rows();
  if (n == 1) return a(0, 0);
  double det = 0.0;
  for (int c = 0; c < n; ++c) {
    if (a(0, c) == 0.0) continue;
    Matrix minor(n - 1, n - 1);
    for (int i = 1; i < n; ++i) {
      int jj = 0;
      for (int j = 0; j < n; ++j) {
        if (j == c) continue;
        minor(i - 1, jj++) = a(i, j);
      }
    }
    det += (c % 2 == 0 ? 1.0 : -1.0) * a(0, c) * det_cofactor(minor);
  }
  return det;
}

// Random integer matrix with entries in [lo, hi]; advances the counter.
inline Matrix random_int_matrix(const CounterRng& rng, int n, int lo, int hi,
                                std::uint64_t& counter) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      m(i, j) = lo + static_cast<int>(rng.bits(counter++) % static_cast<std::uint64_t>(hi - lo + 1));
  return m;
}

inline Vec random_int_vec(const CounterRng& rng, int n, int lo, int hi, std::uint64_t& counter) {
  Vec v(n);
  for (int i = 0; i < n; ++i)
    v[i] = lo + static_cast<int>(rng.bits(counter++) % static_cast<std::uint64_t>(hi - lo + 1));
  return v;
}

// Lexicographic k-subsets of {0..m-1}: call with idx empty to start, returns
// false when exhausted.
inline bool next_subset(std::vector<int>& idx, int m, int k) {
  if (idx.empty()) {
    for (int i = 0; i < k; ++i) idx.push_back(i);
    return k <= m;
  }
  int i = k - 1;
  while (i >= 0 && idx[i] == m - k + i) --i;
  if (i < 0) return false;
  ++idx[i];
  for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  return true;
}

inline double frobenius_diff(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const double d = a(i, j) - b(i, j);
      s += d * d;
    }
  return std::sqrt(s);
}

// Random directions reweighted into an exact decomposition of the identity:
// draw m sphere points, whiten by the inverse square root of their second
// moment, and renormalize. Residual is at roundoff level.
inline std::pair<std::vector<Vec>, Vec> isotropic_family(int n, int m, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  std::vector<Vec> raw(m);
  for (int j = 0; j < m; ++j) raw[j] = rng.sphere_point(n, rng.sphere_stride(n) * j);
  SymMatrix g(n);
  for (int j = 0; j < m; ++j) g.add_outer(raw[j], 1.0);
  SymEigen eig(g);
  std::vector<Vec> u(m);
  Vec a(m);
  for (int j = 0; j < m; ++j) {
    Vec w(n, 0.0);
    for (int i = 0; i < n; ++i) {
      double c = 0.0;
      for (int k = 0; k < n; ++k) c += eig.vectors(k, i) * raw[j][k];
      c /= std::sqrt(eig.values[i]);
      for (int k = 0; k < n; ++k) w[k] += c * eig.vectors(k, i);
    }
    const double nn = norm2(w);
    u[j] = scaled(w, 1.0 / nn);
    a[j] = nn * nn;
  }
  return {u, a};
}

}  // namespace helly::testing
