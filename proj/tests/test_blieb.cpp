#include "helly/blieb.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "helly/rng.hpp"
#include "helly/sparsify.hpp"
#include "support.hpp"

using helly::BLWeights;
using helly::CounterRng;
using helly::Errc;
using helly::Error;
using helly::SymMatrix;
using helly::Vec;
using helly::testing::isotropic_family;

namespace {

std::vector<Vec> signed_basis(int n) {
  std::vector<Vec> u;
  for (int i = 0; i < n; ++i) {
    Vec p(n, 0.0), m(n, 0.0);
    p[i] = 1.0;
    m[i] = -1.0;
    u.push_back(p);
    u.push_back(m);
  }
  return u;
}

// Random lambdas in [0.1, 10], log-uniform.
Vec random_lambdas(const CounterRng& rng, int m, std::uint64_t& counter) {
  Vec l(m);
  for (int j = 0; j < m; ++j)
    l[j] = std::exp(std::log(0.1) + std::log(100.0) * rng.u01(counter++));
  return l;
}

}  // namespace

TEST(KappaWeights, CubeContactsIdentity) {
  const auto w = helly::kappa_weights(signed_basis(3), Vec(6, 0.5));
  EXPECT_NEAR(w.gamma, 1.0, 1e-12);
  double total = 0.0;
  for (double k : w.kappa) {
    EXPECT_NEAR(k, 0.5, 1e-12);
    total += k;
  }
  EXPECT_NEAR(total, 3.0, 1e-9);
}

TEST(KappaWeights, DoubledWeightsHalveNothing) {
  // A = 2I: kappa_j = 1 * <(2I)^{-1} e_i, e_i> = 1/2 still, gamma = 2.
  const auto w = helly::kappa_weights(signed_basis(3), Vec(6, 1.0));
  EXPECT_NEAR(w.gamma, 2.0, 1e-12);
  double total = 0.0;
  for (double k : w.kappa) {
    EXPECT_NEAR(k, 0.5, 1e-12);
    total += k;
  }
  EXPECT_NEAR(total, 3.0, 1e-9);
}

TEST(KappaWeights, BssOutputsSumToDimension) {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const auto [u, a] = isotropic_family(3, 30, seed);
    const auto s = helly::bss_select(u, a, 4.0);
    std::vector<Vec> su;
    for (int idx : s.sigma) su.push_back(u[idx]);
    const auto w = helly::kappa_weights(su, s.weights);
    double total = 0.0;
    for (double k : w.kappa) total += k;
    EXPECT_NEAR(total, 3.0, 1e-9);
    for (std::size_t j = 0; j < w.kappa.size(); ++j)
      EXPECT_GE(w.gamma * w.kappa[j], w.c[j] - 1e-9);
  }
}

TEST(KappaWeights, RejectsDeficientMatrix) {
  // Two orthonormal directions in R^3 leave a null eigenvalue.
  std::vector<Vec> u = {{1, 0, 0}, {0, 1, 0}};
  try {
    helly::kappa_weights(u, Vec(2, 1.0));
    FAIL() << "expected not_dominating_identity";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::not_dominating_identity);
  }
}

TEST(DetInequality, UnitLambdasOnExactJohn) {
  const auto w = helly::kappa_weights(signed_basis(2), Vec(4, 0.5));
  const auto r = helly::check_det_inequality(w, Vec(4, 1.0));
  EXPECT_NEAR(r.lhs, 0.0, 1e-12);
  EXPECT_NEAR(r.rhs, 0.0, 1e-12);
  EXPECT_TRUE(r.holds);
}

TEST(DetInequality, EqualLambdasReduceToKappaSum) {
  // With all lambda_j = L: lhs - rhs = n log gamma + log det(L * A')
  // - (sum kappa) log L = const, independent of L because sum kappa = n.
  const auto [u, a] = isotropic_family(3, 20, 12);
  const auto w = helly::kappa_weights(u, a);
  const auto r1 = helly::check_det_inequality(w, Vec(20, 0.37));
  const auto r2 = helly::check_det_inequality(w, Vec(20, 5.11));
  EXPECT_NEAR(r1.lhs - r1.rhs, r2.lhs - r2.rhs, 1e-9);
  EXPECT_TRUE(r1.holds);
  EXPECT_TRUE(r2.holds);
}

TEST(DetInequality, RandomLambdaSweepOnBssOutputs) {
  const CounterRng rng(2024, 1);
  std::uint64_t counter = 0;
  for (std::uint64_t seed : {30u, 31u}) {
    const auto [u, a] = isotropic_family(4, 24, seed);
    const auto s = helly::bss_select(u, a, 2.0);
    std::vector<Vec> su;
    for (int idx : s.sigma) su.push_back(u[idx]);
    const auto w = helly::kappa_weights(su, s.weights);
    const int m = static_cast<int>(su.size());
    for (int trial = 0; trial < 500; ++trial) {
      const auto r = helly::check_det_inequality(w, random_lambdas(rng, m, counter));
      ASSERT_TRUE(r.holds) << "trial " << trial << " lhs " << r.lhs << " rhs " << r.rhs;
    }
  }
}

TEST(DetInequality, DominationEigenvalueBound) {
  // gamma sum kappa_j lambda_j u u^T - sum c_j lambda_j u u^T is PSD.
  const CounterRng rng(99, 2);
  std::uint64_t counter = 0;
  const auto [u, a] = isotropic_family(3, 18, 77);
  const auto w = helly::kappa_weights(u, a);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec lam = random_lambdas(rng, 18, counter);
    SymMatrix diff(3);
    for (int j = 0; j < 18; ++j)
      diff.add_outer(u[j], lam[j] * (w.gamma * w.kappa[j] - w.c[j]));
    helly::SymEigen eig(diff);
    ASSERT_GE(eig.values.front(), -1e-9);
  }
}

TEST(GaussianSearch, ExactJohnGivesUnitConstant) {
  const auto w = helly::kappa_weights(signed_basis(3), Vec(6, 0.5));
  const auto r = helly::bl_gaussian_search(w);
  EXPECT_NEAR(r.f_estimate, 1.0, 1e-7);
  EXPECT_NEAR(r.d_estimate, 1.0, 1e-7);
}

TEST(GaussianSearch, OrthonormalFlatObjective) {
  std::vector<Vec> u = {{1, 0}, {0, 1}};
  const auto w = helly::kappa_weights(u, Vec(2, 1.0));
  const auto r = helly::bl_gaussian_search(w);
  EXPECT_NEAR(r.f_estimate, 1.0, 1e-9);
  EXPECT_TRUE(r.converged);
}

TEST(GaussianSearch, BssOutputWithinCertifiedWindow) {
  for (std::uint64_t seed : {50u, 51u, 52u}) {
    const auto [u, a] = isotropic_family(3, 30, seed);
    const auto s = helly::bss_select(u, a, 4.0);
    std::vector<Vec> su;
    for (int idx : s.sigma) su.push_back(u[idx]);
    const auto w = helly::kappa_weights(su, s.weights);
    const auto r = helly::bl_gaussian_search(w);
    EXPECT_LE(r.f_estimate, 1.0 + 1e-12);
    EXPECT_GE(r.f_estimate, std::pow(w.gamma, -3.0) - 1e-9);
    EXPECT_LE(r.d_estimate, std::pow(w.gamma, 1.5) * (1.0 + 1e-7));
  }
}

TEST(GaussianSearch, NeverAboveUnitLambdaValue) {
  const auto [u, a] = isotropic_family(4, 20, 61);
  const auto w = helly::kappa_weights(u, a);
  const auto r = helly::bl_gaussian_search(w, 5);
  // F at lambda = 1 equals det(sum kappa u u^T), computable directly.
  SymMatrix m(4);
  for (int j = 0; j < 20; ++j) m.add_outer(u[j], w.kappa[j]);
  const double f1 = helly::Lu(m.full()).det();
  EXPECT_LE(r.f_estimate, f1 + 1e-12);
}
