#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "helly/model.hpp"
#include "helly/volume.hpp"
#include "support.hpp"

namespace ht = helly::testing;
using helly::Errc;
using helly::Error;
using helly::HalfspaceFamily;
using helly::InstanceKind;
using helly::Matrix;
using helly::Polytope;
using helly::Vec;
using helly::VolumeEstimate;
using helly::VolumePolicy;

namespace {

constexpr double kPi = std::numbers::pi;

Errc error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("expected helly::Error");
}

// {x >= 0, sum x <= 1}: volume 1/n!, vertices 0 and the standard basis.
HalfspaceFamily unit_simplex(int n) {
  HalfspaceFamily f;
  f.dim = n;
  for (int i = 0; i < n; ++i) {
    Vec a(n, 0.0);
    a[i] = -1.0;
    f.members.push_back({a, 0.0});
  }
  f.members.push_back({Vec(n, 1.0), 1.0});
  return f;
}

// {sum |x_i| <= 1}: volume 2^n / n!.
HalfspaceFamily unit_cross(int n) {
  HalfspaceFamily f;
  f.dim = n;
  for (std::uint64_t bits = 0; bits < (1ULL << n); ++bits) {
    Vec a(n);
    for (int k = 0; k < n; ++k) a[k] = (bits >> k) & 1ULL ? -1.0 : 1.0;
    f.members.push_back({a, 1.0});
  }
  return f;
}

// Regular m-gon circumscribed about the unit circle; area m*tan(pi/m).
HalfspaceFamily circumscribed_polygon(int m) {
  HalfspaceFamily f;
  f.dim = 2;
  for (int k = 0; k < m; ++k) {
    const double t = 2.0 * kPi * k / m;
    f.members.push_back({{std::cos(t), std::sin(t)}, 1.0});
  }
  return f;
}

double mc_sigma(const VolumeEstimate& e) {
  return (e.ci99_high - e.ci99_low) / (2.0 * 2.5758293035489);
}

}  // namespace

TEST(BallVolume, ClosedForms) {
  EXPECT_NEAR(helly::log_gamma_half(1), 0.5 * std::log(kPi), 1e-15);
  EXPECT_NEAR(helly::log_gamma_half(2), 0.0, 1e-15);
  EXPECT_NEAR(helly::log_gamma_half(3), std::log(0.5 * std::sqrt(kPi)), 1e-15);
  EXPECT_NEAR(helly::log_gamma_half(6), std::log(2.0), 1e-15);
  EXPECT_NEAR(helly::log_gamma_half(7), std::log(15.0 * std::sqrt(kPi) / 8.0), 1e-14);
  EXPECT_NEAR(helly::log_factorial(5), std::log(120.0), 1e-14);
  EXPECT_EQ(helly::log_factorial(0), 0.0);

  EXPECT_NEAR(helly::unit_ball_volume(1), 2.0, 1e-14);
  EXPECT_NEAR(helly::unit_ball_volume(2), kPi, 1e-14);
  EXPECT_NEAR(helly::unit_ball_volume(3), 4.0 * kPi / 3.0, 1e-13);
  EXPECT_NEAR(helly::unit_ball_volume(4), kPi * kPi / 2.0, 1e-13);
  EXPECT_NEAR(helly::unit_ball_volume(6), kPi * kPi * kPi / 6.0, 1e-13);
  EXPECT_THROW(helly::log_gamma_half(0), Error);
}

TEST(BallVolume, CircumscribedPolygonBracketsOmegaTwo) {
  Polytope p(circumscribed_polygon(48));
  const double vol = helly::volume_exact(p).value;
  EXPECT_NEAR(vol, 48.0 * std::tan(kPi / 48.0), 1e-10);
  EXPECT_GE(vol, helly::unit_ball_volume(2));
  EXPECT_LE(vol, helly::unit_ball_volume(2) * 1.002);
}

TEST(EnumerateVertices, CubeCorners) {
  Polytope p(helly::generate_instance(InstanceKind::cube, 3, 0, 0));
  std::vector<Vec> verts = helly::enumerate_vertices(p);
  ASSERT_EQ(verts.size(), 8u);
  for (const Vec& v : verts)
    for (double x : v) EXPECT_NEAR(std::fabs(x), 1.0, 1e-12);
  std::sort(verts.begin(), verts.end());
  EXPECT_EQ(verts.front(), (Vec{-1.0, -1.0, -1.0}));
  EXPECT_EQ(verts.back(), (Vec{1.0, 1.0, 1.0}));
}

TEST(EnumerateVertices, UnitSimplexCorners) {
  Polytope p(unit_simplex(3));
  std::vector<Vec> verts = helly::enumerate_vertices(p);
  ASSERT_EQ(verts.size(), 4u);
  std::sort(verts.begin(), verts.end());
  EXPECT_EQ(verts[0], (Vec{0.0, 0.0, 0.0}));
  EXPECT_EQ(verts[1], (Vec{0.0, 0.0, 1.0}));
  EXPECT_EQ(verts[2], (Vec{0.0, 1.0, 0.0}));
  EXPECT_EQ(verts[3], (Vec{1.0, 0.0, 0.0}));
}

TEST(EnumerateVertices, RandomTangentCountsFrozen) {
  // Exact-rational enumeration over all C(20,3) subsets gives 36 vertices
  // for these seeds; every tangent plane is a facet and the polytope is
  // simple, so Euler's relation V = 2F - 4 confirms the count.
  for (std::uint64_t seed : {0ULL, 1ULL, 2ULL}) {
    Polytope p(helly::generate_instance(InstanceKind::random, 3, 20, seed));
    EXPECT_EQ(helly::enumerate_vertices(p).size(), 36u) << "seed " << seed;
  }
}

TEST(EnumerateVertices, BudgetGate) {
  Polytope p(helly::generate_instance(InstanceKind::cross, 6, 0, 0));
  ASSERT_EQ(p.family().size(), 64);
  EXPECT_EQ(error_code([&] { helly::enumerate_vertices(p); }), Errc::budget_exceeded);
}

TEST(VolumeExact, CanonicalBodies) {
  const VolumeEstimate cube3 = helly::volume_exact(
      Polytope(helly::generate_instance(InstanceKind::cube, 3, 0, 0)));
  EXPECT_NEAR(cube3.value, 8.0, 8.0 * 1e-8);
  EXPECT_EQ(cube3.method, "exact");
  EXPECT_EQ(cube3.ci99_low, cube3.value);
  EXPECT_EQ(cube3.ci99_high, cube3.value);

  const double cube4 = helly::volume_exact(
                           Polytope(helly::generate_instance(InstanceKind::cube, 4, 0, 0)))
                           .value;
  EXPECT_NEAR(cube4, 16.0, 16.0 * 1e-8);

  const double simplex4 = helly::volume_exact(Polytope(unit_simplex(4))).value;
  EXPECT_NEAR(simplex4, 1.0 / 24.0, 1e-8 / 24.0);

  const double cross3 = helly::volume_exact(Polytope(unit_cross(3))).value;
  EXPECT_NEAR(cross3, 4.0 / 3.0, 4.0 / 3.0 * 1e-8);
}

TEST(VolumeExact, AffineEquivariance) {
  std::vector<HalfspaceFamily> bodies;
  bodies.push_back(helly::generate_instance(InstanceKind::cube, 3, 0, 0));
  bodies.push_back(unit_simplex(3));
  bodies.push_back(helly::generate_instance(InstanceKind::random, 3, 10, 5));

  helly::CounterRng rng(2024, 0);
  std::uint64_t ctr = 0;
  for (const HalfspaceFamily& f : bodies) {
    const double base = helly::volume_exact(Polytope(f)).value;
    for (int rep = 0; rep < 3; ++rep) {
      Matrix t = ht::random_int_matrix(rng, 3, -3, 3, ctr);
      const double det = ht::det_bareiss(t);
      if (det == 0.0) continue;
      Vec shift = {0.25, -0.5, 0.125};
      const double mapped =
          helly::volume_exact(Polytope(helly::transform_family(f, t, shift))).value;
      EXPECT_NEAR(mapped, std::fabs(det) * base, std::fabs(det) * base * 1e-6);
    }
  }
}

TEST(VolumeMc, CubeInOwnBoxIsExact) {
  Polytope p(helly::generate_instance(InstanceKind::cube, 3, 0, 0));
  const VolumeEstimate est = helly::volume_mc(p, 100000, 42);
  EXPECT_EQ(est.value, 8.0);
  EXPECT_EQ(est.ci99_low, 8.0);
  EXPECT_EQ(est.ci99_high, 8.0);
  EXPECT_EQ(est.method, "mc");
  EXPECT_EQ(est.samples, 100000);
}

TEST(VolumeMc, SimplexWithinThreeSigma) {
  Polytope p(unit_simplex(3));
  const VolumeEstimate est = helly::volume_mc(p, 1000000, 7);
  const double sigma = mc_sigma(est);
  EXPECT_GT(sigma, 0.0);
  EXPECT_NEAR(est.value, 1.0 / 6.0, 3.0 * sigma);
  EXPECT_LE(est.ci99_low, 1.0 / 6.0);
  EXPECT_GE(est.ci99_high, 1.0 / 6.0);
}

TEST(VolumeMc, WorkerShardingInvariant) {
  Polytope p(helly::generate_instance(InstanceKind::random, 4, 18, 7));
  const VolumeEstimate one = helly::volume_mc(p, 200001, 11, 1);
  const VolumeEstimate four = helly::volume_mc(p, 200001, 11, 4);
  EXPECT_EQ(one.value, four.value);
  EXPECT_EQ(one.ci99_low, four.ci99_low);
  EXPECT_EQ(one.ci99_high, four.ci99_high);
}

TEST(VolumeMc, DistinctSeedsAgree) {
  Polytope p(helly::generate_instance(InstanceKind::random, 5, 24, 9));
  const double exact = helly::volume_exact(p).value;
  const VolumeEstimate a = helly::volume_mc(p, 300000, 1);
  const VolumeEstimate b = helly::volume_mc(p, 300000, 2);
  EXPECT_LE(a.ci99_low, b.ci99_high);
  EXPECT_LE(b.ci99_low, a.ci99_high);
  EXPECT_GE(exact, a.ci99_low);
  EXPECT_LE(exact, a.ci99_high);
  EXPECT_GE(exact, b.ci99_low);
  EXPECT_LE(exact, b.ci99_high);
}

TEST(MeasureVolume, PolicyRouting) {
  Polytope small(helly::generate_instance(InstanceKind::cube, 3, 0, 0));
  EXPECT_EQ(helly::measure_volume(small).method, "exact");

  VolumePolicy mc;
  mc.force_mc = true;
  mc.samples = 50000;
  EXPECT_EQ(helly::measure_volume(small, mc).method, "mc");

  // 64 halfspaces exceed the m <= 48 enumeration budget.
  Polytope big(helly::generate_instance(InstanceKind::cross, 6, 0, 0));
  EXPECT_FALSE(helly::exact_volume_in_budget(big));
  VolumePolicy capped;
  capped.samples = 50000;
  EXPECT_EQ(helly::measure_volume(big, capped).method, "mc");

  VolumePolicy bad;
  bad.force_exact = true;
  bad.force_mc = true;
  EXPECT_EQ(error_code([&] { helly::measure_volume(small, bad); }), Errc::value_error);
}

TEST(VolumeRatio, ExactAndMonteCarlo) {
  Polytope cube(helly::generate_instance(InstanceKind::cube, 3, 0, 0));
  Polytope simplex(unit_simplex(3));

  const helly::VolumeRatio exact = helly::volume_ratio(simplex, cube);
  EXPECT_EQ(exact.method, "exact");
  EXPECT_NEAR(exact.estimate, 1.0 / 48.0, 1e-10);
  EXPECT_NEAR(exact.ci99_low, exact.estimate, 1e-10);
  EXPECT_NEAR(exact.ci99_high, exact.estimate, 1e-10);

  VolumePolicy mc;
  mc.force_mc = true;
  mc.samples = 400000;
  mc.seed = 3;
  const helly::VolumeRatio rough = helly::volume_ratio(simplex, cube, mc);
  EXPECT_EQ(rough.method, "mc");
  EXPECT_LE(rough.ci99_low, 1.0 / 48.0);
  EXPECT_GE(rough.ci99_high, 1.0 / 48.0);
  EXPECT_LT(rough.ci99_low, rough.ci99_high);
}
