#include "viscmod/bounds.hpp"

#include <gtest/gtest.h>

using namespace viscmod;

namespace {
CompareReport holding() {
  CompareReport c;
  c.holds = true;
  c.max_violation = -0.1;
  c.bins_checked = 10;
  c.lo = 0;
  c.hi = 1;
  return c;
}

ScalarField periodic_field(int N, double L, double (*g)(double)) {
  Grid grid(GridSpec::periodic(1, L, N));
  return sample_function(grid, [g](std::span<const double> x) { return g(x[0]); });
}

GradientBoundReport lipschitz_report(double bound) {
  GradientBoundReport r;
  r.case_b = true;
  r.lipschitz_bound = bound;
  return r;
}
}  // namespace

TEST(DeriveBounds, ParabolaCases) {
  auto r = derive_bounds(Parabola{1, 2}, 0, 1, holding());
  ASSERT_TRUE(r.case_a && r.case_b && r.case_c);
  EXPECT_DOUBLE_EQ(*r.oscillation_bound, 2.0);
  EXPECT_DOUBLE_EQ(*r.lipschitz_bound, 2.0);
  EXPECT_DOUBLE_EQ(*r.lipschitz_bound, zeta_d1(SupersolutionSpec{Parabola{1, 2}}, 0));
  EXPECT_FALSE(r.holder->estimated);
  EXPECT_DOUBLE_EQ(*derive_bounds(Parabola{3, 6}, 0, 3, holding()).lipschitz_bound, 2.0);
}

TEST(DeriveBounds, ExponentialSlopeAtOrigin) {
  SupersolutionSpec z = ExponentialGap{1, 1, -1};
  auto r = derive_bounds(z, 0, 1, holding());
  EXPECT_DOUBLE_EQ(*r.lipschitz_bound, 2.0);
  const double h = 1e-6;
  EXPECT_NEAR(*r.lipschitz_bound, (zeta_value(z, h) - zeta_value(z, -h)) / (2 * h), 1e-8);
  EXPECT_NEAR(*r.oscillation_bound, 2 * (std::exp(1) - std::exp(-1)), 1e-14);
}

TEST(DeriveBounds, HolderFitOnSquareRoot) {
  TabulatedProfile t;
  for (int k = 1; k <= 100; ++k) {
    t.s.push_back(k * 1e-3);
    t.zeta.push_back(std::sqrt(k * 1e-3));
  }
  auto r = derive_bounds(t, 0.001, 0.1, holding());
  EXPECT_FALSE(r.case_b);
  ASSERT_TRUE(r.case_c);
  EXPECT_NEAR(r.holder->alpha, 0.5, 0.02);
  EXPECT_NEAR(r.holder->a, 1.0, 0.02);
  EXPECT_TRUE(r.holder->estimated);
  EXPECT_NEAR(*r.oscillation_bound, 2 * std::sqrt(0.1), 1e-12);
}

TEST(DeriveBounds, RefusesWithoutComparison) {
  CompareReport failed = holding();
  failed.holds = false;
  EXPECT_THROW(derive_bounds(Parabola{1, 2}, 0, 1, failed), RefusalError);
}

TEST(DeriveBounds, CompareIdIsStable) {
  auto a = holding(), b = holding();
  EXPECT_EQ(compare_report_id(a), compare_report_id(b));
  b.argmax_s = 0.5;
  EXPECT_NE(compare_report_id(a), compare_report_id(b));
  EXPECT_EQ(compare_report_id(a).size(), 16u);
}

TEST(EmpiricalLipschitz, Examples) {
  EXPECT_EQ(empirical_lipschitz(periodic_field(32, 1, [](double) { return 2.0; })), 0.0);
  EXPECT_NEAR(empirical_lipschitz(periodic_field(256, 2 * M_PI, [](double x) { return std::sin(x); })), 1.0, 1e-3);
  EXPECT_NEAR(empirical_lipschitz(periodic_field(16, 1, [](double x) { return 3 * std::min(x, 1 - x); })), 3.0, 1e-12);
}

TEST(EmpiricalLipschitz, TruncatedDoesNotWrap) {
  Grid g(GridSpec::truncated(1, 1.0, 5));
  // Linear ramp: wrapping would see the jump from 1 back to -1.
  auto f = sample_function(g, [](std::span<const double> x) { return x[0]; });
  EXPECT_NEAR(empirical_lipschitz(f), 1.0, 1e-14);
}

TEST(VerifyBound, Examples) {
  Grid g(GridSpec::periodic(1, 2 * M_PI, 64));
  ScalarField zero(g);
  EXPECT_TRUE(verify_bound(zero, derive_bounds(Parabola{1, 2}, 0, 1, holding()), 0).holds);
  EXPECT_TRUE(verify_bound(zero, lipschitz_report(0.0), 0).holds);

  auto s = periodic_field(256, 2 * M_PI, [](double x) { return std::sin(x); });
  EXPECT_TRUE(verify_bound(s, trivial_report(s), 1e-12).holds);
  auto bad = verify_bound(s, lipschitz_report(0.5), 1e-12);
  ASSERT_FALSE(bad.holds);
  ASSERT_EQ(bad.failures.size(), 1u);
  const auto& w = bad.failures[0];
  EXPECT_EQ(w.which, "lipschitz");
  EXPECT_GT(std::abs(s[w.a] - s[w.b]) / s.grid().spacing(), 0.5);
}

TEST(VerifyBound, OscillationRestrictedToInterval) {
  auto s = periodic_field(64, 2 * M_PI, [](double x) { return std::sin(x); });
  GradientBoundReport r;
  r.case_a = true;
  r.oscillation_bound = 0.5;
  r.interval_hi = 0.1;  // pairs at most 0.2 apart
  EXPECT_TRUE(verify_bound(s, r, 0).holds);
  r.interval_hi = 2.0;
  auto v = verify_bound(s, r, 0);
  ASSERT_FALSE(v.holds);
  EXPECT_EQ(v.failures[0].which, "oscillation");
}

// Property: raising a bound never turns a pass into a failure.
TEST(BoundsProperty, VerdictMonotoneInBound) {
  Grid g(GridSpec::periodic(1, 1.0, 40));
  Rng rng = make_rng(12);
  std::vector<double> v(g.size());
  for (auto& x : v) x = uniform(rng, -1, 1);
  ScalarField f(g, v);
  bool passed = false;
  for (double b = 0.0; b < 100.0; b += 1.0) {
    const bool ok = verify_bound(f, lipschitz_report(b), 0).holds;
    if (passed) {
      EXPECT_TRUE(ok) << b;
    }
    passed = passed || ok;
  }
  EXPECT_TRUE(passed);
}
