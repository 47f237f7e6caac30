#include "viscmod/pde_solver.hpp"

#include <gtest/gtest.h>

using namespace viscmod;

namespace {
ScalarField random_field(const Grid& g, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<double> v(g.size());
  for (auto& x : v) x = uniform(rng, -1.0, 1.0);
  return ScalarField(g, v);
}

EllipticOperatorSpec example1_op() { return make_linear_drift(1.0, "0.5", 0.5, 1.0); }

CustomOperator constant_diffusion(Mat a) {
  CustomOperator op;
  op.name = "constant";
  op.diffusion = [a](const Vec&) { return a; };
  return op;
}
}  // namespace

TEST(Discretize, LaplaceMatchesThreePointStencil) {
  Grid g(GridSpec::periodic(1, 2 * M_PI, 8));
  auto dop = discretize(make_laplace(1.0), g);
  auto u = random_field(g, 5);
  const double h = g.spacing();
  const auto f = dop.apply(u.values());
  for (int i = 0; i < 8; ++i) {
    const double up = u[std::size_t((i + 1) % 8)], um = u[std::size_t((i + 7) % 8)], ui = u[std::size_t(i)];
    EXPECT_NEAR(f[std::size_t(i)], -(up - 2 * ui + um) / (h * h) + ui, 1e-12);
  }
}

TEST(Discretize, MinimalSurfaceAcceptedNonDominantRejected) {
  Grid g(GridSpec::periodic(2, 2 * M_PI, 8));
  EXPECT_NO_THROW(discretize(make_minimal_surface(), g));
  Mat a(2, 2);
  a << 1, 2, 2, 1;
  EXPECT_THROW(discretize(constant_diffusion(a), g), NonMonotoneStencil);
}

TEST(Discretize, StepBoundFormula) {
  Grid g(GridSpec::periodic(1, 2 * M_PI, 64));
  auto dop = discretize(example1_op(), g);
  const double h = g.spacing();
  EXPECT_NEAR(dop.tau_max(), h * h / (2 * 1.0 + h * 0.5 + h * h * 1.0), 1e-15);
}

TEST(Solve, Example1ConvergesToZero) {
  Grid g(GridSpec::periodic(1, 2 * M_PI, 64));
  auto dop = discretize(example1_op(), g);
  auto rep = solve_steady(dop, random_field(g, 1), 0.9 * dop.tau_max(), 1e-8, 200000);
  ASSERT_TRUE(rep.converged);
  EXPECT_LE(sup_norm(rep.field), 1e-8);
  EXPECT_EQ(rep.residual_history.size(), rep.iterations + 1);
  EXPECT_LE(residual(dop, rep.field), 1e-8);
}

TEST(Solve, ZeroInitIsAFixedPoint) {
  Grid g(GridSpec::periodic(1, 2 * M_PI, 16));
  auto dop = discretize(make_laplace(1.0), g);
  auto rep = solve_steady(dop, ScalarField(g), dop.tau_max(), 1e-12, 10);
  EXPECT_EQ(rep.iterations, 0u);
  EXPECT_EQ(rep.residual_history.front(), 0.0);
}

TEST(Solve, ManufacturedSineSecondOrder) {
  Grid g(GridSpec::periodic(1, 2 * M_PI, 128));
  auto dop = discretize(make_laplace(1.0), g).with_forcing([](const Vec& x) { return 2 * std::sin(x(0)); });
  auto rep = solve_steady(dop, ScalarField(g), 0.95 * dop.tau_max(), 1e-11, 500000);
  ASSERT_TRUE(rep.converged);
  double err = 0;
  for (std::size_t k = 0; k < g.size(); ++k) err = std::max(err, std::abs(rep.field[k] - std::sin(g.point(k)[0])));
  const double h = g.spacing();
  const double C = err / (h * h);
  EXPECT_GT(C, 0.01);
  EXPECT_LT(C, 1.0);
}

TEST(Residual, ZeroAndSineValues) {
  Grid g(GridSpec::periodic(1, 2 * M_PI, 256));
  EXPECT_EQ(residual(discretize(example1_op(), g), ScalarField(g)), 0.0);
  auto s = sample_function(g, [](std::span<const double> x) { return std::sin(x[0]); });
  EXPECT_NEAR(residual(discretize(make_laplace(1.0), g), s), 2.0, 1e-3);
}

// Upwinded drift keeps at least first-order consistency under refinement.
TEST(Residual, ConsistencyUnderRefinement) {
  auto op = make_linear_drift(1.0, "0.5", 0.5, 1.0);
  // u = sin x solves -u'' + 0.5 u' + u = 2 sin x + 0.5 cos x.
  Forcing rhs = [](const Vec& x) { return 2 * std::sin(x(0)) + 0.5 * std::cos(x(0)); };
  double prev = 0;
  for (int N : {32, 64, 128}) {
    Grid g(GridSpec::periodic(1, 2 * M_PI, N));
    auto dop = discretize(op, g).with_forcing(rhs);
    const double r = residual(dop, sample_function(g, [](std::span<const double> x) { return std::sin(x[0]); }));
    if (prev > 0) {
      EXPECT_LT(r, 0.7 * prev) << "N=" << N;
    }
    prev = r;
  }
}

TEST(Monotonicity, ProbeSeparatesStableAndUnstableSteps) {
  Grid g(GridSpec::periodic(1, 2 * M_PI, 8));
  auto dop = discretize(make_laplace(1.0), g);
  const double h = g.spacing();
  EXPECT_TRUE(monotonicity_probe(dop, h * h / 4, 1000, 1).ok());
  auto bad = monotonicity_probe(dop, 10 * h * h, 1000, 1);
  ASSERT_FALSE(bad.ok());
  ASSERT_TRUE(bad.witness.has_value());
  const auto& [u, v] = *bad.witness;
  for (std::size_t k = 0; k < u.size(); ++k) EXPECT_LE(u[k], v[k]);
  const auto uu = dop.update(u, 10 * h * h), uv = dop.update(v, 10 * h * h);
  bool broken = false;
  for (std::size_t k = 0; k < u.size(); ++k) broken = broken || uu[k] > uv[k] + 1e-10;
  EXPECT_TRUE(broken);
}

TEST(Monotonicity, ZeroOperatorIsIdentity) {
  Grid g(GridSpec::periodic(1, 1.0, 8));
  auto dop = discretize(constant_diffusion(Mat::Zero(1, 1)), g);
  EXPECT_TRUE(monotonicity_probe(dop, 1.0, 1000, 2).ok());
  auto u = random_field(g, 3);
  auto w = dop.update(u.values(), 1.0);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(w[k], u[k]);
}

TEST(Monotonicity, ConstantCoefficientTwoDimensionalAtStepBound) {
  Grid g(GridSpec::periodic(2, 2 * M_PI, 12));
  for (const auto& op : {make_laplace(1.0), make_linear_drift(1.0, "0.5*sin(y); 0.5*cos(x)", 1.0, 1.0)}) {
    auto dop = discretize(op, g);
    EXPECT_TRUE(monotonicity_probe(dop, dop.tau_max(), 1000, 9).ok()) << describe(op);
  }
}

namespace {
double worst_violation(const MonotonicityReport& r) {
  double w = 0.0;
  for (const auto& v : r.violations) w = std::max(w, v.update_u - v.update_v);
  return w;
}
}  // namespace

// With A evaluated at the upwinded gradient, a neighbour bump also moves the
// coefficient at the centre. The resulting order violations are of higher
// order in the perturbation size than the stencil weights.
TEST(Monotonicity, GradientDependentDiffusionViolationsAreHigherOrder) {
  Grid g(GridSpec::periodic(2, 2 * M_PI, 12));
  for (const auto& op : {make_minimal_surface(1.0), make_p_laplace(3.0, 1.0)}) {
    auto dop = discretize(op, g);
    const double big = worst_violation(monotonicity_probe(dop, dop.tau_max(), 1000, 9, 0.1));
    const double small = worst_violation(monotonicity_probe(dop, dop.tau_max(), 1000, 9, 0.01));
    EXPECT_GT(big, 0.0) << describe(op);
    EXPECT_LT(small, 0.02 * big) << describe(op);
  }
}

TEST(Solve, DeterministicAcrossThreadCounts) {
  Grid g(GridSpec::periodic(2, 2 * M_PI, 16));
  auto dop = discretize(make_linear_drift(1.0, "0.5*sin(y); 0.5*cos(x)", 1.0, 1.0), g);
  auto init = random_field(g, 8);
  auto a = solve_steady(dop, init, dop.tau_max(), 1e-6, 100000, Parallelism{1});
  auto b = solve_steady(dop, init, dop.tau_max(), 1e-6, 100000, Parallelism{8});
  ASSERT_EQ(a.iterations, b.iterations);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(a.field[k], b.field[k]);
}

TEST(Solve, ErrorPaths) {
  Grid g(GridSpec::periodic(1, 2 * M_PI, 16));
  auto dop = discretize(make_laplace(1.0), g);
  EXPECT_THROW(solve_steady(dop, ScalarField(g), 2 * dop.tau_max(), 1e-8, 10), ConfigError);
  auto nan = dop.with_forcing([](const Vec&) { return std::nan(""); });
  try {
    solve_steady(nan, ScalarField(g), dop.tau_max(), 1e-8, 10);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.iteration(), 0u);
  }
}

TEST(Solve, TruncatedGridKeepsClampRingAtZero) {
  Grid g(GridSpec::truncated(1, 6.0, 49));
  auto dop = discretize(example1_op(), g);
  auto rep = solve_steady(dop, random_field(g, 4), 0.9 * dop.tau_max(), 1e-8, 200000);
  ASSERT_TRUE(rep.converged);
  EXPECT_EQ(rep.field[0], 0.0);
  EXPECT_EQ(rep.field[g.size() - 1], 0.0);
  EXPECT_LE(sup_norm(rep.field), 1e-8);
}

// Property: discrete comparison. Ordered forcings give ordered solutions.
TEST(SolverProperty, OrderedForcingsGiveOrderedSolutions) {
  Grid g(GridSpec::periodic(1, 2 * M_PI, 32));
  auto base = discretize(example1_op(), g);
  auto lo = base.with_forcing([](const Vec& x) { return std::sin(x(0)); });
  auto hi = base.with_forcing([](const Vec& x) { return std::sin(x(0)) + 0.1 + 0.1 * std::cos(3 * x(0)); });
  auto a = solve_steady(lo, ScalarField(g), base.tau_max(), 1e-10, 200000);
  auto b = solve_steady(hi, ScalarField(g), base.tau_max(), 1e-10, 200000);
  ASSERT_TRUE(a.converged && b.converged);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_LE(a.field[k], b.field[k] + 1e-9);
}
