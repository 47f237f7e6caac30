#include "viscmod/structure_cond.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>

using namespace viscmod;

namespace {
Vec unit_x(int n) {
  Vec u = Vec::Zero(n);
  u(0) = 1.0;
  return u;
}

// Cyclic Jacobi eigenvalue iteration, independent of the library solver.
std::vector<double> jacobi_eigenvalues(Mat a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev;
  for (Eigen::Index i = 0; i < n; ++i) ev.push_back(a(i, i));
  std::sort(ev.begin(), ev.end());
  return ev;
}

double oracle_certificate(const Mat& A, const Mat& B, const Mat& Q) {
  const Eigen::Index n = Q.rows();
  Mat m(2 * n, 2 * n);
  m << Q - A, -Q, -Q, Q + B;
  return jacobi_eigenvalues(m).front();
}

Mat scalar(double v) { return Mat::Constant(1, 1, v); }

AdmissiblePair make_pair(Mat A, Mat B, Mat Q) {
  AdmissiblePair p;
  p.certificate = check_block_inequality(A, B, Q);
  p.A = std::move(A);
  p.B = std::move(B);
  p.Q = std::move(Q);
  return p;
}
}  // namespace

TEST(TwoPointHessian, Examples) {
  EXPECT_DOUBLE_EQ(build_P(1, 0.7, 0.3, 2.0, unit_x(1)).P(0, 0), 1.0);
  const auto h = build_P(2, 1.0, 1.0, 2.0, unit_x(2));
  Mat expect = Mat::Zero(2, 2);
  expect(0, 0) = 1.0;
  expect(1, 1) = 0.5;
  EXPECT_NEAR((h.P - expect).norm(), 0.0, 1e-15);
  for (int n = 1; n <= 3; ++n) {
    Rng rng = make_rng(1, std::uint64_t(n));
    const auto hh = build_P(n, 0.4, 1.1, -0.7, random_unit(rng, n));
    const Vec xi = random_unit(rng, n) * 3.0;
    Vec both(2 * n);
    both << xi, xi;
    EXPECT_LT((hh.block() * both).norm(), 1e-14);
  }
}

TEST(TwoPointHessian, InputValidation) {
  EXPECT_THROW(build_P(1, 0.0, 1, 1, unit_x(1)), ConfigError);
  EXPECT_THROW(build_P(2, 1.0, 1, 1, unit_x(3)), DimensionMismatch);
  EXPECT_THROW(build_P(2, 1.0, 1, 1, Vec::Ones(2)), ConfigError);
}

// P is the x-Hessian of 2 phi(|x - y| / 2); compare with central differences.
TEST(TwoPointHessian, MatchesFiniteDifferenceHessian) {
  for (std::uint64_t t = 0; t < 100; ++t) {
    Rng rng = make_rng(99, t);
    const int n = 1 + int(t % 3);
    const double c1 = uniform(rng, 0.1, 2), c2 = uniform(rng, -1, 1), c3 = uniform(rng, -1, 1);
    auto phi = [&](double r) { return c1 * r + c2 * r * r + c3 * r * r * r; };
    const double s = uniform(rng, 0.2, 1.5);
    const double d1 = c1 + 2 * c2 * s + 3 * c3 * s * s, d2 = 2 * c2 + 6 * c3 * s;
    const Vec u = random_unit(rng, n);
    const Vec y = Vec::Zero(n), x0 = y + 2 * s * u;
    auto g = [&](const Vec& x) { return 2 * phi((x - y).norm() / 2); };
    const double h = 1e-4;
    Mat fd(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Vec ei = Vec::Zero(n), ej = Vec::Zero(n);
        ei(i) = h;
        ej(j) = h;
        fd(i, j) = (g(x0 + ei + ej) - g(x0 + ei - ej) - g(x0 - ei + ej) + g(x0 - ei - ej)) / (4 * h * h);
      }
    EXPECT_LT((build_P(n, s, d1, d2, u).P - fd).cwiseAbs().maxCoeff(), 1e-6) << "t=" << t;
  }
}

TEST(BuildQ, Examples) {
  const Mat P = build_P(2, 1.0, 1.0, 2.0, unit_x(2)).P;
  EXPECT_EQ(build_Q(P, 0.0), P);
  EXPECT_DOUBLE_EQ(build_Q(scalar(1.0), 0.5)(0, 0), 2.0);
  const Mat Q = build_Q(P, 1.0);
  EXPECT_DOUBLE_EQ(Q(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(Q(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(Q(0, 1), 0.0);
  EXPECT_THROW(build_Q(P, -1.0), ConfigError);
}

TEST(Certificate, ScalarExamples) {
  EXPECT_NEAR(check_block_inequality(scalar(0), scalar(0), scalar(1)), 0.0, 1e-15);
  EXPECT_NEAR(oracle_certificate(scalar(0), scalar(0), scalar(1)), 0.0, 1e-15);
  EXPECT_NEAR(check_block_inequality(scalar(1), scalar(-1), scalar(1)), -1.0, 1e-14);
  EXPECT_NEAR(oracle_certificate(scalar(1), scalar(-1), scalar(1)), -1.0, 1e-14);
}

// For Q = diag(3, 1), A = Q - I, B = Q + I the eigenvalue-3 block
// [[1, -3], [-3, 7]] is indefinite: the pair is not admissible.
TEST(Certificate, ShiftByIdentityIsNotAdmissibleForLargeEigenvalue) {
  Mat Q = Mat::Zero(2, 2);
  Q(0, 0) = 3;
  Q(1, 1) = 1;
  const Mat I = Mat::Identity(2, 2);
  const double cert = check_block_inequality(Q - I, Q + I, Q);
  EXPECT_NEAR(cert, 4 - 3 * std::sqrt(2.0), 1e-13);
  EXPECT_NEAR(cert, oracle_certificate(Q - I, Q + I, Q), 1e-12);
  EXPECT_LT(cert, -kCertificateTol);
  // The smallest admissible shift for eigenvalue 3 is (sqrt 2 - 1) 3.
  const double t = (std::sqrt(2.0) - 1) * 3;
  EXPECT_NEAR(check_block_inequality(Q - t * I, Q + t * I, Q), 0.0, 1e-12);
}

TEST(Certificate, AgreesWithJacobiOracle) {
  for (std::uint64_t t = 0; t < 200; ++t) {
    Rng rng = make_rng(7, t);
    const int n = 1 + int(t % 4);
    const Mat Q = random_symmetric(rng, n), A = random_symmetric(rng, n), B = random_symmetric(rng, n);
    EXPECT_NEAR(check_block_inequality(A, B, Q), oracle_certificate(A, B, Q), 1e-10);
  }
}

TEST(Sampler, EveryStrategyProducesAdmissiblePairs) {
  for (std::uint64_t t = 0; t < 200; ++t) {
    Rng rng = make_rng(13, t);
    const int n = 1 + int(t % 4);
    const Mat Q = random_symmetric(rng, n, uniform(rng, 0.1, 5));
    for (auto st : {PairStrategy::Extremal, PairStrategy::BoundaryProjected, PairStrategy::ShiftedDirection,
                    PairStrategy::Rejection}) {
      const auto pr = sample_admissible_pair(Q, st, rng);
      EXPECT_GE(oracle_certificate(pr.A, pr.B, Q), -1e-9) << to_string(st);
    }
  }
}

TEST(Sampler, StrategyQuotasAndDeterminism) {
  const Mat Q = build_P(3, 0.8, 0.5, -1.2, unit_x(3), 0.3).Q;
  const auto pairs = sample_admissible_pairs(Q, 400, 5);
  EXPECT_EQ(pairs.front().strategy, PairStrategy::Extremal);
  std::map<PairStrategy, int> count;
  for (const auto& p : pairs) ++count[p.strategy];
  for (auto st : {PairStrategy::BoundaryProjected, PairStrategy::ShiftedDirection, PairStrategy::Rejection})
    EXPECT_GE(count[st], 100);
  const auto again = sample_admissible_pairs(Q, 400, 5);
  for (std::size_t i = 0; i < pairs.size(); ++i) EXPECT_EQ(pairs[i].A, again[i].A);
}

TEST(Sampler, StarvationIsReported) {
  // A Rejection draw with one attempt on a large Q fails often enough to see it.
  const Mat Q = 50.0 * Mat::Identity(3, 3);
  bool starved = false;
  for (std::uint64_t t = 0; t < 50 && !starved; ++t) {
    Rng rng = make_rng(1, t);
    try {
      sample_admissible_pair(-Q, PairStrategy::Rejection, rng, 1);
    } catch (const SamplerStarvation&) {
      starved = true;
    }
  }
  EXPECT_TRUE(starved);
}

TEST(LemmaTrace, Examples) {
  auto rep = verify_lemma_31(std::vector{make_pair(scalar(0), scalar(0), scalar(1))}, 2.0);
  ASSERT_EQ(rep.verdicts.size(), 1u);
  EXPECT_TRUE(rep.verdicts[0].a_le_b);
  EXPECT_TRUE(rep.verdicts[0].trace_ok);
  EXPECT_DOUBLE_EQ(rep.verdicts[0].bound, 4.0);

  const auto h = build_P(2, 1.0, 1.0, 2.0, unit_x(2));
  auto big = verify_lemma_31(sample_admissible_pairs(h.Q, 10000, 3), 2.0);
  EXPECT_TRUE(big.ok());
  EXPECT_EQ(big.excluded, 0u);
}

TEST(LemmaTrace, InadmissiblePairIsScreenedOut) {
  std::vector pairs{make_pair(scalar(0), scalar(0), scalar(1)), make_pair(scalar(1), scalar(-1), scalar(1))};
  auto rep = verify_lemma_31(pairs, 2.0);
  EXPECT_EQ(rep.excluded, 1u);
  EXPECT_FALSE(rep.verdicts[1].admissible);
  EXPECT_TRUE(rep.ok());
}

TEST(LemmaTrace, ZeroEpsilonReducesToUnperturbedCheck) {
  const auto h = build_P(3, 0.6, 0.8, 1.4, unit_x(3), 0.0);
  const auto pairs = sample_admissible_pairs(h.Q, 500, 8);
  EXPECT_EQ(verify_lemma_32(pairs, h).verdicts, verify_lemma_31(pairs, h.phi_second).verdicts);
}

TEST(LemmaTrace, PerturbedBoundHoldsOnRandomJets) {
  for (double eps : {0.1, 0.5, 1.0}) {
    JetSampling cfg;
    cfg.samples = 2000;
    cfg.seed = 4;
    auto rep = run_lemma_suite(cfg, eps);
    EXPECT_TRUE(rep.violations.empty()) << eps;
    EXPECT_EQ(rep.excluded, 0u);
  }
}

TEST(LemmaTrace, SharpnessWitness) {
  for (auto [phi2, eps] : {std::pair{-2.0, 0.0}, std::pair{-2.0, 0.1}, std::pair{-0.5, 1.0}}) {
    const auto w = lemma_sharpness_witness(phi2, eps);
    EXPECT_NEAR(w.gap, 0.0, 1e-12);
    EXPECT_GE(w.certificate, -1e-12);
    EXPECT_NEAR(w.bound, 2 * phi2 + 2 * eps * phi2 * phi2, 1e-12);
  }
  EXPECT_THROW(lemma_sharpness_witness(2.0, 0.5), ConfigError);
}

// For a scalar Q > 0 every admissible pair has a - b <= 0.
TEST(LemmaTrace, PositiveScalarQCapsDifferenceAtZero) {
  for (const auto& p : sample_admissible_pairs(scalar(4.0), 2000, 6))
    EXPECT_LE((p.A - p.B)(0, 0), 1e-9);
}

TEST(Reflection, SpectrumAndBound) {
  for (int n = 1; n <= 4; ++n) {
    Rng rng = make_rng(31, std::uint64_t(n));
    const Vec u = random_unit(rng, n);
    const auto h = build_P(n, 0.9, 0.4, 1.3, u);
    const auto pr = sample_admissible_pair(h.Q, PairStrategy::ShiftedDirection, rng);
    const auto rep = trace_bound_via_C(pr.A, pr.B, h.Q, u);
    EXPECT_NEAR(rep.reflection_min_eig, 0.0, 1e-12);
    EXPECT_NEAR(rep.reflection_max_eig, 2.0, 1e-12);
    EXPECT_TRUE(rep.holds);
    EXPECT_NEAR(rep.bound, 4 * u.dot(h.Q * u), 1e-12);
    EXPECT_NEAR(rep.bound, 2 * h.phi_second, 1e-12);
    const auto same = trace_bound_via_C(h.Q, h.Q, h.Q, u);
    EXPECT_EQ(same.trace_diff, 0.0);
    EXPECT_TRUE(same.holds);
  }
  EXPECT_NEAR(trace_bound_via_C(scalar(0), scalar(0), scalar(2.0), Vec::Ones(1)).bound, 8.0, 1e-14);
}

TEST(Structure, CatalogPairingsHold) {
  StructureSampling cfg;
  cfg.samples = 3000;
  std::vector<Pairing> pairings{make_pairing(make_linear_drift(1, "0.5", 0.5, 1), {1}),
                                make_pairing(make_linear_drift(1, "0.5*sin(y); 0.5*cos(x)", 1, 1), {2})};
  for (const auto& F : {make_laplace(1), make_p_laplace(3, 1), make_minimal_surface(1)})
    pairings.push_back(make_pairing(F, {1, 2, 3}));
  for (const auto& pr : pairings) {
    auto rep = check_structure_condition(pr, cfg);
    EXPECT_TRUE(rep.ok()) << rep.pairing_id << " worst " << rep.worst_margin;
  }
}

TEST(Structure, DriftDimensionMustMatchSampledDimensions) {
  EXPECT_THROW(make_pairing(make_linear_drift(1, "0.5", 0.5, 1), {1, 2}), DimensionMismatch);
}

TEST(Structure, MismatchedZerothOrderIsFalsified) {
  auto pr = make_pairing(make_linear_drift(1, "0.5", 0.5, 1), {1});
  pr.f = LinearDrift1D{1, 0.5, 10};
  StructureSampling cfg;
  cfg.samples = 500;
  auto rep = check_structure_condition(pr, cfg);
  ASSERT_FALSE(rep.ok());
  EXPECT_GT(rep.worst_margin, 0.0);
  for (const auto& v : rep.violations) EXPECT_GT(v.margin, kInequalityTol);
}

// The (1 + |p|)^(-3/2) profile is below the true smallest eigenvalue only for
// |p| <= 1; at steeper slopes with negative curvature the pairing breaks
// while the (1 + |p|^2)^(-3/2) profile keeps holding.
TEST(Structure, MinimalSurfaceProfilesAtSteepSlopes) {
  StructureSampling cfg;
  cfg.samples = 3000;
  cfg.phi_prime_max = 3.0;
  auto loose = check_structure_condition(make_pairing(make_minimal_surface(1), {1, 2}, false), cfg);
  auto std_ = check_structure_condition(make_pairing(make_minimal_surface(1), {1, 2}, true), cfg);
  EXPECT_FALSE(loose.ok());
  EXPECT_TRUE(std_.ok()) << std_.worst_margin;
  EXPECT_EQ(loose.pairing_id, "example2_minimal_surface_paper");
  EXPECT_EQ(std_.pairing_id, "example2_minimal_surface_std");
}

TEST(Structure, CustomOperatorsHaveNoPairing) {
  CustomOperator op;
  EXPECT_THROW(make_pairing(op, {1}), ConfigError);
  EXPECT_THROW(make_pairing(make_laplace(), {}), ConfigError);
}

// Properties: only w - z enters, and thread count does not change the report.
TEST(StructureProperty, ShiftInvarianceAndDeterminism) {
  auto pr = make_pairing(make_linear_drift(1, "0.5", 0.5, 1), {1});
  pr.f = LinearDrift1D{1, 0.5, 3};
  StructureSampling cfg;
  cfg.samples = 800;
  auto a = check_structure_condition(pr, cfg, Parallelism{1});
  auto b = check_structure_condition(pr, cfg, Parallelism{8}, 0.0);
  auto c = check_structure_condition(pr, cfg, Parallelism{1}, 5.0);
  ASSERT_EQ(a.violations.size(), b.violations.size());
  ASSERT_EQ(a.violations.size(), c.violations.size());
  for (std::size_t i = 0; i < a.violations.size(); ++i) {
    EXPECT_EQ(a.violations[i].margin, b.violations[i].margin);
    EXPECT_NEAR(a.violations[i].margin, c.violations[i].margin, 1e-9);
  }
  EXPECT_FALSE(a.ok());
}
