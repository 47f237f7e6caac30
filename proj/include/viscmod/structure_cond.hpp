#pragma once

// Two-point matrix calculus behind the structure condition.
//
// For the doubled test function (x, y) -> 2 phi(|x - y| / 2) with s = |x - y|/2
// and unit direction u = (x - y)/|x - y|, the x-Hessian is
//
//   P = (phi''/2) u u^T + (phi'/(2 s)) (I - u u^T),
//
// the full Hessian is [[P, -P], [-P, P]], and the right-hand side of the
// matrix inequality for the semijets (A, B) at parameter eps collapses to
// [[Q, -Q], [-Q, Q]] with Q = P + 2 eps P^2.

#include "viscmod/common.hpp"
#include "viscmod/oned.hpp"
#include "viscmod/operators.hpp"

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace viscmod {

inline constexpr double kCertificateTol = 1e-10;
inline constexpr double kInequalityTol = 1e-8;

struct TwoPointHessian {
  int n = 1;
  double s = 1.0;
  double phi_prime = 0.0;
  double phi_second = 0.0;
  Vec u;
  Mat P;
  double epsilon = 0.0;
  Mat Q;

  /// Hessian of (x, y) -> 2 phi(|x - y| / 2), i.e. [[P, -P], [-P, P]].
  Mat block() const {
    Mat b(2 * n, 2 * n);
    b << P, -P, -P, P;
    return b;
  }

  /// |P u|; equals |phi''| / 2 because u is an eigenvector of P.
  double norm_Pu() const { return (P * u).norm(); }
};

inline Mat build_Q(const Mat& P, double epsilon) {
  if (!(epsilon >= 0.0)) throw ConfigError("build_Q: epsilon must be nonnegative");
  return P + 2.0 * epsilon * P * P;
}

inline TwoPointHessian build_P(int n, double s, double phi_prime, double phi_second, const Vec& u,
                               double epsilon = 0.0) {
  if (!(s > 0.0)) throw ConfigError("build_P: s must be positive");
  if (u.size() != n) throw DimensionMismatch("build_P: direction has wrong dimension");
  if (std::abs(u.norm() - 1.0) > 1e-12) throw ConfigError("build_P: direction must be a unit vector");
  TwoPointHessian h;
  h.n = n;
  h.s = s;
  h.phi_prime = phi_prime;
  h.phi_second = phi_second;
  h.u = u;
  const Mat uu = u * u.transpose();
  h.P = 0.5 * phi_second * uu;
  if (n > 1) h.P += (phi_prime / (2.0 * s)) * (Mat::Identity(n, n) - uu);
  h.epsilon = epsilon;
  h.Q = build_Q(h.P, epsilon);
  return h;
}

/// Smallest eigenvalue of [[Q - A, -Q], [-Q, Q + B]]; (A, B) is admissible
/// when it is >= -1e-10.
inline double check_block_inequality(const Mat& A, const Mat& B, const Mat& Q) {
  const Eigen::Index n = Q.rows();
  if (A.rows() != n || A.cols() != n || B.rows() != n || B.cols() != n || Q.cols() != n)
    throw DimensionMismatch("check_block_inequality: A, B, Q must be square of equal size");
  Mat m(2 * n, 2 * n);
  m << Q - A, -Q, -Q, Q + B;
  return min_eigenvalue(symmetrize(m));
}

enum class PairStrategy { Extremal, BoundaryProjected, ShiftedDirection, Rejection };

inline const char* to_string(PairStrategy s) {
  switch (s) {
    case PairStrategy::Extremal: return "extremal";
    case PairStrategy::BoundaryProjected: return "boundary_projected";
    case PairStrategy::ShiftedDirection: return "shifted_direction";
    default: return "rejection";
  }
}

struct AdmissiblePair {
  Mat A;
  Mat B;
  Mat Q;
  double certificate = 0.0;
  PairStrategy strategy = PairStrategy::Extremal;
};

namespace detail {

inline Mat matrix_abs(const Mat& sym) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  return es.eigenvectors() * es.eigenvalues().cwiseAbs().asDiagonal() * es.eigenvectors().transpose();
}

/// Smallest t with [[t I, -Q], [-Q, 2Q + t I]] >= 0: per eigenvalue q of Q,
/// t^2 + 2 q t - q^2 >= 0 with t >= 0.
inline double shifted_direction_threshold(const Mat& Q) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(Q), Eigen::EigenvaluesOnly);
  double t = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double q = es.eigenvalues()(i);
    t = std::max(t, q >= 0.0 ? (std::sqrt(2.0) - 1.0) * q : (1.0 + std::sqrt(2.0)) * -q);
  }
  return t;
}

/// max(1, spectral radius of Q).
inline double matrix_scale(const Mat& Q) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(Q), Eigen::EigenvaluesOnly);
  return std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
}

}  // namespace detail

/// One admissible pair for Q by the given strategy.
///
///  - Extremal: A = Q - |Q|, B = |Q| - Q. Saturates Trace(A - B) <= 4 u^T Q u
///    whenever u^T Q u <= 0 and Q is nonnegative off u.
///  - BoundaryProjected: A = B + R with R <= 0, then A - tI, B + tI with t
///    chosen so the certificate is exactly zero (a boundary point).
///  - ShiftedDirection: A = Q - tI, B = Q + tI with t >= the admissibility
///    threshold; one draw in four sits at the threshold.
///  - Rejection: independent random symmetric A, B with a random diagonal
///    shift, kept only if admissible.
inline AdmissiblePair sample_admissible_pair(const Mat& Q, PairStrategy strategy, Rng& rng,
                                             int max_attempts = 100) {
  const int n = int(Q.rows());
  const double sigma = detail::matrix_scale(Q);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    AdmissiblePair pr;
    pr.Q = Q;
    pr.strategy = strategy;
    switch (strategy) {
      case PairStrategy::Extremal: {
        const Mat absq = detail::matrix_abs(Q);
        pr.A = symmetrize(Q - absq);
        pr.B = symmetrize(absq - Q);
        break;
      }
      case PairStrategy::BoundaryProjected: {
        const Mat b = random_symmetric(rng, n, sigma);
        const Mat r = -random_psd(rng, n, sigma * uniform(rng, 0.0, 1.0));
        Mat a = b + r;
        const double t = -check_block_inequality(a, b, Q);
        pr.A = a - t * Mat::Identity(n, n);
        pr.B = b + t * Mat::Identity(n, n);
        break;
      }
      case PairStrategy::ShiftedDirection: {
        const double t0 = detail::shifted_direction_threshold(Q);
        const double t = uniform(rng, 0.0, 1.0) < 0.25 ? t0 : t0 + sigma * std::abs(gaussian(rng));
        pr.A = Q - t * Mat::Identity(n, n);
        pr.B = Q + t * Mat::Identity(n, n);
        break;
      }
      case PairStrategy::Rejection: {
        // A negative eigenvalue q of Q needs a shift of at least (1 + sqrt 2)|q|.
        const double kappa = uniform(rng, 0.0, 4.5 * sigma);
        // Entry scale sigma / (2 sqrt n) keeps the spectral radius near sigma.
        const double scale = sigma / (2.0 * std::sqrt(double(n)));
        pr.A = random_symmetric(rng, n, scale) - kappa * Mat::Identity(n, n);
        pr.B = random_symmetric(rng, n, scale) + kappa * Mat::Identity(n, n);
        break;
      }
    }
    pr.certificate = check_block_inequality(pr.A, pr.B, Q);
    if (pr.certificate >= -kCertificateTol) return pr;
  }
  throw SamplerStarvation(std::string("admissible-pair sampler (") + to_string(strategy) + ") starved after " +
                          std::to_string(max_attempts) + " attempts");
}

/// `count` admissible pairs for a fixed Q. The first pair is the extremal one;
/// the rest cycle through the three randomized strategies, so each
/// contributes at least count/4 pairs for count >= 4. Pair i draws from the
/// stream (seed, i).
inline std::vector<AdmissiblePair> sample_admissible_pairs(const Mat& Q, std::size_t count, std::uint64_t seed) {
  std::vector<AdmissiblePair> out;
  out.reserve(count);
  static constexpr PairStrategy cycle[] = {PairStrategy::BoundaryProjected, PairStrategy::ShiftedDirection,
                                           PairStrategy::Rejection};
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = make_rng(seed, i);
    out.push_back(sample_admissible_pair(Q, i == 0 ? PairStrategy::Extremal : cycle[(i - 1) % 3], rng));
  }
  return out;
}

// ////////////////////////////////////////////////////////////////////////////
// Lemma checks

struct LemmaVerdict {
  bool admissible = true;  // passed the certificate screen
  bool a_le_b = true;
  bool trace_ok = true;
  double certificate = 0.0;
  double max_eig_diff = 0.0;  // largest eigenvalue of A - B
  double trace_diff = 0.0;    // Trace(A - B)
  double bound = 0.0;
  bool ok() const { return !admissible || (a_le_b && trace_ok); }
  bool operator==(const LemmaVerdict&) const = default;
};

struct LemmaCheckReport {
  std::vector<LemmaVerdict> verdicts;
  std::size_t excluded = 0;
  std::vector<std::size_t> violations;  // indices into verdicts
  bool ok() const { return violations.empty(); }
};

inline LemmaVerdict lemma_verdict(const AdmissiblePair& pr, double bound) {
  LemmaVerdict v;
  v.certificate = check_block_inequality(pr.A, pr.B, pr.Q);
  v.admissible = v.certificate >= -kCertificateTol;
  const Mat diff = symmetrize(pr.A - pr.B);
  v.max_eig_diff = max_eigenvalue(diff);
  v.trace_diff = diff.trace();
  v.bound = bound;
  v.a_le_b = v.max_eig_diff <= kCertificateTol;
  v.trace_ok = v.trace_diff <= bound + kInequalityTol;
  return v;
}

inline LemmaCheckReport verify_with_bound(std::span<const AdmissiblePair> pairs, double bound) {
  LemmaCheckReport rep;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    LemmaVerdict v = lemma_verdict(pairs[i], bound);
    if (!v.admissible) ++rep.excluded;
    if (!v.ok()) rep.violations.push_back(i);
    rep.verdicts.push_back(v);
  }
  return rep;
}

/// A <= B and Trace(A - B) <= 2 phi'' for pairs admissible against Q = P.
inline LemmaCheckReport verify_lemma_31(std::span<const AdmissiblePair> pairs, double phi_second) {
  return verify_with_bound(pairs, 2.0 * phi_second);
}

/// A <= B and Trace(A - B) <= 2 phi'' + 8 eps |P u|^2 for pairs admissible
/// against Q = P + 2 eps P^2.
inline LemmaCheckReport verify_lemma_32(std::span<const AdmissiblePair> pairs, const TwoPointHessian& hess) {
  const double pu = hess.norm_Pu();
  return verify_with_bound(pairs, 2.0 * hess.phi_second + 8.0 * hess.epsilon * pu * pu);
}

struct TraceBoundReport {
  double reflection_min_eig = 0.0;
  double reflection_max_eig = 0.0;
  bool reflection_psd = false;
  double trace_diff = 0.0;
  double bound = 0.0;  // 2 Trace((I - C) Q) = 4 u^T Q u
  bool holds = false;
};

/// The trace bound through the reflection C = I - 2 u u^T, for which
/// [[I, C], [C, I]] is positive semidefinite with spectrum {0, 2}.
inline TraceBoundReport trace_bound_via_C(const Mat& A, const Mat& B, const Mat& Q, const Vec& u) {
  const Eigen::Index n = Q.rows();
  if (u.size() != n) throw DimensionMismatch("trace_bound_via_C: direction has wrong dimension");
  const Mat I = Mat::Identity(n, n);
  const Mat C = I - 2.0 * u * u.transpose();
  Mat blk(2 * n, 2 * n);
  blk << I, C, C, I;
  Eigen::SelfAdjointEigenSolver<Mat> es(blk, Eigen::EigenvaluesOnly);
  TraceBoundReport rep;
  rep.reflection_min_eig = es.eigenvalues().minCoeff();
  rep.reflection_max_eig = es.eigenvalues().maxCoeff();
  rep.reflection_psd = rep.reflection_min_eig >= -kCertificateTol;
  rep.trace_diff = (A - B).trace();
  rep.bound = 2.0 * ((I - C) * Q).trace();
  rep.holds = rep.reflection_psd && rep.trace_diff <= rep.bound + kInequalityTol;
  return rep;
}

// ////////////////////////////////////////////////////////////////////////////
// Randomized lemma suites over jets

struct JetSampling {
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  int max_dim = 4;
  double s_min = 0.05;
  double s_max = 2.0;
  double phi_prime_max = 1.0;
  double phi_second_max = 2.0;
};

struct LemmaSample {
  std::size_t index = 0;
  int n = 1;
  double s = 0.0, phi_prime = 0.0, phi_second = 0.0, epsilon = 0.0;
  PairStrategy strategy = PairStrategy::Extremal;
  LemmaVerdict verdict;
};

struct LemmaSuiteReport {
  double epsilon = 0.0;
  std::vector<LemmaSample> samples;
  std::vector<std::size_t> violations;
  std::size_t excluded = 0;
  bool ok() const { return violations.empty(); }
};

/// Sample i draws (n, s, phi', phi'', u) and one admissible pair from the
/// stream (seed, i); strategies cycle with i.
inline LemmaSuiteReport run_lemma_suite(const JetSampling& cfg, double epsilon, Parallelism par = {}) {
  LemmaSuiteReport rep;
  rep.epsilon = epsilon;
  rep.samples.resize(cfg.samples);
  static constexpr PairStrategy cycle[] = {PairStrategy::Extremal, PairStrategy::BoundaryProjected,
                                           PairStrategy::ShiftedDirection, PairStrategy::Rejection};
  parallel_chunks(cfg.samples, par, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      Rng rng = make_rng(cfg.seed, i);
      LemmaSample smp;
      smp.index = i;
      smp.n = 1 + int(std::uniform_int_distribution<int>(0, cfg.max_dim - 1)(rng));
      smp.s = uniform(rng, cfg.s_min, cfg.s_max);
      smp.phi_prime = uniform(rng, -cfg.phi_prime_max, cfg.phi_prime_max);
      smp.phi_second = uniform(rng, -cfg.phi_second_max, cfg.phi_second_max);
      smp.epsilon = epsilon;
      const Vec u = random_unit(rng, smp.n);
      const TwoPointHessian h = build_P(smp.n, smp.s, smp.phi_prime, smp.phi_second, u, epsilon);
      smp.strategy = cycle[i % 4];
      const AdmissiblePair pr = sample_admissible_pair(h.Q, smp.strategy, rng);
      const double pu = h.norm_Pu();
      smp.verdict = lemma_verdict(pr, 2.0 * smp.phi_second + 8.0 * epsilon * pu * pu);
      rep.samples[i] = smp;
    }
  });
  for (const auto& smp : rep.samples) {
    if (!smp.verdict.admissible) ++rep.excluded;
    if (!smp.verdict.ok()) rep.violations.push_back(smp.index);
  }
  return rep;
}

struct SharpnessWitness {
  double trace_diff = 0.0;
  double bound = 0.0;
  double gap = 0.0;  // bound - trace_diff
  double certificate = 0.0;
};

/// One-dimensional extremal pair a = 2Q, b = -2Q for Q = P + 2 eps P^2 <= 0,
/// which attains a - b = 4Q = 2 phi'' + 8 eps |P u|^2. Needs phi'' < 0 and
/// eps |phi''| <= 1; for Q > 0 the admissible maximum of a - b is 0.
inline SharpnessWitness lemma_sharpness_witness(double phi_second, double epsilon) {
  const Vec u = Vec::Ones(1);
  const TwoPointHessian h = build_P(1, 1.0, 0.0, phi_second, u, epsilon);
  if (h.Q(0, 0) > 0.0) throw ConfigError("sharpness witness needs Q <= 0 (phi'' < 0 and eps |phi''| <= 1)");
  Rng unused(0);
  const AdmissiblePair pr = sample_admissible_pair(h.Q, PairStrategy::Extremal, unused);
  SharpnessWitness w;
  w.trace_diff = (pr.A - pr.B).trace();
  const double pu = h.norm_Pu();
  w.bound = 2.0 * phi_second + 8.0 * epsilon * pu * pu;
  w.gap = w.bound - w.trace_diff;
  w.certificate = pr.certificate;
  return w;
}

// ////////////////////////////////////////////////////////////////////////////
// Structure condition

using Remainder = std::function<double(double s, double phi, double dphi, double d2phi)>;

/// An n-dimensional operator F paired with a one-dimensional f and the
/// remainder q multiplying eps in the structure inequality.
struct Pairing {
  std::string id;
  EllipticOperatorSpec F;
  OneDimOperatorSpec f;
  Remainder q;
  std::vector<int> dims{1, 2};
};

inline Profile1D profile_1d_for(DiffusionProfile p, bool minimal_surface_std) {
  switch (p) {
    case DiffusionProfile::Laplace: return Profile1D::Laplace;
    case DiffusionProfile::PLaplace: return Profile1D::PLaplace;
    default: return minimal_surface_std ? Profile1D::MinimalSurfaceStd : Profile1D::MinimalSurfacePaper;
  }
}

/// Pairing table.
///
///  - linear drift  <-> LinearDrift1D(lambda, B, c),  q = 2 lambda_bar phi''^2
///    with lambda_bar the largest sampled eigenvalue of A(p);
///  - quasilinear   <-> QuasiDiffusion1D(profile, c), q = 2 lambda_max(A(|phi'|)) phi''^2.
///
/// Both come from Trace(A (A - B)) <= lambda_min Trace(A - B) for A - B <= 0
/// and 8 eps |P u|^2 = 2 eps phi''^2.
inline Pairing make_pairing(const EllipticOperatorSpec& F, std::vector<int> dims, bool minimal_surface_std = false) {
  Pairing pr;
  pr.F = F;
  pr.dims = std::move(dims);
  if (pr.dims.empty()) throw ConfigError("pairing needs at least one dimension");
  if (const auto* ld = std::get_if<LinearDrift>(&F)) {
    pr.id = "example1";
    pr.f = LinearDrift1D{ld->lambda, ld->drift_bound, ld->c};
    if (ld->drift) {
      for (int n : pr.dims) {
        const auto m = ld->drift(Vec::Zero(n)).size();
        if (m != n)
          throw DimensionMismatch("drift field has " + std::to_string(m) + " components, pairing samples dimension " +
                                  std::to_string(n));
      }
    }
    double lam_bar = 0.0;
    for (int n : pr.dims) {
      for (std::size_t k = 0; k < 256; ++k) {
        Rng rng = make_rng(0xa11ceULL, k);
        const Vec p = random_unit(rng, n) * uniform(rng, 0.0, 4.0);
        lam_bar = std::max(lam_bar, max_eigen_lambda(F, p));
      }
    }
    pr.q = [lam_bar](double, double, double, double d2) { return 2.0 * lam_bar * d2 * d2; };
  } else if (const auto* ql = std::get_if<QuasilinearTrace>(&F)) {
    const Profile1D prof = profile_1d_for(ql->profile, minimal_surface_std);
    pr.id = std::string("example2_") + to_string(prof);
    pr.f = QuasiDiffusion1D{prof, ql->p_exp, ql->c};
    const int n0 = pr.dims.front();
    pr.q = [F, n0](double, double, double d1, double d2) {
      Vec p = Vec::Zero(n0);
      p(0) = std::abs(d1);
      return 2.0 * max_eigen_lambda(F, p, EvalOptions{true}) * d2 * d2;
    };
  } else {
    throw ConfigError("no pairing table entry for custom operators");
  }
  return pr;
}

struct StructureSampling {
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  double s_min = 0.05;
  double s_max = 2.0;
  double phi_prime_max = 1.0;
  double phi_second_max = 2.0;
  double eps_max = 1.0;
  double box_half_width = M_PI;
};

struct StructureViolation {
  std::size_t index = 0;
  int n = 1;
  double s = 0.0, phi = 0.0, phi_prime = 0.0, phi_second = 0.0, epsilon = 0.0;
  PairStrategy strategy = PairStrategy::Extremal;
  double lhs = 0.0, rhs = 0.0, margin = 0.0;
};

struct StructureReport {
  std::string pairing_id;
  std::size_t samples = 0;
  std::vector<StructureViolation> violations;
  double worst_margin = -std::numeric_limits<double>::infinity();
  std::size_t worst_index = 0;
  bool ok() const { return violations.empty(); }
};

/// Samples (x, y, z, w, phi-jet, eps, A, B) with |x - y| = 2 s,
/// w - z = 2 phi(s) >= 0, p = phi' u and (A, B) admissible for
/// Q = P + 2 eps P^2, and checks
///
///   F(y, z, p, B) - F(x, w, p, A) <= -2 f(s, phi, phi', phi'') + eps q + 1e-8.
///
/// `z_shift` is added to both z and w (only w - z enters).
inline StructureReport check_structure_condition(const Pairing& pairing, const StructureSampling& cfg,
                                                 Parallelism par = {}, double z_shift = 0.0) {
  StructureReport rep;
  rep.pairing_id = pairing.id;
  rep.samples = cfg.samples;
  std::vector<StructureViolation> all(cfg.samples);
  static constexpr PairStrategy cycle[] = {PairStrategy::Extremal, PairStrategy::BoundaryProjected,
                                           PairStrategy::ShiftedDirection, PairStrategy::Rejection};
  parallel_chunks(cfg.samples, par, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      Rng rng = make_rng(cfg.seed, i);
      StructureViolation r;
      r.index = i;
      r.n = pairing.dims[i % pairing.dims.size()];
      r.s = uniform(rng, cfg.s_min, cfg.s_max);
      r.phi = uniform(rng, 0.0, 1.0);
      r.phi_prime = uniform(rng, -cfg.phi_prime_max, cfg.phi_prime_max);
      r.phi_second = uniform(rng, -cfg.phi_second_max, cfg.phi_second_max);
      r.epsilon = uniform(rng, 0.0, cfg.eps_max);
      const double z = uniform(rng, -1.0, 1.0) + z_shift;
      const double w = z + 2.0 * r.phi;
      const Vec u = random_unit(rng, r.n);
      Vec x(r.n);
      for (int d = 0; d < r.n; ++d) x(d) = uniform(rng, -cfg.box_half_width, cfg.box_half_width);
      const Vec y = x - 2.0 * r.s * u;
      const Vec p = r.phi_prime * u;
      const TwoPointHessian h = build_P(r.n, r.s, r.phi_prime, r.phi_second, u, r.epsilon);
      r.strategy = cycle[i % 4];
      const AdmissiblePair pr = sample_admissible_pair(h.Q, r.strategy, rng);
      r.lhs = eval_F(pairing.F, y, z, p, pr.B) - eval_F(pairing.F, x, w, p, pr.A);
      r.rhs = -2.0 * eval_f(pairing.f, r.s, r.phi, r.phi_prime, r.phi_second) +
              r.epsilon * pairing.q(r.s, r.phi, r.phi_prime, r.phi_second);
      r.margin = r.lhs - r.rhs;
      all[i] = r;
    }
  });
  for (const auto& r : all) {
    if (r.margin > rep.worst_margin) {
      rep.worst_margin = r.margin;
      rep.worst_index = r.index;
    }
    if (r.margin > kInequalityTol) rep.violations.push_back(r);
  }
  return rep;
}

}  // namespace viscmod
