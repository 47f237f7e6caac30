#pragma once

// One-dimensional operators f(s, phi, phi', phi''), closed-form supersolutions
// zeta, the discrete viscosity-subsolution test for a binned modulus, and the
// pointwise comparison omega <= zeta.

#include "viscmod/common.hpp"
#include "viscmod/moc.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace viscmod {

enum class Profile1D { Laplace, PLaplace, MinimalSurfacePaper, MinimalSurfaceStd };

inline const char* to_string(Profile1D p) {
  switch (p) {
    case Profile1D::Laplace: return "laplace";
    case Profile1D::PLaplace: return "p_laplace";
    case Profile1D::MinimalSurfacePaper: return "minimal_surface_paper";
    default: return "minimal_surface_std";
  }
}

/// f = -lambda phi'' - B |phi'| + c phi
struct LinearDrift1D {
  double lambda = 1.0;
  double B = 0.0;
  double c = 1.0;
};

/// f = -lambda(|phi'|) phi'' + c phi
struct QuasiDiffusion1D {
  Profile1D profile = Profile1D::Laplace;
  double p_exp = 2.0;
  double c = 1.0;
};

using OneDimOperatorSpec = std::variant<LinearDrift1D, QuasiDiffusion1D>;

inline std::string describe(const OneDimOperatorSpec& f) {
  if (const auto* l = std::get_if<LinearDrift1D>(&f))
    return "linear_drift_1d(lambda=" + format_double(l->lambda) + ", B=" + format_double(l->B) +
           ", c=" + format_double(l->c) + ")";
  const auto& q = std::get<QuasiDiffusion1D>(f);
  std::string prof = to_string(q.profile);
  if (q.profile == Profile1D::PLaplace) prof += "(" + format_double(q.p_exp) + ")";
  return "quasi_diffusion_1d(" + prof + ", c=" + format_double(q.c) + ")";
}

/// Radial diffusion coefficient lambda(r) of the quasilinear 1D operators.
/// minimal_surface_paper uses (1 + r)^(-3/2); minimal_surface_std uses the
/// smallest eigenvalue of the minimal-surface matrix, (1 + r^2)^(-3/2).
inline double diffusion_1d(Profile1D profile, double p_exp, double r) {
  switch (profile) {
    case Profile1D::Laplace: return 1.0;
    case Profile1D::PLaplace:
      if (r == 0.0 && p_exp < 2.0)
        throw SingularDiffusion("p_laplace 1D coefficient |phi'|^(q-2) is singular at phi' = 0 for q < 2");
      return p_exp == 2.0 ? 1.0 : std::pow(r, p_exp - 2.0);
    case Profile1D::MinimalSurfacePaper: return std::pow(1.0 + r, -1.5);
    case Profile1D::MinimalSurfaceStd: return std::pow(1.0 + r * r, -1.5);
  }
  return 1.0;
}

inline double eval_f(const OneDimOperatorSpec& f, double s, double phi, double dphi, double d2phi) {
  if (s < 0.0) throw ConfigError("eval_f: s must be nonnegative");
  if (const auto* l = std::get_if<LinearDrift1D>(&f))
    return -l->lambda * d2phi - l->B * std::abs(dphi) + l->c * phi;
  const auto& q = std::get<QuasiDiffusion1D>(f);
  return -diffusion_1d(q.profile, q.p_exp, std::abs(dphi)) * d2phi + q.c * phi;
}

// ////////////////////////////////////////////////////////////////////////////
// Supersolutions

/// zeta(s) = mu2 (exp(alpha1 s) - exp(alpha2 s)), alpha1 > 0 > alpha2.
struct ExponentialGap {
  double mu2 = 0.0;
  double alpha1 = 1.0;
  double alpha2 = -1.0;
};

/// zeta(s) = -(4a / D^2)(s - D/2)^2 + a, the parabola through 0 and D with apex a.
struct Parabola {
  double a = 1.0;
  double D = 1.0;
};

/// Sampled profile, linearly interpolated; derivatives by divided differences.
struct TabulatedProfile {
  std::vector<double> s;
  std::vector<double> zeta;
};

using SupersolutionSpec = std::variant<ExponentialGap, Parabola, TabulatedProfile>;

namespace detail {

inline std::size_t table_segment(const TabulatedProfile& t, double s) {
  if (t.s.size() < 2) throw ConfigError("tabulated profile needs at least two samples");
  std::size_t k = 0;
  while (k + 2 < t.s.size() && t.s[k + 1] < s) ++k;
  return k;
}

}  // namespace detail

inline double zeta_value(const SupersolutionSpec& z, double s) {
  if (const auto* e = std::get_if<ExponentialGap>(&z)) return e->mu2 * (std::exp(e->alpha1 * s) - std::exp(e->alpha2 * s));
  if (const auto* p = std::get_if<Parabola>(&z)) return -(4.0 * p->a / (p->D * p->D)) * (s - p->D / 2.0) * (s - p->D / 2.0) + p->a;
  const auto& t = std::get<TabulatedProfile>(z);
  const std::size_t k = detail::table_segment(t, s);
  const double w = (s - t.s[k]) / (t.s[k + 1] - t.s[k]);
  return (1.0 - w) * t.zeta[k] + w * t.zeta[k + 1];
}

inline double zeta_d1(const SupersolutionSpec& z, double s) {
  if (const auto* e = std::get_if<ExponentialGap>(&z))
    return e->mu2 * (e->alpha1 * std::exp(e->alpha1 * s) - e->alpha2 * std::exp(e->alpha2 * s));
  if (const auto* p = std::get_if<Parabola>(&z)) return (4.0 * p->a / p->D) * (1.0 - 2.0 * s / p->D);
  const auto& t = std::get<TabulatedProfile>(z);
  const std::size_t k = detail::table_segment(t, s);
  return (t.zeta[k + 1] - t.zeta[k]) / (t.s[k + 1] - t.s[k]);
}

inline double zeta_d2(const SupersolutionSpec& z, double s) {
  if (const auto* e = std::get_if<ExponentialGap>(&z))
    return e->mu2 * (e->alpha1 * e->alpha1 * std::exp(e->alpha1 * s) - e->alpha2 * e->alpha2 * std::exp(e->alpha2 * s));
  if (const auto* p = std::get_if<Parabola>(&z)) return -8.0 * p->a / (p->D * p->D);
  const auto& t = std::get<TabulatedProfile>(z);
  if (t.s.size() < 3) return 0.0;
  std::size_t k = std::min(detail::table_segment(t, s), t.s.size() - 3);
  const double h1 = t.s[k + 1] - t.s[k], h2 = t.s[k + 2] - t.s[k + 1];
  const double d1 = (t.zeta[k + 1] - t.zeta[k]) / h1, d2 = (t.zeta[k + 2] - t.zeta[k + 1]) / h2;
  return 2.0 * (d2 - d1) / (h1 + h2);
}

/// Right end of the natural domain (infinity for the exponential family).
inline double zeta_domain_end(const SupersolutionSpec& z) {
  if (const auto* p = std::get_if<Parabola>(&z)) return p->D;
  if (const auto* t = std::get_if<TabulatedProfile>(&z)) return t->s.empty() ? 0.0 : t->s.back();
  return std::numeric_limits<double>::infinity();
}

inline std::string describe(const SupersolutionSpec& z) {
  if (const auto* e = std::get_if<ExponentialGap>(&z))
    return "exponential_gap(mu2=" + format_double(e->mu2) + ", alpha1=" + format_double(e->alpha1) +
           ", alpha2=" + format_double(e->alpha2) + ")";
  if (const auto* p = std::get_if<Parabola>(&z))
    return "parabola(a=" + format_double(p->a) + ", D=" + format_double(p->D) + ")";
  return "tabulated(" + std::to_string(std::get<TabulatedProfile>(z).s.size()) + " samples)";
}

/// Roots of -lambda a^2 - B a + c = 0, increasing branch first.
inline std::pair<double, double> exponential_roots(double lambda, double B, double c) {
  const double disc = std::sqrt(B * B + 4.0 * lambda * c);
  return {(-B + disc) / (2.0 * lambda), (-B - disc) / (2.0 * lambda)};
}

/// Right endpoint of the comparison interval for a periodic solution (D/2,
/// with D the diameter of the repeating region) or a vanishing one (s(eps)).
struct PeriodicEndpoint {
  double D = 0.0;
};
struct VanishingEndpoint {
  double s_eps = 0.0;
  double eps = 0.0;
};
using EndpointCase = std::variant<PeriodicEndpoint, VanishingEndpoint>;

inline double exponential_gap_at(double a1, double a2, double s) { return std::exp(a1 * s) - std::exp(a2 * s); }

/// Exponential supersolution with the smallest mu2 meeting the endpoint height:
/// |u|_0 at D/2 (periodic) or |u|_0/2 + eps at s(eps) (vanishing).
inline ExponentialGap make_exponential_supersolution(double lambda, double B, double c, double u_sup,
                                                     const EndpointCase& endpoint) {
  if (!(lambda > 0.0) || !(B >= 0.0) || !(c > 0.0))
    throw ConfigError("exponential supersolution needs lambda > 0, B >= 0, c > 0");
  if (!(u_sup >= 0.0)) throw ConfigError("exponential supersolution needs |u|_0 >= 0");
  auto [a1, a2] = exponential_roots(lambda, B, c);
  double s_end, height;
  if (const auto* p = std::get_if<PeriodicEndpoint>(&endpoint)) {
    if (!(p->D > 0.0)) throw ConfigError("periodic endpoint needs D > 0");
    s_end = p->D / 2.0;
    height = u_sup;
  } else {
    const auto* v = std::get_if<VanishingEndpoint>(&endpoint);
    if (!(v->s_eps > 0.0) || !(v->eps > 0.0)) throw ConfigError("vanishing endpoint needs s(eps) > 0 and eps > 0");
    s_end = v->s_eps;
    height = u_sup / 2.0 + v->eps;
  }
  return ExponentialGap{height / exponential_gap_at(a1, a2, s_end), a1, a2};
}

inline Parabola make_parabola_supersolution(double a, double D) {
  if (!(a > 0.0) || !(D > 0.0)) throw ConfigError("parabola supersolution needs a > 0 and D > 0");
  return Parabola{a, D};
}

struct SupersolutionCheck {
  double min_residual = std::numeric_limits<double>::infinity();
  double argmin_s = 0.0;
  bool holds = false;
};

inline SupersolutionCheck check_supersolution(const OneDimOperatorSpec& f, const SupersolutionSpec& zeta,
                                              const std::vector<double>& s_grid, double tol) {
  SupersolutionCheck rep;
  for (double s : s_grid) {
    const double r = eval_f(f, s, zeta_value(zeta, s), zeta_d1(zeta, s), zeta_d2(zeta, s));
    if (r < rep.min_residual) {
      rep.min_residual = r;
      rep.argmin_s = s;
    }
  }
  rep.holds = rep.min_residual >= -tol;
  return rep;
}

// ////////////////////////////////////////////////////////////////////////////
// Discrete viscosity-subsolution test

struct SubsolutionViolation {
  double s = 0.0;
  double p = 0.0;
  double X = 0.0;
  double f_value = 0.0;
};

struct SubsolutionReport {
  std::size_t bins_checked = 0;
  std::size_t kinks_skipped = 0;
  std::vector<SubsolutionViolation> violations;
  bool ok() const { return violations.empty(); }
};

struct SubsolutionOptions {
  std::size_t slope_samples = 9;  // K
  double curvature_floor = -1.0;  // X_floor < 0
  double tol = 1e-8;
  double slope_tol = 1e-12;
  std::optional<std::pair<double, double>> interval;  // restrict to bin centers in [lo, hi]
};

/// Tests f(s_k, omega_k, p, X) <= tol at each interior bin against discrete
/// superjet elements: p between the one-sided slopes, X the centered
/// curvature raised to the floor. Convex kinks (D+ > D-) carry no smooth
/// touching function from above and are skipped. Every catalog f is
/// non-increasing in phi'', so the smallest admissible curvature is binding.
inline SubsolutionReport check_viscosity_subsolution(const OneDimOperatorSpec& f, const ModulusCurve& omega,
                                                     const SubsolutionOptions& opt) {
  if (!(opt.curvature_floor < 0.0)) throw ConfigError("check_viscosity_subsolution needs X_floor < 0");
  if (opt.slope_samples < 1) throw ConfigError("check_viscosity_subsolution needs K >= 1");
  std::size_t run = 0, longest = 0;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    run = omega.present(k) ? run + 1 : 0;
    longest = std::max(longest, run);
  }
  if (longest < 3) throw ConfigError("check_viscosity_subsolution needs at least 3 consecutive bins");

  SubsolutionReport rep;
  const double w = omega.bin_width;
  for (std::size_t k = 1; k + 1 < omega.size(); ++k) {
    if (!omega.present(k - 1) || !omega.present(k) || !omega.present(k + 1)) continue;
    const double s = omega.centers[k];
    if (opt.interval && (s < opt.interval->first || s > opt.interval->second)) continue;
    const double wm = *omega.values[k - 1], w0 = *omega.values[k], wp = *omega.values[k + 1];
    const double dplus = (wp - w0) / w;
    const double dminus = (w0 - wm) / w;
    if (dplus > dminus + opt.slope_tol) {
      ++rep.kinks_skipped;
      continue;
    }
    ++rep.bins_checked;
    const double curvature = std::max((wp - 2.0 * w0 + wm) / (w * w), opt.curvature_floor);
    const double lo = std::min(dplus, dminus), hi = std::max(dplus, dminus);
    double worst = -std::numeric_limits<double>::infinity();
    double worst_p = lo;
    for (std::size_t j = 0; j < opt.slope_samples; ++j) {
      const double p = opt.slope_samples == 1 ? 0.5 * (lo + hi)
                                              : lo + (hi - lo) * double(j) / double(opt.slope_samples - 1);
      const double val = eval_f(f, s, w0, p, curvature);
      if (val > worst) {
        worst = val;
        worst_p = p;
      }
    }
    if (worst > opt.tol) rep.violations.push_back({s, worst_p, curvature, worst});
  }
  return rep;
}

// ////////////////////////////////////////////////////////////////////////////
// Comparison

struct CompareReport {
  bool holds = true;
  double max_violation = -std::numeric_limits<double>::infinity();  // max omega_k - zeta(s_k)
  double argmax_s = 0.0;
  std::size_t bins_checked = 0;
  double lo = 0.0, hi = 0.0, tol = 0.0;
};

inline CompareReport compare(const ModulusCurve& omega, const SupersolutionSpec& zeta, double lo, double hi,
                             double tol = 1e-12) {
  if (!(hi > lo) || lo < 0.0) throw ConfigError("compare: interval must satisfy 0 <= lo < hi");
  if (hi > zeta_domain_end(zeta) * (1.0 + 1e-12))
    throw ConfigError("compare: interval end " + format_double(hi) + " exceeds the supersolution domain");
  CompareReport rep;
  rep.lo = lo;
  rep.hi = hi;
  rep.tol = tol;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    if (!omega.present(k)) continue;
    const double s = omega.centers[k];
    if (s < lo || s > hi * (1.0 + 1e-12)) continue;
    ++rep.bins_checked;
    const double diff = *omega.values[k] - zeta_value(zeta, s);
    if (diff > rep.max_violation) {
      rep.max_violation = diff;
      rep.argmax_s = s;
    }
    if (diff > tol) rep.holds = false;
  }
  if (rep.bins_checked == 0) throw ConfigError("compare: no modulus bins inside the interval");
  return rep;
}

// ////////////////////////////////////////////////////////////////////////////
// Shrinking the exponential supersolution over growing intervals

struct ShrinkRow {
  int k = 0;
  double mu2 = 0.0;
  double endpoint = 0.0;
  double sup_on_base = 0.0;
};

struct ShrinkReport {
  std::vector<ShrinkRow> rows;
  double base_end = 0.0;
  bool strictly_decreasing = true;
  bool nonincreasing = true;
};

/// mu2(k) from the endpoint constraint at k D/2 (periodic) or
/// s(eps) + (k-1) a_step (vanishing); sup of zeta_k over the base interval
/// [0, D/2] or [0, s(eps)] is its value at the base end since zeta_k increases.
inline ShrinkReport shrink_mu_iteration(const LinearDrift1D& f, double u_sup, const EndpointCase& endpoint,
                                        int K, double a_step = 1.0) {
  if (K < 2) throw ConfigError("shrink_mu_iteration needs K >= 2");
  auto [a1, a2] = exponential_roots(f.lambda, f.B, f.c);
  ShrinkReport rep;
  double height;
  if (const auto* p = std::get_if<PeriodicEndpoint>(&endpoint)) {
    rep.base_end = p->D / 2.0;
    height = u_sup;
  } else {
    const auto& v = std::get<VanishingEndpoint>(endpoint);
    rep.base_end = v.s_eps;
    height = u_sup / 2.0 + v.eps;
  }
  for (int k = 1; k <= K; ++k) {
    double end;
    if (std::holds_alternative<PeriodicEndpoint>(endpoint)) end = k * rep.base_end;
    else end = rep.base_end + (k - 1) * a_step;
    const double mu2 = height / exponential_gap_at(a1, a2, end);
    rep.rows.push_back({k, mu2, end, mu2 * exponential_gap_at(a1, a2, rep.base_end)});
  }
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    if (!(rep.rows[i].mu2 < rep.rows[i - 1].mu2)) rep.strictly_decreasing = false;
    if (rep.rows[i].mu2 > rep.rows[i - 1].mu2) rep.nonincreasing = false;
  }
  return rep;
}

/// Curve built from samples on uniform bin centers, e.g. analytic controls.
inline ModulusCurve modulus_curve_from_samples(const std::vector<double>& centers, const std::vector<double>& values,
                                               double bin_width, DomainKind kind = DomainKind::Periodic) {
  if (centers.size() != values.size()) throw DimensionMismatch("centers and values differ in length");
  ModulusCurve c;
  c.bin_width = bin_width;
  c.kind = kind;
  c.centers = centers;
  c.counts.assign(values.size(), 1);
  for (double v : values) {
    c.values.emplace_back(v);
    c.source_sup = std::max(c.source_sup, std::abs(v));
  }
  return c;
}

}  // namespace viscmod
