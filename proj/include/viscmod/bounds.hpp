#pragma once

// Oscillation, Lipschitz and Hoelder bounds from a supersolution that dominates
// the modulus, and their empirical validation against a field.

#include "viscmod/grid.hpp"
#include "viscmod/moc.hpp"
#include "viscmod/oned.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

namespace viscmod {

struct HolderBound {
  double alpha = 1.0;
  double a = 0.0;
  bool estimated = false;  // log-log fit rather than closed form
  double fit_residual = 0.0;
};

struct GradientBoundReport {
  bool case_a = false, case_b = false, case_c = false;
  std::optional<double> oscillation_bound;
  std::optional<double> lipschitz_bound;
  std::optional<HolderBound> holder;
  // provenance
  std::string zeta_description;
  double interval_lo = 0.0, interval_hi = 0.0;
  std::string compare_id;
};

/// Stable identifier for a comparison report, so a bound report names the
/// comparison it rests on.
inline std::string compare_report_id(const CompareReport& c) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = splitmix64(h ^ bits);
  };
  mix(c.lo);
  mix(c.hi);
  mix(c.tol);
  mix(c.max_violation);
  mix(c.argmax_s);
  mix(double(c.bins_checked));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

/// Least-squares fit log zeta = log a + alpha log s on the five smallest
/// positive samples; residual is the RMS misfit in log space.
inline std::optional<HolderBound> fit_holder(const TabulatedProfile& t) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < t.s.size() && pts.size() < 5; ++k)
    if (t.s[k] > 0.0 && t.zeta[k] > 0.0) pts.emplace_back(std::log(t.s[k]), std::log(t.zeta[k]));
  if (pts.size() < 5) return std::nullopt;
  double mx = 0, my = 0;
  for (auto [x, y] : pts) mx += x, my += y;
  mx /= double(pts.size());
  my /= double(pts.size());
  double sxx = 0, sxy = 0;
  for (auto [x, y] : pts) sxx += (x - mx) * (x - mx), sxy += (x - mx) * (y - my);
  if (sxx <= 0.0) return std::nullopt;
  HolderBound hb;
  hb.alpha = sxy / sxx;
  hb.a = std::exp(my - hb.alpha * mx);
  double ss = 0;
  for (auto [x, y] : pts) {
    const double r = y - (std::log(hb.a) + hb.alpha * x);
    ss += r * r;
  }
  hb.fit_residual = std::sqrt(ss / double(pts.size()));
  hb.estimated = true;
  return hb;
}

/// Supremum of zeta over [lo, hi]: closed form for the shipped profiles,
/// sample maximum for tabulated ones.
inline double zeta_sup(const SupersolutionSpec& z, double lo, double hi) {
  if (std::holds_alternative<ExponentialGap>(z)) return zeta_value(z, hi);  // increasing
  if (const auto* p = std::get_if<Parabola>(&z)) {
    const double peak = std::clamp(p->D / 2.0, lo, hi);
    return zeta_value(z, peak);
  }
  const auto& t = std::get<TabulatedProfile>(z);
  double m = std::max(zeta_value(z, lo), zeta_value(z, hi));
  for (std::size_t k = 0; k < t.s.size(); ++k)
    if (t.s[k] >= lo && t.s[k] <= hi) m = std::max(m, t.zeta[k]);
  return m;
}

}  // namespace detail

/// Bounds implied by omega <= zeta on [lo, hi]. Refuses without a holding
/// comparison.
inline GradientBoundReport derive_bounds(const SupersolutionSpec& zeta, double lo, double hi,
                                         const CompareReport& comparison) {
  if (!comparison.holds)
    throw RefusalError("derive_bounds: the comparison omega <= zeta does not hold (max excess " +
                       format_double(comparison.max_violation) + " at s = " + format_double(comparison.argmax_s) +
                       "); no bounds emitted");
  if (!(hi > lo) || lo < 0.0) throw ConfigError("derive_bounds: interval must satisfy 0 <= lo < hi");
  GradientBoundReport r;
  r.zeta_description = describe(zeta);
  r.interval_lo = lo;
  r.interval_hi = hi;
  r.compare_id = compare_report_id(comparison);

  r.case_a = true;
  r.oscillation_bound = 2.0 * detail::zeta_sup(zeta, lo, hi);

  if (const auto* e = std::get_if<ExponentialGap>(&zeta)) {
    r.case_b = true;
    r.lipschitz_bound = e->mu2 * (e->alpha1 - e->alpha2);
  } else if (const auto* p = std::get_if<Parabola>(&zeta)) {
    r.case_b = true;
    r.lipschitz_bound = 4.0 * p->a / p->D;
  }
  if (r.case_b) {
    r.case_c = true;
    r.holder = HolderBound{1.0, *r.lipschitz_bound, false, 0.0};
  } else if (auto hb = detail::fit_holder(std::get<TabulatedProfile>(zeta));
             hb && hb->fit_residual < 0.05 && hb->alpha > 0.0 && hb->alpha <= 1.0) {
    r.case_c = true;
    r.holder = *hb;
  }
  return r;
}

struct LipschitzEstimate {
  double value = 0.0;
  std::size_t a = 0, b = 0;  // witness pair of grid neighbours
};

/// Largest |du| / h over axis-neighbour pairs (wrapping on periodic grids).
inline LipschitzEstimate empirical_lipschitz_witness(const ScalarField& field) {
  const Grid& g = field.grid();
  const auto v = field.values();
  const int N = g.per_axis();
  LipschitzEstimate est;
  for (std::size_t k = 0; k < g.size(); ++k) {
    auto [i, j] = g.multi_index(k);
    for (int axis = 0; axis < g.dim(); ++axis) {
      int ni = i, nj = j;
      (axis == 0 ? ni : nj) += 1;
      int& moved = axis == 0 ? ni : nj;
      if (moved == N) {
        if (!g.periodic()) continue;
        moved = 0;
      }
      const std::size_t q = g.flat_index(ni, nj);
      const double quot = std::abs(v[k] - v[q]) / g.spacing();
      if (quot > est.value) est = {quot, k, q};
    }
  }
  return est;
}

inline double empirical_lipschitz(const ScalarField& field) { return empirical_lipschitz_witness(field).value; }

/// Oscillation bound 2 |u|_0, which every field satisfies.
inline GradientBoundReport trivial_report(const ScalarField& field) {
  GradientBoundReport r;
  r.case_a = true;
  r.oscillation_bound = 2.0 * sup_norm(field);
  r.zeta_description = "trivial(2|u|_0)";
  r.interval_lo = 0.0;
  r.interval_hi = field.grid().max_distance() / 2.0;
  r.compare_id = "none";
  return r;
}

struct BoundFailure {
  std::string which;  // "oscillation" or "lipschitz"
  std::size_t a = 0, b = 0;
  double empirical = 0.0;
  double bound = 0.0;
};

struct BoundVerdict {
  bool holds = true;
  double empirical_oscillation = 0.0;
  std::optional<double> empirical_lipschitz;
  std::vector<BoundFailure> failures;
};

/// Oscillation over pairs with |x - y| <= 2 hi against the case A bound, and
/// nearest-neighbour quotients against the case B bound.
inline BoundVerdict verify_bound(const ScalarField& field, const GradientBoundReport& report, double tol) {
  const Grid& g = field.grid();
  const auto v = field.values();
  BoundVerdict out;
  if (report.oscillation_bound) {
    const double reach = 2.0 * report.interval_hi * (1.0 + 1e-12);
    std::size_t wa = 0, wb = 0;
    for (std::size_t a = 0; a < g.size(); ++a)
      for (std::size_t b = a + 1; b < g.size(); ++b) {
        if (g.distance(a, b) > reach) continue;
        const double d = std::abs(v[a] - v[b]);
        if (d > out.empirical_oscillation) {
          out.empirical_oscillation = d;
          wa = a;
          wb = b;
        }
      }
    if (out.empirical_oscillation > *report.oscillation_bound + tol) {
      out.holds = false;
      out.failures.push_back({"oscillation", wa, wb, out.empirical_oscillation, *report.oscillation_bound});
    }
  }
  if (report.case_b && report.lipschitz_bound) {
    const LipschitzEstimate est = empirical_lipschitz_witness(field);
    out.empirical_lipschitz = est.value;
    if (est.value > *report.lipschitz_bound + tol) {
      out.holds = false;
      out.failures.push_back({"lipschitz", est.a, est.b, est.value, *report.lipschitz_bound});
    }
  }
  return out;
}

}  // namespace viscmod
