#pragma once

// Two-point modulus of continuity
//
//   omega(s) = sup { (u(x) - u(y)) / 2 : |x - y| = 2 s }
//
// computed by brute-force pair enumeration on a grid and binned in s.

#include "viscmod/grid.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

namespace viscmod {

/// Binned modulus. Bin k covers s in [k w, (k+1) w) and is centered at
/// (k + 1/2) w; bins that received no pair are absent, never zero.
struct ModulusCurve {
  double bin_width = 0.0;
  std::vector<double> centers;
  std::vector<std::optional<double>> values;
  std::vector<std::size_t> counts;
  DomainKind kind = DomainKind::Periodic;
  double source_sup = 0.0;

  std::size_t size() const { return centers.size(); }
  bool present(std::size_t k) const { return values[k].has_value(); }

  /// Piecewise-linear interpolation over present bins, clamped at the ends.
  double interpolate(double s) const {
    std::optional<std::size_t> prev;
    for (std::size_t k = 0; k < size(); ++k) {
      if (!present(k)) continue;
      if (centers[k] >= s) {
        if (!prev) return *values[k];
        const double t = (s - centers[*prev]) / (centers[k] - centers[*prev]);
        return (1.0 - t) * *values[*prev] + t * *values[k];
      }
      prev = k;
    }
    return prev ? *values[*prev] : 0.0;
  }

  /// Largest value among present bins whose center lies within `radius` of s.
  double local_max(double s, double radius) const {
    double m = 0.0;
    for (std::size_t k = 0; k < size(); ++k)
      if (present(k) && std::abs(centers[k] - s) <= radius * (1.0 + 1e-9)) m = std::max(m, *values[k]);
    return m;
  }
};

/// Bin index for s; exact multiples of the width land in the upper bin even
/// when rounding pushes them a hair below.
inline std::size_t modulus_bin(double s, double width) {
  return std::size_t(std::floor(s / width + 1e-9));
}

inline ModulusCurve empty_modulus_curve(const Grid& grid, double bin_width, double source_sup) {
  ModulusCurve c;
  c.bin_width = bin_width;
  c.kind = grid.kind();
  c.source_sup = source_sup;
  const double s_max = grid.max_distance() / 2.0;
  const std::size_t bins = modulus_bin(s_max, bin_width) + 1;
  c.centers.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) c.centers[k] = (double(k) + 0.5) * bin_width;
  c.values.assign(bins, std::nullopt);
  c.counts.assign(bins, 0);
  return c;
}

/// Modulus of a field by enumerating every unordered pair. Pair distances on
/// a uniform grid depend on the index offset only, so each offset is binned
/// once and the inner loop is a table lookup.
///
/// Truncated grids additionally pair each point with a virtual zero value
/// beyond the clamp ring: every bin whose center s satisfies
/// 2 s >= dist(x, ring) receives |u(x)| / 2.
inline ModulusCurve compute_modulus(const ScalarField& field, double bin_width, Parallelism par = {}) {
  const Grid& g = field.grid();
  if (!(bin_width >= g.spacing() * (1.0 - 1e-12)))
    throw ConfigError("compute_modulus: bin_width " + format_double(bin_width) + " is below the grid spacing " +
                      format_double(g.spacing()));
  ModulusCurve curve = empty_modulus_curve(g, bin_width, sup_norm(field));
  const std::size_t bins = curve.size();
  const int N = g.per_axis();
  const int n = g.dim();
  const std::size_t m = g.size();

  // Offset table: offsets in [-(N-1), N-1]^n mapped to a bin index.
  const int span = 2 * N - 1;
  std::vector<std::size_t> offset_bin(std::size_t(span) * std::size_t(n == 2 ? span : 1));
  for (int dj = (n == 2 ? -(N - 1) : 0); dj <= (n == 2 ? N - 1 : 0); ++dj)
    for (int di = -(N - 1); di <= N - 1; ++di) {
      const std::size_t slot = std::size_t(di + N - 1) + std::size_t(n == 2 ? dj + N - 1 : 0) * std::size_t(span);
      offset_bin[slot] = modulus_bin(g.offset_distance(di, dj) / 2.0, bin_width);
    }

  const std::size_t chunks = chunk_count(m, par);
  std::vector<std::vector<double>> best(chunks, std::vector<double>(bins, -1.0));
  std::vector<std::vector<std::size_t>> cnt(chunks, std::vector<std::size_t>(bins, 0));
  const auto vals = field.values();

  parallel_chunks(m, par, [&](std::size_t begin, std::size_t end, std::size_t chunk) {
    auto& b = best[chunk];
    auto& c = cnt[chunk];
    for (std::size_t a = begin; a < end; ++a) {
      auto [ia, ja] = g.multi_index(a);
      for (std::size_t q = a + 1; q < m; ++q) {
        auto [iq, jq] = g.multi_index(q);
        const std::size_t slot =
            std::size_t(iq - ia + N - 1) + std::size_t(n == 2 ? jq - ja + N - 1 : 0) * std::size_t(span);
        const std::size_t k = offset_bin[slot];
        if (k >= bins) continue;
        const double contrib = std::abs(vals[a] - vals[q]) / 2.0;
        if (contrib > b[k]) b[k] = contrib;
        ++c[k];
      }
    }
  });

  for (std::size_t ch = 0; ch < chunks; ++ch)
    for (std::size_t k = 0; k < bins; ++k) {
      curve.counts[k] += cnt[ch][k];
      if (cnt[ch][k] > 0) curve.values[k] = std::max(curve.values[k].value_or(0.0), best[ch][k]);
    }

  if (g.kind() == DomainKind::Truncated) {
    // Earliest bin reached by each point's virtual far-field partner, then a
    // running max so every later bin sees it too.
    std::vector<double> reach(bins, -1.0);
    for (std::size_t a = 0; a < m; ++a) {
      if (g.on_clamp_ring(a)) continue;
      const double d = g.distance_to_clamp_ring(a);
      const auto k0 = std::size_t(std::max(0.0, std::ceil(d / (2.0 * bin_width) - 0.5 - 1e-9)));
      if (k0 >= bins) continue;
      reach[k0] = std::max(reach[k0], std::abs(vals[a]) / 2.0);
    }
    double run = -1.0;
    for (std::size_t k = 0; k < bins; ++k) {
      run = std::max(run, reach[k]);
      if (run >= 0.0) {
        curve.values[k] = std::max(curve.values[k].value_or(0.0), run);
        ++curve.counts[k];
      }
    }
  }
  return curve;
}

struct ModulusCheck {
  bool holds = true;
  double worst_excess = -std::numeric_limits<double>::infinity();  // |du| - 2 h(d/2)
  std::size_t worst_a = 0, worst_b = 0;
  std::optional<std::pair<std::size_t, std::size_t>> first_violation;
};

/// Checks |u(x) - u(y)| <= 2 candidate(|x - y| / 2) + 1e-12 over all grid pairs.
template <class Candidate>
ModulusCheck is_modulus(Candidate&& candidate, const ScalarField& field) {
  const Grid& g = field.grid();
  ModulusCheck rep;
  const auto vals = field.values();
  for (std::size_t a = 0; a < g.size(); ++a)
    for (std::size_t b = a + 1; b < g.size(); ++b) {
      const double excess = std::abs(vals[a] - vals[b]) - 2.0 * candidate(g.distance(a, b) / 2.0);
      if (excess > rep.worst_excess) {
        rep.worst_excess = excess;
        rep.worst_a = a;
        rep.worst_b = b;
      }
      if (excess > 1e-12) {
        rep.holds = false;
        if (!rep.first_violation) rep.first_violation = std::make_pair(a, b);
      }
    }
  return rep;
}

/// Running maximum over present bins; absent bins stay absent.
inline ModulusCurve running_envelope(const ModulusCurve& curve) {
  if (curve.size() == 0) throw ConfigError("running_envelope: empty curve");
  ModulusCurve out = curve;
  double run = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!out.present(k)) continue;
    run = std::max(run, *out.values[k]);
    out.values[k] = run;
  }
  return out;
}

/// Smallest s such that every present bin beyond it has omega <= sup/2 + eps.
/// Returns the first bin center after the last offending bin, or nothing if
/// the last bin itself offends.
inline std::optional<double> find_s_eps(const ModulusCurve& curve, double eps) {
  const double cap = curve.source_sup / 2.0 + eps;
  std::optional<std::size_t> last_bad;
  for (std::size_t k = 0; k < curve.size(); ++k)
    if (curve.present(k) && *curve.values[k] > cap) last_bad = k;
  if (!last_bad) {
    for (std::size_t k = 0; k < curve.size(); ++k)
      if (curve.present(k)) return curve.centers[k];
    return std::nullopt;
  }
  for (std::size_t k = *last_bad + 1; k < curve.size(); ++k)
    if (curve.present(k)) return curve.centers[k];
  return std::nullopt;
}

inline void write_modulus_csv(std::ostream& os, const ModulusCurve& c) {
  os << "s,omega,bin_count\n";
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (!c.present(k)) continue;
    os << format_double(c.centers[k]) << ',' << format_double(*c.values[k]) << ',' << c.counts[k] << '\n';
  }
}

}  // namespace viscmod
