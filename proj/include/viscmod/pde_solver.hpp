#pragma once

// Monotone finite differences for trace-form operators and pseudo-time
// iteration u <- u - tau F_h(u) to a discrete steady state.

#include "viscmod/grid.hpp"
#include "viscmod/operators.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace viscmod {

enum class BoundaryPolicy { PeriodicWrap, ZeroClamp };

struct SchemeOptions {
  /// Radius of the gradient ball over which the diffusion matrix is sampled
  /// for the dominance check and the largest eigenvalue in the step bound.
  double gradient_range = 2.0;
  std::size_t dominance_samples = 10000;
  std::uint64_t seed = 0x5eed;
  /// Singular p-Laplace diffusion at a zero discrete gradient is taken as 0.
  bool regularize_singular = true;
};

using Forcing = std::function<double(const Vec& x)>;

class DiscreteOperator {
 public:
  DiscreteOperator(EllipticOperatorSpec op, Grid grid, SchemeOptions opt)
      : op_(std::move(op)), grid_(std::move(grid)), opt_(opt) {
    boundary_ = grid_.periodic() ? BoundaryPolicy::PeriodicWrap : BoundaryPolicy::ZeroClamp;
  }

  const EllipticOperatorSpec& op() const { return op_; }
  const Grid& grid() const { return grid_; }
  BoundaryPolicy boundary() const { return boundary_; }
  const SchemeOptions& options() const { return opt_; }
  double lambda_max() const { return lambda_max_; }
  double first_order_bound() const { return first_order_bound_; }

  /// Manufactured-solution hook: the scheme discretizes F - forcing(x).
  DiscreteOperator with_forcing(Forcing f) const {
    DiscreteOperator d = *this;
    d.forcing_ = std::move(f);
    return d;
  }

  /// Largest pseudo-time step for which the explicit update is monotone:
  /// h^2 / (2 n Lambda + h B + h^2 c).
  double tau_max() const {
    const double h = grid_.spacing();
    const double c = zeroth_coefficient(op_);
    return h * h / (2.0 * grid_.dim() * lambda_max_ + h * first_order_bound_ + h * h * std::max(c, 0.0));
  }

  bool is_active(std::size_t k) const { return !grid_.on_clamp_ring(k); }

  /// F_h at one grid point (0 on the clamp ring).
  double apply_at(std::span<const double> u, std::size_t k) const {
    if (!is_active(k)) return 0.0;
    const int n = grid_.dim();
    const double h = grid_.spacing();
    const int N = grid_.per_axis();
    auto [i, j] = grid_.multi_index(k);
    auto wrap = [N](int a) { return (a % N + N) % N; };
    auto at = [&](int a, int b) { return u[grid_.flat_index(wrap(a), n == 2 ? wrap(b) : 0)]; };

    const double u0 = u[k];
    double plus[2], minus[2];
    plus[0] = at(i + 1, j);
    minus[0] = at(i - 1, j);
    if (n == 2) {
      plus[1] = at(i, j + 1);
      minus[1] = at(i, j - 1);
    }

    Vec p_up(n), p_c(n), fwd(n), bwd(n);
    for (int d = 0; d < n; ++d) {
      fwd(d) = (plus[d] - u0) / h;
      bwd(d) = (u0 - minus[d]) / h;
      p_c(d) = (plus[d] - minus[d]) / (2.0 * h);
      p_up(d) = p_c(d) > 0.0 ? bwd(d) : fwd(d);
    }

    const Mat a = symmetrize(diffusion_matrix(op_, p_up, EvalOptions{opt_.regularize_singular}));
    double trace = 0.0;
    for (int d = 0; d < n; ++d) trace += a(d, d) * (plus[d] - 2.0 * u0 + minus[d]) / (h * h);
    if (n == 2 && a(0, 1) != 0.0) {
      const double a12 = a(0, 1);
      if (std::abs(a12) > std::min(a(0, 0), a(1, 1)) * (1.0 + 1e-12) + 1e-14) {
        std::ostringstream msg;
        msg << "non-monotone stencil: |A12| > min(A11, A22) at p = (" << p_up(0) << ", " << p_up(1) << ")";
        throw NonMonotoneStencil(msg.str());
      }
      const double cross_sum = plus[0] + minus[0] + plus[1] + minus[1];
      double dxy;
      if (a12 > 0.0)
        dxy = (2.0 * u0 + at(i + 1, j + 1) + at(i - 1, j - 1) - cross_sum) / (2.0 * h * h);
      else
        dxy = -(2.0 * u0 + at(i + 1, j - 1) + at(i - 1, j + 1) - cross_sum) / (2.0 * h * h);
      trace += 2.0 * a12 * dxy;
    }

    const Vec x = grid_.point_vec(k);
    double first = 0.0;
    if (const auto* ld = std::get_if<LinearDrift>(&op_)) {
      if (ld->drift) {
        Vec b = ld->drift(x);
        if (b.size() != n) throw DimensionMismatch("drift field dimension does not match grid dimension");
        for (int d = 0; d < n; ++d) first += b(d) * (b(d) >= 0.0 ? bwd(d) : fwd(d));
      }
    } else {
      // Upwind each component by the sign of dH/dp_d at the centered gradient.
      Vec p_fo(n);
      for (int d = 0; d < n; ++d) {
        Vec e = Vec::Zero(n);
        e(d) = 1e-6;
        const double slope = first_order_term(op_, x, p_c + e) - first_order_term(op_, x, p_c - e);
        p_fo(d) = slope >= 0.0 ? bwd(d) : fwd(d);
      }
      first = first_order_term(op_, x, p_fo);
    }

    double value = -trace + first + zeroth_coefficient(op_) * u0;
    if (forcing_) value -= forcing_(x);
    return value;
  }

  std::vector<double> apply(std::span<const double> u, Parallelism par = {}) const {
    std::vector<double> out(u.size());
    parallel_chunks(u.size(), par, [&](std::size_t b, std::size_t e, std::size_t) {
      for (std::size_t k = b; k < e; ++k) out[k] = apply_at(u, k);
    });
    return out;
  }

  /// One explicit step u - tau F_h(u) with the clamp ring held at zero.
  std::vector<double> update(std::span<const double> u, double tau, Parallelism par = {}) const {
    std::vector<double> out(u.size());
    parallel_chunks(u.size(), par, [&](std::size_t b, std::size_t e, std::size_t) {
      for (std::size_t k = b; k < e; ++k) out[k] = is_active(k) ? u[k] - tau * apply_at(u, k) : 0.0;
    });
    return out;
  }

 private:
  friend DiscreteOperator discretize(const EllipticOperatorSpec&, const Grid&, SchemeOptions);

  EllipticOperatorSpec op_;
  Grid grid_;
  SchemeOptions opt_;
  BoundaryPolicy boundary_;
  Forcing forcing_;
  double lambda_max_ = 0.0;
  double first_order_bound_ = 0.0;
};

inline DiscreteOperator discretize(const EllipticOperatorSpec& op, const Grid& grid, SchemeOptions opt = {}) {
  if (!has_trace_form(op)) throw ConfigError("operator '" + describe(op) + "' has no trace form to discretize");
  DiscreteOperator dop(op, grid, opt);
  const int n = grid.dim();
  const EvalOptions eval{opt.regularize_singular};

  // Sampled gradients: the origin plus a uniform cloud in the ball.
  double lam = max_eigenvalue(symmetrize(diffusion_matrix(op, Vec::Zero(n), eval)));
  for (std::size_t s = 0; s < opt.dominance_samples; ++s) {
    Rng rng = make_rng(opt.seed, s);
    const double r = opt.gradient_range * std::pow(uniform(rng, 0.0, 1.0), 1.0 / n);
    const Vec p = random_unit(rng, n) * r;
    const Mat a = symmetrize(diffusion_matrix(op, p, eval));
    lam = std::max(lam, max_eigenvalue(a));
    if (n == 2 && std::abs(a(0, 1)) > std::min(a(0, 0), a(1, 1)) * (1.0 + 1e-12) + 1e-14) {
      std::ostringstream msg;
      msg << "non-monotone stencil: |A12| > min(A11, A22) at sampled p = (" << p(0) << ", " << p(1) << ")";
      throw NonMonotoneStencil(msg.str());
    }
  }
  dop.lambda_max_ = lam;

  // First-order Lipschitz bound in the l1 sense, which is what the upwind
  // diagonal coefficient accumulates.
  double bound = 0.0;
  if (const auto* ld = std::get_if<LinearDrift>(&op)) {
    if (ld->drift) {
      for (std::size_t k = 0; k < grid.size(); ++k) {
        Vec b = ld->drift(grid.point_vec(k));
        if (b.size() != n) throw DimensionMismatch("drift field dimension does not match grid dimension");
        bound = std::max(bound, b.lpNorm<1>());
      }
    }
  } else {
    const std::size_t probes = std::min<std::size_t>(opt.dominance_samples, 512);
    for (std::size_t s = 0; s < probes; ++s) {
      Rng rng = make_rng(opt.seed ^ 0xf00dULL, s);
      const Vec p = random_unit(rng, n) * uniform(rng, 0.0, opt.gradient_range);
      const Vec x = grid.point_vec(std::size_t(s % grid.size()));
      double l1 = 0.0;
      for (int d = 0; d < n; ++d) {
        Vec e = Vec::Zero(n);
        e(d) = 1e-6;
        l1 += std::abs(first_order_term(op, x, p + e) - first_order_term(op, x, p - e)) / 2e-6;
      }
      bound = std::max(bound, l1);
    }
  }
  dop.first_order_bound_ = bound;
  return dop;
}

struct SolveReport {
  ScalarField field;
  std::vector<double> residual_history;
  std::size_t iterations = 0;
  bool converged = false;
  double tau = 0.0;
  double tol = 0.0;
};

inline double residual(const DiscreteOperator& dop, const ScalarField& field, Parallelism par = {}) {
  std::vector<double> r = dop.apply(field.values(), par);
  double m = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k)
    if (dop.is_active(k)) m = std::max(m, std::abs(r[k]));
  return m;
}

/// Jacobi-style pseudo-time iteration; the residual is recorded before every
/// step, so residual_history.size() == iterations + 1.
inline SolveReport solve_steady(const DiscreteOperator& dop, const ScalarField& init, double tau, double tol,
                                std::size_t max_iter, Parallelism par = {}) {
  if (!(tau > 0.0)) throw ConfigError("solve_steady: tau must be positive");
  if (!(tol > 0.0)) throw ConfigError("solve_steady: tol must be positive");
  const double tmax = dop.tau_max();
  if (tau > tmax * (1.0 + 1e-12))
    throw ConfigError("solve_steady: tau = " + format_double(tau) + " exceeds the monotone step bound " +
                      format_double(tmax));
  if (init.size() != dop.grid().size()) throw DimensionMismatch("initial field does not match the grid");

  std::vector<double> u(init.values().begin(), init.values().end());
  for (std::size_t k = 0; k < u.size(); ++k)
    if (!dop.is_active(k)) u[k] = 0.0;

  SolveReport rep{ScalarField(dop.grid()), {}, 0, false, tau, tol};
  std::size_t it = 0;
  for (;;) {
    std::vector<double> f = dop.apply(u, par);
    double r = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (!std::isfinite(f[k]) || !std::isfinite(u[k]))
        throw DivergenceError("solver diverged (non-finite value) at iteration " + std::to_string(it), it);
      if (dop.is_active(k)) r = std::max(r, std::abs(f[k]));
    }
    rep.residual_history.push_back(r);
    if (r <= tol) {
      rep.converged = true;
      break;
    }
    if (it >= max_iter) break;
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = dop.is_active(k) ? u[k] - tau * f[k] : 0.0;
    ++it;
  }
  rep.iterations = it;
  rep.field = ScalarField(dop.grid(), std::move(u));
  return rep;
}

struct MonotonicityViolation {
  std::size_t trial = 0;
  std::size_t point = 0;
  double update_u = 0.0;
  double update_v = 0.0;
};

struct MonotonicityReport {
  std::size_t trials = 0;
  std::vector<MonotonicityViolation> violations;
  /// First violating ordered pair u <= v, kept as a concrete witness.
  std::optional<std::pair<std::vector<double>, std::vector<double>>> witness;
  bool ok() const { return violations.empty(); }
};

/// Random ordered pairs u <= v; checks update(u) <= update(v) + 1e-10.
/// Even trials raise v everywhere, odd trials raise a single point.
inline MonotonicityReport monotonicity_probe(const DiscreteOperator& dop, double tau, std::size_t trials,
                                             std::uint64_t seed, double amplitude = 1.0) {
  if (trials < 1) throw ConfigError("monotonicity_probe needs trials >= 1");
  MonotonicityReport rep;
  rep.trials = trials;
  const std::size_t m = dop.grid().size();
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, t);
    std::vector<double> u(m), v(m);
    for (std::size_t k = 0; k < m; ++k) u[k] = uniform(rng, -amplitude, amplitude);
    v = u;
    if (t % 2 == 0) {
      for (std::size_t k = 0; k < m; ++k) v[k] += uniform(rng, 0.0, amplitude);
    } else {
      const auto k = std::size_t(uniform(rng, 0.0, double(m))) % m;
      v[k] += uniform(rng, 0.0, amplitude);
    }
    const auto uu = dop.update(u, tau);
    const auto uv = dop.update(v, tau);
    bool hit = false;
    for (std::size_t k = 0; k < m; ++k) {
      if (uu[k] > uv[k] + 1e-10) {
        rep.violations.push_back({t, k, uu[k], uv[k]});
        hit = true;
      }
    }
    if (hit && !rep.witness) rep.witness = std::make_pair(u, v);
  }
  return rep;
}

}  // namespace viscmod
