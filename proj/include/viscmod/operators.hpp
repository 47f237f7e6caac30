#pragma once

// Catalog of degenerate elliptic operators F(x, z, p, M) in trace form
//
//   F(x, z, p, M) = -Trace(A(p) M) + H(x, p) + c z,
//
// where A(p) is the diffusion matrix, H the first-order part and c > 0.

#include "viscmod/common.hpp"
#include "viscmod/expression.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace viscmod {

enum class DiffusionProfile { Laplace, PLaplace, MinimalSurface };

inline const char* to_string(DiffusionProfile p) {
  switch (p) {
    case DiffusionProfile::Laplace: return "laplace";
    case DiffusionProfile::PLaplace: return "p_laplace";
    default: return "minimal_surface";
  }
}

using DiffusionMap = std::function<Mat(const Vec& p)>;
using DriftField = std::function<Vec(const Vec& x)>;
using GradientMap = std::function<double(const Vec& p)>;

/// -Trace(A(p) M) + <b(x), p> + c z with A(p) >= lambda I and |b| <= B.
struct LinearDrift {
  double lambda = 1.0;
  DiffusionMap diffusion;  // empty: lambda * I
  DriftField drift;        // empty: zero field
  double drift_bound = 0.0;
  double c = 1.0;
  std::string drift_source = "0";
};

/// -Trace(A(|p|) M) + g(p) + c z with A(|p|) >= 0 from a radial profile.
struct QuasilinearTrace {
  DiffusionProfile profile = DiffusionProfile::Laplace;
  double p_exp = 2.0;
  GradientMap first_order;  // empty: g = 0
  double c = 1.0;
  std::string first_order_source = "0";
};

/// Escape hatch for controls and manufactured problems. `pointwise`, when set,
/// overrides the trace form for eval_F; the trace-form parts are needed by the
/// finite-difference scheme.
struct CustomOperator {
  std::string name = "custom";
  std::function<double(const Vec& x, double z, const Vec& p, const Mat& m)> pointwise;
  DiffusionMap diffusion;
  std::function<double(const Vec& x, const Vec& p)> first_order;
  double c = 0.0;
};

using EllipticOperatorSpec = std::variant<LinearDrift, QuasilinearTrace, CustomOperator>;

struct EvalOptions {
  /// Treat the p-Laplace diffusion at p = 0 with exponent < 2 as zero instead
  /// of raising SingularDiffusion.
  bool regularized = false;
};

// ////////////////////////////////////////////////////////////////////////////
// Factories

inline EllipticOperatorSpec make_laplace(double c = 1.0) {
  return QuasilinearTrace{DiffusionProfile::Laplace, 2.0, {}, c, "0"};
}

inline EllipticOperatorSpec make_p_laplace(double p_exp, double c = 1.0) {
  if (!(p_exp > 1.0)) throw ConfigError("p_laplace exponent must exceed 1");
  return QuasilinearTrace{DiffusionProfile::PLaplace, p_exp, {}, c, "0"};
}

inline EllipticOperatorSpec make_minimal_surface(double c = 1.0) {
  return QuasilinearTrace{DiffusionProfile::MinimalSurface, 2.0, {}, c, "0"};
}

inline DriftField drift_from_expressions(std::vector<Expression> comps) {
  return [comps = std::move(comps)](const Vec& x) {
    Vec b(Eigen::Index(comps.size()));
    std::span<const double> xs(x.data(), std::size_t(x.size()));
    for (std::size_t k = 0; k < comps.size(); ++k) b(Eigen::Index(k)) = comps[k].eval(xs, {});
    return b;
  };
}

/// Linear-drift operator with isotropic diffusion lambda I and b given as
/// ';'-separated component expressions in x, y.
inline EllipticOperatorSpec make_linear_drift(double lambda, const std::string& b_expr, double drift_bound,
                                              double c) {
  if (!(lambda > 0.0)) throw ConfigError("linear_drift needs lambda > 0");
  if (!(drift_bound >= 0.0)) throw ConfigError("linear_drift needs B >= 0");
  if (!(c > 0.0)) throw ConfigError("linear_drift needs c > 0");
  LinearDrift op;
  op.lambda = lambda;
  op.drift = drift_from_expressions(parse_vector_expression(b_expr));
  op.drift_bound = drift_bound;
  op.c = c;
  op.drift_source = b_expr;
  return op;
}

inline EllipticOperatorSpec with_first_order(EllipticOperatorSpec op, const std::string& g_expr) {
  if (auto* q = std::get_if<QuasilinearTrace>(&op)) {
    Expression e(g_expr);
    q->first_order = [e](const Vec& p) {
      return e.eval({}, std::span<const double>(p.data(), std::size_t(p.size())));
    };
    q->first_order_source = g_expr;
  } else {
    throw ConfigError("g_expr applies to quasilinear_trace operators only");
  }
  return op;
}

// ////////////////////////////////////////////////////////////////////////////
// Parts of the trace form

inline std::string describe(const EllipticOperatorSpec& op) {
  return std::visit(
      [](const auto& o) -> std::string {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, LinearDrift>) {
          return "linear_drift(lambda=" + format_double(o.lambda) + ", B=" + format_double(o.drift_bound) +
                 ", c=" + format_double(o.c) + ", b=" + o.drift_source + ")";
        } else if constexpr (std::is_same_v<T, QuasilinearTrace>) {
          std::string prof = to_string(o.profile);
          if (o.profile == DiffusionProfile::PLaplace) prof += "(" + format_double(o.p_exp) + ")";
          return "quasilinear_trace(" + prof + ", c=" + format_double(o.c) + ", g=" + o.first_order_source + ")";
        } else {
          return o.name;
        }
      },
      op);
}

inline bool has_trace_form(const EllipticOperatorSpec& op) {
  if (auto* c = std::get_if<CustomOperator>(&op)) return bool(c->diffusion);
  return true;
}

inline double zeroth_coefficient(const EllipticOperatorSpec& op) {
  return std::visit([](const auto& o) { return o.c; }, op);
}

inline Mat radial_diffusion(DiffusionProfile profile, double p_exp, const Vec& p, bool regularized) {
  const Eigen::Index n = p.size();
  const double r = p.norm();
  switch (profile) {
    case DiffusionProfile::Laplace: return Mat::Identity(n, n);
    case DiffusionProfile::PLaplace: {
      if (r == 0.0 && p_exp < 2.0) {
        if (regularized) return Mat::Zero(n, n);
        throw SingularDiffusion("p_laplace diffusion |p|^(q-2) is singular at p = 0 for q < 2");
      }
      if (p_exp == 2.0) return Mat::Identity(n, n);
      return std::pow(r, p_exp - 2.0) * Mat::Identity(n, n);
    }
    case DiffusionProfile::MinimalSurface: {
      const double w = 1.0 + r * r;
      return (Mat::Identity(n, n) - p * p.transpose() / w) / std::sqrt(w);
    }
  }
  return Mat::Identity(n, n);
}

inline Mat diffusion_matrix(const EllipticOperatorSpec& op, const Vec& p, EvalOptions opt = {}) {
  return std::visit(
      [&](const auto& o) -> Mat {
        using T = std::decay_t<decltype(o)>;
        const Eigen::Index n = p.size();
        if constexpr (std::is_same_v<T, LinearDrift>) {
          return o.diffusion ? o.diffusion(p) : Mat(o.lambda * Mat::Identity(n, n));
        } else if constexpr (std::is_same_v<T, QuasilinearTrace>) {
          return radial_diffusion(o.profile, o.p_exp, p, opt.regularized);
        } else {
          if (!o.diffusion) throw ConfigError("operator '" + o.name + "' has no diffusion matrix");
          return o.diffusion(p);
        }
      },
      op);
}

inline double first_order_term(const EllipticOperatorSpec& op, const Vec& x, const Vec& p) {
  return std::visit(
      [&](const auto& o) -> double {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, LinearDrift>) {
          if (!o.drift) return 0.0;
          Vec b = o.drift(x);
          if (b.size() != p.size())
            throw DimensionMismatch("drift field has " + std::to_string(b.size()) + " components, gradient has " +
                                    std::to_string(p.size()));
          return b.dot(p);
        } else if constexpr (std::is_same_v<T, QuasilinearTrace>) {
          return o.first_order ? o.first_order(p) : 0.0;
        } else {
          return o.first_order ? o.first_order(x, p) : 0.0;
        }
      },
      op);
}

/// Pointwise F(x, z, p, M). M must be symmetric up to 1e-12 relative.
inline double eval_F(const EllipticOperatorSpec& op, const Vec& x, double z, const Vec& p, const Mat& m,
                     EvalOptions opt = {}) {
  const Eigen::Index n = x.size();
  if (p.size() != n || m.rows() != n || m.cols() != n)
    throw DimensionMismatch("eval_F: x, p and M must share dimension " + std::to_string(n));
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ConfigError("eval_F: matrix argument is not symmetric");
  const Mat ms = symmetrize(m);
  if (auto* c = std::get_if<CustomOperator>(&op); c && c->pointwise) return c->pointwise(x, z, p, ms);
  const Mat a = diffusion_matrix(op, p, opt);
  return -(a.cwiseProduct(ms)).sum() + first_order_term(op, x, p) + zeroth_coefficient(op) * z;
}

inline double min_eigen_lambda(const EllipticOperatorSpec& op, const Vec& p, EvalOptions opt = {}) {
  return std::max(0.0, min_eigenvalue(symmetrize(diffusion_matrix(op, p, opt))));
}

inline double max_eigen_lambda(const EllipticOperatorSpec& op, const Vec& p, EvalOptions opt = {}) {
  return max_eigenvalue(symmetrize(diffusion_matrix(op, p, opt)));
}

// ////////////////////////////////////////////////////////////////////////////
// Diagnostics

struct EllipticityViolation {
  std::size_t sample = 0;
  double f_at_a = 0.0;
  double f_at_b = 0.0;
  double margin = 0.0;  // F(B) - F(A), positive means violated
};

struct EllipticityReport {
  std::size_t samples = 0;
  std::vector<EllipticityViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Samples (x, z, p, A, B) with A <= B and checks F(x,z,p,B) <= F(x,z,p,A) + 1e-10.
inline EllipticityReport check_degenerate_ellipticity(const EllipticOperatorSpec& op, int dim,
                                                      std::size_t sample_count, std::uint64_t seed) {
  if (sample_count < 1) throw ConfigError("check_degenerate_ellipticity needs sample_count >= 1");
  EllipticityReport rep;
  rep.samples = sample_count;
  for (std::size_t i = 0; i < sample_count; ++i) {
    Rng rng = make_rng(seed, i);
    Vec x(dim);
    for (int d = 0; d < dim; ++d) x(d) = uniform(rng, -M_PI, M_PI);
    const double z = uniform(rng, -1.0, 1.0);
    const Vec p = random_unit(rng, dim) * uniform(rng, 0.1, 3.0);
    const Mat a = random_symmetric(rng, dim);
    const Mat b = a + random_psd(rng, dim, uniform(rng, 0.0, 1.0));
    const double fa = eval_F(op, x, z, p, a);
    const double fb = eval_F(op, x, z, p, b);
    if (fb > fa + 1e-10) rep.violations.push_back({i, fa, fb, fb - fa});
  }
  return rep;
}

struct OperatorValidation {
  double max_drift_norm = 0.0;   // sampled sup |b(x)|
  double min_diffusion_eig = 0.0;
  bool drift_bound_ok = true;
  bool lambda_floor_ok = true;
  bool ok() const { return drift_bound_ok && lambda_floor_ok; }
};

/// Dense sampling of |b(x)| <= B over a box and of eig_min A(p) >= lambda over a
/// ball of gradients, for linear-drift operators.
inline OperatorValidation validate_linear_drift(const LinearDrift& op, int dim, double box_half_width,
                                                double gradient_radius, std::size_t samples,
                                                std::uint64_t seed) {
  OperatorValidation v;
  v.min_diffusion_eig = std::numeric_limits<double>::infinity();
  EllipticOperatorSpec spec = op;
  for (std::size_t i = 0; i < samples; ++i) {
    Rng rng = make_rng(seed, i);
    Vec x(dim);
    for (int d = 0; d < dim; ++d) x(d) = uniform(rng, -box_half_width, box_half_width);
    if (op.drift) {
      Vec b = op.drift(x);
      if (b.size() != dim) throw DimensionMismatch("drift field dimension does not match grid dimension");
      v.max_drift_norm = std::max(v.max_drift_norm, b.norm());
    }
    Vec p = random_unit(rng, dim) * uniform(rng, 0.0, gradient_radius);
    v.min_diffusion_eig = std::min(v.min_diffusion_eig, min_eigenvalue(symmetrize(diffusion_matrix(spec, p))));
  }
  v.drift_bound_ok = v.max_drift_norm <= op.drift_bound * (1.0 + 1e-12) + 1e-15;
  v.lambda_floor_ok = v.min_diffusion_eig >= op.lambda * (1.0 - 1e-12);
  return v;
}

}  // namespace viscmod
