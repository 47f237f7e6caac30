#pragma once

// Subcommands of the viscmod tool. Each reads its inputs from the input
// directory (artifacts of earlier subcommands), writes CSV/JSON artifacts to
// the output directory and returns a process exit code.

#include "viscmod/bounds.hpp"
#include "cli/config.hpp"
#include "viscmod/expression.hpp"
#include "viscmod/io.hpp"
#include "viscmod/moc.hpp"
#include "viscmod/oned.hpp"
#include "viscmod/pde_solver.hpp"
#include "viscmod/structure_cond.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace viscmod::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kVerificationFailure = 1, kConfigFailure = 2, kDivergence = 3 };

struct Context {
  RunConfig cfg;
  fs::path out = "out";
  fs::path input = "out";
  Parallelism par;
  bool quiet = false;
  std::ostream* log = &std::cout;

  std::ostream& say() const {
    static std::ostringstream sink;
    if (quiet) {
      sink.str({});
      return sink;
    }
    return *log;
  }
};

inline const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names{"solve",   "moc",    "supersolution", "check-structure",
                                              "check-subsolution", "compare", "bounds", "pipeline",
                                              "demo-example1", "demo-example2"};
  return names;
}

// ////////////////////////////////////////////////////////////////////////////
// File helpers

inline void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  os << text;
}

inline void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

template <class Writer>
void write_csv(const fs::path& path, Writer&& w) {
  std::ostringstream os;
  w(os);
  write_text(path, os.str());
}

inline std::ifstream open_input(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("missing input file '" + path.string() + "'");
  return is;
}

inline Json read_json(const fs::path& path) {
  auto is = open_input(path);
  try {
    return Json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse '" + path.string() + "': " + e.what());
  }
}

inline ScalarField load_field(const Context& ctx) {
  auto is = open_input(ctx.input / "field.csv");
  return read_field_csv(is, make_grid(grid_spec(ctx.cfg)));
}

inline ModulusCurve load_modulus(const Context& ctx, double source_sup) {
  auto is = open_input(ctx.input / "modulus.csv");
  return read_modulus_csv(is, bin_width(ctx.cfg), source_sup, grid_spec(ctx.cfg).kind);
}

inline Json config_echo(const RunConfig& c) {
  return {{"operator", describe(operator_spec(c))},
          {"grid", to_json(grid_spec(c))},
          {"D", diameter(c)},
          {"pairing", c.oned.pairing},
          {"seed", c.structure.seed}};
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

// ////////////////////////////////////////////////////////////////////////////
// solve

inline ScalarField initial_field(const RunConfig& c, const Grid& grid) {
  std::vector<double> v(grid.size(), 0.0);
  const double amp = c.solver.init_amplitude;
  if (c.solver.init == "random") {
    Rng rng = make_rng(c.structure.seed, 0x1417);
    for (double& x : v) x = uniform(rng, -amp, amp);
  } else if (c.solver.init == "smooth") {
    // Trigonometric polynomial with three random modes per axis, |u| <= amp.
    Rng rng = make_rng(c.structure.seed, 0x1418);
    const double period = grid.periodic() ? c.grid.L : 2.0 * c.grid.R;
    double coef[2][3][2];
    for (auto& axis : coef)
      for (auto& mode : axis)
        for (double& w : mode) w = uniform(rng, -1.0, 1.0) / (6.0 * grid.dim());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Vec x = grid.point_vec(k);
      double s = 0.0;
      for (int d = 0; d < grid.dim(); ++d)
        for (int m = 0; m < 3; ++m) {
          const double t = 2.0 * M_PI * (m + 1) * x(d) / period;
          s += coef[d][m][0] * std::cos(t) + coef[d][m][1] * std::sin(t);
        }
      v[k] = amp * s;
    }
  }
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (grid.on_clamp_ring(k)) v[k] = 0.0;
  return ScalarField(grid, std::move(v));
}

inline DiscreteOperator configured_discretization(const RunConfig& c) {
  SchemeOptions opt;
  opt.seed = c.structure.seed;
  DiscreteOperator dop = discretize(operator_spec(c), make_grid(grid_spec(c)), opt);
  if (c.problem.forcing != "0") {
    Expression e(c.problem.forcing);
    dop = dop.with_forcing(
        [e](const Vec& x) { return e.eval(std::span<const double>(x.data(), std::size_t(x.size())), {}); });
  }
  return dop;
}

struct SolveOutcome {
  SolveReport report;
  double tau_max = 0.0;
};

inline SolveOutcome run_solve(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const DiscreteOperator dop = configured_discretization(c);
  const double tau = c.solver.tau > 0.0 ? c.solver.tau : 0.9 * dop.tau_max();
  SolveOutcome out{solve_steady(dop, initial_field(c, dop.grid()), tau, c.solver.tol, c.solver.max_iter, ctx.par),
                   dop.tau_max()};
  write_csv(ctx.out / "field.csv", [&](std::ostream& os) { write_field_csv(os, out.report.field); });
  write_csv(ctx.out / "residuals.csv", [&](std::ostream& os) { write_residual_csv(os, out.report); });
  Json j = config_echo(c);
  j["tau_max"] = out.tau_max;
  j["report"] = to_json(out.report);
  write_json(ctx.out / "solve.json", with_schema(j));
  ctx.say() << "solve: " << (out.report.converged ? "converged" : "NOT converged") << " after "
            << out.report.iterations << " iterations, residual "
            << fmt(out.report.residual_history.empty() ? 0.0 : out.report.residual_history.back()) << ", |u|_0 = "
            << fmt(sup_norm(out.report.field)) << "\n";
  return out;
}

inline int cmd_solve(const Context& ctx) { return run_solve(ctx).report.converged ? kOk : kVerificationFailure; }

// ////////////////////////////////////////////////////////////////////////////
// moc

struct MocOutcome {
  ModulusCurve curve;
  std::optional<double> s_eps;
};

inline MocOutcome run_moc(const Context& ctx) {
  const ScalarField field = load_field(ctx);
  MocOutcome out{compute_modulus(field, bin_width(ctx.cfg), ctx.par), std::nullopt};
  if (field.grid().kind() == DomainKind::Truncated) out.s_eps = find_s_eps(out.curve, ctx.cfg.oned.endpoint_eps);
  write_csv(ctx.out / "modulus.csv", [&](std::ostream& os) { write_modulus_csv(os, out.curve); });
  Json j = config_echo(ctx.cfg);
  j["field_sup"] = sup_norm(field);
  double omax = 0.0;
  for (std::size_t k = 0; k < out.curve.size(); ++k)
    if (out.curve.present(k)) omax = std::max(omax, *out.curve.values[k]);
  j["omega_max"] = omax;
  if (field.grid().kind() == DomainKind::Truncated) {
    j["endpoint_eps"] = ctx.cfg.oned.endpoint_eps;
    j["s_eps"] = optional_json(out.s_eps);
  }
  j["modulus"] = to_json(out.curve);
  write_json(ctx.out / "modulus.json", with_schema(j));
  ctx.say() << "moc: " << out.curve.size() << " bins of width " << fmt(out.curve.bin_width) << ", max omega "
            << fmt(omax);
  if (field.grid().kind() == DomainKind::Truncated)
    ctx.say() << ", s(eps) = " << (out.s_eps ? fmt(*out.s_eps) : std::string("none"));
  ctx.say() << "\n";
  return out;
}

inline int cmd_moc(const Context& ctx) {
  run_moc(ctx);
  return kOk;
}

// ////////////////////////////////////////////////////////////////////////////
// supersolution

struct SupersolutionOutcome {
  Pairing pairing;
  SupersolutionSpec zeta;
  SupersolutionCheck check;
  double interval_hi = 0.0;
  std::optional<ShrinkReport> shrink;
  std::optional<double> s_eps;
};

inline SupersolutionOutcome run_supersolution(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const Pairing pairing = configured_pairing(c);
  const ScalarField field = load_field(ctx);
  const double u_sup = sup_norm(field);
  const double D = diameter(c);
  const bool vanishing = field.grid().kind() == DomainKind::Truncated;

  SupersolutionOutcome out{pairing, Parabola{}, {}, 0.0, std::nullopt, std::nullopt};
  std::vector<double> s_grid;
  if (const auto* f1 = std::get_if<LinearDrift1D>(&pairing.f)) {
    EndpointCase endpoint = PeriodicEndpoint{D};
    if (vanishing) {
      const ModulusCurve curve = load_modulus(ctx, u_sup);
      out.s_eps = find_s_eps(curve, c.oned.endpoint_eps);
      if (!out.s_eps)
        throw RefusalError("no s(eps) exists for eps = " + format_double(c.oned.endpoint_eps) +
                           ": the modulus exceeds |u|_0/2 + eps in the last bin");
      endpoint = VanishingEndpoint{*out.s_eps, c.oned.endpoint_eps};
      out.interval_hi = curve.centers.back();
    } else {
      out.interval_hi = D / 2.0;
    }
    out.zeta = make_exponential_supersolution(f1->lambda, f1->B, f1->c, u_sup, endpoint);
    out.shrink = shrink_mu_iteration(*f1, u_sup, endpoint, c.oned.shrink_K, c.oned.a_step);
  } else {
    const double a = c.oned.parabola_a > 0.0 ? c.oned.parabola_a : u_sup;
    if (!(a > 0.0)) throw ConfigError("oned.parabola_a must be positive when the field is identically zero");
    if (a < u_sup)
      throw RefusalError("parabola height a = " + format_double(a) + " is below |u|_0 = " + format_double(u_sup));
    out.zeta = make_parabola_supersolution(a, D);
    out.interval_hi = D / 2.0;
  }
  const double end = std::min(out.interval_hi, zeta_domain_end(out.zeta));
  for (int i = 1; i <= 1000; ++i) s_grid.push_back(end * i / 1000.0);
  out.check = check_supersolution(pairing.f, out.zeta, s_grid, c.oned.tolerance);

  std::vector<double> plot;
  for (int i = 0; i <= 200; ++i) plot.push_back(end * i / 200.0);
  write_csv(ctx.out / "zeta.csv", [&](std::ostream& os) { write_zeta_csv(os, out.zeta, plot); });
  if (out.shrink) write_csv(ctx.out / "shrink.csv", [&](std::ostream& os) { write_shrink_csv(os, *out.shrink); });

  Json j = config_echo(c);
  j["f"] = to_json(pairing.f);
  j["u_sup"] = u_sup;
  if (vanishing) {
    j["endpoint_eps"] = c.oned.endpoint_eps;
    j["s_eps"] = optional_json(out.s_eps);
  }
  j["zeta"] = to_json(out.zeta);
  j["interval"] = {0.0, out.interval_hi};
  j["check"] = to_json(out.check);
  if (out.shrink) j["shrink"] = to_json(*out.shrink);
  write_json(ctx.out / "supersolution.json", with_schema(j));
  ctx.say() << "supersolution: " << describe(out.zeta) << ", f(zeta) >= 0 " << (out.check.holds ? "holds" : "FAILS")
            << " (min " << fmt(out.check.min_residual) << ")\n";
  return out;
}

inline int cmd_supersolution(const Context& ctx) {
  return run_supersolution(ctx).check.holds ? kOk : kVerificationFailure;
}

// ////////////////////////////////////////////////////////////////////////////
// check-structure

inline int cmd_check_structure(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const Pairing pairing = configured_pairing(c);
  JetSampling js;
  js.samples = c.structure.samples;
  js.seed = c.structure.seed;
  js.max_dim = c.structure.max_dim;
  js.phi_prime_max = c.structure.phi_prime_max;
  js.phi_second_max = c.structure.phi_second_max;
  bool ok = true;
  Json lemmas = Json::array();
  for (double eps : c.structure.lemma_eps) {
    const LemmaSuiteReport r = run_lemma_suite(js, eps, ctx.par);
    ok = ok && r.ok();
    lemmas.push_back(to_json(r));
    ctx.say() << "lemma suite eps=" << fmt(eps) << ": " << r.violations.size() << " violations in "
              << r.samples.size() << " samples\n";
  }
  StructureSampling ss;
  ss.samples = c.structure.samples;
  ss.seed = c.structure.seed;
  ss.phi_prime_max = c.structure.phi_prime_max;
  ss.phi_second_max = c.structure.phi_second_max;
  ss.eps_max = c.structure.eps_max;
  const StructureReport sr = check_structure_condition(pairing, ss, ctx.par);
  ok = ok && sr.ok();
  ctx.say() << "structure condition (" << pairing.id << "): " << sr.violations.size() << " violations in "
            << sr.samples << " samples, worst margin " << fmt(sr.worst_margin) << "\n";
  Json j = config_echo(c);
  j["lemmas"] = lemmas;
  j["structure"] = to_json(sr);
  write_json(ctx.out / "structure.json", with_schema(j));
  return ok ? kOk : kVerificationFailure;
}

// ////////////////////////////////////////////////////////////////////////////
// check-subsolution

inline int cmd_check_subsolution(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const Pairing pairing = configured_pairing(c);
  const ModulusCurve curve = load_modulus(ctx, 0.0);
  SubsolutionOptions opt;
  opt.slope_samples = c.oned.K;
  opt.curvature_floor = curvature_floor(c);
  opt.tol = c.oned.tolerance;
  const SubsolutionReport r = check_viscosity_subsolution(pairing.f, curve, opt);
  Json j = config_echo(c);
  j["f"] = to_json(pairing.f);
  j["X_floor"] = opt.curvature_floor;
  j["K"] = opt.slope_samples;
  j["report"] = to_json(r);
  write_json(ctx.out / "subsolution.json", with_schema(j));
  ctx.say() << "subsolution check: " << r.bins_checked << " bins checked, " << r.kinks_skipped << " kinks skipped, "
            << r.violations.size() << " violations\n";
  return r.ok() ? kOk : kVerificationFailure;
}

// ////////////////////////////////////////////////////////////////////////////
// compare

inline CompareReport run_compare(const Context& ctx) {
  const Json sj = read_json(ctx.input / "supersolution.json");
  const SupersolutionSpec zeta = supersolution_from_json(sj.at("zeta"));
  const double hi = sj.at("interval").at(1).get<double>();
  const ModulusCurve curve = load_modulus(ctx, sj.at("u_sup").get<double>());
  const CompareReport r = compare(curve, zeta, 0.0, hi, ctx.cfg.oned.tolerance);
  Json j = config_echo(ctx.cfg);
  j["zeta"] = to_json(zeta);
  j["report"] = to_json(r);
  write_json(ctx.out / "compare.json", with_schema(j));
  ctx.say() << "compare: omega <= zeta on [0, " << fmt(hi) << "] " << (r.holds ? "holds" : "FAILS")
            << " (max excess " << fmt(r.max_violation) << " at s = " << fmt(r.argmax_s) << ")\n";
  return r;
}

inline int cmd_compare(const Context& ctx) { return run_compare(ctx).holds ? kOk : kVerificationFailure; }

// ////////////////////////////////////////////////////////////////////////////
// bounds

struct BoundsOutcome {
  GradientBoundReport report;
  BoundVerdict verdict;
};

inline void print_bounds_table(const Context& ctx, const BoundsOutcome& b) {
  auto& os = ctx.say();
  os << "  case  bound         empirical     margin\n";
  if (b.report.oscillation_bound)
    os << "  A     " << std::left << std::setw(14) << fmt(*b.report.oscillation_bound) << std::setw(14)
       << fmt(b.verdict.empirical_oscillation) << fmt(*b.report.oscillation_bound - b.verdict.empirical_oscillation)
       << std::right << "\n";
  if (b.report.lipschitz_bound && b.verdict.empirical_lipschitz)
    os << "  B     " << std::left << std::setw(14) << fmt(*b.report.lipschitz_bound) << std::setw(14)
       << fmt(*b.verdict.empirical_lipschitz) << fmt(*b.report.lipschitz_bound - *b.verdict.empirical_lipschitz)
       << std::right << "\n";
  if (b.report.holder)
    os << "  C     alpha = " << fmt(b.report.holder->alpha) << ", a = " << fmt(b.report.holder->a)
       << (b.report.holder->estimated ? " (estimated)" : "") << "\n";
}

inline BoundsOutcome run_bounds(const Context& ctx) {
  const Json sj = read_json(ctx.input / "supersolution.json");
  const SupersolutionSpec zeta = supersolution_from_json(sj.at("zeta"));
  const CompareReport cr = compare_from_json(read_json(ctx.input / "compare.json").at("report"));
  const ScalarField field = load_field(ctx);
  const double lo = ctx.cfg.bounds.interval_lo;
  const double hi = ctx.cfg.bounds.interval_hi > 0.0 ? ctx.cfg.bounds.interval_hi : cr.hi;
  BoundsOutcome out{derive_bounds(zeta, lo, hi, cr), {}};
  out.verdict = verify_bound(field, out.report, ctx.cfg.bounds.tol);
  Json j = config_echo(ctx.cfg);
  j["bounds"] = to_json(out.report);
  j["verification"] = to_json(out.verdict);
  write_json(ctx.out / "bounds.json", with_schema(j));
  ctx.say() << "bounds: verification " << (out.verdict.holds ? "passes" : "FAILS") << "\n";
  print_bounds_table(ctx, out);
  return out;
}

inline int cmd_bounds(const Context& ctx) { return run_bounds(ctx).verdict.holds ? kOk : kVerificationFailure; }

// ////////////////////////////////////////////////////////////////////////////
// pipeline and demos

struct PipelineOutcome {
  int code = kOk;
  std::optional<SolveOutcome> solve;
  std::optional<MocOutcome> moc;
  std::optional<SupersolutionOutcome> super;
  std::optional<SubsolutionReport> sub;
  std::optional<CompareReport> cmp;
  std::optional<BoundsOutcome> bounds;
};

/// solve -> moc -> supersolution -> compare -> bounds (with verification).
/// Intermediate artifacts land in ctx.out and are read back from there, so
/// each stage is reproducible by running its subcommand on those files.
inline PipelineOutcome run_pipeline(Context ctx, bool with_subsolution = false) {
  configured_pairing(ctx.cfg);  // fail fast on a missing or mismatched pairing
  ctx.input = ctx.out;
  PipelineOutcome p;
  p.solve = run_solve(ctx);
  if (!p.solve->report.converged) {
    p.code = kVerificationFailure;
    return p;
  }
  p.moc = run_moc(ctx);
  p.super = run_supersolution(ctx);
  if (!p.super->check.holds) p.code = kVerificationFailure;
  if (with_subsolution) {
    SubsolutionOptions opt;
    opt.slope_samples = ctx.cfg.oned.K;
    opt.curvature_floor = curvature_floor(ctx.cfg);
    opt.tol = ctx.cfg.oned.tolerance;
    p.sub = check_viscosity_subsolution(p.super->pairing.f, p.moc->curve, opt);
    Json j = config_echo(ctx.cfg);
    j["report"] = to_json(*p.sub);
    write_json(ctx.out / "subsolution.json", with_schema(j));
    ctx.say() << "subsolution check: " << p.sub->violations.size() << " violations in " << p.sub->bins_checked
              << " bins\n";
    if (!p.sub->ok()) p.code = kVerificationFailure;
  }
  p.cmp = run_compare(ctx);
  if (!p.cmp->holds) {
    p.code = kVerificationFailure;
    return p;
  }
  p.bounds = run_bounds(ctx);
  if (!p.bounds->verdict.holds) p.code = kVerificationFailure;
  return p;
}

inline int cmd_pipeline(const Context& ctx) { return run_pipeline(ctx).code; }

inline RunConfig example1_config(const RunConfig& base, bool vanishing) {
  RunConfig c = base;
  c.problem = ProblemConfig{};
  c.problem.kind = "linear_drift";
  c.problem.lambda = 1.0;
  c.problem.B = 0.5;
  c.problem.c = 1.0;
  c.problem.b_expr = "0.5";
  c.grid = GridConfig{};
  if (vanishing) {
    c.grid.domain = "truncated";
    c.grid.R = 6.0;
    c.grid.N = 97;
  }
  c.solver.tol = 1e-12;
  c.solver.init = "random";
  c.solver.init_amplitude = 1.0;
  c.oned.pairing = "example1";
  c.oned.endpoint_eps = 1e-3;
  return c;
}

inline int cmd_demo_example1(const Context& ctx) {
  int code = kOk;
  for (bool vanishing : {false, true}) {
    Context sub = ctx;
    sub.cfg = example1_config(ctx.cfg, vanishing);
    sub.out = ctx.out / (vanishing ? "example1_vanishing" : "example1_periodic");
    ctx.say() << "== example 1 (" << (vanishing ? "uniformly vanishing, R = 6" : "periodic, L = 2 pi") << ") ==\n";
    const PipelineOutcome p = run_pipeline(sub, true);
    const double u_sup = sup_norm(p.solve->report.field);
    double omax = 0.0;
    if (p.moc)
      for (std::size_t k = 0; k < p.moc->curve.size(); ++k)
        if (p.moc->curve.present(k)) omax = std::max(omax, *p.moc->curve.values[k]);
    bool consistent = p.code == kOk && u_sup <= 1e-8 && omax <= 1e-8;
    Json summary = config_echo(sub.cfg);
    summary["u_sup"] = u_sup;
    summary["omega_max"] = omax;
    if (p.super && p.super->shrink) {
      const ShrinkReport& sh = *p.super->shrink;
      ctx.say() << "  mu^2 shrink over growing intervals:\n  k   endpoint      mu2           sup zeta_k on base\n";
      for (const auto& r : sh.rows)
        ctx.say() << "  " << std::left << std::setw(4) << r.k << std::setw(14) << fmt(r.endpoint) << std::setw(14)
                  << fmt(r.mu2) << fmt(r.sup_on_base) << std::right << "\n";
      consistent = consistent && sh.strictly_decreasing && sh.rows.back().sup_on_base <= 1e-3;
      summary["shrink"] = to_json(sh);
    }
    if (p.super && p.super->s_eps) {
      summary["s_eps"] = *p.super->s_eps;
      ctx.say() << "  s(eps) = " << fmt(*p.super->s_eps) << " for eps = " << fmt(sub.cfg.oned.endpoint_eps) << "\n";
    }
    const std::string conclusion = consistent ? "consistent with: u identically zero"
                                              : "NOT consistent with: u identically zero";
    summary["conclusion"] = conclusion;
    write_json(sub.out / "summary.json", with_schema(summary));
    ctx.say() << "  |u|_0 = " << fmt(u_sup) << ", max omega = " << fmt(omax) << "\n  conclusion: " << conclusion
              << "\n";
    if (!consistent) code = kVerificationFailure;
  }
  return code;
}

inline RunConfig example2_config(const RunConfig& base, const std::string& variant) {
  RunConfig c = base;
  c.problem = ProblemConfig{};
  c.problem.kind = "quasilinear_trace";
  c.problem.c = 1.0;
  c.problem.p_exp = 3.0;
  c.problem.profile = variant.rfind("minimal_surface", 0) == 0 ? "minimal_surface" : variant;
  c.grid = GridConfig{};
  c.solver.tol = 1e-12;
  c.solver.init = "smooth";
  c.solver.init_amplitude = 0.25;
  c.oned.pairing = "example2_" + variant;
  c.oned.parabola_a = 1.0;
  return c;
}

inline int cmd_demo_example2(const Context& ctx) {
  int code = kOk;
  for (const std::string variant : {"laplace", "p_laplace", "minimal_surface_paper", "minimal_surface_std"}) {
    Context sub = ctx;
    sub.cfg = example2_config(ctx.cfg, variant);
    sub.out = ctx.out / ("example2_" + variant);
    ctx.say() << "== example 2 (" << variant << (variant == "p_laplace" ? "(3)" : "") << ", periodic) ==\n";
    const PipelineOutcome p = run_pipeline(sub, true);
    const double u_sup = sup_norm(p.solve->report.field);
    bool consistent = p.code == kOk && u_sup <= 1e-8;
    Json summary = config_echo(sub.cfg);
    summary["u_sup"] = u_sup;
    if (p.super) {
      const auto& par = std::get<Parabola>(p.super->zeta);
      const double lip = 4.0 * par.a / par.D;
      summary["lipschitz_bound"] = lip;
      ctx.say() << "  parabola a = " << fmt(par.a) << ", D = " << fmt(par.D) << ", lipschitz_bound = 4a/D = "
                << fmt(lip) << "\n  repeating region k D: lipschitz bound 4a/(k D)\n";
      Json table = Json::array();
      for (int k = 1; k <= sub.cfg.oned.shrink_K; ++k) {
        const Parabola pk = make_parabola_supersolution(par.a, k * par.D);
        std::vector<double> grid;
        for (int i = 1; i <= 1000; ++i) grid.push_back(pk.D * i / 1000.0);
        const SupersolutionCheck chk = check_supersolution(p.super->pairing.f, pk, grid, sub.cfg.oned.tolerance);
        consistent = consistent && chk.holds;
        table.push_back({{"k", k}, {"D", pk.D}, {"lipschitz_bound", 4.0 * pk.a / pk.D}, {"supersolution", chk.holds}});
        ctx.say() << "  k = " << std::left << std::setw(4) << k << std::setw(14) << fmt(4.0 * pk.a / pk.D)
                  << (chk.holds ? "f(zeta) >= 0" : "f(zeta) < 0 somewhere") << std::right << "\n";
      }
      summary["growing_regions"] = table;
    }
    const std::string conclusion =
        consistent ? "a periodic solution must be zero" : "NOT established: a periodic solution must be zero";
    summary["conclusion"] = conclusion;
    write_json(sub.out / "summary.json", with_schema(summary));
    ctx.say() << "  |u|_0 = " << fmt(u_sup) << "\n  conclusion: " << conclusion << "\n";
    if (!consistent) code = kVerificationFailure;
  }
  return code;
}

// ////////////////////////////////////////////////////////////////////////////
// Dispatch

inline int dispatch(const std::string& name, const Context& ctx) {
  if (name == "solve") return cmd_solve(ctx);
  if (name == "moc") return cmd_moc(ctx);
  if (name == "supersolution") return cmd_supersolution(ctx);
  if (name == "check-structure") return cmd_check_structure(ctx);
  if (name == "check-subsolution") return cmd_check_subsolution(ctx);
  if (name == "compare") return cmd_compare(ctx);
  if (name == "bounds") return cmd_bounds(ctx);
  if (name == "pipeline") return cmd_pipeline(ctx);
  if (name == "demo-example1") return cmd_demo_example1(ctx);
  if (name == "demo-example2") return cmd_demo_example2(ctx);
  throw ConfigError("unknown subcommand '" + name + "'");
}

inline void emit_error(const Context& ctx, const std::string& subcommand, const std::string& kind, int code,
                       const std::string& message, const Json& extra = Json::object()) {
  Json j;
  j["subcommand"] = subcommand;
  j["error"] = kind;
  j["exit_code"] = code;
  j["message"] = message;
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  const Json doc = with_schema(j);
  std::cerr << doc.dump() << "\n";
  try {
    write_json(ctx.out / "error.json", doc);
  } catch (...) {
  }
}

/// Runs a subcommand and maps failures onto exit codes, writing error.json.
inline int run_subcommand(const std::string& name, const Context& ctx) {
  try {
    return dispatch(name, ctx);
  } catch (const MissingKey& e) {
    emit_error(ctx, name, "missing_key", kConfigFailure, e.what(), {{"key", e.key()}});
    return kConfigFailure;
  } catch (const ConfigError& e) {
    emit_error(ctx, name, "config", kConfigFailure, e.what());
    return kConfigFailure;
  } catch (const SingularDiffusion& e) {
    emit_error(ctx, name, "singular_diffusion", kConfigFailure, e.what());
    return kConfigFailure;
  } catch (const DivergenceError& e) {
    emit_error(ctx, name, "divergence", kDivergence, e.what(), {{"iteration", e.iteration()}});
    return kDivergence;
  } catch (const RefusalError& e) {
    emit_error(ctx, name, "refused", kVerificationFailure, e.what());
    return kVerificationFailure;
  } catch (const SamplerStarvation& e) {
    emit_error(ctx, name, "sampler_starvation", kVerificationFailure, e.what());
    return kVerificationFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    emit_error(ctx, name, "io", kConfigFailure, e.what());
    return kConfigFailure;
  }
}

}  // namespace viscmod::cli
