#pragma once

// Run configuration: INI-style sections of key = value pairs. Every key has a
// default; unknown sections or keys are rejected.

#include "viscmod/common.hpp"
#include "viscmod/grid.hpp"
#include "viscmod/oned.hpp"
#include "viscmod/operators.hpp"
#include "viscmod/structure_cond.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace viscmod::cli {

/// A required key has no usable value.
class MissingKey : public ConfigError {
 public:
  explicit MissingKey(std::string key)
      : ConfigError("missing required configuration key '" + key + "'"), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ProblemConfig {
  std::string kind = "linear_drift";  // linear_drift | quasilinear_trace
  double lambda = 1.0;
  double c = 1.0;
  double B = 0.5;
  std::string profile = "laplace";  // laplace | p_laplace | minimal_surface
  double p_exp = 3.0;
  std::string b_expr = "0.5";
  std::string g_expr = "0";
  std::string forcing = "0";  // manufactured-solution source, subtracted from F
};

struct GridConfig {
  int dim = 1;
  std::string domain = "periodic";
  double L = 2.0 * M_PI;
  double R = 6.0;
  int N = 64;
  double eps_decay = 1e-3;
  double D = 0.0;  // 0: L sqrt(n)
};

struct SolverConfig {
  double tau = 0.0;  // 0: 0.9 tau_max
  double tol = 1e-8;
  std::size_t max_iter = 200000;
  std::string init = "random";  // random | smooth | zero
  double init_amplitude = 1.0;
};

struct MocConfig {
  double bin_width = 0.0;  // 0: grid spacing
};

struct OnedConfig {
  std::string pairing;  // required by the 1D subcommands
  double tolerance = 1e-8;
  std::size_t K = 9;
  double X_floor = 0.0;  // 0: -1 / bin_width
  double endpoint_eps = 1e-3;
  double parabola_a = 0.0;  // 0: |u|_0
  int shrink_K = 10;
  double a_step = 1.0;
};

struct StructureConfig {
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  int max_dim = 4;
  std::vector<double> lemma_eps{0.0, 0.1, 0.5, 1.0};
  double phi_prime_max = 1.0;
  double phi_second_max = 2.0;
  double eps_max = 1.0;
};

struct BoundsConfig {
  double interval_lo = 0.0;
  double interval_hi = 0.0;  // 0: the comparison interval
  double tol = 1e-8;
};

struct RunConfig {
  ProblemConfig problem;
  GridConfig grid;
  SolverConfig solver;
  MocConfig moc;
  OnedConfig oned;
  StructureConfig structure;
  BoundsConfig bounds;
  std::string output_dir = "out";
};

namespace detail {

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
  }
}

inline std::size_t parse_count(const std::string& key, const std::string& v) {
  const long long d = parse_int(key, v);
  if (d < 0) throw ConfigError("key '" + key + "' must be nonnegative");
  return std::size_t(d);
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  const auto e = s.find_last_not_of(" \t\r\"");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto R = [&t](const std::string& k, std::function<double&(RunConfig&)> m) {
      t[k] = [k, m](RunConfig& c, const std::string& v) { m(c) = parse_real(k, v); };
    };
    auto S = [&t](const std::string& k, std::function<std::string&(RunConfig&)> m) {
      t[k] = [m](RunConfig& c, const std::string& v) { m(c) = v; };
    };
    auto Z = [&t](const std::string& k, std::function<std::size_t&(RunConfig&)> m) {
      t[k] = [k, m](RunConfig& c, const std::string& v) { m(c) = parse_count(k, v); };
    };
    auto I = [&t](const std::string& k, std::function<int&(RunConfig&)> m) {
      t[k] = [k, m](RunConfig& c, const std::string& v) { m(c) = int(parse_int(k, v)); };
    };

    S("problem.kind", [](RunConfig& c) -> std::string& { return c.problem.kind; });
    R("problem.lambda", [](RunConfig& c) -> double& { return c.problem.lambda; });
    R("problem.c", [](RunConfig& c) -> double& { return c.problem.c; });
    R("problem.B", [](RunConfig& c) -> double& { return c.problem.B; });
    S("problem.profile", [](RunConfig& c) -> std::string& { return c.problem.profile; });
    R("problem.p_exp", [](RunConfig& c) -> double& { return c.problem.p_exp; });
    S("problem.b_expr", [](RunConfig& c) -> std::string& { return c.problem.b_expr; });
    S("problem.g_expr", [](RunConfig& c) -> std::string& { return c.problem.g_expr; });
    S("problem.forcing", [](RunConfig& c) -> std::string& { return c.problem.forcing; });

    I("grid.dim", [](RunConfig& c) -> int& { return c.grid.dim; });
    S("grid.domain", [](RunConfig& c) -> std::string& { return c.grid.domain; });
    R("grid.L", [](RunConfig& c) -> double& { return c.grid.L; });
    R("grid.R", [](RunConfig& c) -> double& { return c.grid.R; });
    I("grid.N", [](RunConfig& c) -> int& { return c.grid.N; });
    R("grid.eps_decay", [](RunConfig& c) -> double& { return c.grid.eps_decay; });
    R("grid.D", [](RunConfig& c) -> double& { return c.grid.D; });

    R("solver.tau", [](RunConfig& c) -> double& { return c.solver.tau; });
    R("solver.tol", [](RunConfig& c) -> double& { return c.solver.tol; });
    Z("solver.max_iter", [](RunConfig& c) -> std::size_t& { return c.solver.max_iter; });
    S("solver.init", [](RunConfig& c) -> std::string& { return c.solver.init; });
    R("solver.init_amplitude", [](RunConfig& c) -> double& { return c.solver.init_amplitude; });

    R("moc.bin_width", [](RunConfig& c) -> double& { return c.moc.bin_width; });

    S("oned.pairing", [](RunConfig& c) -> std::string& { return c.oned.pairing; });
    R("oned.tolerance", [](RunConfig& c) -> double& { return c.oned.tolerance; });
    Z("oned.K", [](RunConfig& c) -> std::size_t& { return c.oned.K; });
    R("oned.X_floor", [](RunConfig& c) -> double& { return c.oned.X_floor; });
    R("oned.endpoint_eps", [](RunConfig& c) -> double& { return c.oned.endpoint_eps; });
    R("oned.parabola_a", [](RunConfig& c) -> double& { return c.oned.parabola_a; });
    I("oned.shrink_K", [](RunConfig& c) -> int& { return c.oned.shrink_K; });
    R("oned.a_step", [](RunConfig& c) -> double& { return c.oned.a_step; });

    Z("structure.samples", [](RunConfig& c) -> std::size_t& { return c.structure.samples; });
    t["structure.seed"] = [](RunConfig& c, const std::string& v) {
      c.structure.seed = std::uint64_t(parse_int("structure.seed", v));
    };
    I("structure.max_dim", [](RunConfig& c) -> int& { return c.structure.max_dim; });
    t["structure.lemma_eps"] = [](RunConfig& c, const std::string& v) {
      c.structure.lemma_eps.clear();
      std::stringstream ss(v);
      std::string cell;
      while (std::getline(ss, cell, ',')) c.structure.lemma_eps.push_back(parse_real("structure.lemma_eps", trim(cell)));
    };
    R("structure.phi_prime_max", [](RunConfig& c) -> double& { return c.structure.phi_prime_max; });
    R("structure.phi_second_max", [](RunConfig& c) -> double& { return c.structure.phi_second_max; });
    R("structure.eps_max", [](RunConfig& c) -> double& { return c.structure.eps_max; });

    R("bounds.interval_lo", [](RunConfig& c) -> double& { return c.bounds.interval_lo; });
    R("bounds.interval_hi", [](RunConfig& c) -> double& { return c.bounds.interval_hi; });
    R("bounds.tol", [](RunConfig& c) -> double& { return c.bounds.tol; });

    S("output.dir", [](RunConfig& c) -> std::string& { return c.output_dir; });
    return t;
  }();
  return table;
}

}  // namespace detail

/// Sets one dotted key, e.g. "grid.N".
inline void set_key(RunConfig& cfg, const std::string& dotted, const std::string& value) {
  const auto& t = detail::setters();
  const auto it = t.find(dotted);
  if (it == t.end()) throw ConfigError("unknown configuration key '" + dotted + "'");
  it->second(cfg, detail::trim(value));
}

inline std::vector<std::string> known_keys() {
  std::vector<std::string> out;
  for (const auto& [k, v] : detail::setters()) out.push_back(k);
  return out;
}

inline void validate(const RunConfig& c) {
  if (c.problem.kind != "linear_drift" && c.problem.kind != "quasilinear_trace")
    throw ConfigError("problem.kind must be linear_drift or quasilinear_trace, got '" + c.problem.kind + "'");
  if (c.problem.profile != "laplace" && c.problem.profile != "p_laplace" && c.problem.profile != "minimal_surface")
    throw ConfigError("problem.profile must be laplace, p_laplace or minimal_surface, got '" + c.problem.profile +
                      "'");
  if (c.grid.domain != "periodic" && c.grid.domain != "truncated")
    throw ConfigError("grid.domain must be periodic or truncated, got '" + c.grid.domain + "'");
  if (c.solver.init != "random" && c.solver.init != "smooth" && c.solver.init != "zero")
    throw ConfigError("solver.init must be random, smooth or zero, got '" + c.solver.init + "'");
  if (c.solver.tau < 0.0) throw ConfigError("solver.tau must be nonnegative (0 selects 0.9 tau_max)");
  if (c.moc.bin_width < 0.0) throw ConfigError("moc.bin_width must be nonnegative");
  if (c.grid.D < 0.0) throw ConfigError("grid.D must be nonnegative");
  if (c.oned.X_floor > 0.0) throw ConfigError("oned.X_floor must be negative (or 0 for the default)");
  if (c.structure.max_dim < 1 || c.structure.max_dim > 4) throw ConfigError("structure.max_dim must be in 1..4");
  if (c.structure.lemma_eps.empty()) throw ConfigError("structure.lemma_eps must list at least one value");
}

/// Parses INI text. Keys outside a section are rejected, as is any
/// section.key pair that has no default.
inline RunConfig parse_config(std::istream& is) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' appears outside any section");
    for (const auto& [key, value] : body) set_key(cfg, section + "." + key, value.data());
  }
  validate(cfg);
  return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

// ////////////////////////////////////////////////////////////////////////////
// Building library objects from a configuration

inline GridSpec grid_spec(const RunConfig& c) {
  GridSpec g = c.grid.domain == "periodic" ? GridSpec::periodic(c.grid.dim, c.grid.L, c.grid.N)
                                           : GridSpec::truncated(c.grid.dim, c.grid.R, c.grid.N, c.grid.eps_decay);
  g.validate();
  return g;
}

inline double diameter(const RunConfig& c) { return c.grid.D > 0.0 ? c.grid.D : grid_spec(c).default_diameter(); }

inline EllipticOperatorSpec operator_spec(const RunConfig& c) {
  const auto& p = c.problem;
  if (p.kind == "linear_drift") return make_linear_drift(p.lambda, p.b_expr, p.B, p.c);
  EllipticOperatorSpec op;
  if (p.profile == "laplace") op = make_laplace(p.c);
  else if (p.profile == "p_laplace") op = make_p_laplace(p.p_exp, p.c);
  else op = make_minimal_surface(p.c);
  if (p.g_expr != "0") op = with_first_order(op, p.g_expr);
  return op;
}

/// Catalog pairing for the configured operator. The id in oned.pairing must
/// name the pairing table entry for this operator.
inline Pairing configured_pairing(const RunConfig& c) {
  if (c.oned.pairing.empty()) throw MissingKey("oned.pairing");
  const bool std_variant = c.oned.pairing == "example2_minimal_surface_std";
  Pairing p = make_pairing(operator_spec(c), {c.grid.dim}, std_variant);
  if (p.id != c.oned.pairing)
    throw ConfigError("oned.pairing '" + c.oned.pairing + "' does not match the configured operator (expected '" +
                      p.id + "')");
  return p;
}

inline double bin_width(const RunConfig& c) {
  return c.moc.bin_width > 0.0 ? c.moc.bin_width : grid_spec(c).spacing();
}

inline double curvature_floor(const RunConfig& c) {
  return c.oned.X_floor < 0.0 ? c.oned.X_floor : -1.0 / bin_width(c);
}

}  // namespace viscmod::cli
