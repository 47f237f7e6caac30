#pragma once

// JSON and CSV serialization of specs and reports.

#include "viscmod/bounds.hpp"
#include "viscmod/grid.hpp"
#include "viscmod/moc.hpp"
#include "viscmod/oned.hpp"
#include "viscmod/operators.hpp"
#include "viscmod/pde_solver.hpp"
#include "viscmod/structure_cond.hpp"

#include "json.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace viscmod {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

inline Json with_schema(Json body) {
  Json out;
  out["schema_version"] = kSchemaVersion;
  for (auto it = body.begin(); it != body.end(); ++it) out[it.key()] = it.value();
  return out;
}

template <class T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline Json to_json(const GridSpec& g) {
  Json j;
  j["dim"] = g.dim;
  j["domain"] = to_string(g.kind);
  j[g.kind == DomainKind::Periodic ? "L" : "R"] = g.extent;
  j["N"] = g.points_per_axis;
  if (g.kind == DomainKind::Truncated) j["eps_decay"] = g.eps_decay;
  j["h"] = g.spacing();
  return j;
}

inline Json to_json(const OneDimOperatorSpec& f) {
  Json j;
  if (const auto* l = std::get_if<LinearDrift1D>(&f)) {
    j["kind"] = "linear_drift_1d";
    j["lambda"] = l->lambda;
    j["B"] = l->B;
    j["c"] = l->c;
  } else {
    const auto& q = std::get<QuasiDiffusion1D>(f);
    j["kind"] = "quasi_diffusion_1d";
    j["profile"] = to_string(q.profile);
    if (q.profile == Profile1D::PLaplace) j["p_exp"] = q.p_exp;
    j["c"] = q.c;
  }
  return j;
}

inline Json to_json(const SupersolutionSpec& z) {
  Json j;
  if (const auto* e = std::get_if<ExponentialGap>(&z)) {
    j["kind"] = "exponential_gap";
    j["mu2"] = e->mu2;
    j["alpha1"] = e->alpha1;
    j["alpha2"] = e->alpha2;
    j["dzeta0"] = zeta_d1(z, 0.0);
  } else if (const auto* p = std::get_if<Parabola>(&z)) {
    j["kind"] = "parabola";
    j["a"] = p->a;
    j["D"] = p->D;
    j["dzeta0"] = zeta_d1(z, 0.0);
  } else {
    const auto& t = std::get<TabulatedProfile>(z);
    j["kind"] = "tabulated";
    j["s"] = t.s;
    j["zeta"] = t.zeta;
  }
  return j;
}

inline SupersolutionSpec supersolution_from_json(const Json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "exponential_gap")
      return ExponentialGap{j.at("mu2").get<double>(), j.at("alpha1").get<double>(), j.at("alpha2").get<double>()};
    if (kind == "parabola") return Parabola{j.at("a").get<double>(), j.at("D").get<double>()};
    if (kind == "tabulated")
      return TabulatedProfile{j.at("s").get<std::vector<double>>(), j.at("zeta").get<std::vector<double>>()};
    throw ConfigError("unknown supersolution kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed supersolution JSON: ") + e.what());
  }
}

inline CompareReport compare_from_json(const Json& j) {
  try {
    CompareReport r;
    r.holds = j.at("holds").get<bool>();
    r.max_violation = j.at("max_violation").is_null() ? -std::numeric_limits<double>::infinity()
                                                       : j.at("max_violation").get<double>();
    r.argmax_s = j.at("argmax_s").get<double>();
    r.bins_checked = j.at("bins_checked").get<std::size_t>();
    r.lo = j.at("interval").at(0).get<double>();
    r.hi = j.at("interval").at(1).get<double>();
    r.tol = j.at("tol").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed comparison JSON: ") + e.what());
  }
}

inline Json to_json(const ModulusCurve& c) {
  Json j;
  j["bin_width"] = c.bin_width;
  j["domain"] = to_string(c.kind);
  j["source_sup"] = c.source_sup;
  Json bins = Json::array();
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (!c.present(k)) continue;
    bins.push_back({{"s", c.centers[k]}, {"omega", *c.values[k]}, {"count", c.counts[k]}});
  }
  j["bins"] = std::move(bins);
  return j;
}

inline Json to_json(const SolveReport& r) {
  Json j;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["tau"] = r.tau;
  j["tol"] = r.tol;
  j["final_residual"] = r.residual_history.empty() ? 0.0 : r.residual_history.back();
  j["sup_norm"] = sup_norm(r.field);
  j["residual_history"] = r.residual_history;
  return j;
}

inline Json to_json(const SupersolutionCheck& r) {
  return {{"holds", r.holds}, {"min_residual", r.min_residual}, {"argmin_s", r.argmin_s}};
}

inline Json to_json(const SubsolutionReport& r) {
  Json v = Json::array();
  for (const auto& x : r.violations) v.push_back({{"s", x.s}, {"p", x.p}, {"X", x.X}, {"f", x.f_value}});
  return {{"holds", r.ok()}, {"bins_checked", r.bins_checked}, {"kinks_skipped", r.kinks_skipped}, {"violations", v}};
}

inline Json to_json(const CompareReport& r) {
  return {{"holds", r.holds},     {"max_violation", r.max_violation}, {"argmax_s", r.argmax_s},
          {"bins_checked", r.bins_checked}, {"interval", {r.lo, r.hi}},      {"tol", r.tol},
          {"id", compare_report_id(r)}};
}

inline Json to_json(const ShrinkReport& r) {
  Json rows = Json::array();
  for (const auto& x : r.rows)
    rows.push_back({{"k", x.k}, {"mu2", x.mu2}, {"endpoint", x.endpoint}, {"sup_on_base", x.sup_on_base}});
  return {{"base_end", r.base_end},
          {"strictly_decreasing", r.strictly_decreasing},
          {"nonincreasing", r.nonincreasing},
          {"rows", rows}};
}

inline Json to_json(const StructureViolation& v) {
  return {{"index", v.index}, {"n", v.n},         {"s", v.s},       {"phi", v.phi},
          {"phi_prime", v.phi_prime}, {"phi_second", v.phi_second}, {"epsilon", v.epsilon},
          {"strategy", to_string(v.strategy)}, {"lhs", v.lhs}, {"rhs", v.rhs}, {"margin", v.margin}};
}

inline Json to_json(const StructureReport& r) {
  Json v = Json::array();
  for (const auto& x : r.violations) v.push_back(to_json(x));
  return {{"pairing", r.pairing_id},
          {"samples", r.samples},
          {"holds", r.ok()},
          {"worst_margin", r.worst_margin},
          {"worst_index", r.worst_index},
          {"violations", v}};
}

inline Json to_json(const LemmaSuiteReport& r) {
  Json v = Json::array();
  for (std::size_t i : r.violations) {
    const auto& s = r.samples[i];
    v.push_back({{"index", s.index},
                 {"n", s.n},
                 {"s", s.s},
                 {"phi_prime", s.phi_prime},
                 {"phi_second", s.phi_second},
                 {"strategy", to_string(s.strategy)},
                 {"max_eig_diff", s.verdict.max_eig_diff},
                 {"trace_diff", s.verdict.trace_diff},
                 {"bound", s.verdict.bound}});
  }
  return {{"epsilon", r.epsilon},
          {"samples", r.samples.size()},
          {"excluded", r.excluded},
          {"holds", r.ok()},
          {"violations", v}};
}

inline Json to_json(const GradientBoundReport& r) {
  Json j;
  Json cases = Json::array();
  if (r.case_a) cases.push_back("A");
  if (r.case_b) cases.push_back("B");
  if (r.case_c) cases.push_back("C");
  j["cases"] = cases;
  j["oscillation_bound"] = optional_json(r.oscillation_bound);
  j["lipschitz_bound"] = optional_json(r.lipschitz_bound);
  if (r.holder)
    j["holder"] = {{"alpha", r.holder->alpha},
                   {"a", r.holder->a},
                   {"estimated", r.holder->estimated},
                   {"fit_residual", r.holder->fit_residual}};
  else
    j["holder"] = nullptr;
  j["provenance"] = {{"zeta", r.zeta_description},
                     {"interval", {r.interval_lo, r.interval_hi}},
                     {"compare_id", r.compare_id}};
  return j;
}

inline Json to_json(const BoundVerdict& v) {
  Json f = Json::array();
  for (const auto& x : v.failures)
    f.push_back({{"which", x.which}, {"a", x.a}, {"b", x.b}, {"empirical", x.empirical}, {"bound", x.bound}});
  return {{"holds", v.holds},
          {"empirical_oscillation", v.empirical_oscillation},
          {"empirical_lipschitz", optional_json(v.empirical_lipschitz)},
          {"failures", f}};
}

// ////////////////////////////////////////////////////////////////////////////
// CSV

namespace detail {

inline std::vector<std::vector<double>> read_numeric_csv(std::istream& is, std::size_t columns,
                                                         const std::string& what) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError(what + ": empty file");
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw ConfigError(what + ": line " + std::to_string(lineno) + " has a non-numeric cell '" + cell + "'");
      }
    }
    if (row.size() != columns)
      throw ConfigError(what + ": line " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                        " columns, expected " + std::to_string(columns));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

/// Reads a field written by write_field_csv; rows must follow grid order.
inline ScalarField read_field_csv(std::istream& is, const Grid& grid) {
  const auto rows = detail::read_numeric_csv(is, std::size_t(grid.dim()) + 1, "field csv");
  if (rows.size() != grid.size())
    throw DimensionMismatch("field csv has " + std::to_string(rows.size()) + " rows, grid has " +
                            std::to_string(grid.size()) + " points");
  std::vector<double> v;
  v.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Vec x = grid.point_vec(k);
    for (int d = 0; d < grid.dim(); ++d)
      if (std::abs(rows[k][std::size_t(d)] - x(d)) > 1e-9 * std::max(1.0, std::abs(x(d))))
        throw DimensionMismatch("field csv row " + std::to_string(k + 1) + " does not match the grid coordinates");
    v.push_back(rows[k].back());
  }
  return ScalarField(grid, std::move(v));
}

/// Reads a curve written by write_modulus_csv. Bin indices come from the
/// centers, so absent bins are restored as absent.
inline ModulusCurve read_modulus_csv(std::istream& is, double bin_width, double source_sup,
                                     DomainKind kind = DomainKind::Periodic) {
  if (!(bin_width > 0.0)) throw ConfigError("read_modulus_csv: bin_width must be positive");
  const auto rows = detail::read_numeric_csv(is, 3, "modulus csv");
  if (rows.empty()) throw ConfigError("modulus csv has no bins");
  ModulusCurve c;
  c.bin_width = bin_width;
  c.kind = kind;
  c.source_sup = source_sup;
  const auto last = std::size_t(std::llround(rows.back()[0] / bin_width - 0.5));
  c.centers.resize(last + 1);
  for (std::size_t k = 0; k <= last; ++k) c.centers[k] = (double(k) + 0.5) * bin_width;
  c.values.assign(last + 1, std::nullopt);
  c.counts.assign(last + 1, 0);
  for (const auto& r : rows) {
    const double idx = r[0] / bin_width - 0.5;
    const auto k = std::llround(idx);
    if (k < 0 || std::abs(idx - double(k)) > 1e-6 || std::size_t(k) > last)
      throw ConfigError("modulus csv center " + format_double(r[0]) + " is not a bin center for width " +
                        format_double(bin_width));
    c.values[std::size_t(k)] = r[1];
    c.counts[std::size_t(k)] = std::size_t(r[2]);
  }
  return c;
}

inline void write_zeta_csv(std::ostream& os, const SupersolutionSpec& z, const std::vector<double>& s_grid) {
  os << "s,zeta,dzeta,d2zeta\n";
  for (double s : s_grid)
    os << format_double(s) << ',' << format_double(zeta_value(z, s)) << ',' << format_double(zeta_d1(z, s)) << ','
       << format_double(zeta_d2(z, s)) << '\n';
}

inline void write_shrink_csv(std::ostream& os, const ShrinkReport& r) {
  os << "k,mu2,endpoint,sup_on_base\n";
  for (const auto& x : r.rows)
    os << x.k << ',' << format_double(x.mu2) << ',' << format_double(x.endpoint) << ','
       << format_double(x.sup_on_base) << '\n';
}

inline void write_residual_csv(std::ostream& os, const SolveReport& r) {
  os << "iteration,residual\n";
  for (std::size_t i = 0; i < r.residual_history.size(); ++i)
    os << i << ',' << format_double(r.residual_history[i]) << '\n';
}

}  // namespace viscmod
