#pragma once

// Experiment harness: JSON configurations, the task runners behind the
// `athom` CLI, CSV tables with a config-hash column and a run manifest.
//
// Config layout (all sections optional unless a task needs them):
//
//   task        f_hom_table | h_hom_table | g0_sweep | g_ell_sweep |
//               g_inf_sweep | at_convergence | inequality_suite | averaging_suite
//   dimension   1, 2 or 3 (default 2; at_convergence forces 1)
//   seed        unsigned integer
//   workers     worker threads for sweep entries (not part of the hash)
//   output_dir  output directory (not part of the hash)
//   bulk, surface, surfaces[]   integrand specs, see parse_coefficient
//   regime      { eps: [...], delta: {coeff, exponent}, eta: {coeff, exponent} }
//   datum       { type: step | ramp | samples, ... }
//   knobs       numerical parameters, see kKnownKnobs

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "athom/at_solver.hpp"
#include "athom/averaging.hpp"
#include "athom/cell_problems.hpp"
#include "athom/core.hpp"
#include "athom/detail/parallel.hpp"
#include "athom/integrands.hpp"
#include "athom/limit_solver.hpp"
#include "athom/regime.hpp"
#include "athom/surface_density.hpp"
#include "athom/validation.hpp"

namespace athom {

using Json = nlohmann::json;

inline constexpr const char* kToolkitVersion = "1.0.0";

inline const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names{"f_hom_table",    "h_hom_table",    "g0_sweep",
                                              "g_ell_sweep",    "g_inf_sweep",    "at_convergence",
                                              "inequality_suite", "averaging_suite"};
  return names;
}

inline const std::set<std::string>& known_sections() {
  static const std::set<std::string> s{"task",    "dimension", "seed",  "workers", "output_dir", "bulk",
                                       "surface", "surfaces",  "regime", "datum",  "knobs"};
  return s;
}

inline const std::set<std::string>& known_knobs() {
  static const std::set<std::string> s{
      "vectors",       "r_list",       "n_per_cell",   "N",           "tol",           "max_iterations",
      "directions",    "angles",       "spacing",      "stencil",     "edge_points",   "family_size",
      "ell",           "cells",        "max_sweeps",   "max_jumps",   "limit_grid",    "dump_fields",
      "random_specs",  "g0_r_list",    "g0_spacing",   "g_ell_r_list", "g_ell_spacing", "pairs",
      "bound_slack",   "order_tol",    "symmetry_tol", "convexity_tol", "samples",     "grid",
      "kmax",          "r_values",     "c",            "sigma",       "delta",         "K_max",
      "cal_samples",   "cal_grid"};
  return s;
}

// ---------------------------------------------------------------------------
// formatting and hashing

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

template <std::size_t N>
std::string format_vector(const std::array<double, N>& v) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) s += (i ? ";" : "") + format_number(v[i]);
  return s;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else if (c == '\n' || c == '\r') out += ' ';
    else out += c;
  }
  return out + "\"";
}

/// 64-bit FNV-1a, hex.
inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// path-aware config access

namespace cfg {

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline const Json* find(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  double x = j.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  return x;
}

inline double get_double(const Json& obj, const std::string& key, const std::string& path, double fallback) {
  const Json* j = find(obj, key, path);
  return j ? number(*j, join(path, key)) : fallback;
}

inline double get_positive(const Json& obj, const std::string& key, const std::string& path, double fallback) {
  double x = get_double(obj, key, path, fallback);
  if (!(x > 0.0)) throw ConfigError(join(path, key), "must be positive");
  return x;
}

inline long long integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<long long>();
}

inline int get_int(const Json& obj, const std::string& key, const std::string& path, int fallback, int lo = 1) {
  const Json* j = find(obj, key, path);
  if (!j) return fallback;
  long long v = integer(*j, join(path, key));
  if (v < lo || v > 1000000000LL) throw ConfigError(join(path, key), "must be an integer >= " + std::to_string(lo));
  return static_cast<int>(v);
}

inline bool get_bool(const Json& obj, const std::string& key, const std::string& path, bool fallback) {
  const Json* j = find(obj, key, path);
  if (!j) return fallback;
  if (!j->is_boolean()) throw ConfigError(join(path, key), "expected true or false");
  return j->get<bool>();
}

inline std::string get_string(const Json& obj, const std::string& key, const std::string& path,
                              const std::string& fallback) {
  const Json* j = find(obj, key, path);
  if (!j) return fallback;
  if (!j->is_string()) throw ConfigError(join(path, key), "expected a string");
  return j->get<std::string>();
}

inline std::vector<double> number_list(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a nonempty list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::vector<double> get_list(const Json& obj, const std::string& key, const std::string& path,
                                    std::vector<double> fallback, bool positive = true) {
  const Json* j = find(obj, key, path);
  if (!j) return fallback;
  auto v = number_list(*j, join(path, key));
  if (positive)
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!(v[i] > 0.0)) throw ConfigError(join(path, key) + "[" + std::to_string(i) + "]", "must be positive");
  return v;
}

template <int Dim>
Vec<Dim> vector(const Json& j, const std::string& path) {
  auto v = number_list(j, path);
  if (v.size() != static_cast<std::size_t>(Dim))
    throw ConfigError(path, "expected " + std::to_string(Dim) + " components");
  Vec<Dim> out{};
  for (int d = 0; d < Dim; ++d) out[d] = v[d];
  return out;
}

template <int Dim>
Mat<Dim> matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(Dim))
    throw ConfigError(path, "expected a " + std::to_string(Dim) + "x" + std::to_string(Dim) + " matrix");
  Mat<Dim> m;
  for (int i = 0; i < Dim; ++i) m[i] = vector<Dim>(j[i], path + "[" + std::to_string(i) + "]");
  return m;
}

}  // namespace cfg

// ---------------------------------------------------------------------------
// integrand specs
//
//   { "id": "...", "form": "scalar" | "quadratic",
//     "field": FIELD,                                   (scalar)
//     "terms": [ { "field": FIELD, "matrix": [[..]] } ], (quadratic)
//     "constants": { "c3": .., "c4": .., "L2": .., "L3": .. } }  (c1, c2, L1 for bulk)
//
//   FIELD = { "type": "constant", "value": a }
//         | { "type": "laminate", "axis": i, "values": [..] }
//         | { "type": "piecewise", "partition": k, "values": [..] }
//         | { "type": "trigonometric", "mean": m, "modes": [ { "k": [..], "cos": c, "sin": s } ] }

template <int Dim>
PeriodicField<Dim> parse_field(const Json& j, const std::string& path) {
  const std::string type = cfg::get_string(j, "type", path, "");
  try {
    if (type == "constant") {
      const Json* v = cfg::find(j, "value", path);
      if (!v) throw ConfigError(cfg::join(path, "value"), "required");
      return PeriodicField<Dim>::constant(cfg::number(*v, cfg::join(path, "value")));
    }
    if (type == "laminate") {
      const Json* v = cfg::find(j, "values", path);
      if (!v) throw ConfigError(cfg::join(path, "values"), "required");
      return PeriodicField<Dim>::laminate(cfg::get_int(j, "axis", path, 0, 0), cfg::number_list(*v, cfg::join(path, "values")));
    }
    if (type == "piecewise") {
      const Json* v = cfg::find(j, "values", path);
      if (!v) throw ConfigError(cfg::join(path, "values"), "required");
      return PeriodicField<Dim>::piecewise_constant(cfg::get_int(j, "partition", path, 1),
                                                    cfg::number_list(*v, cfg::join(path, "values")));
    }
    if (type == "trigonometric") {
      std::vector<TrigMode<Dim>> modes;
      if (const Json* m = cfg::find(j, "modes", path)) {
        if (!m->is_array()) throw ConfigError(cfg::join(path, "modes"), "expected a list");
        for (std::size_t i = 0; i < m->size(); ++i) {
          std::string mp = cfg::join(path, "modes") + "[" + std::to_string(i) + "]";
          const Json* k = cfg::find((*m)[i], "k", mp);
          if (!k || !k->is_array() || k->size() != static_cast<std::size_t>(Dim))
            throw ConfigError(cfg::join(mp, "k"), "expected " + std::to_string(Dim) + " integers");
          TrigMode<Dim> tm;
          for (int d = 0; d < Dim; ++d) tm.k[d] = static_cast<int>(cfg::integer((*k)[d], cfg::join(mp, "k")));
          tm.cos_coeff = cfg::get_double((*m)[i], "cos", mp, 0.0);
          tm.sin_coeff = cfg::get_double((*m)[i], "sin", mp, 0.0);
          modes.push_back(tm);
        }
      }
      return PeriodicField<Dim>::trigonometric(cfg::get_double(j, "mean", path, 1.0), std::move(modes));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const InputError& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(cfg::join(path, "type"), "expected constant, laminate, piecewise or trigonometric");
}

template <int Dim>
QuadraticCoefficient<Dim> parse_coefficient(const Json& j, const std::string& path) {
  const std::string form = cfg::get_string(j, "form", path, "scalar");
  if (form == "scalar") {
    const Json* f = cfg::find(j, "field", path);
    if (!f) throw ConfigError(cfg::join(path, "field"), "required for the scalar form");
    return QuadraticCoefficient<Dim>::scalar(parse_field<Dim>(*f, cfg::join(path, "field")));
  }
  if (form == "quadratic") {
    const Json* t = cfg::find(j, "terms", path);
    if (!t || !t->is_array() || t->empty()) throw ConfigError(cfg::join(path, "terms"), "expected a nonempty list");
    std::vector<CoefficientTerm<Dim>> terms;
    for (std::size_t i = 0; i < t->size(); ++i) {
      std::string tp = cfg::join(path, "terms") + "[" + std::to_string(i) + "]";
      const Json* f = cfg::find((*t)[i], "field", tp);
      const Json* m = cfg::find((*t)[i], "matrix", tp);
      if (!f) throw ConfigError(cfg::join(tp, "field"), "required");
      if (!m) throw ConfigError(cfg::join(tp, "matrix"), "required");
      terms.push_back({parse_field<Dim>(*f, cfg::join(tp, "field")), cfg::matrix<Dim>(*m, cfg::join(tp, "matrix"))});
    }
    try {
      return QuadraticCoefficient<Dim>::matrix_field(std::move(terms));
    } catch (const InputError& e) {
      throw ConfigError(cfg::join(path, "terms"), e.what());
    }
  }
  throw ConfigError(cfg::join(path, "form"), "expected scalar or quadratic");
}

/// Smallest and largest eigenvalue of A(y): exact for scalar coefficients,
/// sampled on a lattice (plus all piece midpoints) otherwise.
template <int Dim>
std::pair<double, double> coefficient_bounds(const QuadraticCoefficient<Dim>& q) {
  if (q.form() == IntegrandForm::scalar_coefficient) {
    const auto& w = q.terms().front().weight;
    return {w.lower_bound(), w.upper_bound()};
  }
  const int m = Dim == 1 ? 4096 : (Dim == 2 ? 96 : 24);
  std::size_t total = 1;
  for (int d = 0; d < Dim; ++d) total *= static_cast<std::size_t>(m);
  double lo = INFINITY, hi = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec<Dim> y;
    std::size_t rem = idx;
    for (int d = 0; d < Dim; ++d) {
      y[d] = (static_cast<double>(rem % m) + 0.5) / m;
      rem /= m;
    }
    Mat<Dim> A = q.matrix(y);
    Eigen::Matrix<double, Dim, Dim> E;
    for (int i = 0; i < Dim; ++i)
      for (int k = 0; k < Dim; ++k) E(i, k) = A[i][k];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, Dim, Dim>> es(E, Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues()(0));
    hi = std::max(hi, es.eigenvalues()(Dim - 1));
  }
  return {lo, hi};
}

namespace detail {

struct DeclaredConstants {
  std::optional<double> lo, hi, cont, lip;
};

inline DeclaredConstants read_constants(const Json& j, const std::string& path, const char* lo, const char* hi,
                                        const char* cont, const char* lip) {
  DeclaredConstants d;
  const Json* c = cfg::find(j, "constants", path);
  if (!c) return d;
  const std::string cp = cfg::join(path, "constants");
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!key || !cfg::find(*c, key, cp)) return std::nullopt;
    return cfg::get_positive(*c, key, cp, 1.0);
  };
  d.lo = opt(lo);
  d.hi = opt(hi);
  d.cont = opt(cont);
  d.lip = opt(lip);
  return d;
}

template <int Dim>
void throw_on_failed_checks(const ValidationReport<Dim>& rep, const std::string& path) {
  for (const auto& c : rep.checks)
    if (!c.passed && !c.warning_only)
      throw ConfigError(cfg::join(path, "constants"), "hypothesis " + c.name + " fails (declared " +
                                                          format_number(c.declared) + ", empirical " +
                                                          format_number(c.empirical) + ")" +
                                                          (c.note.empty() ? "" : ": " + c.note));
}

template <int Dim>
double empirical_of(const ValidationReport<Dim>& rep, const std::string& name) {
  const auto* c = rep.find(name);
  return c ? c->empirical : 0.0;
}

}  // namespace detail

/// Undeclared constants are derived: growth bounds from coefficient_bounds,
/// continuity constants from the empirical values of the sample checks.
template <int Dim>
SurfaceIntegrand<Dim> parse_surface(const Json& j, const std::string& path) {
  SurfaceIntegrand<Dim> h{parse_coefficient<Dim>(j, path), 1.0, 1.0, INFINITY, INFINITY,
                          cfg::get_string(j, "id", path, "surface")};
  auto d = detail::read_constants(j, path, "c3", "c4", "L2", "L3");
  auto [lo, hi] = coefficient_bounds<Dim>(h.coefficient);
  h.c3 = d.lo.value_or(lo);
  h.c4 = d.hi.value_or(hi);
  if (!(h.c3 <= h.c4)) throw ConfigError(cfg::join(path, "constants"), "need c3 <= c4");
  auto probe = validate_hypotheses<Dim>(h);
  h.L2 = d.cont.value_or(std::max(1e-12, detail::empirical_of(probe, "h2")) * (1.0 + 1e-9));
  h.L3 = d.lip.value_or(std::max(1e-12, detail::empirical_of(probe, "h4")) * (1.0 + 1e-9));
  detail::throw_on_failed_checks(validate_hypotheses<Dim>(h), path);
  return h;
}

template <int Dim>
BulkIntegrand<Dim> parse_bulk(const Json& j, const std::string& path) {
  BulkIntegrand<Dim> f{parse_coefficient<Dim>(j, path), 1.0, 1.0, INFINITY, cfg::get_string(j, "id", path, "bulk")};
  auto d = detail::read_constants(j, path, "c1", "c2", "L1", nullptr);
  auto [lo, hi] = coefficient_bounds<Dim>(f.coefficient);
  f.c1 = d.lo.value_or(lo);
  f.c2 = d.hi.value_or(hi);
  if (!(f.c1 <= f.c2)) throw ConfigError(cfg::join(path, "constants"), "need c1 <= c2");
  auto probe = validate_hypotheses<Dim>(f);
  f.L1 = d.cont.value_or(std::max(1e-12, detail::empirical_of(probe, "f2")) * (1.0 + 1e-9));
  detail::throw_on_failed_checks(validate_hypotheses<Dim>(f), path);
  return f;
}

/// A(y) = a(y) M1 + M2 with a two-layer laminate a and random SPD M1, M2;
/// c3, c4 are the exact eigenvalue extremes over the two layers.
inline SurfaceIntegrand<2> random_quadratic_surface(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto spd = [&](double lo, double hi) {
    double t = U(rng) * kPi, l1 = lo + (hi - lo) * U(rng), l2 = lo + (hi - lo) * U(rng);
    double c = std::cos(t), s = std::sin(t);
    return Mat<2>{{{c * c * l1 + s * s * l2, c * s * (l1 - l2)}, {c * s * (l1 - l2), s * s * l1 + c * c * l2}}};
  };
  const int axis = static_cast<int>(seed % 2);
  std::vector<double> layers{1.0 + 2.0 * U(rng), 1.0 + 2.0 * U(rng)};
  Mat<2> M1 = spd(0.5, 1.5), M2 = spd(0.2, 1.0);
  double lo = INFINITY, hi = 0.0;
  for (double a : layers) {
    Mat<2> A = M2;
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k) A[i][k] += a * M1[i][k];
    double tr = A[0][0] + A[1][1], det = A[0][0] * A[1][1] - A[0][1] * A[1][0];
    double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    lo = std::min(lo, 0.5 * tr - disc);
    hi = std::max(hi, 0.5 * tr + disc);
  }
  std::vector<CoefficientTerm<2>> terms{{PeriodicField<2>::laminate(axis, layers), M1},
                                        {PeriodicField<2>::constant(1.0), M2}};
  SurfaceIntegrand<2> h{QuadraticCoefficient<2>::matrix_field(std::move(terms)), lo, hi, 2.0 * hi, 1.0,
                        "random-" + std::to_string(seed)};
  return h;
}

// ---------------------------------------------------------------------------
// config and manifest

struct ExperimentConfig {
  Json doc = Json::object();
  std::string task;
  int dimension = 2;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output_dir;

  /// Validates the document (including all task-specific fields).
  static ExperimentConfig from_json(Json doc);

  /// FNV-1a of the canonical document without output_dir and workers.
  std::string hash() const {
    Json d = doc;
    d.erase("output_dir");
    d.erase("workers");
    return fnv1a_hex(d.dump());
  }

  const Json& knobs() const {
    static const Json empty = Json::object();
    auto it = doc.find("knobs");
    return it == doc.end() ? empty : *it;
  }
};

struct RunManifest {
  std::string config_hash;
  std::string toolkit_version = kToolkitVersion;
  std::string task;
  std::map<std::string, std::vector<std::string>> files;  // task -> output files
  std::map<std::string, double> timings;                  // seconds
  std::size_t rows = 0;
  std::size_t failed_rows = 0;  // solver failures recorded per row
  std::size_t violations = 0;   // rows of a check suite that do not hold

  Json to_json() const {
    Json j;
    j["config_hash"] = config_hash;
    j["toolkit_version"] = toolkit_version;
    j["task"] = task;
    j["files"] = files;
    j["timings"] = timings;
    j["rows"] = rows;
    j["failed_rows"] = failed_rows;
    j["violations"] = violations;
    return j;
  }
};

/// Sets a dotted key ("knobs.N") from "KEY=VALUE"; VALUE is parsed as JSON
/// when possible, otherwise taken as a string.
inline void apply_override(Json& doc, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override", "expected KEY=VALUE, got '" + assignment + "'");
  std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  std::vector<std::string> parts;
  for (std::size_t start = 0;;) {
    auto dot = key.find('.', start);
    parts.push_back(key.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
    if (parts.back().empty()) throw ConfigError("override", "empty key component in '" + key + "'");
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json* node = &doc;
  std::string path;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (node->is_null()) *node = Json::object();
    if (!node->is_object()) throw ConfigError(path, "override descends into a non-object");
    path = cfg::join(path, parts[i]);
    if (i + 1 == parts.size()) {
      (*node)[parts[i]] = std::move(value);
      return;
    }
    auto it = node->find(parts[i]);
    if (it != node->end() && !it->is_object() && !it->is_null())
      throw ConfigError(path, "override descends into a non-object");
    node = &(*node)[parts[i]];
  }
}

// ---------------------------------------------------------------------------
// task outputs

struct CsvTable {
  std::string file;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct TextFile {
  std::string file;
  std::string body;
};

struct TaskOutput {
  std::vector<CsvTable> tables;
  std::vector<TextFile> extra;
  std::size_t failed_rows = 0;
  std::size_t violations = 0;
};

inline std::string render_csv(const CsvTable& t, const std::string& hash) {
  std::string out = "config_hash";
  for (const auto& h : t.header) out += "," + h;
  out += "\n";
  for (const auto& row : t.rows) {
    out += hash;
    for (const auto& f : row) out += "," + csv_field(f);
    out += "\n";
  }
  return out;
}

/// (angle, value, error_bar) lines sorted by angle in [0, 2 pi).
inline std::string emit_polar_data(const std::vector<SurfaceDensityResult>& results) {
  if (results.empty()) throw InputError("emit_polar_data: no results");
  std::vector<std::array<double, 3>> rows;
  for (const auto& r : results) {
    double a = std::atan2(r.nu[1], r.nu[0]);
    if (a < 0.0) a += 2.0 * kPi;
    if (a >= 2.0 * kPi) a -= 2.0 * kPi;
    rows.push_back({a, r.value, r.error_bar});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x[0] < y[0]; });
  std::string out = "# angle value error_bar\n";
  for (const auto& r : rows) out += format_number(r[0]) + " " + format_number(r[1]) + " " + format_number(r[2]) + "\n";
  return out;
}

inline void write_polar_data(const std::vector<SurfaceDensityResult>& results, const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error("cannot write " + file.string());
  os << emit_polar_data(results);
}

// ---------------------------------------------------------------------------
// task plans: parse (validate) then run

namespace tasks {

inline const Json& require_section(const ExperimentConfig& c, const std::string& key) {
  auto it = c.doc.find(key);
  if (it == c.doc.end()) throw ConfigError(key, "required by task " + c.task);
  return *it;
}

template <int Dim>
std::vector<Vec<Dim>> vector_list(const Json& knobs, const std::string& key) {
  const Json* j = cfg::find(knobs, key, "knobs");
  std::vector<Vec<Dim>> out;
  if (!j) {
    for (int d = 0; d < Dim; ++d) out.push_back(unit_vector<Dim>(d));
    return out;
  }
  if (!j->is_array() || j->empty()) throw ConfigError("knobs." + key, "expected a nonempty list of vectors");
  for (std::size_t i = 0; i < j->size(); ++i)
    out.push_back(cfg::vector<Dim>((*j)[i], "knobs." + key + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::vector<double> angle_list(const Json& knobs) {
  if (cfg::find(knobs, "angles", "knobs")) return cfg::get_list(knobs, "angles", "knobs", {}, false);
  int n = cfg::get_int(knobs, "directions", "knobs", 16);
  std::vector<double> out;
  for (int k = 0; k < n; ++k) out.push_back(2.0 * kPi * k / n);
  return out;
}

inline void check_increasing(const std::vector<double>& v, const std::string& path) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) throw ConfigError(path, "must be increasing");
}

inline SolverOptions solver_options(const Json& knobs) {
  SolverOptions o;
  o.rel_tol = cfg::get_positive(knobs, "tol", "knobs", 1e-10);
  o.max_iterations = cfg::get_int(knobs, "max_iterations", "knobs", 200000);
  return o;
}

// --- f_hom_table / h_hom_table ----------------------------------------------

template <int Dim>
TaskOutput cell_table(const ExperimentConfig& c, bool bulk_table, bool dry) {
  const Json& k = c.knobs();
  auto opt = solver_options(k);
  auto vecs = vector_list<Dim>(k, "vectors");
  CsvTable t{c.task + ".csv", {"spec_id", "vector", "size", "value", "extrapolated", "residual", "status", "error"}, {}};
  std::vector<BatchEntry> entries;
  std::string id;
  std::vector<int> sizes;
  if (bulk_table) {
    auto f = parse_bulk<Dim>(require_section(c, "bulk"), "bulk");
    id = f.id;
    auto rl = cfg::get_list(k, "r_list", "knobs", {1.0, 2.0, 4.0});
    for (std::size_t i = 0; i < rl.size(); ++i) {
      if (rl[i] != std::floor(rl[i])) throw ConfigError("knobs.r_list", "cube sizes must be integers");
      sizes.push_back(static_cast<int>(rl[i]));
      if (i > 0 && (sizes[i] <= sizes[i - 1] || sizes[i] % sizes[i - 1] != 0))
        throw ConfigError("knobs.r_list", "must be increasing with each entry dividing the next");
    }
    int npc = cfg::get_int(k, "n_per_cell", "knobs", 8, 2);
    if (dry) return {};
    entries = f_hom_table<Dim>(f, vecs, sizes, npc, opt, c.workers);
  } else {
    auto h = parse_surface<Dim>(require_section(c, "surface"), "surface");
    id = h.id;
    int N = cfg::get_int(k, "N", "knobs", 64, 8);
    if (dry) return {};
    entries = h_hom_table<Dim>(h, vecs, N, opt, c.workers);
  }
  TaskOutput out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.ok()) {
      const auto& r = *e.result;
      t.rows.push_back({id, format_vector(vecs[i]), std::to_string(r.convergence_table.back().size),
                        format_number(r.value), format_number(r.extrapolated), format_number(r.residual), "ok", ""});
    } else {
      ++out.failed_rows;
      t.rows.push_back({id, format_vector(vecs[i]), "", "", "", "", "failed", e.error});
    }
  }
  out.tables.push_back(std::move(t));
  return out;
}

// --- surface sweeps -----------------------------------------------------------

struct SweepEntry {
  std::optional<SurfaceDensityResult> result;
  std::string error;
};

inline std::vector<double> ell_list(const ExperimentConfig& c) {
  const Json& k = c.knobs();
  if (cfg::find(k, "ell", "knobs")) {
    const Json& e = k["ell"];
    if (e.is_number()) return {cfg::get_positive(k, "ell", "knobs", 1.0)};
    return cfg::get_list(k, "ell", "knobs", {});
  }
  if (c.doc.contains("regime")) {
    const Json& r = c.doc["regime"];
    RegimeParams p;
    p.eps_sequence = {0.1};
    if (const Json* d = cfg::find(r, "delta", "regime"))
      p.delta = {cfg::get_positive(*d, "coeff", "regime.delta", 1.0), cfg::get_double(*d, "exponent", "regime.delta", 1.0)};
    if (const Json* e = cfg::find(r, "eta", "regime"))
      p.eta = {cfg::get_positive(*e, "coeff", "regime.eta", 1.0), cfg::get_double(*e, "exponent", "regime.eta", 2.0)};
    RegimeLabel lab;
    try {
      lab = regime_select(p);
    } catch (const InputError& e) {
      throw ConfigError("regime", e.what());
    }
    if (lab.regime != Regime::finite) throw ConfigError("regime", "g_ell_sweep needs a finite regime (delta exponent 1)");
    return {lab.ell};
  }
  return {1.0};
}

inline TaskOutput surface_sweep(const ExperimentConfig& c, bool dry) {
  if (c.dimension != 2) throw ConfigError("dimension", "surface densities are computed for dimension 2");
  const Json& k = c.knobs();
  auto h = parse_surface<2>(require_section(c, "surface"), "surface");
  auto angles = angle_list(k);
  std::vector<double> ells{0.0};
  std::function<SurfaceDensityResult(double, const Direction<2>&)> solve;
  if (c.task == "g0_sweep") {
    auto rl = cfg::get_list(k, "r_list", "knobs", {4.0, 8.0});
    check_increasing(rl, "knobs.r_list");
    double sp = cfg::get_positive(k, "spacing", "knobs", 1.0 / 16);
    int stencil = cfg::get_int(k, "stencil", "knobs", 16);
    if (stencil != 8 && stencil != 16) throw ConfigError("knobs.stencil", "must be 8 or 16");
    int ep = cfg::get_int(k, "edge_points", "knobs", 8);
    solve = [=](double, const Direction<2>& nu) { return g0_hom(h, nu, rl, sp, stencil, ep); };
  } else if (c.task == "g_ell_sweep") {
    ells = ell_list(c);
    auto rl = cfg::get_list(k, "r_list", "knobs", {8.0, 16.0});
    check_increasing(rl, "knobs.r_list");
    double sp = cfg::get_positive(k, "spacing", "knobs", 1.0 / 8);
    int fam = cfg::get_int(k, "family_size", "knobs", 7);
    if (fam > 13) throw ConfigError("knobs.family_size", "at most 13");
    solve = [=](double ell, const Direction<2>& nu) { return g_ell_hom(h, ell, nu, rl, sp, fam, 1); };
  } else {
    int N = cfg::get_int(k, "N", "knobs", 64, 8);
    auto opt = solver_options(k);
    solve = [=](double, const Direction<2>& nu) { return g_inf_hom(h, nu, N, opt); };
  }
  if (dry) return {};

  const std::size_t na = angles.size();
  std::vector<SweepEntry> entries(ells.size() * na);
  detail::parallel_for(entries.size(), c.workers, [&](std::size_t i) {
    try {
      entries[i].result = solve(ells[i / na], Direction<2>::from_angle(angles[i % na]));
    } catch (const Error& e) {
      entries[i].error = e.what();
    }
  });

  TaskOutput out;
  CsvTable t{c.task + ".csv", {"regime", "ell", "angle", "r", "value", "error_bar", "interface", "status", "error"}, {}};
  const char* regime = c.task == "g0_sweep" ? "zero" : (c.task == "g_ell_sweep" ? "finite" : "infinity");
  for (std::size_t e = 0; e < ells.size(); ++e) {
    std::vector<SurfaceDensityResult> ok;
    std::string ell = c.task == "g0_sweep" ? "0" : (c.task == "g_ell_sweep" ? format_number(ells[e]) : "inf");
    for (std::size_t a = 0; a < na; ++a) {
      const auto& en = entries[e * na + a];
      if (en.result) {
        const auto& r = *en.result;
        t.rows.push_back({regime, ell, format_number(angles[a]), format_number(r.convergence_table.back().r),
                          format_number(r.value), format_number(r.error_bar), r.interface, "ok", ""});
        ok.push_back(r);
      } else {
        ++out.failed_rows;
        t.rows.push_back({regime, ell, format_number(angles[a]), "", "", "", "", "failed", en.error});
      }
    }
    if (!ok.empty()) {
      std::string name = c.task + "_polar" + (ells.size() > 1 ? "_" + std::to_string(e) : "") + ".dat";
      out.extra.push_back({name, emit_polar_data(ok)});
    }
  }
  out.tables.push_back(std::move(t));
  return out;
}

// --- at_convergence -----------------------------------------------------------

inline std::function<double(double)> parse_datum(const Json& doc) {
  auto it = doc.find("datum");
  if (it == doc.end()) return [](double x) { return x > 0.5 ? 10.0 : 0.0; };
  const Json& d = *it;
  const std::string type = cfg::get_string(d, "type", "datum", "step");
  if (type == "step") {
    double z = cfg::get_double(d, "height", "datum", 10.0), at = cfg::get_double(d, "location", "datum", 0.5);
    if (!(at > 0.0 && at < 1.0)) throw ConfigError("datum.location", "must lie in (0, 1)");
    return [z, at](double x) { return x > at ? z : 0.0; };
  }
  if (type == "ramp") {
    double z = cfg::get_double(d, "height", "datum", 1.0);
    double a = cfg::get_double(d, "from", "datum", 0.25), b = cfg::get_double(d, "to", "datum", 0.75);
    if (!(0.0 <= a && a < b && b <= 1.0)) throw ConfigError("datum", "ramp needs 0 <= from < to <= 1");
    return [=](double x) { return z * std::clamp((x - a) / (b - a), 0.0, 1.0); };
  }
  if (type == "samples") {
    std::vector<double> s;
    if (const Json* v = cfg::find(d, "values", "datum")) {
      s = cfg::number_list(*v, "datum.values");
    } else {
      std::string file = cfg::get_string(d, "file", "datum", "");
      if (file.empty()) throw ConfigError("datum", "samples need values or file");
      std::ifstream is(file);
      if (!is) throw ConfigError("datum.file", "cannot open " + file);
      double x;
      while (is >> x) s.push_back(x);
      if (!is.eof()) throw ConfigError("datum.file", "non-numeric content in " + file);
    }
    if (s.size() < 2) throw ConfigError("datum", "need at least two samples");
    for (double x : s)
      if (!std::isfinite(x)) throw ConfigError("datum", "samples must be finite");
    // uniform samples on [0, 1], linear interpolation
    return [s](double x) {
      double t = std::clamp(x, 0.0, 1.0) * static_cast<double>(s.size() - 1);
      std::size_t i = std::min(static_cast<std::size_t>(t), s.size() - 2);
      double w = t - static_cast<double>(i);
      return (1.0 - w) * s[i] + w * s[i + 1];
    };
  }
  throw ConfigError("datum.type", "expected step, ramp or samples");
}

inline RegimeParams parse_regime(const Json& doc, std::vector<double> default_eps) {
  RegimeParams p;
  p.eps_sequence = std::move(default_eps);
  p.delta = {1.0, 1.0};
  p.eta = {1.0, 4.0};
  auto it = doc.find("regime");
  if (it != doc.end()) {
    const Json& r = *it;
    p.eps_sequence = cfg::get_list(r, "eps", "regime", p.eps_sequence);
    if (const Json* d = cfg::find(r, "delta", "regime"))
      p.delta = {cfg::get_positive(*d, "coeff", "regime.delta", 1.0), cfg::get_double(*d, "exponent", "regime.delta", 1.0)};
    if (const Json* e = cfg::find(r, "eta", "regime"))
      p.eta = {cfg::get_positive(*e, "coeff", "regime.eta", 1.0), cfg::get_double(*e, "exponent", "regime.eta", 4.0)};
  }
  return p;
}

inline TaskOutput at_convergence(const ExperimentConfig& c, bool dry) {
  if (c.doc.contains("dimension") && c.dimension != 1)
    throw ConfigError("dimension", "at_convergence runs on the unit interval (dimension 1)");
  const Json& k = c.knobs();
  auto f = c.doc.contains("bulk") ? parse_bulk<1>(c.doc["bulk"], "bulk")
                                  : isotropic_bulk<1>(PeriodicField<1>::constant(1.0), 1.0, 1.0);
  auto h = c.doc.contains("surface") ? parse_surface<1>(c.doc["surface"], "surface")
                                     : isotropic_surface<1>(PeriodicField<1>::constant(1.0), 1.0, 1.0);
  RegimeParams p = parse_regime(c.doc, {0.1, 0.05, 0.025, 0.0125});
  RegimeLabel lab;
  try {
    lab = regime_select(p);
  } catch (const InputError& e) {
    throw ConfigError("regime", e.what());
  }
  auto g = parse_datum(c.doc);
  const int cells = cfg::get_int(k, "cells", "knobs", 4000, 2);
  AtOptions opt;
  opt.tol = cfg::get_positive(k, "tol", "knobs", 1e-8);
  opt.max_sweeps = cfg::get_int(k, "max_sweeps", "knobs", 500);
  const int max_jumps = cfg::get_int(k, "max_jumps", "knobs", 1, 0);
  if (max_jumps > 3) throw ConfigError("knobs.max_jumps", "at most 3");
  const int limit_grid = cfg::get_int(k, "limit_grid", "knobs", 512, 2);
  const int N = cfg::get_int(k, "N", "knobs", 256, 8);
  const bool dump = cfg::get_bool(k, "dump_fields", "knobs", false);
  if (dry) return {};

  SimplexMesh<1> mesh({1.0}, {cells});
  std::vector<double> datum(mesh.node_count());
  for (std::size_t i = 0; i < datum.size(); ++i) datum[i] = g(mesh.node_position(i)[0]);

  // limit value
  TaskOutput out;
  double kappa = solve_f_hom<1>(f, Vec<1>{1.0}, std::vector<int>{4}, 64).value;
  double g_hom = surface_constant_1d(h, lab.regime, lab.ell, N);
  CsvTable lim{"limit_solver.csv", {"datum_id", "max_jumps", "value", "jumps", "jump_locations"}, {}};
  const std::string datum_id = c.doc.contains("datum") ? cfg::get_string(c.doc["datum"], "type", "datum", "step") : "step";
  LimitSolution limit;
  for (int kk = 0; kk <= max_jumps; ++kk) {
    auto sol = M_ell_1d(g, 2.0, kappa, g_hom, kk, limit_grid);
    std::string locs;
    for (std::size_t i = 0; i < sol.minimizer.breakpoints.size(); ++i)
      locs += (i ? ";" : "") + format_number(sol.minimizer.breakpoints[i]);
    lim.rows.push_back({datum_id, std::to_string(kk), format_number(sol.value), std::to_string(sol.jumps), locs});
    if (kk == max_jumps) limit = std::move(sol);
  }

  const auto& eps = p.eps_sequence;
  std::vector<std::optional<MinimizationReport<1>>> reps(eps.size());
  std::vector<std::string> errs(eps.size());
  detail::parallel_for(eps.size(), c.workers, [&](std::size_t i) {
    try {
      reps[i] = minimize_F_eps(f, h, scales_at(p, eps[i]), mesh, datum, opt);
    } catch (const Error& e) {
      errs[i] = e.what();
    }
  });

  CsvTable t{"at_convergence.csv",
             {"eps", "delta", "eta", "M", "gap", "sweeps", "converged", "max_increase", "status", "error"},
             {}};
  for (std::size_t i = 0; i < eps.size(); ++i) {
    auto s = scales_at(p, eps[i]);
    if (reps[i]) {
      const auto& r = *reps[i];
      t.rows.push_back({format_number(eps[i]), format_number(s.delta), format_number(s.eta), format_number(r.M_eps),
                        format_number(std::abs(r.M_eps - limit.value)), std::to_string(r.sweeps),
                        r.converged ? "true" : "false", format_number(r.max_increase), "ok", ""});
      if (dump) {
        std::string body = "x,u,v\n";
        for (std::size_t n = 0; n < mesh.node_count(); ++n)
          body += format_number(mesh.node_position(n)[0]) + "," + format_number(r.state.u[n]) + "," +
                  format_number(r.state.v[n]) + "\n";
        out.extra.push_back({"at_fields_" + std::to_string(i) + ".csv", body});
      }
    } else {
      ++out.failed_rows;
      t.rows.push_back({format_number(eps[i]), format_number(s.delta), format_number(s.eta), "", "", "", "", "",
                        "failed", errs[i]});
    }
  }
  t.rows.push_back({"limit", "", "", format_number(limit.value), "0", "", "", "", "ok",
                    "regime " + std::string(regime_name(lab.regime))});
  out.tables.push_back(std::move(t));
  out.tables.push_back(std::move(lim));
  return out;
}

}  // namespace tasks

// ---------------------------------------------------------------------------
// inequality suite (reused by the acceptance runner)

struct InequalityOptions {
  std::vector<double> angles;  // directions; antipodes are added as needed
  double ell = 1.0;
  std::vector<double> g0_r_list{4.0, 8.0};
  double g0_spacing = 1.0 / 16;
  std::vector<double> g_ell_r_list{8.0, 16.0};
  double g_ell_spacing = 1.0 / 8;
  int family_size = 7;
  int N = 64;
  int pairs = 50;
  double bound_slack = 0.03;
  double order_tol = 0.02;
  double symmetry_tol = 0.01;
  double convexity_tol = 0.02;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// One check: holds iff lhs <= rhs + tol.
struct InequalityRow {
  std::string spec_id;
  std::string check;
  double angle = 0.0;
  double angle2 = NAN;
  double lhs = 0.0;
  double rhs = 0.0;
  double tol = 0.0;
  bool holds = true;
  std::string error;  // nonempty when a solve failed
};

inline std::vector<InequalityRow> inequality_suite(const std::vector<SurfaceIntegrand<2>>& specs,
                                                   const InequalityOptions& o) {
  if (specs.empty()) throw InputError("inequality_suite: no surface specs");
  auto wrap = [](double a) {
    a = std::fmod(a, 2.0 * kPi);
    return a < 0.0 ? a + 2.0 * kPi : a;
  };
  // evaluation angles: the requested set closed under nu -> -nu
  std::vector<double> ang;
  auto index_of = [&](double a) -> std::size_t {
    for (std::size_t i = 0; i < ang.size(); ++i) {
      double d = std::abs(ang[i] - a);
      if (std::min(d, 2.0 * kPi - d) < 1e-9) return i;
    }
    ang.push_back(a);
    return ang.size() - 1;
  };
  std::vector<std::size_t> base, anti;
  for (double a : o.angles) base.push_back(index_of(wrap(a)));
  for (double a : o.angles) anti.push_back(index_of(wrap(a + kPi)));

  // convexity pairs z1, z2 (lengths in [0.5, 1.5], |z1 + z2| >= 0.25)
  std::mt19937_64 rng(o.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> A(0.0, 2.0 * kPi), L(0.5, 1.5);
  std::vector<std::array<Vec<2>, 3>> pairs;
  while (static_cast<int>(pairs.size()) < o.pairs) {
    double a1 = A(rng), a2 = A(rng), l1 = L(rng), l2 = L(rng);
    Vec<2> z1{l1 * std::cos(a1), l1 * std::sin(a1)}, z2{l2 * std::cos(a2), l2 * std::sin(a2)};
    Vec<2> s = z1 + z2;
    if (norm<2>(s) < 0.25) continue;
    pairs.push_back({z1, z2, s});
  }

  const std::size_t S = specs.size(), na = ang.size(), np = pairs.size();
  const std::size_t per_spec = 3 * na + 3 * np;
  std::vector<double> val(S * per_spec, NAN);
  std::vector<std::string> err(S * per_spec);
  detail::parallel_for(S * per_spec, o.workers, [&](std::size_t i) {
    const auto& h = specs[i / per_spec];
    std::size_t j = i % per_spec;
    try {
      if (j < 3 * na) {
        auto nu = Direction<2>::from_angle(ang[j % na]);
        int which = static_cast<int>(j / na);
        if (which == 0) val[i] = g0_hom(h, nu, o.g0_r_list, o.g0_spacing).value;
        else if (which == 1) val[i] = g_ell_hom(h, o.ell, nu, o.g_ell_r_list, o.g_ell_spacing, o.family_size).value;
        else val[i] = g_inf_hom(h, nu, o.N).value;
      } else {
        std::size_t q = j - 3 * na;
        const Vec<2>& z = pairs[q / 3][q % 3];
        val[i] = norm<2>(z) * g0_hom(h, Direction<2>::normalized(z), o.g0_r_list, o.g0_spacing).value;
      }
    } catch (const Error& e) {
      err[i] = e.what();
    }
  });

  std::vector<InequalityRow> rows;
  const char* names[3] = {"g0", "g_ell", "g_inf"};
  for (std::size_t s = 0; s < S; ++s) {
    const auto& h = specs[s];
    auto at = [&](int which, std::size_t a) { return s * per_spec + which * na + a; };
    auto add = [&](std::string check, double a1, double a2, std::initializer_list<std::size_t> used, double lhs,
                   double rhs, double tol) {
      InequalityRow r{h.id, std::move(check), a1, a2, lhs, rhs, tol, true, ""};
      for (std::size_t u : used)
        if (!err[u].empty()) r.error = err[u];
      r.holds = r.error.empty() && lhs <= rhs + tol;
      rows.push_back(std::move(r));
    };
    const double lo = 2.0 * std::sqrt(h.c3) * (1.0 - o.bound_slack), hi = 2.0 * std::sqrt(h.c4) * (1.0 + o.bound_slack);
    for (std::size_t b = 0; b < base.size(); ++b) {
      std::size_t a = base[b];
      for (int w = 0; w < 3; ++w) {
        add(std::string("lower_bound_") + names[w], ang[a], NAN, {at(w, a)}, lo, val[at(w, a)], 0.0);
        add(std::string("upper_bound_") + names[w], ang[a], NAN, {at(w, a)}, val[at(w, a)], hi, 0.0);
      }
      add("order_g0_g_ell", ang[a], NAN, {at(0, a), at(1, a)}, val[at(0, a)], val[at(1, a)], o.order_tol * val[at(1, a)]);
      add("order_g0_g_inf", ang[a], NAN, {at(0, a), at(2, a)}, val[at(0, a)], val[at(2, a)], o.order_tol * val[at(2, a)]);
      std::size_t m = anti[b];
      for (int w = 0; w < 3; ++w)
        add(std::string("symmetry_") + names[w], ang[a], ang[m], {at(w, a), at(w, m)},
            std::abs(val[at(w, a)] - val[at(w, m)]), 0.0, o.symmetry_tol * val[at(w, a)]);
    }
    for (std::size_t q = 0; q < np; ++q) {
      std::size_t i0 = s * per_spec + 3 * na + 3 * q;
      double G1 = val[i0], G2 = val[i0 + 1], G12 = val[i0 + 2];
      double a1 = wrap(std::atan2(pairs[q][0][1], pairs[q][0][0])), a2 = wrap(std::atan2(pairs[q][1][1], pairs[q][1][0]));
      add("convexity_g0", a1, a2, {i0, i0 + 1, i0 + 2}, G12, G1 + G2, o.convexity_tol * (G1 + G2));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// averaging suite (reused by the acceptance runner)

struct AveragingOptions {
  int samples = 100;
  int grid = 128;
  int kmax = 4;
  std::vector<double> r_values{1.0 / 16, 1.0 / 32};
  double c = kShiftPoincareConstant2D;
  double sigma = 0.1;
  double delta = 1.0 / 64;
  int K_max = 4;
  int cal_samples = 10;
  int cal_grid = 512;
  int N = 64;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct AveragingSuiteResult {
  std::vector<AveragingReport> shift;     // samples x r_values, row-major
  std::vector<int> shift_sample;          // sample id per shift row
  std::vector<int> monotone_failures;     // samples whose ratio grows when r halves
  KCalibration calibration;
  std::vector<AveragingReport> lower_bound;  // calibration corpus at the calibrated K
};

/// Shift-Poincare bound on band-limited fields over the unit square (inner
/// region: the centred half square) and the homogenized lower bound on a
/// calibration corpus (band-limited fields, plus two-scale fields with the
/// exact corrector when h is a scalar laminate), K calibrated by doubling.
inline AveragingSuiteResult averaging_suite(const SurfaceIntegrand<2>& h, const AveragingOptions& o) {
  const Box<2> unit{{0.0, 0.0}, {1.0, 1.0}}, half{{0.25, 0.25}, {0.75, 0.75}};
  AveragingSuiteResult res;
  const std::size_t nr = o.r_values.size();
  res.shift.resize(static_cast<std::size_t>(o.samples) * nr);
  res.shift_sample.resize(res.shift.size());
  detail::parallel_for(static_cast<std::size_t>(o.samples), o.workers, [&](std::size_t s) {
    auto v = BandLimitedField<2>(o.seed * 100003ULL + 1000 + s, o.kmax)
                 .sample({0.0, 0.0}, 1.0 / o.grid, {o.grid, o.grid});
    for (std::size_t i = 0; i < nr; ++i) {
      res.shift[s * nr + i] = check_shift_poincare<2>(v, unit, half, o.r_values[i], o.c);
      res.shift_sample[s * nr + i] = static_cast<int>(s);
    }
  });
  for (int s = 0; s < o.samples; ++s)
    for (std::size_t i = 0; i + 1 < nr; ++i) {
      // r_values are expected to halve (or shrink) along the list
      const auto& a = res.shift[s * nr + i];
      const auto& b = res.shift[s * nr + i + 1];
      if (b.r < a.r && b.ratio > a.ratio) {
        res.monotone_failures.push_back(s);
        break;
      }
    }

  const auto& coeff = h.coefficient;
  bool laminate = coeff.form() == IntegrandForm::scalar_coefficient &&
                  coeff.terms().front().weight.kind() == PeriodicField<2>::Kind::laminate;
  std::vector<std::optional<GridField<2>>> slots(static_cast<std::size_t>(o.cal_samples) * (laminate ? 2 : 1));
  detail::parallel_for(slots.size(), o.workers, [&](std::size_t i) {
    const std::uint64_t base = o.seed * 100003ULL;
    const int n = o.cal_grid;
    if (i < static_cast<std::size_t>(o.cal_samples))
      slots[i] = BandLimitedField<2>(base + 500 + i, o.kmax).sample({0.0, 0.0}, 1.0 / n, {n, n});
    else
      slots[i] = laminate_two_scale_field(BandLimitedField<2>(base + 600 + i - o.cal_samples, 2),
                                          coeff.terms().front().weight, o.delta, 1.0, {0.0, 0.0}, 1.0 / n, {n, n});
  });
  std::vector<GridField<2>> corpus;
  for (auto& f : slots) corpus.push_back(std::move(*f));
  auto H = homogenized_matrix<2>(h, o.N);
  res.calibration = calibrate_K<2>(corpus, h, H, o.delta, o.sigma, half, o.K_max);
  int K = res.calibration.found ? res.calibration.K : o.K_max;
  res.lower_bound.resize(corpus.size());
  detail::parallel_for(corpus.size(), o.workers, [&](std::size_t i) {
    res.lower_bound[i] = check_hom_lower_bound<2>(corpus[i], h, H, o.delta, o.sigma, K, half);
  });
  return res;
}

namespace tasks {

inline TaskOutput inequality(const ExperimentConfig& c, bool dry) {
  if (c.dimension != 2) throw ConfigError("dimension", "inequality_suite runs in dimension 2");
  const Json& k = c.knobs();
  std::vector<SurfaceIntegrand<2>> specs;
  if (c.doc.contains("surface")) specs.push_back(parse_surface<2>(c.doc["surface"], "surface"));
  if (c.doc.contains("surfaces")) {
    const Json& s = c.doc["surfaces"];
    if (!s.is_array()) throw ConfigError("surfaces", "expected a list");
    for (std::size_t i = 0; i < s.size(); ++i) specs.push_back(parse_surface<2>(s[i], "surfaces[" + std::to_string(i) + "]"));
  }
  int nrand = cfg::get_int(k, "random_specs", "knobs", 0, 0);
  for (int i = 0; i < nrand; ++i) specs.push_back(random_quadratic_surface(c.seed * 1000 + i));
  if (specs.empty()) throw ConfigError("surface", "inequality_suite needs surface, surfaces or knobs.random_specs");
  InequalityOptions o;
  o.angles = angle_list(k);
  o.ell = cfg::get_positive(k, "ell", "knobs", 1.0);
  o.g0_r_list = cfg::get_list(k, "g0_r_list", "knobs", o.g0_r_list);
  check_increasing(o.g0_r_list, "knobs.g0_r_list");
  o.g0_spacing = cfg::get_positive(k, "g0_spacing", "knobs", o.g0_spacing);
  o.g_ell_r_list = cfg::get_list(k, "g_ell_r_list", "knobs", o.g_ell_r_list);
  check_increasing(o.g_ell_r_list, "knobs.g_ell_r_list");
  o.g_ell_spacing = cfg::get_positive(k, "g_ell_spacing", "knobs", o.g_ell_spacing);
  o.family_size = cfg::get_int(k, "family_size", "knobs", o.family_size);
  o.N = cfg::get_int(k, "N", "knobs", o.N, 8);
  o.pairs = cfg::get_int(k, "pairs", "knobs", o.pairs, 0);
  o.bound_slack = cfg::get_positive(k, "bound_slack", "knobs", o.bound_slack);
  o.order_tol = cfg::get_positive(k, "order_tol", "knobs", o.order_tol);
  o.symmetry_tol = cfg::get_positive(k, "symmetry_tol", "knobs", o.symmetry_tol);
  o.convexity_tol = cfg::get_positive(k, "convexity_tol", "knobs", o.convexity_tol);
  o.seed = c.seed;
  o.workers = c.workers;
  if (dry) return {};
  auto rows = inequality_suite(specs, o);
  TaskOutput out;
  CsvTable t{"inequality_suite.csv", {"spec_id", "check", "angle", "angle2", "lhs", "rhs", "tol", "holds", "status", "error"}, {}};
  for (const auto& r : rows) {
    bool failed = !r.error.empty();
    if (failed) ++out.failed_rows;
    else if (!r.holds) ++out.violations;
    t.rows.push_back({r.spec_id, r.check, format_number(r.angle), std::isnan(r.angle2) ? "" : format_number(r.angle2),
                      failed ? "" : format_number(r.lhs), failed ? "" : format_number(r.rhs), format_number(r.tol),
                      r.holds ? "true" : "false", failed ? "failed" : "ok", r.error});
  }
  out.tables.push_back(std::move(t));
  return out;
}

inline TaskOutput averaging(const ExperimentConfig& c, bool dry) {
  if (c.dimension != 2) throw ConfigError("dimension", "averaging_suite runs in dimension 2");
  const Json& k = c.knobs();
  auto h = parse_surface<2>(require_section(c, "surface"), "surface");
  AveragingOptions o;
  o.samples = cfg::get_int(k, "samples", "knobs", o.samples);
  o.grid = cfg::get_int(k, "grid", "knobs", o.grid, 8);
  o.kmax = cfg::get_int(k, "kmax", "knobs", o.kmax);
  o.r_values = cfg::get_list(k, "r_values", "knobs", o.r_values);
  o.c = cfg::get_positive(k, "c", "knobs", o.c);
  o.sigma = cfg::get_double(k, "sigma", "knobs", o.sigma);
  if (!(o.sigma >= 0.0)) throw ConfigError("knobs.sigma", "must be nonnegative");
  o.delta = cfg::get_positive(k, "delta", "knobs", o.delta);
  o.K_max = cfg::get_int(k, "K_max", "knobs", o.K_max);
  o.cal_samples = cfg::get_int(k, "cal_samples", "knobs", o.cal_samples);
  o.cal_grid = cfg::get_int(k, "cal_grid", "knobs", o.cal_grid, 8);
  o.N = cfg::get_int(k, "N", "knobs", o.N, 8);
  o.seed = c.seed;
  o.workers = c.workers;
  if (dry) return {};

  TaskOutput out;
  AveragingSuiteResult res;
  try {
    res = averaging_suite(h, o);
  } catch (const PreconditionError& e) {
    throw ConfigError("knobs", e.what());
  } catch (const InputError& e) {
    throw ConfigError("knobs", e.what());
  }
  CsvTable t{"averaging_suite.csv",
             {"sample_id", "check", "r", "sigma", "K", "delta", "lhs", "rhs", "ratio", "bound", "holds"},
             {}};
  auto push = [&](const std::string& id, const AveragingReport& r) {
    if (!r.holds) ++out.violations;
    t.rows.push_back({id, r.check, format_number(r.r), format_number(r.sigma), std::to_string(r.K),
                      format_number(r.delta), format_number(r.lhs), format_number(r.rhs), format_number(r.ratio),
                      format_number(r.bound), r.holds ? "true" : "false"});
  };
  for (std::size_t i = 0; i < res.shift.size(); ++i) push(std::to_string(res.shift_sample[i]), res.shift[i]);
  for (int s : res.monotone_failures) {
    ++out.violations;
    t.rows.push_back({std::to_string(s), "shift_poincare_monotone", "", "", "", "", "", "", "", "", "false"});
  }
  for (std::size_t i = 0; i < res.lower_bound.size(); ++i) push("cal-" + std::to_string(i), res.lower_bound[i]);
  // K(sigma) is not quantified; the doubling calibration is a surrogate
  const auto& cal = res.calibration;
  if (!cal.found) ++out.violations;
  t.rows.push_back({"corpus", "K_calibration_surrogate", "", format_number(o.sigma), std::to_string(cal.K),
                    format_number(o.delta), std::to_string(cal.tried.size()),
                    cal.failures.empty() ? "" : std::to_string(cal.failures.back()), "", std::to_string(o.K_max),
                    cal.found ? "true" : "false"});
  out.tables.push_back(std::move(t));
  return out;
}

inline TaskOutput dispatch(const ExperimentConfig& c, bool dry) {
  const std::string& t = c.task;
  if (t == "f_hom_table" || t == "h_hom_table") {
    bool bulk = t == "f_hom_table";
    switch (c.dimension) {
      case 1:
        return cell_table<1>(c, bulk, dry);
      case 2:
        return cell_table<2>(c, bulk, dry);
      default:
        return cell_table<3>(c, bulk, dry);
    }
  }
  if (t == "g0_sweep" || t == "g_ell_sweep" || t == "g_inf_sweep") return surface_sweep(c, dry);
  if (t == "at_convergence") return at_convergence(c, dry);
  if (t == "inequality_suite") return inequality(c, dry);
  return averaging(c, dry);
}

}  // namespace tasks

inline ExperimentConfig ExperimentConfig::from_json(Json doc) {
  if (!doc.is_object()) throw ConfigError("<root>", "expected a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!known_sections().count(it.key())) throw ConfigError(it.key(), "unknown key");
  ExperimentConfig c;
  c.task = cfg::get_string(doc, "task", "", "");
  if (c.task.empty()) throw ConfigError("task", "required");
  const auto& names = task_names();
  if (std::find(names.begin(), names.end(), c.task) == names.end()) {
    std::string all;
    for (const auto& n : names) all += (all.empty() ? "" : ", ") + n;
    throw ConfigError("task", "unknown task '" + c.task + "' (expected one of " + all + ")");
  }
  c.dimension = cfg::get_int(doc, "dimension", "", c.task == "at_convergence" ? 1 : 2);
  if (c.dimension > 3) throw ConfigError("dimension", "must be 1, 2 or 3");
  if (const Json* s = cfg::find(doc, "seed", "")) {
    if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<long long>() >= 0))
      throw ConfigError("seed", "expected a nonnegative integer");
    c.seed = s->get<std::uint64_t>();
  }
  c.workers = cfg::get_int(doc, "workers", "", 1);
  c.output_dir = cfg::get_string(doc, "output_dir", "", "");
  if (const Json* k = cfg::find(doc, "knobs", "")) {
    if (!k->is_object()) throw ConfigError("knobs", "expected an object");
    for (auto it = k->begin(); it != k->end(); ++it)
      if (!known_knobs().count(it.key())) throw ConfigError("knobs." + it.key(), "unknown knob");
  }
  c.doc = std::move(doc);
  tasks::dispatch(c, true);
  return c;
}

/// Runs the task, writes CSV tables, extra files and manifest.json into
/// `config.output_dir` (created if needed). Solver failures are recorded per
/// row and counted in the manifest.
inline RunManifest run_experiment(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  if (config.output_dir.empty()) throw ConfigError("output_dir", "required");
  const auto t0 = std::chrono::steady_clock::now();
  TaskOutput out = tasks::dispatch(config, false);
  const double compute = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunManifest m;
  m.config_hash = config.hash();
  m.task = config.task;
  m.failed_rows = out.failed_rows;
  m.violations = out.violations;
  fs::path dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream os(dir / name, std::ios::binary);
    if (!os || !(os << body)) throw Error("cannot write " + (dir / name).string());
    m.files[config.task].push_back(name);
  };
  for (const auto& t : out.tables) {
    write(t.file, render_csv(t, m.config_hash));
    m.rows += t.rows.size();
  }
  for (const auto& e : out.extra) write(e.file, e.body);
  m.files[config.task].push_back("manifest.json");
  m.timings["compute_seconds"] = compute;
  m.timings["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream os(dir / "manifest.json", std::ios::binary);
  if (!os || !(os << m.to_json().dump(2) << "\n")) throw Error("cannot write manifest.json");
  return m;
}

}  // namespace athom
