#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncelab/errors.hpp"
#include "ncelab/general.hpp"
#include "ncelab/mms.hpp"
#include "ncelab/problem.hpp"
#include "ncelab/shapes.hpp"

namespace ncelab {

struct MatrixSpec {
  enum class Kind { identity, scalar, matrix };
  Kind kind = Kind::identity;
  ShapeSpec shape;                           // scalar: A = a(x) * identity
  std::vector<std::vector<double>> entries;  // matrix: constant symmetric
};

struct CouplingSpec {
  bool is_field = false;
  double value = 1.0;
  ShapeSpec shape;
  double mu1 = 0.0, mu2 = 0.0;
};

struct MmsSpec {
  std::array<int, 3> wave{1, 1, 1};
  double amplitude = 1.0;
  std::vector<std::vector<int>> levels;  // empty selects three doublings of the grid
};

struct ExperimentConfig {
  std::string mode = "check";
  std::vector<int> counts{33};
  std::vector<double> lengths{1.0};
  MatrixSpec A;
  ShapeSpec c0;  // defaults to constant 0
  ShapeSpec f;   // defaults to constant 0
  CouplingSpec mu;
  double p = 2.0;
  double tolerance = 1e-8;
  double descent_tolerance = 1e-9;
  double newton_tolerance = 1e-12;
  double rho = 0.0;  // 0 selects the pipeline default
  int path_nodes = 21;
  int max_sweeps = 20000;
  std::uint64_t seed = 0;
  GeneralH general;
  MmsSpec mms;
  nlohmann::json echo;  // validated document, echoed into the manifest
};

namespace cfg {

using nlohmann::json;

inline void require_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) throw config_error("unknown key '" + it.key() + "' at " + where);
  }
}

inline const json& member(const json& obj, const std::string& where, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end())
    throw config_error(std::string("missing required key '") + key + "' at " + where);
  return *it;
}

inline double as_double(const json& j, const std::string& where) {
  if (!j.is_number()) throw config_error("expected a number at " + where);
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw config_error("value at " + where + " must be finite");
  return v;
}

inline int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw config_error("expected an integer at " + where);
  return j.get<int>();
}

inline std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw config_error("expected a string at " + where);
  return j.get<std::string>();
}

inline ShapeSpec parse_shape(const json& j, const std::string& where,
                             const std::filesystem::path& base) {
  if (!j.is_object()) throw config_error("expected a shape object at " + where);
  const std::string kind = as_string(member(j, where, "kind"), where + "/kind");
  ShapeSpec s;
  if (kind == "constant") {
    require_keys(j, where, {"kind", "value"});
    s.kind = ShapeSpec::Kind::constant;
    s.value = as_double(member(j, where, "value"), where + "/value");
  } else if (kind == "gaussian-bump") {
    require_keys(j, where, {"kind", "center", "width", "amplitude", "offset"});
    s.kind = ShapeSpec::Kind::gaussian_bump;
    const json& c = member(j, where, "center");
    if (!c.is_array() || c.empty() || c.size() > 3)
      throw config_error("expected an array of 1 to 3 coordinates at " + where + "/center");
    for (std::size_t d = 0; d < c.size(); ++d)
      s.center[d] = as_double(c[d], where + "/center");
    s.width = as_double(member(j, where, "width"), where + "/width");
    if (!(s.width > 0.0)) throw config_error("bump width at " + where + " must be positive");
    s.amplitude = as_double(member(j, where, "amplitude"), where + "/amplitude");
    if (j.contains("offset")) s.offset = as_double(j["offset"], where + "/offset");
  } else if (kind == "sine-product") {
    require_keys(j, where, {"kind", "amplitude", "offset"});
    s.kind = ShapeSpec::Kind::sine_product;
    s.amplitude = as_double(member(j, where, "amplitude"), where + "/amplitude");
    if (j.contains("offset")) s.offset = as_double(j["offset"], where + "/offset");
  } else if (kind == "file") {
    require_keys(j, where, {"kind", "path"});
    s.kind = ShapeSpec::Kind::file;
    const std::filesystem::path p(as_string(member(j, where, "path"), where + "/path"));
    s.path = (p.is_absolute() ? p : base / p).string();
    if (!std::filesystem::exists(s.path))
      throw config_error("field file '" + s.path + "' referenced at " + where + " does not exist");
  } else {
    throw config_error("unknown shape kind '" + kind + "' at " + where);
  }
  return s;
}

inline MatrixSpec parse_matrix(const json& j, const std::string& where,
                               const std::filesystem::path& base) {
  if (!j.is_object()) throw config_error("expected a coefficient object at " + where);
  const std::string kind = as_string(member(j, where, "kind"), where + "/kind");
  MatrixSpec s;
  if (kind == "identity") {
    require_keys(j, where, {"kind"});
    s.kind = MatrixSpec::Kind::identity;
  } else if (kind == "scalar") {
    require_keys(j, where, {"kind", "shape"});
    s.kind = MatrixSpec::Kind::scalar;
    s.shape = parse_shape(member(j, where, "shape"), where + "/shape", base);
  } else if (kind == "matrix") {
    require_keys(j, where, {"kind", "entries"});
    s.kind = MatrixSpec::Kind::matrix;
    const json& rows = member(j, where, "entries");
    if (!rows.is_array()) throw config_error("expected an array of rows at " + where + "/entries");
    for (const json& row : rows) {
      if (!row.is_array())
        throw config_error("expected an array of rows at " + where + "/entries");
      std::vector<double> r;
      for (const json& v : row) r.push_back(as_double(v, where + "/entries"));
      s.entries.push_back(std::move(r));
    }
  } else {
    throw config_error("unknown coefficient kind '" + kind + "' at " + where);
  }
  return s;
}

inline CouplingSpec parse_coupling(const json& j, const std::string& where,
                                   const std::filesystem::path& base) {
  if (!j.is_object()) throw config_error("expected a coupling object at " + where);
  const std::string kind = as_string(member(j, where, "kind"), where + "/kind");
  CouplingSpec s;
  if (kind == "constant") {
    require_keys(j, where, {"kind", "value"});
    s.is_field = false;
    s.value = as_double(member(j, where, "value"), where + "/value");
  } else if (kind == "field") {
    require_keys(j, where, {"kind", "shape", "bounds"});
    s.is_field = true;
    s.shape = parse_shape(member(j, where, "shape"), where + "/shape", base);
    const json& b = member(j, where, "bounds");
    if (!b.is_array() || b.size() != 2)
      throw config_error("expected [mu1, mu2] at " + where + "/bounds");
    s.mu1 = as_double(b[0], where + "/bounds");
    s.mu2 = as_double(b[1], where + "/bounds");
  } else {
    throw config_error("unknown coupling kind '" + kind + "' at " + where);
  }
  return s;
}

inline GeneralH parse_general(const json& j, const std::string& where) {
  require_keys(j, where, {"form", "clip", "mu_bound"});
  GeneralH h;
  if (j.contains("form")) {
    const std::string form = as_string(j["form"], where + "/form");
    if (form == "model") {
      h.form = GeneralH::Form::model;
    } else if (form == "clipped") {
      h.form = GeneralH::Form::clipped;
    } else {
      throw config_error("unknown form '" + form + "' at " + where + "/form");
    }
  }
  if (j.contains("clip")) {
    h.clip = as_double(j["clip"], where + "/clip");
    if (!(h.clip > 0.0)) throw config_error("clip level at " + where + " must be positive");
  } else if (h.form == GeneralH::Form::clipped) {
    throw config_error("the clipped form needs a 'clip' level at " + where);
  }
  if (j.contains("mu_bound")) {
    h.mu_bound = as_double(j["mu_bound"], where + "/mu_bound");
    if (!(h.mu_bound > 0.0))
      throw config_error("mu_bound at " + where + " must be positive");
  }
  return h;
}

inline MmsSpec parse_mms(const json& j, const std::string& where) {
  require_keys(j, where, {"wave", "amplitude", "levels"});
  MmsSpec s;
  if (j.contains("wave")) {
    const json& w = j["wave"];
    if (!w.is_array() || w.empty() || w.size() > 3)
      throw config_error("expected an array of 1 to 3 wave numbers at " + where + "/wave");
    for (std::size_t d = 0; d < w.size(); ++d) {
      s.wave[d] = as_int(w[d], where + "/wave");
      if (s.wave[d] < 1) throw config_error("wave numbers at " + where + " must be >= 1");
    }
  }
  if (j.contains("amplitude")) {
    s.amplitude = as_double(j["amplitude"], where + "/amplitude");
    if (s.amplitude == 0.0)
      throw config_error("manufactured amplitude at " + where + " must be nonzero");
  }
  if (j.contains("levels")) {
    const json& levels = j["levels"];
    if (!levels.is_array() || levels.size() < 2)
      throw config_error("expected at least two grid levels at " + where + "/levels");
    for (const json& level : levels) {
      if (!level.is_array())
        throw config_error("expected count arrays at " + where + "/levels");
      std::vector<int> counts;
      for (const json& c : level) counts.push_back(as_int(c, where + "/levels"));
      s.levels.push_back(std::move(counts));
    }
  }
  return s;
}

}  // namespace cfg

/// Cross-field checks that depend on the effective mode; the CLI reruns them
/// after a subcommand overrides the mode from the file.
inline void validate_mode_constraints(const ExperimentConfig& c) {
  const bool multiplicity_mode =
      c.mode == "solve-min" || c.mode == "solve-mp" || c.mode == "solve-both";
  if (multiplicity_mode) {
    if (c.mu.is_field)
      throw config_error("mode '" + c.mode + "': multiplicity requires a constant mu");
    if (c.mu.value == 0.0)
      throw config_error("mode '" + c.mode + "': multiplicity requires mu != 0");
  }
  if (!c.mu.is_field && c.mu.value == 0.0 && c.mode != "props")
    throw config_error("the gradient coupling mu must be nonzero");
}

inline ExperimentConfig load_config(const std::string& path) {
  using nlohmann::json;
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw config_error("'" + path + "': " + e.what());
  }
  if (!doc.is_object()) throw config_error("'" + path + "': top level must be an object");
  const std::filesystem::path base = std::filesystem::path(path).parent_path();

  cfg::require_keys(doc, "/",
                    {"mode", "grid", "coefficients", "p", "tolerance", "descent_tolerance",
                     "newton_tolerance", "rho", "path_nodes", "max_sweeps", "seed", "general",
                     "mms"});
  ExperimentConfig c;
  c.mode = cfg::as_string(cfg::member(doc, "/", "mode"), "/mode");
  const bool known_mode = c.mode == "check" || c.mode == "solve-min" || c.mode == "solve-mp" ||
                          c.mode == "solve-both" || c.mode == "solve-general" ||
                          c.mode == "mms" || c.mode == "props";
  if (!known_mode) throw config_error("unknown mode '" + c.mode + "' at /mode");

  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    cfg::require_keys(g, "/grid", {"counts", "lengths"});
    const json& counts = cfg::member(g, "/grid", "counts");
    if (!counts.is_array() || counts.empty() || counts.size() > 3)
      throw config_error("expected 1 to 3 axis counts at /grid/counts");
    c.counts.clear();
    for (const json& v : counts) c.counts.push_back(cfg::as_int(v, "/grid/counts"));
    c.lengths.assign(c.counts.size(), 1.0);
    if (g.contains("lengths")) {
      const json& lengths = g["lengths"];
      if (!lengths.is_array() || lengths.size() != c.counts.size())
        throw config_error("expected one box length per axis at /grid/lengths");
      for (std::size_t d = 0; d < c.lengths.size(); ++d)
        c.lengths[d] = cfg::as_double(lengths[d], "/grid/lengths");
    }
  }

  if (doc.contains("coefficients")) {
    const json& co = doc["coefficients"];
    cfg::require_keys(co, "/coefficients", {"A", "c0", "f", "mu"});
    if (co.contains("A")) c.A = cfg::parse_matrix(co["A"], "/coefficients/A", base);
    if (co.contains("c0")) c.c0 = cfg::parse_shape(co["c0"], "/coefficients/c0", base);
    if (co.contains("f")) c.f = cfg::parse_shape(co["f"], "/coefficients/f", base);
    if (co.contains("mu")) c.mu = cfg::parse_coupling(co["mu"], "/coefficients/mu", base);
  }

  if (doc.contains("p")) c.p = cfg::as_double(doc["p"], "/p");
  if (doc.contains("tolerance")) c.tolerance = cfg::as_double(doc["tolerance"], "/tolerance");
  if (doc.contains("descent_tolerance"))
    c.descent_tolerance = cfg::as_double(doc["descent_tolerance"], "/descent_tolerance");
  if (doc.contains("newton_tolerance"))
    c.newton_tolerance = cfg::as_double(doc["newton_tolerance"], "/newton_tolerance");
  if (doc.contains("rho")) {
    c.rho = cfg::as_double(doc["rho"], "/rho");
    if (c.rho < 0.0) throw config_error("the ball radius override at /rho must be >= 0");
  }
  if (doc.contains("path_nodes")) {
    c.path_nodes = cfg::as_int(doc["path_nodes"], "/path_nodes");
    if (c.path_nodes < 3) throw config_error("/path_nodes must be at least 3");
  }
  if (doc.contains("max_sweeps")) {
    c.max_sweeps = cfg::as_int(doc["max_sweeps"], "/max_sweeps");
    if (c.max_sweeps < 1) throw config_error("/max_sweeps must be positive");
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer())
      throw config_error("expected an integer at /seed");
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("general")) c.general = cfg::parse_general(doc["general"], "/general");
  if (doc.contains("mms")) c.mms = cfg::parse_mms(doc["mms"], "/mms");

  validate_mode_constraints(c);
  c.echo = std::move(doc);
  return c;
}

inline MatrixField build_matrix(const Grid& g, const MatrixSpec& spec) {
  switch (spec.kind) {
    case MatrixSpec::Kind::identity:
      return MatrixField::identity(g);
    case MatrixSpec::Kind::scalar: {
      const ScalarField a = sample_shape(g, spec.shape);
      std::int64_t idx = 0;
      return MatrixField::sample(g, [&](const std::array<double, 3>&, double mat[3][3]) {
        for (int d = 0; d < g.dim(); ++d) mat[d][d] = a[idx];
        ++idx;
      });
    }
    case MatrixSpec::Kind::matrix:
      return MatrixField::constant(g, spec.entries);
  }
  throw internal_error("unhandled coefficient matrix kind");
}

inline GradientCoupling build_coupling(const Grid& g, const CouplingSpec& spec) {
  if (!spec.is_field) return GradientCoupling::constant(spec.value);
  return GradientCoupling::field(sample_shape(g, spec.shape), spec.mu1, spec.mu2);
}

inline Grid build_grid(const ExperimentConfig& c) {
  return Grid::from_lengths(c.counts, c.lengths);
}

inline ProblemData build_problem_on(const ExperimentConfig& c, const Grid& g) {
  return ProblemData(build_matrix(g, c.A), sample_shape(g, c.c0), sample_shape(g, c.f),
                     build_coupling(g, c.mu), c.p);
}

inline ProblemData build_problem(const ExperimentConfig& c) {
  return build_problem_on(c, build_grid(c));
}

inline MmsStar build_star(const ExperimentConfig& c) {
  MmsStar star;
  star.dim = static_cast<int>(c.counts.size());
  star.wave = c.mms.wave;
  star.amplitude = c.mms.amplitude;
  for (std::size_t d = 0; d < c.lengths.size(); ++d) star.lengths[d] = c.lengths[d];
  return star;
}

/// Grid levels of the refinement study: the configured list, or three
/// doublings of the base grid (n -> 2n+1 halves the spacing exactly).
inline std::vector<std::vector<int>> mms_levels(const ExperimentConfig& c) {
  if (!c.mms.levels.empty()) return c.mms.levels;
  std::vector<std::vector<int>> levels;
  std::vector<int> counts = c.counts;
  for (int level = 0; level < 3; ++level) {
    levels.push_back(counts);
    for (int& n : counts) n = 2 * n + 1;
  }
  return levels;
}

}  // namespace ncelab
