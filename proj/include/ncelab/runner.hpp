#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncelab/config.hpp"
#include "ncelab/field_io.hpp"
#include "ncelab/general.hpp"
#include "ncelab/mms.hpp"
#include "ncelab/pipeline.hpp"
#include "ncelab/props.hpp"

namespace ncelab {

inline constexpr const char* version_string = "ncelab 0.1.0";

inline nlohmann::json hypotheses_to_json(const HypothesisReport& r) {
  return {{"c0_norm_p", r.c0_norm_p},
          {"f_norm_slot", r.f_norm_slot},
          {"fplus_norm_slot", r.fplus_norm_slot},
          {"fminus_norm_slot", r.fminus_norm_slot},
          {"fminus_norm_p", r.fminus_norm_p},
          {"mu", r.mu},
          {"sobolev_ratio", r.sobolev_ratio},
          {"margin", r.margin},
          {"h2prime_lhs", r.h2prime_lhs},
          {"coercivity", r.coercivity},
          {"lambda_A", r.lambda_A},
          {"Lambda_A", r.Lambda_A},
          {"h1_ok", r.h1_ok},
          {"h2_ok", r.h2_ok},
          {"h2prime_ok", r.h2prime_ok},
          {"coercive_ok", r.coercive_ok}};
}

inline nlohmann::json result_to_json(const SolveResult& r) {
  return {{"kind", to_string(r.kind)},
          {"iterations", r.iterations},
          {"residual_norm", r.residual_norm},
          {"energy", r.energy},
          {"min_v", r.min_v},
          {"converged", r.converged},
          {"lower_bound_ok", r.lower_bound_ok},
          {"bracket_ok", r.bracket_ok},
          {"projection_active", r.projection_active},
          {"jacobian_regularized", r.jacobian_regularized}};
}

inline void write_log_csv(const std::string& path, const std::vector<IterationRecord>& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << "iteration,residual,energy,cerami\n";
  for (const IterationRecord& r : log)
    out << r.iteration << ',' << format_double(r.residual) << ',' << format_double(r.energy)
        << ',' << format_double(r.cerami) << '\n';
}

inline void write_path_profile_csv(const std::string& path,
                                   const std::vector<std::vector<double>>& profile) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << "sweep,node,energy\n";
  for (std::size_t s = 0; s < profile.size(); ++s)
    for (std::size_t j = 0; j < profile[s].size(); ++j)
      out << s << ',' << j << ',' << format_double(profile[s][j]) << '\n';
}

/// Energy along straight rays t -> I(t v) for each named direction,
/// sampled on t in [0, 1.25]; the saddle shows up near t = 1 on the
/// mountain pass ray.
inline void write_ray_scan_csv(const std::string& path, const ProblemData& data,
                               const std::vector<std::pair<std::string, const ScalarField*>>& rays) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << 't';
  for (const auto& ray : rays) out << ",I_" << ray.first;
  out << '\n';
  for (int k = 0; k <= 100; ++k) {
    const double t = 1.25 * k / 100.0;
    out << format_double(t);
    for (const auto& ray : rays) {
      ScalarField probe(data.grid());
      for (std::int64_t i = 0; i < probe.size(); ++i) probe[i] = t * (*ray.second)[i];
      out << ',' << format_double(energy_value(probe, data));
    }
    out << '\n';
  }
}

/// Values along the axis-0 line through the center of the box.
inline void write_cross_section_csv(const std::string& path, const Grid& g,
                                    const std::vector<std::pair<std::string, const ScalarField*>>& cols) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << 'x';
  for (const auto& col : cols) out << ',' << col.first;
  out << '\n';
  std::array<int, 3> m{0, 0, 0};
  for (int d = 1; d < g.dim(); ++d) m[d] = g.count(d) / 2;
  for (int i = 0; i < g.count(0); ++i) {
    m[0] = i;
    const std::int64_t idx = g.index(m);
    out << format_double(g.coord(m, 0));
    for (const auto& col : cols) out << ',' << format_double((*col.second)[idx]);
    out << '\n';
  }
}

inline void write_mms_csv(const std::string& path, const MmsOutcome& o) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << "level,nodes,h,error,order\n";
  for (std::size_t k = 0; k < o.levels.size(); ++k) {
    const MmsLevel& level = o.levels[k];
    out << k << ',';
    for (std::size_t d = 0; d < level.counts.size(); ++d)
      out << (d ? "x" : "") << level.counts[d];
    out << ',' << format_double(level.h_max) << ',' << format_double(level.error) << ',';
    if (k > 0) out << format_double(o.orders[k - 1]);
    out << '\n';
  }
}

inline void write_props_csv(const std::string& path, const PropsOutcome& o) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << "name,worst,limit,pass\n";
  for (const PropRow& row : o.rows)
    out << row.name << ',' << format_double(row.worst) << ',' << format_double(row.limit) << ','
        << (row.pass ? "PASS" : "FAIL") << '\n';
}

/// Runs one configured experiment, writing every output under out_dir.
/// The manifest is written even when a stage fails (with the failing stage
/// and the error recorded) and the exception is rethrown for the caller to
/// turn into an exit code. All wall-clock data lives under the single
/// "timings" key so that everything else is reproducible bit for bit.
inline nlohmann::json run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  using clock = std::chrono::steady_clock;
  fs::create_directories(out_dir);

  nlohmann::json manifest;
  manifest["version"] = version_string;
  manifest["mode"] = cfg.mode;
  manifest["seed"] = cfg.seed;
  manifest["config"] = cfg.echo;
  nlohmann::json timings = nlohmann::json::object();
  nlohmann::json artifacts = nlohmann::json::array();
  std::string stage = "build";

  auto note = [&](const std::string& name) {
    const fs::path p = fs::path(out_dir) / name;
    artifacts.push_back({{"path", name},
                         {"bytes", static_cast<std::uint64_t>(fs::file_size(p))},
                         {"fnv1a64", checksum_file(p.string())}});
  };
  auto save_field = [&](const std::string& name, const ScalarField& fld) {
    write_field((fs::path(out_dir) / name).string(), fld);
    note(name);
  };
  auto save_log = [&](const std::string& name, const std::vector<IterationRecord>& log) {
    write_log_csv((fs::path(out_dir) / name).string(), log);
    note(name);
  };
  auto out_path = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };
  auto flush_manifest = [&]() {
    manifest["artifacts"] = artifacts;
    manifest["timings"] = timings;
    std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::trunc);
    out << manifest.dump(2) << '\n';
  };
  auto timed = [&](const char* name, auto&& fn) {
    stage = name;
    const auto t0 = clock::now();
    fn();
    timings[name] = std::chrono::duration<double>(clock::now() - t0).count();
  };

  PipelineOptions opts;
  opts.tol = cfg.tolerance;
  opts.rho = cfg.rho;
  opts.descent_tol = cfg.descent_tolerance;
  opts.newton_tol = cfg.newton_tolerance;
  opts.path_nodes = cfg.path_nodes;
  opts.max_sweeps = cfg.max_sweeps;

  try {
    if (cfg.mode == "check") {
      const ProblemData data = build_problem(cfg);
      HypothesisReport report;
      timed("hypotheses", [&] { report = check_hypotheses(data); });
      manifest["hypotheses"] = hypotheses_to_json(report);
      stage = "gate";
      if (!(report.h1_ok && report.h2_ok && report.coercive_ok)) {
        std::string which;
        if (!report.h1_ok) which += " ellipticity-or-sign";
        if (!report.h2_ok) which += " smallness";
        if (!report.coercive_ok) which += " coercivity";
        throw hypothesis_error("hypothesis check failed:" + which);
      }
      manifest["ok"] = true;
    } else if (cfg.mode == "solve-min" || cfg.mode == "solve-mp") {
      const ProblemData data = build_problem(cfg);
      const bool is_min = cfg.mode == "solve-min";
      BranchOutcome b{SolveResult(ScalarField(data.grid()), SolveKind::LocalMin), {}, 0.0, false};
      timed("solve", [&] { b = is_min ? solve_model_min(data, opts) : solve_model_mp(data, opts); });
      manifest["hypotheses"] = hypotheses_to_json(b.report);
      manifest["rho"] = b.rho;
      manifest["sign_flipped"] = b.sign_flipped;
      const char* tag = is_min ? "minimum" : "pass";
      manifest["solves"][tag] = result_to_json(b.result);
      timed("outputs", [&] {
        const std::string base = is_min ? "min" : "mp";
        save_field("v_" + base + ".field", b.result.v);
        save_field("u_" + base + ".field", *b.result.u);
        save_log(base + "_log.csv", b.result.log);
        if (!is_min) {
          write_path_profile_csv(out_path("path_profile.csv"), b.result.path_energy);
          note("path_profile.csv");
        }
        write_cross_section_csv(out_path("cross_sections.csv"), data.grid(),
                                {{"u_" + base, &*b.result.u}});
        note("cross_sections.csv");
      });
      manifest["ok"] = true;
    } else if (cfg.mode == "solve-both") {
      const ProblemData data = build_problem(cfg);
      BothOutcome both{SolveResult(ScalarField(data.grid()), SolveKind::LocalMin),
                       SolveResult(ScalarField(data.grid()), SolveKind::MountainPass),
                       {}, 0.0, false, 0.0};
      timed("solve", [&] { both = solve_model_both(data, opts); });
      manifest["hypotheses"] = hypotheses_to_json(both.report);
      manifest["rho"] = both.rho;
      manifest["sign_flipped"] = both.sign_flipped;
      manifest["separation"] = both.separation;
      manifest["solves"]["minimum"] = result_to_json(both.minimum);
      manifest["solves"]["pass"] = result_to_json(both.pass);
      timed("outputs", [&] {
        save_field("v_min.field", both.minimum.v);
        save_field("u_min.field", *both.minimum.u);
        save_field("v_mp.field", both.pass.v);
        save_field("u_mp.field", *both.pass.u);
        save_log("min_log.csv", both.minimum.log);
        save_log("mp_log.csv", both.pass.log);
        write_path_profile_csv(out_path("path_profile.csv"), both.pass.path_energy);
        note("path_profile.csv");
        const SignNormalized norm = sign_normalize(data);
        write_ray_scan_csv(out_path("ray_scan.csv"), norm.data,
                           {{"min", &both.minimum.v}, {"mp", &both.pass.v}});
        note("ray_scan.csv");
        write_cross_section_csv(out_path("cross_sections.csv"), data.grid(),
                                {{"u_min", &*both.minimum.u}, {"u_mp", &*both.pass.u}});
        note("cross_sections.csv");
      });
      manifest["ok"] = true;
    } else if (cfg.mode == "solve-general") {
      const ProblemData data = build_problem(cfg);
      GeneralOutcome go{SolveResult(ScalarField(data.grid()), SolveKind::Bracketed),
                        Bracket{ScalarField(data.grid()), ScalarField(data.grid()),
                                SolveResult(ScalarField(data.grid()), SolveKind::LocalMin)},
                        false};
      timed("solve", [&] { go = solve_general(data, cfg.general, opts); });
      manifest["sign_flipped"] = go.sign_flipped;
      manifest["solves"]["solution"] = result_to_json(go.solution);
      manifest["solves"]["extremal"] = result_to_json(go.bracket.extremal);
      timed("outputs", [&] {
        save_field("u.field", *go.solution.u);
        save_field("u_lower.field", go.bracket.lower);
        save_field("u_upper.field", go.bracket.upper);
        save_log("solution_log.csv", go.solution.log);
        save_log("extremal_log.csv", go.bracket.extremal.log);
        write_cross_section_csv(out_path("cross_sections.csv"), data.grid(),
                                {{"u", &*go.solution.u},
                                 {"u_lower", &go.bracket.lower},
                                 {"u_upper", &go.bracket.upper}});
        note("cross_sections.csv");
      });
      manifest["ok"] = true;
    } else if (cfg.mode == "mms") {
      for (const ShapeSpec* s : {&cfg.c0, &cfg.f, &cfg.mu.shape, &cfg.A.shape})
        if (s->kind == ShapeSpec::Kind::file)
          throw config_error("the refinement study resamples coefficients per level, "
                             "so file-backed shapes cannot be used in mms mode");
      const MmsStar star = build_star(cfg);
      MmsOutcome mo;
      timed("solve", [&] {
        mo = mms_convergence([&](const Grid& g) { return build_problem_on(cfg, g); }, star,
                             mms_levels(cfg));
      });
      nlohmann::json levels = nlohmann::json::array();
      for (const MmsLevel& level : mo.levels)
        levels.push_back({{"counts", level.counts},
                          {"h", level.h_max},
                          {"error", level.error},
                          {"iterations", level.iterations}});
      manifest["mms"] = {{"levels", levels}, {"orders", mo.orders}};
      timed("outputs", [&] {
        write_mms_csv(out_path("mms.csv"), mo);
        note("mms.csv");
      });
      manifest["ok"] = true;
    } else if (cfg.mode == "props") {
      PropsOutcome po;
      timed("properties", [&] { po = run_property_suites(cfg.seed); });
      nlohmann::json rows = nlohmann::json::array();
      for (const PropRow& row : po.rows) {
        rows.push_back({{"name", row.name},
                        {"worst", row.worst},
                        {"limit", row.limit},
                        {"pass", row.pass}});
        std::cout << (row.pass ? "PASS  " : "FAIL  ") << row.name
                  << "  (worst " << format_double(row.worst) << ", limit "
                  << format_double(row.limit) << ")\n";
      }
      manifest["props"] = rows;
      timed("outputs", [&] {
        write_props_csv(out_path("props.csv"), po);
        note("props.csv");
      });
      manifest["ok"] = po.all_pass;
      if (!po.all_pass) throw internal_error("the property suite reported failures");
    } else {
      throw config_error("unknown mode '" + cfg.mode + "'");
    }
  } catch (const Error& e) {
    manifest["ok"] = false;
    manifest["failed_stage"] = stage;
    manifest["error"] = {{"class", std::string(class_name(e.cls()))},
                         {"message", std::string(e.what())},
                         {"exit_code", exit_code(e.cls())}};
    flush_manifest();
    throw;
  }
  flush_manifest();
  return manifest;
}

}  // namespace ncelab
