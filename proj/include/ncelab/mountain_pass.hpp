#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "ncelab/assemble.hpp"
#include "ncelab/energy.hpp"
#include "ncelab/newton.hpp"
#include "ncelab/problem.hpp"
#include "ncelab/solve_result.hpp"

namespace ncelab {

/// Saddle search on the segment path from 0 to v0: each sweep relaxes the
/// maximal-energy node along the H1 descent direction, then re-parameterizes
/// the path to uniform arclength in the A-weighted H1 norm unless that would
/// raise the path maximum. Finishes with a Newton polish from the top node.
inline SolveResult mountain_pass(const ProblemData& data, const ScalarField& v0,
                                 int path_nodes = 21, double tol = 1e-9,
                                 int max_sweeps = 20000, double newton_tol = 1e-12) {
  require_same_grid(data.grid(), v0.grid());
  if (path_nodes < 3) throw config_error("mountain pass path needs at least 3 nodes");
  const int P = path_nodes;
  const SobolevSolver fac(data.A());

  std::vector<ScalarField> path;
  path.reserve(static_cast<std::size_t>(P));
  for (int j = 0; j < P; ++j) {
    ScalarField node(data.grid());
    const double t = static_cast<double>(j) / (P - 1);
    for (std::int64_t i = 0; i < node.size(); ++i) node[i] = t * v0[i];
    path.push_back(std::move(node));
  }
  std::vector<double> energies(static_cast<std::size_t>(P));
  for (int j = 0; j < P; ++j) energies[static_cast<std::size_t>(j)] = energy_value(path[static_cast<std::size_t>(j)], data);

  const auto argmax = [&energies, P]() {
    int best = 0;
    for (int j = 1; j < P; ++j)
      if (energies[static_cast<std::size_t>(j)] > energies[static_cast<std::size_t>(best)]) best = j;
    return best;
  };

  SolveResult res(path[0], SolveKind::MountainPass);
  int jmax = argmax();
  int sweeps_done = 0;
  double best_rn = std::numeric_limits<double>::infinity();
  double best_max = std::numeric_limits<double>::infinity();
  int stalled = 0;
  int polish_stride = 25;
  int next_polish = polish_stride;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    jmax = argmax();
    if (jmax == 0 || jmax == P - 1)
      throw geometry_error("mountain pass path collapsed: the maximal energy sits at an "
                           "endpoint of the path");
    res.path_energy.push_back(energies);
    const ScalarField& top = path[static_cast<std::size_t>(jmax)];
    ScalarField r = energy_gradient(top, data);
    const double top_norm = h1_norm(data.A(), top);
    const double rn = scaled_residual_norm(r, top_norm);
    sweeps_done = sweep;
    res.residual_norm = rn;
    res.log.push_back({sweep, rn, energies[static_cast<std::size_t>(jmax)], (1.0 + top_norm) * rn});
    if (rn <= tol) {
      res.converged = true;
      break;
    }
    bool improved = false;
    if (rn < 0.999 * best_rn) {
      best_rn = rn;
      improved = true;
    }
    const double cur_top = energies[static_cast<std::size_t>(jmax)];
    if (!std::isfinite(best_max) || cur_top < best_max - 1e-3 * std::abs(best_max)) {
      best_max = cur_top;
      improved = true;
    }
    if (improved) {
      stalled = 0;
    } else if (++stalled >= 150) {
      break;  // the sweep dynamics have flattened out; the polish decides convergence
    }

    // Periodic polish attempt: the top node often enters the Newton basin of
    // the saddle long before the sweep dynamics settle, so probe it early and
    // back off the stride when the probe fails.
    if (sweep >= next_polish) {
      SolveResult trial = newton_transformed(data, top, newton_tol, 40);
      if (trial.converged && trial.energy > 0.0 && trial.residual_norm <= tol) {
        for (IterationRecord rec : trial.log) {
          rec.iteration += sweep;
          res.log.push_back(rec);
        }
        res.v = std::move(trial.v);
        res.residual_norm = trial.residual_norm;
        res.converged = true;
        res.jacobian_regularized = trial.jacobian_regularized;
        res.iterations = sweep;
        res.energy = energy_value(res.v, data);
        res.min_v = min_value(res.v);
        return res;
      }
      polish_stride = std::min(polish_stride * 2, 800);
      next_polish = sweep + polish_stride;
    }

    ScalarField dir = fac.solve(r);
    for (std::int64_t i = 0; i < dir.size(); ++i) dir[i] = -dir[i];
    const double slope = dot_quad(r, dir);
    if (!(slope < 0.0)) break;

    // Cap the first trial step at half the local node spacing so the top
    // node walks down the ridge instead of vaulting across it into the
    // negative valley; near the saddle dir shrinks and the cap is inactive.
    const double dir_norm = h1_norm(data.A(), dir);
    const double spacing =
        std::min(h1_norm(data.A(), path[static_cast<std::size_t>(jmax)] -
                                       path[static_cast<std::size_t>(jmax - 1)]),
                 h1_norm(data.A(), path[static_cast<std::size_t>(jmax + 1)] -
                                       path[static_cast<std::size_t>(jmax)]));
    double alpha = 1.0;
    if (dir_norm > 0.0 && spacing > 0.0) alpha = std::min(1.0, 0.5 * spacing / dir_norm);
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      ScalarField cand = add_scaled(top, alpha, dir);
      const double cand_energy = energy_value(cand, data);
      if (cand_energy <= energies[static_cast<std::size_t>(jmax)] + 1e-4 * alpha * slope) {
        path[static_cast<std::size_t>(jmax)] = std::move(cand);
        energies[static_cast<std::size_t>(jmax)] = cand_energy;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // descent floor; the polish decides convergence

    std::vector<double> arc(static_cast<std::size_t>(P), 0.0);
    for (int j = 1; j < P; ++j)
      arc[static_cast<std::size_t>(j)] = arc[static_cast<std::size_t>(j - 1)] +
                                         h1_norm(data.A(), path[static_cast<std::size_t>(j)] -
                                                               path[static_cast<std::size_t>(j - 1)]);
    const double total = arc[static_cast<std::size_t>(P - 1)];
    if (total > 0.0) {
      std::vector<ScalarField> cand_path;
      cand_path.reserve(static_cast<std::size_t>(P));
      cand_path.push_back(path[0]);
      int seg = 0;
      for (int j = 1; j < P - 1; ++j) {
        const double target = total * j / (P - 1);
        while (seg < P - 2 && arc[static_cast<std::size_t>(seg + 1)] < target) ++seg;
        const double len = arc[static_cast<std::size_t>(seg + 1)] - arc[static_cast<std::size_t>(seg)];
        const double theta = len > 0.0 ? (target - arc[static_cast<std::size_t>(seg)]) / len : 0.0;
        const ScalarField& lo = path[static_cast<std::size_t>(seg)];
        const ScalarField& hi = path[static_cast<std::size_t>(seg + 1)];
        ScalarField node(data.grid());
        for (std::int64_t i = 0; i < node.size(); ++i) node[i] = (1.0 - theta) * lo[i] + theta * hi[i];
        cand_path.push_back(std::move(node));
      }
      cand_path.push_back(path[static_cast<std::size_t>(P - 1)]);

      std::vector<double> cand_energies(static_cast<std::size_t>(P));
      cand_energies[0] = energies[0];
      cand_energies[static_cast<std::size_t>(P - 1)] = energies[static_cast<std::size_t>(P - 1)];
      double cand_max = std::max(cand_energies[0], cand_energies[static_cast<std::size_t>(P - 1)]);
      for (int j = 1; j < P - 1; ++j) {
        cand_energies[static_cast<std::size_t>(j)] = energy_value(cand_path[static_cast<std::size_t>(j)], data);
        cand_max = std::max(cand_max, cand_energies[static_cast<std::size_t>(j)]);
      }
      const double cur_max = energies[static_cast<std::size_t>(argmax())];
      if (cand_max <= cur_max + 1e-12 * (1.0 + std::abs(cur_max))) {
        path = std::move(cand_path);
        energies = std::move(cand_energies);
      }
    }
  }

  jmax = argmax();
  res.v = path[static_cast<std::size_t>(jmax)];
  res.iterations = sweeps_done;

  SolveResult polished = newton_transformed(data, res.v, newton_tol);
  if (polished.energy > 0.0) {
    for (IterationRecord rec : polished.log) {
      rec.iteration += sweeps_done;
      res.log.push_back(rec);
    }
    res.v = std::move(polished.v);
    res.residual_norm = polished.residual_norm;
    res.converged = polished.converged || polished.residual_norm <= tol;
    res.jacobian_regularized = polished.jacobian_regularized;
  }

  res.energy = energy_value(res.v, data);
  res.min_v = min_value(res.v);
  if (!(res.energy > 0.0))
    throw solver_error("mountain pass ended at nonpositive energy (I = " +
                       format_double(res.energy) + "): the saddle was lost");
  return res;
}

}  // namespace ncelab
