#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ncelab/grid.hpp"

namespace ncelab {

enum class SolveKind { LocalMin, MountainPass, Newton, Bracketed, Linear };

inline const char* to_string(SolveKind k) {
  switch (k) {
    case SolveKind::LocalMin: return "local-min";
    case SolveKind::MountainPass: return "mountain-pass";
    case SolveKind::Newton: return "newton";
    case SolveKind::Bracketed: return "bracketed";
    case SolveKind::Linear: return "linear";
  }
  return "unknown";
}

struct IterationRecord {
  int iteration = 0;
  double residual = 0.0;  // scaled residual norm
  double energy = 0.0;
  double cerami = 0.0;    // (1 + ||v||) * residual
};

struct SolveResult {
  explicit SolveResult(ScalarField field, SolveKind k) : v(std::move(field)), kind(k) {}

  ScalarField v;                  // the variable the solver iterated on
  std::optional<ScalarField> u;   // original variable, present once certified
  SolveKind kind;
  int iterations = 0;
  double residual_norm = 0.0;
  double energy = 0.0;
  double min_v = 0.0;
  bool converged = false;
  bool lower_bound_ok = false;    // min_v > -1/(2 mu)
  bool bracket_ok = false;        // u_lower <= u <= u_upper nodewise
  bool projection_active = false; // ball constraint active at termination
  bool jacobian_regularized = false;
  std::vector<IterationRecord> log;
  std::vector<std::vector<double>> path_energy;  // mountain pass: profile per sweep
};

}  // namespace ncelab
