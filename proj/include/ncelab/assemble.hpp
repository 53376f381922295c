#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <vector>

#include "ncelab/errors.hpp"
#include "ncelab/grid.hpp"

namespace ncelab {

inline Eigen::VectorXd to_vector(const ScalarField& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

inline ScalarField from_vector(const Grid& g, const Eigen::VectorXd& x) {
  if (x.size() != g.size()) throw internal_error("vector length does not match the grid");
  ScalarField out(g);
  Eigen::Map<Eigen::VectorXd>(out.data(), out.size()) = x;
  return out;
}

/// Sparse triplets of the operator applied by apply_operator, entry for
/// entry. Row i holds the stencil of -div(A grad .) at node i.
inline std::vector<Eigen::Triplet<double>> operator_triplets(const MatrixField& A) {
  const Grid& g = A.grid();
  const int N = g.dim();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(g.size()) * (2 * N + 1 + 4 * N * (N - 1) / 2));
  std::array<int, 3> m{0, 0, 0};
  for (std::int64_t i = 0; i < g.size(); ++i) {
    for (int d = 0; d < N; ++d) {
      const double h2 = g.spacing(d) * g.spacing(d);
      const std::int64_t s = g.stride(d);
      const double add = A.entry(i, d, d);
      if (m[d] + 1 < g.count(d)) {
        const double a_face = 0.5 * (add + A.entry(i + s, d, d));
        trips.emplace_back(i, i + s, -a_face / h2);
        trips.emplace_back(i, i, a_face / h2);
      } else {
        trips.emplace_back(i, i, add / h2);
      }
      if (m[d] > 0) {
        const double a_face = 0.5 * (add + A.entry(i - s, d, d));
        trips.emplace_back(i, i - s, -a_face / h2);
        trips.emplace_back(i, i, a_face / h2);
      } else {
        trips.emplace_back(i, i, add / h2);
      }
    }
    for (int d = 0; d < N; ++d) {
      for (int e = 0; e < N; ++e) {
        if (d == e) continue;
        const std::int64_t sd = g.stride(d);
        const std::int64_t se = g.stride(e);
        const double c = 1.0 / (4.0 * g.spacing(d) * g.spacing(e));
        if (m[d] + 1 < g.count(d)) {
          const std::int64_t j = i + sd;
          const double ade = A.entry(j, d, e);
          if (m[e] + 1 < g.count(e)) trips.emplace_back(i, j + se, -ade * c);
          if (m[e] > 0) trips.emplace_back(i, j - se, ade * c);
        }
        if (m[d] > 0) {
          const std::int64_t j = i - sd;
          const double ade = A.entry(j, d, e);
          if (m[e] + 1 < g.count(e)) trips.emplace_back(i, j + se, ade * c);
          if (m[e] > 0) trips.emplace_back(i, j - se, -ade * c);
        }
      }
    }
    g.advance(m);
  }
  return trips;
}

inline Eigen::SparseMatrix<double> assemble_operator(const MatrixField& A) {
  const auto n = A.grid().size();
  Eigen::SparseMatrix<double> L(n, n);
  auto trips = operator_triplets(A);
  L.setFromTriplets(trips.begin(), trips.end());
  return L;
}

/// L_A - diag(w).
inline Eigen::SparseMatrix<double> assemble_shifted(const MatrixField& A, const ScalarField& w) {
  require_same_grid(A.grid(), w.grid());
  const auto n = A.grid().size();
  auto trips = operator_triplets(A);
  for (std::int64_t i = 0; i < n; ++i) trips.emplace_back(i, i, -w[i]);
  Eigen::SparseMatrix<double> L(n, n);
  L.setFromTriplets(trips.begin(), trips.end());
  return L;
}

/// Cached Cholesky-type factorization of the SPD operator L_A; maps nodal
/// residuals to descent directions in the discrete H1 metric.
class SobolevSolver {
 public:
  explicit SobolevSolver(const MatrixField& A) : grid_(A.grid()) {
    auto L = assemble_operator(A);
    ldlt_.compute(L);
    if (ldlt_.info() != Eigen::Success)
      throw internal_error("factorization of the elliptic operator failed");
  }

  ScalarField solve(const ScalarField& rhs) const {
    require_same_grid(grid_, rhs.grid());
    Eigen::VectorXd x = ldlt_.solve(to_vector(rhs));
    if (ldlt_.info() != Eigen::Success)
      throw internal_error("triangular solve with the elliptic operator failed");
    return from_vector(grid_, x);
  }

 private:
  Grid grid_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

/// Sparse LU with the +1e-12 diagonal regularization fallback for (nearly)
/// singular systems. regularized() reports whether the fallback fired.
class LuSolver {
 public:
  explicit LuSolver(Eigen::SparseMatrix<double> M) : M_(std::move(M)) {
    M_.makeCompressed();
    lu_.compute(M_);
    if (lu_.info() != Eigen::Success) {
      double scale = 1e-12;
      for (int attempt = 0; attempt < 4 && lu_.info() != Eigen::Success; ++attempt) {
        Eigen::SparseMatrix<double> R = M_;
        for (std::int64_t i = 0; i < R.rows(); ++i) R.coeffRef(i, i) += scale;
        R.makeCompressed();
        lu_.compute(R);
        scale *= 1e3;
        regularized_ = true;
      }
      if (lu_.info() != Eigen::Success)
        throw solver_error("sparse LU failed even after diagonal regularization");
    }
  }

  bool regularized() const { return regularized_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = lu_.solve(b);
    if (lu_.info() != Eigen::Success) throw solver_error("sparse LU backsolve failed");
    return x;
  }

 private:
  Eigen::SparseMatrix<double> M_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  bool regularized_ = false;
};

}  // namespace ncelab
