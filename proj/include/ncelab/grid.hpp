#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "ncelab/errors.hpp"
#include "ncelab/util.hpp"

namespace ncelab {

/// Tensor-product box grid over (0,L_1) x ... x (0,L_N) with homogeneous
/// Dirichlet boundary. Only interior nodes are stored: axis d carries
/// count(d) >= 2 nodes at spacing h_d, so L_d = (count(d)+1) * h_d and the
/// node with multi-index m sits at x_d = (m_d + 1) * h_d. Flattening is
/// row-major with the last axis fastest.
class Grid {
 public:
  Grid(std::vector<int> counts, std::vector<double> spacings)
      : counts_(std::move(counts)), h_(std::move(spacings)) {
    if (counts_.empty() || counts_.size() > 3)
      throw config_error("grid dimension must be 1, 2, or 3");
    if (h_.size() != counts_.size())
      throw config_error("grid counts and spacings have different lengths");
    for (std::size_t d = 0; d < counts_.size(); ++d) {
      if (counts_[d] < 2)
        throw config_error("grid needs at least 2 interior nodes per axis");
      if (!(h_[d] > 0.0) || !std::isfinite(h_[d]))
        throw config_error("grid spacing must be a positive finite number");
    }
    strides_.assign(counts_.size(), 1);
    for (int d = static_cast<int>(counts_.size()) - 2; d >= 0; --d)
      strides_[d] = strides_[d + 1] * counts_[d + 1];
  }

  static Grid from_lengths(std::vector<int> counts, std::vector<double> lengths) {
    if (lengths.size() != counts.size())
      throw config_error("grid counts and lengths have different lengths");
    std::vector<double> h(counts.size());
    for (std::size_t d = 0; d < counts.size(); ++d) {
      if (counts[d] < 2)
        throw config_error("grid needs at least 2 interior nodes per axis");
      if (!(lengths[d] > 0.0) || !std::isfinite(lengths[d]))
        throw config_error("grid box length must be a positive finite number");
      h[d] = lengths[d] / (counts[d] + 1);
    }
    return Grid(std::move(counts), std::move(h));
  }

  int dim() const { return static_cast<int>(counts_.size()); }
  int count(int d) const { return counts_[d]; }
  double spacing(int d) const { return h_[d]; }
  double length(int d) const { return h_[d] * (counts_[d] + 1); }
  std::int64_t stride(int d) const { return strides_[d]; }

  std::int64_t size() const {
    std::int64_t n = 1;
    for (int c : counts_) n *= c;
    return n;
  }

  double cell_volume() const {
    double v = 1.0;
    for (double h : h_) v *= h;
    return v;
  }

  std::int64_t index(const std::array<int, 3>& m) const {
    std::int64_t idx = 0;
    for (int d = 0; d < dim(); ++d) idx += m[d] * strides_[d];
    return idx;
  }

  std::array<int, 3> multi(std::int64_t idx) const {
    std::array<int, 3> m{0, 0, 0};
    for (int d = 0; d < dim(); ++d) {
      m[d] = static_cast<int>(idx / strides_[d]);
      idx -= m[d] * strides_[d];
    }
    return m;
  }

  /// Advances a multi-index in flat order (last axis fastest).
  void advance(std::array<int, 3>& m) const {
    for (int d = dim() - 1; d >= 0; --d) {
      if (++m[d] < counts_[d]) return;
      m[d] = 0;
    }
  }

  double coord(const std::array<int, 3>& m, int d) const { return (m[d] + 1) * h_[d]; }

  std::array<double, 3> coords(const std::array<int, 3>& m) const {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int d = 0; d < dim(); ++d) x[d] = coord(m, d);
    return x;
  }

  bool operator==(const Grid& o) const { return counts_ == o.counts_ && h_ == o.h_; }
  bool operator!=(const Grid& o) const { return !(*this == o); }

 private:
  std::vector<int> counts_;
  std::vector<double> h_;
  std::vector<std::int64_t> strides_;
};

/// Nodal values of a scalar function at the interior grid nodes.
class ScalarField {
 public:
  explicit ScalarField(Grid g) : grid_(std::move(g)), v_(grid_.size(), 0.0) {}

  ScalarField(Grid g, std::vector<double> values) : grid_(std::move(g)), v_(std::move(values)) {
    if (static_cast<std::int64_t>(v_.size()) != grid_.size())
      throw config_error("scalar field value count does not match the grid");
  }

  template <class F>
  static ScalarField sample(const Grid& g, F&& f) {
    ScalarField out(g);
    std::array<int, 3> m{0, 0, 0};
    for (std::int64_t i = 0; i < out.size(); ++i) {
      out[i] = f(g.coords(m));
      g.advance(m);
    }
    return out;
  }

  const Grid& grid() const { return grid_; }
  std::int64_t size() const { return static_cast<std::int64_t>(v_.size()); }
  double operator[](std::int64_t i) const { return v_[i]; }
  double& operator[](std::int64_t i) { return v_[i]; }
  const double* data() const { return v_.data(); }
  double* data() { return v_.data(); }
  const std::vector<double>& values() const { return v_; }

 private:
  Grid grid_;
  std::vector<double> v_;
};

namespace detail {

/// Eigenvalue range of a symmetric matrix up to 3x3 (trigonometric method for
/// the 3x3 case; exact formulas below). Deterministic, no external solver.
inline std::pair<double, double> sym_eig_range(const double a[3][3], int n) {
  if (n == 1) return {a[0][0], a[0][0]};
  if (n == 2) {
    const double tr = a[0][0] + a[1][1];
    const double d = a[0][0] - a[1][1];
    const double rad = std::sqrt(d * d + 4.0 * a[0][1] * a[0][1]);
    return {(tr - rad) / 2.0, (tr + rad) / 2.0};
  }
  const double p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
  if (p1 == 0.0) {
    double lo = std::min({a[0][0], a[1][1], a[2][2]});
    double hi = std::max({a[0][0], a[1][1], a[2][2]});
    return {lo, hi};
  }
  const double q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
  const double p2 = (a[0][0] - q) * (a[0][0] - q) + (a[1][1] - q) * (a[1][1] - q) +
                    (a[2][2] - q) * (a[2][2] - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  double b[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) b[i][j] = (a[i][j] - (i == j ? q : 0.0)) / p;
  const double detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) -
                      b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                      b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
  double r = detb / 2.0;
  r = std::min(1.0, std::max(-1.0, r));
  constexpr double two_pi_third = 2.0943951023931953;
  const double phi = std::acos(r) / 3.0;
  const double hi = q + 2.0 * p * std::cos(phi);
  const double lo = q + 2.0 * p * std::cos(phi + two_pi_third);
  return {lo, hi};
}

}  // namespace detail

/// Nodal values of a symmetric coefficient matrix A(x), stored as the six
/// independent entries. Uniform ellipticity (smallest nodal eigenvalue > 0)
/// is verified at construction; the measured eigenvalue range is kept as the
/// bounds [lambda, Lambda].
class MatrixField {
 public:
  static MatrixField identity(const Grid& g) {
    return diagonal_constant(g, std::vector<double>(g.dim(), 1.0));
  }

  static MatrixField diagonal_constant(const Grid& g, const std::vector<double>& diag) {
    if (static_cast<int>(diag.size()) != g.dim())
      throw config_error("diagonal coefficient needs one entry per axis");
    MatrixField out(g);
    std::array<double, 6> e{0, 0, 0, 0, 0, 0};
    for (int d = 0; d < g.dim(); ++d) e[d] = diag[d];
    for (auto& node : out.a_) node = e;
    out.measure_bounds();
    return out;
  }

  static MatrixField constant(const Grid& g, const std::vector<std::vector<double>>& mat) {
    const int n = g.dim();
    if (static_cast<int>(mat.size()) != n)
      throw config_error("constant coefficient matrix has the wrong size");
    for (const auto& row : mat)
      if (static_cast<int>(row.size()) != n)
        throw config_error("constant coefficient matrix has the wrong size");
    for (int d = 0; d < n; ++d)
      for (int e = d + 1; e < n; ++e)
        if (mat[d][e] != mat[e][d])
          throw config_error("coefficient matrix must be symmetric");
    MatrixField out(g);
    std::array<double, 6> e{0, 0, 0, 0, 0, 0};
    for (int d = 0; d < n; ++d) e[d] = mat[d][d];
    if (n >= 2) e[3] = mat[0][1];
    if (n >= 3) {
      e[4] = mat[0][2];
      e[5] = mat[1][2];
    }
    for (auto& node : out.a_) node = e;
    out.measure_bounds();
    return out;
  }

  /// f receives the node position and fills a symmetric 3x3 (only the leading
  /// dim x dim block is used).
  template <class F>
  static MatrixField sample(const Grid& g, F&& f) {
    MatrixField out(g);
    std::array<int, 3> m{0, 0, 0};
    const int n = g.dim();
    for (std::int64_t i = 0; i < g.size(); ++i) {
      double mat[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
      f(g.coords(m), mat);
      for (int d = 0; d < n; ++d)
        for (int e = d + 1; e < n; ++e)
          if (mat[d][e] != mat[e][d])
            throw config_error("coefficient matrix must be symmetric at every node");
      auto& node = out.a_[i];
      for (int d = 0; d < n; ++d) node[d] = mat[d][d];
      if (n >= 2) node[3] = mat[0][1];
      if (n >= 3) {
        node[4] = mat[0][2];
        node[5] = mat[1][2];
      }
      g.advance(m);
    }
    out.measure_bounds();
    return out;
  }

  const Grid& grid() const { return grid_; }

  /// Entry A_{de}(x_i); d, e in [0, dim).
  double entry(std::int64_t i, int d, int e) const {
    if (d == e) return a_[i][d];
    return a_[i][2 + d + e];  // (0,1)->3, (0,2)->4, (1,2)->5
  }

  double lambda_lower() const { return lambda_lower_; }
  double lambda_upper() const { return lambda_upper_; }

  /// Verifies user-declared ellipticity bounds against the measured nodal
  /// eigenvalue range.
  void check_declared_bounds(double lo, double hi) const {
    if (!(lo > 0.0) || !(hi >= lo))
      throw config_error("declared ellipticity bounds must satisfy 0 < lambda <= Lambda");
    const double slack = 1e-12 * std::max(1.0, std::abs(hi));
    if (lambda_lower_ < lo - slack || lambda_upper_ > hi + slack)
      throw config_error("declared ellipticity bounds do not contain the nodal eigenvalues");
  }

 private:
  explicit MatrixField(const Grid& g) : grid_(g), a_(g.size(), {0, 0, 0, 0, 0, 0}) {}

  void measure_bounds() {
    const int n = grid_.dim();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < grid_.size(); ++i) {
      double mat[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
      for (int d = 0; d < n; ++d) mat[d][d] = a_[i][d];
      if (n >= 2) mat[0][1] = mat[1][0] = a_[i][3];
      if (n >= 3) {
        mat[0][2] = mat[2][0] = a_[i][4];
        mat[1][2] = mat[2][1] = a_[i][5];
      }
      auto [l, u] = detail::sym_eig_range(mat, n);
      lo = std::min(lo, l);
      hi = std::max(hi, u);
    }
    if (!(lo > 0.0))
      throw config_error("coefficient matrix is not uniformly elliptic (smallest nodal eigenvalue <= 0)");
    lambda_lower_ = lo;
    lambda_upper_ = hi;
  }

  Grid grid_;
  std::vector<std::array<double, 6>> a_;
  double lambda_lower_ = 0.0;
  double lambda_upper_ = 0.0;
};

inline void require_same_grid(const Grid& a, const Grid& b) {
  if (a != b) throw config_error("fields are defined on different grids");
}

/// Second-order stencil for -div(A grad v) with zero Dirichlet data.
/// Diagonal entries use flux form with arithmetic face averages (the nodal
/// value itself at boundary faces); off-diagonal entries use nested centered
/// differences. With symmetric A the resulting matrix is symmetric.
inline ScalarField apply_operator(const MatrixField& A, const ScalarField& v) {
  require_same_grid(A.grid(), v.grid());
  const Grid& g = v.grid();
  const int N = g.dim();
  ScalarField out(g);

  parallel_nodes(g.size(), [&](std::int64_t begin, std::int64_t end) {
    std::array<int, 3> m = g.multi(begin);
    for (std::int64_t i = begin; i < end; ++i) {
      double acc = 0.0;
      const double vi = v[i];
      for (int d = 0; d < N; ++d) {
        const double h = g.spacing(d);
        const std::int64_t s = g.stride(d);
        const double add = A.entry(i, d, d);
        double flux_right, flux_left;
        if (m[d] + 1 < g.count(d)) {
          const double a_face = 0.5 * (add + A.entry(i + s, d, d));
          flux_right = a_face * (v[i + s] - vi) / h;
        } else {
          flux_right = add * (0.0 - vi) / h;
        }
        if (m[d] > 0) {
          const double a_face = 0.5 * (add + A.entry(i - s, d, d));
          flux_left = a_face * (vi - v[i - s]) / h;
        } else {
          flux_left = add * (vi - 0.0) / h;
        }
        acc -= (flux_right - flux_left) / h;
      }
      // Cross terms: -sum_{d != e} D0_d (A_de D0_e v). When the d-neighbor is
      // a boundary node both of its e-neighbors are boundary nodes too, so the
      // whole term vanishes and no A value outside the interior is needed.
      for (int d = 0; d < N; ++d) {
        for (int e = 0; e < N; ++e) {
          if (d == e) continue;
          const std::int64_t sd = g.stride(d);
          const std::int64_t se = g.stride(e);
          const double he = g.spacing(e);
          double wp = 0.0, wm = 0.0;
          if (m[d] + 1 < g.count(d)) {
            const std::int64_t j = i + sd;
            const double vpe = (m[e] + 1 < g.count(e)) ? v[j + se] : 0.0;
            const double vme = (m[e] > 0) ? v[j - se] : 0.0;
            wp = A.entry(j, d, e) * (vpe - vme) / (2.0 * he);
          }
          if (m[d] > 0) {
            const std::int64_t j = i - sd;
            const double vpe = (m[e] + 1 < g.count(e)) ? v[j + se] : 0.0;
            const double vme = (m[e] > 0) ? v[j - se] : 0.0;
            wm = A.entry(j, d, e) * (vpe - vme) / (2.0 * he);
          }
          acc -= (wp - wm) / (2.0 * g.spacing(d));
        }
      }
      out[i] = acc;
      g.advance(m);
    }
  });
  return out;
}

/// Nodal quadratic form <A grad v, grad v> with centered differences and
/// ghost-zero values at nodes adjacent to the boundary.
inline ScalarField gradient_sq(const MatrixField& A, const ScalarField& v) {
  require_same_grid(A.grid(), v.grid());
  const Grid& g = v.grid();
  const int N = g.dim();
  ScalarField out(g);

  parallel_nodes(g.size(), [&](std::int64_t begin, std::int64_t end) {
    std::array<int, 3> m = g.multi(begin);
    for (std::int64_t i = begin; i < end; ++i) {
      double grad[3] = {0.0, 0.0, 0.0};
      for (int d = 0; d < N; ++d) {
        const std::int64_t s = g.stride(d);
        const double vp = (m[d] + 1 < g.count(d)) ? v[i + s] : 0.0;
        const double vm = (m[d] > 0) ? v[i - s] : 0.0;
        grad[d] = (vp - vm) / (2.0 * g.spacing(d));
      }
      double q = 0.0;
      for (int d = 0; d < N; ++d)
        for (int e = 0; e < N; ++e) q += A.entry(i, d, e) * grad[d] * grad[e];
      out[i] = q;
      g.advance(m);
    }
  });
  return out;
}

/// Nodal centered gradient (ghost-zero at the boundary), one component.
inline ScalarField gradient_component(const ScalarField& v, int d) {
  const Grid& g = v.grid();
  ScalarField out(g);
  std::array<int, 3> m{0, 0, 0};
  const std::int64_t s = g.stride(d);
  for (std::int64_t i = 0; i < g.size(); ++i) {
    const double vp = (m[d] + 1 < g.count(d)) ? v[i + s] : 0.0;
    const double vm = (m[d] > 0) ? v[i - s] : 0.0;
    out[i] = (vp - vm) / (2.0 * g.spacing(d));
    g.advance(m);
  }
  return out;
}

/// Cell-volume quadrature: integral of v over the box.
inline double integrate(const ScalarField& v) {
  double s = 0.0;
  for (std::int64_t i = 0; i < v.size(); ++i) s += v[i];
  return s * v.grid().cell_volume();
}

/// Quadrature pairing: integral of u * v.
inline double dot_quad(const ScalarField& u, const ScalarField& v) {
  require_same_grid(u.grid(), v.grid());
  double s = 0.0;
  for (std::int64_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s * u.grid().cell_volume();
}

/// Discrete L^p norm under the same quadrature, p >= 1.
inline double lp_norm(const ScalarField& v, double p) {
  if (!(p >= 1.0)) throw config_error("lp_norm requires p >= 1");
  double s = 0.0;
  for (std::int64_t i = 0; i < v.size(); ++i) s += std::pow(std::abs(v[i]), p);
  return std::pow(s * v.grid().cell_volume(), 1.0 / p);
}

inline double linf_norm(const ScalarField& v) {
  double s = 0.0;
  for (std::int64_t i = 0; i < v.size(); ++i) s = std::max(s, std::abs(v[i]));
  return s;
}

inline double min_value(const ScalarField& v) {
  double s = std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < v.size(); ++i) s = std::min(s, v[i]);
  return s;
}

inline double max_value(const ScalarField& v) {
  double s = -std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < v.size(); ++i) s = std::max(s, v[i]);
  return s;
}

/// Discrete Dirichlet energy: integral of <A grad v, grad v> built from face
/// differences (diagonal part) plus centered cross terms. By summation by
/// parts this equals dot_quad(apply_operator(A, v), v) up to roundoff.
inline double h1_seminorm_sq(const MatrixField& A, const ScalarField& v) {
  require_same_grid(A.grid(), v.grid());
  const Grid& g = v.grid();
  const int N = g.dim();
  double acc = 0.0;
  std::array<int, 3> m{0, 0, 0};
  for (std::int64_t i = 0; i < g.size(); ++i) {
    const double vi = v[i];
    for (int d = 0; d < N; ++d) {
      const double h = g.spacing(d);
      const std::int64_t s = g.stride(d);
      const double add = A.entry(i, d, d);
      // Face between i and its right neighbor (or the right boundary).
      if (m[d] + 1 < g.count(d)) {
        const double a_face = 0.5 * (add + A.entry(i + s, d, d));
        const double diff = (v[i + s] - vi) / h;
        acc += a_face * diff * diff;
      } else {
        const double diff = (0.0 - vi) / h;
        acc += add * diff * diff;
      }
      // Left boundary face, visited only by the first node of the axis.
      if (m[d] == 0) {
        const double diff = (vi - 0.0) / h;
        acc += add * diff * diff;
      }
    }
    if (N > 1) {
      double grad[3] = {0.0, 0.0, 0.0};
      for (int d = 0; d < N; ++d) {
        const std::int64_t s = g.stride(d);
        const double vp = (m[d] + 1 < g.count(d)) ? v[i + s] : 0.0;
        const double vm = (m[d] > 0) ? v[i - s] : 0.0;
        grad[d] = (vp - vm) / (2.0 * g.spacing(d));
      }
      for (int d = 0; d < N; ++d)
        for (int e = 0; e < N; ++e)
          if (d != e) acc += A.entry(i, d, e) * grad[d] * grad[e];
    }
    g.advance(m);
  }
  return acc * g.cell_volume();
}

inline double h1_norm(const MatrixField& A, const ScalarField& v) {
  return std::sqrt(std::max(0.0, h1_seminorm_sq(A, v)));
}

// Small vector-space helpers used throughout the solvers.

inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid());
  ScalarField out(a.grid());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid());
  ScalarField out(a.grid());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline ScalarField operator*(double c, const ScalarField& a) {
  ScalarField out(a.grid());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = c * a[i];
  return out;
}

inline ScalarField operator-(const ScalarField& a) { return -1.0 * a; }

/// out = a + c * b
inline ScalarField add_scaled(const ScalarField& a, double c, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid());
  ScalarField out(a.grid());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] + c * b[i];
  return out;
}

}  // namespace ncelab
