#pragma once

#include <array>
#include <cmath>
#include <string>

#include "ncelab/errors.hpp"
#include "ncelab/field_io.hpp"
#include "ncelab/grid.hpp"

namespace ncelab {

/// Closed library of analytic coefficient shapes, plus file input. No
/// expression parser: the experiments need only constants, bumps, and sine
/// products.
struct ShapeSpec {
  enum class Kind { constant, gaussian_bump, sine_product, file };
  Kind kind = Kind::constant;
  double value = 0.0;                         // constant
  std::array<double, 3> center{0.0, 0.0, 0.0};  // gaussian bump
  double width = 0.0;                         // gaussian bump
  double amplitude = 0.0;                     // gaussian bump and sine product
  double offset = 0.0;                        // added to bump and sine values
  std::string path;                           // file
};

inline double shape_value(const ShapeSpec& s, const std::array<double, 3>& x, const Grid& g) {
  switch (s.kind) {
    case ShapeSpec::Kind::constant:
      return s.value;
    case ShapeSpec::Kind::gaussian_bump: {
      double r2 = 0.0;
      for (int d = 0; d < g.dim(); ++d) {
        const double dx = x[d] - s.center[d];
        r2 += dx * dx;
      }
      return s.offset + s.amplitude * std::exp(-r2 / (2.0 * s.width * s.width));
    }
    case ShapeSpec::Kind::sine_product: {
      double v = s.amplitude;
      constexpr double shape_pi = 3.141592653589793;
      for (int d = 0; d < g.dim(); ++d) v *= std::sin(shape_pi * x[d] / g.length(d));
      return s.offset + v;
    }
    case ShapeSpec::Kind::file:
      break;
  }
  throw internal_error("file-backed shapes are sampled through sample_shape");
}

inline ScalarField sample_shape(const Grid& g, const ShapeSpec& s) {
  if (s.kind == ShapeSpec::Kind::file) {
    ScalarField loaded = read_field(s.path);
    if (loaded.grid() != g)
      throw config_error("field file '" + s.path + "' was sampled on a different grid");
    return loaded;
  }
  return ScalarField::sample(g, [&](const std::array<double, 3>& x) {
    return shape_value(s, x, g);
  });
}

}  // namespace ncelab
