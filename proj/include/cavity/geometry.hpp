#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cavity/constants.hpp"

namespace cavity {

// Quarter-wave Bragg stack: 2N-1 alternating layers, first and last with the
// higher index n1. Layer widths satisfy delta*n1 = alpha*n2 = lambda0/4.
struct StackSpec {
  double n1 = 1.25;       // high refractive index (> n2)
  double n2 = 1.0;        // low refractive index (vacuum gaps by default)
  int pairs = 1;          // N; the stack has 2N-1 layers
  double lambda0 = 1.0;   // design wavelength, the program length unit

  double delta() const { return lambda0 / (4.0 * n1); }
  double alpha() const { return lambda0 / (4.0 * n2); }
  double period() const { return delta() + alpha(); }
  int layer_count() const { return 2 * pairs - 1; }
  double omega0() const { return 2.0 * pi * speed_of_light / lambda0; }

  void validate() const {
    if (pairs < 1) throw std::invalid_argument("stack: pair count N must be >= 1");
    if (!(n1 > 1.0)) throw std::invalid_argument("stack: n1 must exceed 1");
    if (!(n2 > 0.0)) throw std::invalid_argument("stack: n2 must be positive");
    if (!(n1 > n2)) throw std::invalid_argument("stack: n1 must exceed n2");
    if (!(lambda0 > 0.0)) throw std::invalid_argument("stack: lambda0 must be positive");
  }
};

// Perfect mirror at x = -ell_c, stack front face at x = 0.
struct CavityGeometry {
  StackSpec stack;
  double ell_c = 0.5;  // geometric cavity length

  // Right edge of the last dielectric layer, N(delta+alpha) - alpha.
  double stack_end() const {
    return stack.pairs * stack.period() - stack.alpha();
  }
  double mirror_x() const { return -ell_c; }
  int region_count() const { return 2 * stack.pairs + 1; }  // cavity + layers + out

  void validate() const {
    stack.validate();
    if (!(ell_c > 0.0)) throw std::invalid_argument("geometry: ell_c must be positive");
  }
};

struct Interval {
  double lo;
  double hi;
};

// Left boundary of region j: x1(j) for odd layers, x2(j) for even ones.
inline double region_start(const CavityGeometry& geom, int j) {
  if (j == 0) return -geom.ell_c;
  const double d = geom.stack.delta(), a = geom.stack.alpha();
  if (j % 2 == 1) return 0.5 * (j - 1) * (d + a);        // x1(j)
  return 0.5 * j * (d + a) - a;                          // x2(j)
}

// Region extent Omega_j. j = 0 is the vacuum cavity [-ell_c, 0], odd j are
// n1 layers of width delta, even j are n2 layers of width alpha, and j = 2N
// is the half-infinite outside region.
inline Interval layer_bounds(const CavityGeometry& geom, int j) {
  const int n_regions = geom.region_count();
  if (j < 0 || j >= n_regions)
    throw std::domain_error("layer_bounds: region index out of range");
  if (j == 0) return {-geom.ell_c, 0.0};
  if (j == n_regions - 1)
    return {geom.stack_end(), std::numeric_limits<double>::infinity()};
  const double lo = region_start(geom, j);
  const double width = (j % 2 == 1) ? geom.stack.delta() : geom.stack.alpha();
  return {lo, lo + width};
}

// Region index for a position. Intervals are half-open [lo, hi), so every x
// resolves to exactly one region; x = 0 lands in the first dielectric layer.
inline int region_index(const CavityGeometry& geom, double x) {
  if (x < -geom.ell_c)
    throw std::domain_error("region_index: position behind the perfect mirror");
  if (x < 0.0) return 0;
  if (x >= geom.stack_end()) return 2 * geom.stack.pairs;
  const double p = geom.stack.period();
  int block = static_cast<int>(std::floor(x / p));
  if (block >= geom.stack.pairs) block = geom.stack.pairs - 1;
  const double offset = x - block * p;
  return (offset < geom.stack.delta()) ? 2 * block + 1 : 2 * block + 2;
}

inline double permittivity_at(const CavityGeometry& geom, double x) {
  const int j = region_index(geom, x);
  if (j == 0 || j == 2 * geom.stack.pairs) return 1.0;
  const double n = (j % 2 == 1) ? geom.stack.n1 : geom.stack.n2;
  return n * n;
}

// The 2N permittivity discontinuities: stack front face, the internal layer
// interfaces, and the stack back face.
inline std::vector<double> interfaces(const CavityGeometry& geom) {
  std::vector<double> xs;
  xs.reserve(2 * geom.stack.pairs);
  for (int j = 1; j < geom.region_count(); ++j)
    xs.push_back(region_start(geom, j));
  return xs;
}

// Evaluation view bundling the permittivity and region maps.
struct PermittivityProfile {
  CavityGeometry geom;

  double epsilon(double x) const { return permittivity_at(geom, x); }
  int region(double x) const { return region_index(geom, x); }
};

}  // namespace cavity
