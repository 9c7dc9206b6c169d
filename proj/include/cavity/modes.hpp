#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "cavity/constants.hpp"
#include "cavity/geometry.hpp"

// Helmholtz modes of the open cavity: the exact piecewise plane-wave
// solution, the single-slab spectral response t, r, T, and the multilayer
// response function obtained from the interface recursion.
namespace cavity {

using complex = std::complex<double>;

inline double fresnel_r1(double n1) { return (n1 - 1.0) / (n1 + 1.0); }

// Spectral transmission/reflection response of the bare dielectric slab of
// index n1 and thickness delta. Satisfies |t|^2 + |r|^2 = 1 and
// r* t + t* r = 0 for real n1.
struct BeamSplitterCoeffs {
  complex t;
  complex r;
  double phi_r;  // principal-value phase of r
};

inline BeamSplitterCoeffs single_layer_coeffs(const CavityGeometry& geom,
                                              double omega) {
  if (!(omega > 0.0)) throw std::domain_error("single_layer_coeffs: omega must be positive");
  const double n1 = geom.stack.n1;
  const double delta = geom.stack.delta();
  const double r1 = fresnel_r1(n1);
  const double k = omega / speed_of_light;
  const complex z = std::exp(complex(0.0, 2.0 * n1 * k * delta));
  const complex denom = 1.0 - z * (r1 * r1);
  const complex t = (1.0 - r1 * r1) * std::exp(complex(0.0, (n1 - 1.0) * k * delta)) / denom;
  const complex r = std::exp(complex(0.0, -k * delta)) * (r1 * (z - 1.0)) / denom;
  return {t, r, std::arg(r)};
}

// Single-slab cavity response T(omega) = t / (1 + r e^{2i omega (ell_c + delta/2)/c}).
inline complex single_layer_response(const CavityGeometry& geom, double omega) {
  const auto bs = single_layer_coeffs(geom, omega);
  const double Lround = geom.ell_c + 0.5 * geom.stack.delta();
  const complex phase = std::exp(complex(0.0, 2.0 * omega * Lround / speed_of_light));
  return bs.t / (1.0 + bs.r * phase);
}

// Forward plane-wave component of the field in one region:
//   B_j(omega, x) = beta * e^{i n omega (x - x_start)/c}.
// The physical field in the region is A_j = B_j - B_j^*, so the backward
// amplitude is always -conj(beta); a perfect mirror on the left forces this
// real (up to global phase) standing-wave structure in every region.
struct RegionWave {
  double x_start;
  double n;
  complex beta;

  complex B(double omega, double x) const {
    return beta * std::exp(complex(0.0, n * omega * (x - x_start) / speed_of_light));
  }
  complex A(double omega, double x) const {
    const complex b = B(omega, x);
    return b - std::conj(b);
  }
  complex A_derivative(double omega, double x) const {
    const complex b = B(omega, x);
    const complex ik = complex(0.0, n * omega / speed_of_light);
    return ik * b - std::conj(ik * b);
  }
};

// Interface recursion for the alternating stack, as specialised to vacuum
// low-index gaps (n2 = 1):
//   B_0(omega, x) = e^{i omega (x + ell_c)/c}
//   beta_j = (B_{j-1}(x1(j)) - r1 B_{j-1}^*(x1(j))) / (1 + r1)   (j odd)
//   beta_j = (B_{j-1}(x2(j)) + r1 B_{j-1}^*(x2(j))) / (1 - r1)   (j even)
// Returns the 2N+1 region waves, index 2N being the outgoing region.
inline std::vector<RegionWave> bj_recursion(const CavityGeometry& geom,
                                            double omega) {
  if (!(omega > 0.0)) throw std::domain_error("bj_recursion: omega must be positive");
  if (std::abs(geom.stack.n2 - 1.0) > 1e-12)
    throw std::invalid_argument("bj_recursion: the interface recursion assumes n2 = 1");
  geom.validate();

  const double r1 = fresnel_r1(geom.stack.n1);
  std::vector<RegionWave> waves;
  waves.reserve(geom.region_count());
  waves.push_back({-geom.ell_c, 1.0, complex(1.0, 0.0)});

  for (int j = 1; j < geom.region_count(); ++j) {
    const double x_j = region_start(geom, j);
    const complex P = waves.back().B(omega, x_j);
    complex beta;
    double n;
    if (j % 2 == 1) {
      beta = (P - r1 * std::conj(P)) / (1.0 + r1);
      n = geom.stack.n1;
    } else {
      beta = (P + r1 * std::conj(P)) / (1.0 - r1);
      n = 1.0;
    }
    waves.push_back({x_j, n, beta});
  }
  return waves;
}

// Multilayer cavity response function and its building blocks.
struct ResponseValue {
  complex response;   // curly T(omega)
  double phi_B;       // arg(B_{2N-2} / B_{2N-2}^*), principal value
  complex prefactor;  // e^{-i omega (ell_c + (N-1)(delta+alpha))/c} / B_{2N-2}^*
};

// curly T(omega) = prefactor * t / (1 + e^{i omega delta/c} e^{i phi_B} r),
// with B_{2N-2} evaluated at the entry of the last high-index layer. The
// prefactor equals the response of the same cavity with 2N-3 layers, which
// is the N = 1 base case T(omega) when the stack is a single slab.
inline ResponseValue multilayer_response(const CavityGeometry& geom,
                                         double omega) {
  const auto waves = bj_recursion(geom, omega);
  const int N = geom.stack.pairs;
  const double x_last = region_start(geom, 2 * N - 1);
  const complex B = waves[2 * N - 2].B(omega, x_last);
  const complex ratio = B / std::conj(B);  // e^{i phi_B}
  const double phase =
      -omega * (geom.ell_c + (N - 1) * geom.stack.period()) / speed_of_light;
  const complex prefactor = std::exp(complex(0.0, phase)) / std::conj(B);
  const auto bs = single_layer_coeffs(geom, omega);
  const complex slab_phase =
      std::exp(complex(0.0, omega * geom.stack.delta() / speed_of_light));
  const complex response = prefactor * bs.t / (1.0 + slab_phase * ratio * bs.r);
  return {response, std::arg(ratio), prefactor};
}

// Normalised global mode Phi_omega. The normalisation constant C makes the
// incoming plane-wave component outside carry amplitude 1/sqrt(2 pi c A),
// which is the delta(omega - omega') orthonormalisation of the scattering
// states; the outgoing component is then unimodular times the same factor.
struct ModeField {
  double omega = 0.0;
  CavityGeometry geom;
  std::vector<RegionWave> regions;
  complex norm{1.0, 0.0};  // C
  double area = 1.0;       // transverse mode area A

  complex value_in_region(int j, double x) const {
    return norm * regions[static_cast<size_t>(j)].A(omega, x);
  }
  complex derivative_in_region(int j, double x) const {
    return norm * regions[static_cast<size_t>(j)].A_derivative(omega, x);
  }
  complex value(double x) const {
    return value_in_region(region_index(geom, x), x);
  }
  complex derivative(double x) const {
    return derivative_in_region(region_index(geom, x), x);
  }
  double intensity(double x) const { return std::norm(value(x)); }

  // Travelling-wave coefficients (A_plus, A_minus) of region j in absolute
  // phase convention: Phi(x) = A_plus e^{i n omega x/c} + A_minus e^{-i n omega x/c}.
  std::pair<complex, complex> amplitude_pair(int j) const {
    const auto& w = regions[static_cast<size_t>(j)];
    const complex shift =
        std::exp(complex(0.0, -w.n * omega * w.x_start / speed_of_light));
    return {norm * w.beta * shift, -norm * std::conj(w.beta * shift)};
  }
};

inline ModeField assemble_mode(const CavityGeometry& geom, double omega,
                               double area = 1.0) {
  if (!(area > 0.0)) throw std::invalid_argument("assemble_mode: area must be positive");
  ModeField mode;
  mode.omega = omega;
  mode.geom = geom;
  mode.regions = bj_recursion(geom, omega);
  const auto& out = mode.regions.back();
  const complex edge_phase =
      std::exp(complex(0.0, -omega * out.x_start / speed_of_light));
  mode.norm = edge_phase /
              (std::conj(out.beta) * std::sqrt(2.0 * pi * speed_of_light * area));
  mode.area = area;
  return mode;
}

}  // namespace cavity
