#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "cavity/constants.hpp"
#include "cavity/geometry.hpp"
#include "cavity/modes.hpp"
#include "cavity/spectra.hpp"

// Dipole coupling of a two-level atom to the global field modes, and the
// single-mode effective couplings extracted from fitted resonances.
namespace cavity {

struct AtomSpec {
  double omega_A = 2.0 * pi;  // transition frequency
  double x_A = -0.25;         // position, strictly between mirror and stack
  complex d{1.0, 0.0};        // dipole moment (program units, hbar = eps0 = 1)

  void validate(const CavityGeometry& geom) const {
    if (!(omega_A > 0.0))
      throw std::invalid_argument("atom: omega_A must be positive");
    if (!(x_A > -geom.ell_c) || !(x_A < 0.0))
      throw std::domain_error("atom: x_A must lie inside (-ell_c, 0)");
  }
};

// Continuum coupling density eta_omega = sqrt(omega/2) d Phi_in(x_A).
inline complex eta_continuum(const AtomSpec& atom, const CavityGeometry& geom,
                             double omega, double area = 1.0) {
  atom.validate(geom);
  if (!(omega > 0.0)) throw std::domain_error("eta_continuum: omega must be positive");
  const auto mode = assemble_mode(geom, omega, area);
  return std::sqrt(omega / (2.0 * hbar * eps0)) * atom.d *
         mode.value_in_region(0, atom.x_A);
}

// Single-Lorentzian restriction of eta: the continuum density gated to the
// fitted peak window (zero outside). Default window +-50 widths.
inline complex eta_mode_selective(const AtomSpec& atom,
                                  const CavityGeometry& geom,
                                  const LorentzianPeak& peak, double omega,
                                  double window_widths = 50.0,
                                  double area = 1.0) {
  if (std::abs(omega - peak.omega) > window_widths * peak.gamma)
    return {0.0, 0.0};
  return eta_continuum(atom, geom, omega, area);
}

struct CouplingResult {
  complex g{};          // effective single-mode coupling g_m
  complex g_bar{};      // counter-rotating coupling (d -> d*)
  complex g_perfect{};  // hard-boundary comparator at omega_m = m pi c/ell_c
  double epsilon = 0.0; // gamma (x_A + ell_c) / c
  bool validity_warning = false;  // epsilon above 0.1
  LorentzianPeak mode;
};

namespace detail {

inline complex g_formula(const complex& d, double omega, double length,
                         double area, double ell_c, double x_A) {
  const double k = omega / speed_of_light;
  return complex(0.0, 1.0) *
         std::sqrt(omega / (hbar * eps0 * length * area)) * d *
         std::exp(complex(0.0, k * ell_c)) * std::sin(k * (x_A + ell_c));
}

}  // namespace detail

// g_m = i sqrt(w_m / (L_m A)) d e^{i w_m ell_c / c} sin[w_m (x_A + ell_c)/c],
// valid up to O(epsilon^2). epsilon >= 1 is rejected outright; 0.1..1 is
// carried as a warning in the result.
inline CouplingResult g_effective(const AtomSpec& atom,
                                  const LorentzianPeak& peak,
                                  const CavityGeometry& geom,
                                  double area = 1.0) {
  atom.validate(geom);
  if (!(area > 0.0)) throw std::invalid_argument("g_effective: area must be positive");
  CouplingResult res;
  res.mode = peak;
  res.epsilon = peak.gamma * (atom.x_A + geom.ell_c) / speed_of_light;
  if (res.epsilon >= 1.0)
    throw std::domain_error("g_effective: epsilon = " + std::to_string(res.epsilon) +
                            " >= 1, effective coupling meaningless");
  res.validity_warning = res.epsilon >= 0.1;
  res.g = detail::g_formula(atom.d, peak.omega, peak.L_coupling, area,
                            geom.ell_c, atom.x_A);
  res.g_bar = detail::g_formula(std::conj(atom.d), peak.omega, peak.L_coupling,
                                area, geom.ell_c, atom.x_A);
  const double omega_m = peak.m * pi * speed_of_light / geom.ell_c;
  res.g_perfect =
      detail::g_formula(atom.d, omega_m, geom.ell_c, area, geom.ell_c, atom.x_A);
  return res;
}

inline complex g_counter_rotating(const AtomSpec& atom,
                                  const LorentzianPeak& peak,
                                  const CavityGeometry& geom,
                                  double area = 1.0) {
  return g_effective(atom, peak, geom, area).g_bar;
}

// Purcell-style cooperativity 2|g|^2 / (gamma_cavity * gamma_atom).
inline double cooperativity(const CouplingResult& coupling, double gamma_atom) {
  if (!(gamma_atom > 0.0))
    throw std::domain_error("cooperativity: atomic linewidth must be positive");
  return 2.0 * std::norm(coupling.g) / (coupling.mode.gamma * gamma_atom);
}

}  // namespace cavity
