#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "cavity/constants.hpp"
#include "cavity/coupling.hpp"
#include "cavity/geometry.hpp"

namespace cavity {

// Resolved run parameters shared by all subcommands. Frequencies here are in
// units of omega_0 = 2 pi c / lambda_0 (the reporting convention); the
// library layer works in raw angular frequency.
struct RunConfig {
  // geometry
  double n1 = 1.25;
  double n2 = 1.0;
  int layers_N = 10;   // N pairs -> 2N-1 layers
  double ell_c = 0.5;  // in lambda_0

  // atom
  double atom_x = -0.25;
  double atom_omega = 1.0;  // omega_A / omega_0
  double dipole_re = 1.0;
  double dipole_im = 0.0;
  double area = 1.0;
  double gamma_atom = 0.0;  // optional linewidth for the cooperativity output

  // modes profile
  double omega = 1.0;  // omega / omega_0
  int samples = 2000;
  double x_margin = 1.0;  // profile extends this many lambda_0 past the stack

  // scan / fit
  double omega_min = 0.8;
  double omega_max = 1.2;
  double lc_min = 0.0;
  double lc_max = 0.0;
  std::string grid = "1x4000";  // lc-count x omega-count
  double min_height_fraction = 1e-2;

  // dynamics
  double duration = 0.0;  // raw time units; 0 -> 5 Rabi periods
  double dt = 0.0;        // 0 -> recommended step
  std::string model = "both";
  bool counter_rotating = false;
  double window_K = 50.0;
  double samples_per_fwhm = 200.0;

  // output
  std::string out;  // empty -> stdout
  std::string format = "auto";
  unsigned threads = 0;  // 0 -> hardware concurrency
  bool no_timestamp = false;

  CavityGeometry geometry() const {
    CavityGeometry geom{{n1, n2, layers_N, 1.0}, ell_c};
    geom.validate();
    return geom;
  }

  AtomSpec atom() const {
    AtomSpec a;
    a.omega_A = atom_omega * 2.0 * pi;
    a.x_A = atom_x;
    a.d = {dipole_re, dipole_im};
    return a;
  }

  // Full resolved configuration, echoed into every output header.
  std::vector<std::pair<std::string, std::string>> provenance() const;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::vector<std::pair<std::string, std::string>> RunConfig::provenance()
    const {
  using detail::format_double;
  return {
      {"n1", format_double(n1)},
      {"n2", format_double(n2)},
      {"N", std::to_string(layers_N)},
      {"layers", std::to_string(2 * layers_N - 1)},
      {"ell_c", format_double(ell_c)},
      {"atom_x", format_double(atom_x)},
      {"atom_omega", format_double(atom_omega)},
      {"dipole_re", format_double(dipole_re)},
      {"dipole_im", format_double(dipole_im)},
      {"area", format_double(area)},
      {"gamma_atom", format_double(gamma_atom)},
      {"omega", format_double(omega)},
      {"samples", std::to_string(samples)},
      {"x_margin", format_double(x_margin)},
      {"omega_min", format_double(omega_min)},
      {"omega_max", format_double(omega_max)},
      {"lc_min", format_double(lc_min)},
      {"lc_max", format_double(lc_max)},
      {"grid", grid},
      {"min_height_fraction", format_double(min_height_fraction)},
      {"duration", format_double(duration)},
      {"dt", format_double(dt)},
      {"model", model},
      {"counter_rotating", counter_rotating ? "true" : "false"},
      {"window_K", format_double(window_K)},
      {"samples_per_fwhm", format_double(samples_per_fwhm)},
      {"format", format},
      {"threads", std::to_string(threads)},
  };
}

}  // namespace cavity
