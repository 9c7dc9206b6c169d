#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavity/constants.hpp"
#include "cavity/coupling.hpp"
#include "cavity/errors.hpp"
#include "cavity/geometry.hpp"
#include "cavity/spectra.hpp"

// Single-excitation dynamics, solved two ways: exact propagation of the
// discretised continuum amplitudes c_{g,1}(omega, t), and the finite
// non-Hermitian effective model built from fitted resonances.
namespace cavity {

// Frequency grid with quadrature weights and sampled coupling densities.
struct ContinuumGrid {
  std::vector<double> omega;
  std::vector<double> weight;
  std::vector<complex> eta;

  double coupling_weight() const {  // sum_k w_k |eta_k|^2, the collective |g|^2
    double s = 0.0;
    for (size_t k = 0; k < eta.size(); ++k) s += weight[k] * std::norm(eta[k]);
    return s;
  }
};

inline ContinuumGrid sample_eta_grid(const CavityGeometry& geom,
                                     const AtomSpec& atom, double omega_lo,
                                     double omega_hi, size_t samples,
                                     double area = 1.0) {
  if (!(omega_lo > 0.0) || !(omega_hi > omega_lo) || samples < 16)
    throw std::domain_error("sample_eta_grid: invalid frequency range");
  ContinuumGrid grid;
  grid.omega.resize(samples);
  grid.weight.resize(samples);
  grid.eta.resize(samples);
  const double h = (omega_hi - omega_lo) / static_cast<double>(samples - 1);
  for (size_t k = 0; k < samples; ++k) {
    grid.omega[k] = omega_lo + h * static_cast<double>(k);
    grid.weight[k] = (k == 0 || k == samples - 1) ? 0.5 * h : h;
    grid.eta[k] = eta_continuum(atom, geom, grid.omega[k], area);
  }
  return grid;
}

// Uniform grid over peak +- K widths (trapezoid weights). K = 50 resolves
// the decay; strong-coupling cross-validations want K large enough that the
// missing Lorentzian tail weight ~ 1/(pi K) no longer shifts the collective
// Rabi frequency.
inline ContinuumGrid build_continuum_grid(const CavityGeometry& geom,
                                          const AtomSpec& atom,
                                          const LorentzianPeak& peak,
                                          double area = 1.0, double K = 50.0,
                                          double samples_per_fwhm = 200.0) {
  const double lo = std::max(peak.omega - K * peak.gamma, 1e-9);
  const double hi = peak.omega + K * peak.gamma;
  const auto samples =
      static_cast<size_t>(std::ceil(2.0 * K * samples_per_fwhm)) + 1;
  return sample_eta_grid(geom, atom, lo, hi, samples, area);
}

struct ContinuumState {
  complex ce{1.0, 0.0};        // c_{e,0}
  std::vector<complex> cg;     // c_{g,1}(omega_k)
};

inline ContinuumState excited_state(const ContinuumGrid& grid) {
  return {complex{1.0, 0.0}, std::vector<complex>(grid.omega.size())};
}

struct ContinuumTrajectory {
  std::vector<double> t;
  std::vector<complex> ce;
  std::vector<double> pe;         // |c_e0|^2
  std::vector<double> field_pop;  // sum_k w_k |c_g1|^2
  std::vector<double> norm;
  double max_norm_drift = 0.0;
  ContinuumState final_state;
};

struct EvolveOptions {
  size_t sample_stride = 0;      // 0: pick ~2000 output samples
  double norm_drift_tol = 1e-4;  // NumericalInstability beyond this
};

// Step size keeping the RK4 norm drift per unit time below `drift_per_time`
// for the fastest scale in the problem.
inline double recommended_dt(double fastest_rate, double drift_per_time = 1e-6) {
  const double lam = std::max(fastest_rate, 1e-12);
  return std::pow(120.0 * drift_per_time / std::pow(lam, 5.0), 0.25);
}

// RK4 propagation of
//   d/dt c_k = -conj(eta_k) e^{+i(w_k - w_A)t} c_e
//   d/dt c_e = sum_k w_k eta_k e^{-i(w_k - w_A)t} c_k
// (amplitudes in the frame of the wavefunction ansatz, so they only move on
// coupling/detuning scales). The star-shaped coupling lets each step run in
// two O(M) passes; the stage phase factors advance by a constant rotation.
inline ContinuumTrajectory evolve_continuum(const ContinuumGrid& grid,
                                            const ContinuumState& init,
                                            double omega_A, double duration,
                                            double dt,
                                            const EvolveOptions& opts = {}) {
  if (!(dt > 0.0) || !(duration > 0.0))
    throw std::domain_error("evolve_continuum: duration and dt must be positive");
  const size_t M = grid.omega.size();
  if (init.cg.size() != M)
    throw std::invalid_argument("evolve_continuum: state/grid size mismatch");

  const auto steps = static_cast<size_t>(std::ceil(duration / dt));
  const size_t stride =
      opts.sample_stride ? opts.sample_stride : std::max<size_t>(1, steps / 2000);

  std::vector<complex> cg = init.cg;
  complex ce = init.ce;

  std::vector<complex> phase(M), rot_half(M);
  std::vector<double> wabs(M);
  complex U0{0.0, 0.0}, Uhalf{0.0, 0.0};
  for (size_t k = 0; k < M; ++k) {
    const double det = grid.omega[k] - omega_A;
    phase[k] = {1.0, 0.0};
    rot_half[k] = std::polar(1.0, -det * 0.5 * dt);
    const double w2 = grid.weight[k] * std::norm(grid.eta[k]);
    U0 += w2;
    Uhalf += w2 * rot_half[k];
  }

  ContinuumTrajectory traj;
  auto norm_of = [&]() {
    double s = std::norm(ce);
    for (size_t k = 0; k < M; ++k) s += grid.weight[k] * std::norm(cg[k]);
    return s;
  };
  const double norm0 = norm_of();
  auto record = [&](double t) {
    traj.t.push_back(t);
    traj.ce.push_back(ce);
    traj.pe.push_back(std::norm(ce));
    double fp = 0.0;
    for (size_t k = 0; k < M; ++k) fp += grid.weight[k] * std::norm(cg[k]);
    traj.field_pop.push_back(fp);
    const double nrm = std::norm(ce) + fp;
    traj.norm.push_back(nrm);
    traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(nrm - norm0));
    if (traj.max_norm_drift > opts.norm_drift_tol)
      throw NumericalInstability(
          "evolve_continuum: norm drift " + std::to_string(traj.max_norm_drift) +
          " exceeds tolerance; reduce dt");
  };
  record(0.0);

  for (size_t s = 0; s < steps; ++s) {
    // Pass 1: stage sums over the grid.
    complex S1{}, S2{}, S4{};
    for (size_t k = 0; k < M; ++k) {
      const complex q1 = grid.eta[k] * phase[k];
      const complex q2 = q1 * rot_half[k];
      const complex q4 = q2 * rot_half[k];
      const double w = grid.weight[k];
      S1 += w * q1 * cg[k];
      S2 += w * q2 * cg[k];
      S4 += w * q4 * cg[k];
    }
    const complex dce1 = S1;
    const complex ce2 = ce + 0.5 * dt * dce1;
    const complex dce2 = S2 - 0.5 * dt * (Uhalf * ce);
    const complex ce3 = ce + 0.5 * dt * dce2;
    const complex dce3 = S2 - 0.5 * dt * (U0 * ce2);
    const complex ce4 = ce + dt * dce3;
    const complex dce4 = S4 - dt * (Uhalf * ce3);

    // Pass 2: mode updates and phase advance.
    const complex w1 = (dt / 6.0) * ce;
    const complex w23 = (dt / 6.0) * 2.0 * (ce2 + ce3);
    const complex w4 = (dt / 6.0) * ce4;
    for (size_t k = 0; k < M; ++k) {
      const complex q1 = grid.eta[k] * phase[k];
      const complex q2 = q1 * rot_half[k];
      const complex q4 = q2 * rot_half[k];
      cg[k] -= std::conj(q1) * w1 + std::conj(q2) * w23 + std::conj(q4) * w4;
      phase[k] *= rot_half[k] * rot_half[k];
    }
    ce += (dt / 6.0) * (dce1 + 2.0 * dce2 + 2.0 * dce3 + dce4);

    // Remove accumulated rounding in the unit phases.
    if ((s & 1023u) == 1023u) {
      const double t_next = (static_cast<double>(s) + 1.0) * dt;
      for (size_t k = 0; k < M; ++k)
        phase[k] = std::polar(1.0, -(grid.omega[k] - omega_A) * t_next);
    }

    if ((s + 1) % stride == 0 || s + 1 == steps)
      record((static_cast<double>(s) + 1.0) * dt);
  }

  traj.final_state = {ce, std::move(cg)};
  return traj;
}

// ---------------------------------------------------------------------------
// Effective non-Hermitian model.
// ---------------------------------------------------------------------------

struct EffectiveMode {
  double omega = 0.0;
  double gamma = 0.0;
  complex g{};
  complex g_bar{};
};

inline EffectiveMode effective_mode(const CouplingResult& coupling) {
  return {coupling.mode.omega, coupling.mode.gamma, coupling.g, coupling.g_bar};
}

enum class InitialState { ExcitedAtom, GroundVacuum };

struct EffectiveTrajectory {
  std::vector<double> t;
  std::vector<complex> ce;                    // c_{e,0}
  std::vector<double> pe;
  std::vector<std::vector<double>> mode_pops; // |c^{(m)}_{g,1}|^2 per mode
  std::vector<double> norm;                   // population inside the tracked block
  // Counter-rotating block (|g,0> and |e,1;m>), populated when enabled.
  std::vector<double> pg0;
  std::vector<std::vector<double>> cr_pops;
};

// Dynamics of the effective Hamiltonian. The rotating-wave block couples
// |e,0> to the retained modes |g,1;m>:
//   d/dt c_e    = sum_m g_m c_m
//   d/dt c_m    = -g_m^* c_e - i(Delta_m - i gamma_m/2) c_m
// With counter-rotating couplings the states |g,0> and |e,1;m> form a second
// block, integrated in the lab frame:
//   d/dt c_g0   = sum_m gbar_m c_em
//   d/dt c_em   = -i(w_A + w_m - i gamma_m/2) c_em - gbar_m^* c_g0
// The two blocks do not mix in the single-excitation truncation.
inline EffectiveTrajectory evolve_effective(
    const std::vector<EffectiveMode>& modes, double omega_A, double duration,
    double dt, bool counter_rotating = false,
    InitialState initial = InitialState::ExcitedAtom, size_t sample_stride = 0) {
  if (!(dt > 0.0) || !(duration > 0.0))
    throw std::domain_error("evolve_effective: duration and dt must be positive");
  if (modes.empty())
    throw std::invalid_argument("evolve_effective: no retained modes");
  if (initial == InitialState::GroundVacuum && !counter_rotating)
    throw std::invalid_argument(
        "evolve_effective: |g,0> only evolves with counter-rotating terms");

  const size_t nm = modes.size();
  const size_t dim = counter_rotating ? 2 * (1 + nm) : 1 + nm;
  std::vector<complex> y(dim);
  if (initial == InitialState::ExcitedAtom)
    y[0] = 1.0;
  else
    y[1 + nm] = 1.0;

  auto deriv = [&](const std::vector<complex>& s, std::vector<complex>& ds) {
    ds.assign(dim, complex{});
    for (size_t m = 0; m < nm; ++m) {
      const complex cm = s[1 + m];
      ds[0] += modes[m].g * cm;
      const complex det(modes[m].omega - omega_A, -0.5 * modes[m].gamma);
      ds[1 + m] = -std::conj(modes[m].g) * s[0] - complex(0.0, 1.0) * det * cm;
    }
    if (counter_rotating) {
      const size_t off = 1 + nm;
      for (size_t m = 0; m < nm; ++m) {
        const complex cem = s[off + 1 + m];
        ds[off] += modes[m].g_bar * cem;
        const complex e(omega_A + modes[m].omega, -0.5 * modes[m].gamma);
        ds[off + 1 + m] =
            -complex(0.0, 1.0) * e * cem - std::conj(modes[m].g_bar) * s[off];
      }
    }
  };

  const auto steps = static_cast<size_t>(std::ceil(duration / dt));
  const size_t stride =
      sample_stride ? sample_stride : std::max<size_t>(1, steps / 2000);
  std::vector<complex> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);

  EffectiveTrajectory traj;
  auto record = [&](double t) {
    traj.t.push_back(t);
    traj.ce.push_back(y[0]);
    traj.pe.push_back(std::norm(y[0]));
    std::vector<double> pops(nm);
    double nrm = std::norm(y[0]);
    for (size_t m = 0; m < nm; ++m) {
      pops[m] = std::norm(y[1 + m]);
      nrm += pops[m];
    }
    traj.mode_pops.push_back(std::move(pops));
    if (counter_rotating) {
      const size_t off = 1 + nm;
      traj.pg0.push_back(std::norm(y[off]));
      std::vector<double> cr(nm);
      for (size_t m = 0; m < nm; ++m) {
        cr[m] = std::norm(y[off + 1 + m]);
        nrm += cr[m];
      }
      nrm += std::norm(y[off]);
      traj.cr_pops.push_back(std::move(cr));
    }
    traj.norm.push_back(nrm);
  };
  record(0.0);

  for (size_t s = 0; s < steps; ++s) {
    deriv(y, k1);
    for (size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
    deriv(tmp, k2);
    for (size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
    deriv(tmp, k3);
    for (size_t i = 0; i < dim; ++i) tmp[i] = y[i] + dt * k3[i];
    deriv(tmp, k4);
    for (size_t i = 0; i < dim; ++i)
      y[i] += (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if ((s + 1) % stride == 0 || s + 1 == steps)
      record((static_cast<double>(s) + 1.0) * dt);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Cross-validation of the two models.
// ---------------------------------------------------------------------------

struct ComparisonOptions {
  double scan_lo = 0.0;            // 0: omega_A * 0.8
  double scan_hi = 0.0;            // 0: omega_A * 1.2
  size_t scan_samples = 20000;
  double detuning_limit = 0.05;    // require |w_m - w_A| <= limit * w_m
  double K = 320.0;                // continuum window half-width, in gammas
  double samples_per_fwhm = 200.0;
  double rabi_periods = 5.0;
  double duration = 0.0;           // 0: rabi_periods of the fitted coupling
  double dt = 0.0;                 // 0: recommended for 1e-6 norm drift
  double area = 1.0;
  unsigned threads = 1;
};

struct ModelComparison {
  LorentzianPeak peak;
  CouplingResult coupling;
  ContinuumTrajectory continuum;
  EffectiveTrajectory effective;
  double max_pop_diff = 0.0;
  double max_phase_diff = 0.0;
  double norm_drift = 0.0;
  double duration = 0.0;
  double dt = 0.0;
};

inline ModelComparison compare_models(const CavityGeometry& geom,
                                      const AtomSpec& atom,
                                      const ComparisonOptions& opts = {}) {
  atom.validate(geom);
  const double lo = opts.scan_lo > 0.0 ? opts.scan_lo : 0.8 * atom.omega_A;
  const double hi = opts.scan_hi > 0.0 ? opts.scan_hi : 1.2 * atom.omega_A;
  auto spectrum = scan_response(geom, lo, hi, opts.scan_samples, opts.threads);
  fit_peaks(spectrum);

  const LorentzianPeak* best = nullptr;
  for (const auto& p : spectrum.peaks) {
    if (!best ||
        std::abs(p.omega - atom.omega_A) < std::abs(best->omega - atom.omega_A))
      best = &p;
  }
  if (!best || std::abs(best->omega - atom.omega_A) > opts.detuning_limit * best->omega)
    throw NoResonantMode("compare_models: no fitted peak near omega_A");

  ModelComparison cmp;
  cmp.peak = *best;
  cmp.coupling = g_effective(atom, *best, geom, opts.area);

  const double gmod = std::abs(cmp.coupling.g);
  cmp.duration = opts.duration > 0.0
                     ? opts.duration
                     : opts.rabi_periods * pi / std::max(gmod, 1e-12);
  if (opts.dt > 0.0) {
    cmp.dt = opts.dt;
  } else {
    const double fastest = std::max(
        {2.0 * gmod, opts.K * cmp.peak.gamma, std::abs(cmp.peak.omega - atom.omega_A)});
    cmp.dt = std::min(recommended_dt(fastest, 1e-6 / cmp.duration * 0.1),
                      cmp.duration / 1000.0);
  }

  const auto grid = build_continuum_grid(geom, atom, *best, opts.area, opts.K,
                                         opts.samples_per_fwhm);
  const size_t steps = static_cast<size_t>(std::ceil(cmp.duration / cmp.dt));
  const size_t stride = std::max<size_t>(1, steps / 2000);
  EvolveOptions eopts;
  eopts.sample_stride = stride;
  eopts.norm_drift_tol = 1e-4;
  cmp.continuum = evolve_continuum(grid, excited_state(grid), atom.omega_A,
                                   cmp.duration, cmp.dt, eopts);
  cmp.effective = evolve_effective({effective_mode(cmp.coupling)}, atom.omega_A,
                                   cmp.duration, cmp.dt, false,
                                   InitialState::ExcitedAtom, stride);

  const size_t n = std::min(cmp.continuum.t.size(), cmp.effective.t.size());
  for (size_t i = 0; i < n; ++i) {
    cmp.max_pop_diff = std::max(
        cmp.max_pop_diff, std::abs(cmp.continuum.pe[i] - cmp.effective.pe[i]));
    if (std::norm(cmp.continuum.ce[i]) > 0.01) {
      const complex ratio = cmp.continuum.ce[i] * std::conj(cmp.effective.ce[i]);
      cmp.max_phase_diff = std::max(cmp.max_phase_diff, std::abs(std::arg(ratio)));
    }
  }
  cmp.norm_drift = cmp.continuum.max_norm_drift;
  return cmp;
}

}  // namespace cavity
