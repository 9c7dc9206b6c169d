#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "cavity/constants.hpp"
#include "cavity/errors.hpp"
#include "cavity/geometry.hpp"
#include "cavity/lorentz_fit.hpp"
#include "cavity/modes.hpp"

// Response spectra |T|^2, their Lorentzian structure, and the numerically
// fitted resonance parameters (center, width, coupling-factor length).
namespace cavity {

// Remove 2*pi jumps so a phase sampled along a frequency grid is continuous.
inline void unwrap_phases(std::vector<double>& phase) {
  for (size_t i = 1; i < phase.size(); ++i) {
    double d = phase[i] - phase[i - 1];
    while (d > pi) { phase[i] -= 2.0 * pi; d = phase[i] - phase[i - 1]; }
    while (d < -pi) { phase[i] += 2.0 * pi; d = phase[i] - phase[i - 1]; }
  }
}

// ---------------------------------------------------------------------------
// Exact Lorentzian-comb decomposition of the single-slab response (Poisson
// summation of the geometric reflection series):
//   |T(w)|^2 = sum_m (c/2L1) gamma1(w) / ((w - w_m(w))^2 + (gamma1(w)/2)^2)
// with gamma1 = -(c/L1) ln|r(w)|, w_m = m pi c/L1 + (c/2L1)(pi - phi_r(w)),
// L1 = ell_c + delta/2. The comb parameters still depend on w; the identity
// is exact for |r| < 1.
// ---------------------------------------------------------------------------
struct SingleLayerDecomposition {
  CavityGeometry geom;
  double L1 = 0.0;

  // |r(w)| ~ 0 means the slab stops reflecting and the comb degenerates.
  bool no_resonator(double omega) const {
    return std::abs(single_layer_coeffs(geom, omega).r) < 1e-14;
  }

  double gamma(double omega) const {
    const double mod_r = std::abs(single_layer_coeffs(geom, omega).r);
    if (mod_r < 1e-14)
      return std::numeric_limits<double>::infinity();
    return -(speed_of_light / L1) * std::log(mod_r);
  }

  double omega_tilde(int m, double omega) const {
    const double phi_r = single_layer_coeffs(geom, omega).phi_r;
    return m * pi * speed_of_light / L1 +
           (speed_of_light / (2.0 * L1)) * (pi - phi_r);
  }

  // Number of comb terms per side so the analytic tail bound
  //   tail(M) ~ gamma * L1 / (pi^2 c M)
  // falls below tail_tol, plus enough terms to cover the comb core.
  std::int64_t terms_for_tolerance(double omega, double tail_tol) const {
    const double g = gamma(omega);
    if (!std::isfinite(g)) return -1;
    const double spacing = pi * speed_of_light / L1;
    const auto tail_terms = static_cast<std::int64_t>(
        std::ceil(g * L1 / (pi * pi * speed_of_light * tail_tol)));
    const auto core_terms = static_cast<std::int64_t>(std::ceil(3.0 * g / spacing));
    return tail_terms + core_terms + 8;
  }

  // Truncated comb, symmetric in m around the locally resonant index.
  // Throws when |r| vanishes (no-resonator regime: gamma is infinite).
  double truncated_sum(double omega, double tail_tol = 1e-8) const {
    const auto bs = single_layer_coeffs(geom, omega);
    const double mod_r = std::abs(bs.r);
    if (mod_r < 1e-14)
      throw std::domain_error("truncated_sum: |r| = 0, no-resonator regime");
    const double g = -(speed_of_light / L1) * std::log(mod_r);
    const double half2 = 0.25 * g * g;
    const double amp = speed_of_light * g / (2.0 * L1);
    const double shift = (speed_of_light / (2.0 * L1)) * (pi - bs.phi_r);
    const double spacing = pi * speed_of_light / L1;
    const auto M = terms_for_tolerance(omega, tail_tol);
    const auto m_center =
        static_cast<std::int64_t>(std::llround((omega - shift) / spacing));

    // Kahan summation, far tail first so small terms are not swamped.
    double sum = 0.0, comp = 0.0;
    auto add = [&](double term) {
      const double yv = term - comp;
      const double tv = sum + yv;
      comp = (tv - sum) - yv;
      sum = tv;
    };
    for (std::int64_t k = M; k >= 1; --k) {
      const double lo = omega - (m_center - k) * spacing - shift;
      const double hi = omega - (m_center + k) * spacing - shift;
      add(amp / (lo * lo + half2));
      add(amp / (hi * hi + half2));
    }
    const double d0 = omega - m_center * spacing - shift;
    add(amp / (d0 * d0 + half2));
    return sum;
  }
};

inline SingleLayerDecomposition poisson_decomposition_single(
    const CavityGeometry& geom) {
  if (geom.stack.pairs != 1)
    throw std::invalid_argument("poisson_decomposition_single: requires N = 1");
  return {geom, geom.ell_c + 0.5 * geom.stack.delta()};
}

// High-Q closed forms for the single slab, evaluated at the bare resonances
// w_m = m pi c / ell_c.
struct HighQParams {
  double omega_m = 0.0;
  double Gamma = 0.0;
  double omega_tilde = 0.0;
  bool no_resonator = false;
};

inline HighQParams high_q_params_single(const CavityGeometry& geom, int m) {
  if (geom.stack.pairs != 1)
    throw std::invalid_argument("high_q_params_single: requires N = 1");
  if (m < 1) throw std::domain_error("high_q_params_single: m must be >= 1");
  HighQParams p;
  p.omega_m = m * pi * speed_of_light / geom.ell_c;
  const auto bs = single_layer_coeffs(geom, p.omega_m);
  const double mod_r = std::abs(bs.r);
  if (mod_r < 1e-14) {
    p.Gamma = std::numeric_limits<double>::infinity();
    p.omega_tilde = p.omega_m;
    p.no_resonator = true;
    return p;
  }
  p.Gamma = -(speed_of_light / geom.ell_c) * std::log(mod_r);
  p.omega_tilde = p.omega_m + (speed_of_light / (2.0 * geom.ell_c)) *
                                  (pi - bs.phi_r);
  return p;
}

// ---------------------------------------------------------------------------
// Scanning and peak fitting of the exact multilayer response |curly T|^2.
// ---------------------------------------------------------------------------

inline double intensity_ratio(const CavityGeometry& geom, double omega) {
  return std::norm(multilayer_response(geom, omega).response);
}

// Mode index: number of nodes of sin(w (x + ell_c)/c) in (-ell_c, 0], i.e.
// floor(w ell_c / (pi c)). Clamped to >= 1 for resonances pulled below the
// first node threshold.
inline int antinode_index(double omega, double ell_c) {
  const double span = omega * ell_c / (pi * speed_of_light);
  return std::max(1, static_cast<int>(std::floor(span + 1e-9)));
}

struct PeakCandidate {
  double center = 0.0;
  double height = 0.0;
  double fwhm = 0.0;
};

struct LorentzianPeak {
  int m = 0;               // antinode / mode index
  double omega = 0.0;      // fitted center
  double gamma = 0.0;      // fitted FWHM
  double L_coupling = 0.0; // length in the fitted amplitude c gamma/(2L)
  double ell_eff = 0.0;    // pi c m / omega
  double height = 0.0;     // 2c/(L gamma)
  double fit_residual = 0.0;
  bool degraded = false;   // residual above the 1% fidelity contract
  double window_lo = 0.0;
  double window_hi = 0.0;
};

struct ResponseSpectrum {
  CavityGeometry geom;
  std::vector<double> grid;
  std::vector<double> values;  // |curly T|^2
  std::vector<PeakCandidate> candidates;
  std::vector<LorentzianPeak> peaks;
};

namespace detail {

inline void parallel_map(size_t n, unsigned threads,
                         const std::function<void(size_t)>& body) {
  if (threads <= 1 || n < 64) {
    for (size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  const size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const size_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      for (size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Zoom onto a local maximum until its FWHM is resolved, re-centering when
// the maximum drifts to a window edge.
inline std::optional<PeakCandidate> refine_peak(const CavityGeometry& geom,
                                                double lo, double hi) {
  constexpr int kSamples = 257;
  for (int round = 0; round < 80; ++round) {
    const double width = hi - lo;
    if (!(width > 0.0) || width < 1e-13 * std::max(lo, 1e-6)) return std::nullopt;
    std::array<double, kSamples> w, y;
    for (int i = 0; i < kSamples; ++i) {
      w[i] = lo + width * i / (kSamples - 1);
      y[i] = intensity_ratio(geom, std::max(w[i], 1e-12));
    }
    int imax = 0;
    for (int i = 1; i < kSamples; ++i)
      if (y[i] > y[imax]) imax = i;
    if (imax == 0) {
      if (lo <= 1e-12) return std::nullopt;
      const double shift = 0.8 * width;
      lo = std::max(lo - shift, 1e-12);
      hi = lo + width;
      continue;
    }
    if (imax == kSamples - 1) {
      lo += 0.8 * width;
      hi = lo + width;
      continue;
    }
    const double h = y[imax];
    int il = -1, ir = -1;
    for (int i = imax; i >= 0; --i)
      if (y[i] < 0.5 * h) { il = i; break; }
    for (int i = imax; i < kSamples; ++i)
      if (y[i] < 0.5 * h) { ir = i; break; }
    if (il < 0 || ir < 0) {
      // Peak broader than the window: widen around the maximum.
      const double c = w[imax];
      lo = std::max(c - 2.0 * width, 1e-12);
      hi = c + 2.0 * width;
      continue;
    }
    const double xl = w[il] + (w[il + 1] - w[il]) * (0.5 * h - y[il]) /
                                  (y[il + 1] - y[il]);
    const double xr = w[ir - 1] + (w[ir] - w[ir - 1]) * (y[ir - 1] - 0.5 * h) /
                                      (y[ir - 1] - y[ir]);
    const double fwhm = xr - xl;
    const double spacing = width / (kSamples - 1);
    if (fwhm > 16.0 * spacing) {
      // Golden-section polish of the maximum between the bracketing samples.
      double a = w[imax - 1], b = w[imax + 1];
      constexpr double kInvPhi = 0.6180339887498949;
      double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
      double f1 = intensity_ratio(geom, x1), f2 = intensity_ratio(geom, x2);
      while (b - a > 1e-12 * std::max(1.0, b)) {
        if (f1 < f2) {
          a = x1; x1 = x2; f1 = f2;
          x2 = a + kInvPhi * (b - a);
          f2 = intensity_ratio(geom, x2);
        } else {
          b = x2; x2 = x1; f2 = f1;
          x1 = b - kInvPhi * (b - a);
          f1 = intensity_ratio(geom, x1);
        }
      }
      const double c = 0.5 * (a + b);
      return PeakCandidate{c, intensity_ratio(geom, c), fwhm};
    }
    const double c = 0.5 * (xl + xr);
    lo = std::max(c - 4.0 * fwhm, 1e-12);
    hi = c + 4.0 * fwhm;
  }
  return std::nullopt;
}

}  // namespace detail

// Sample |curly T(w)|^2 and locate resonance peaks. Each local maximum of
// the sampled grid is refined by window zooming until the FWHM is resolved;
// pass locate_peaks = false for raw map sampling.
inline ResponseSpectrum scan_response(const CavityGeometry& geom,
                                      double omega_min, double omega_max,
                                      size_t samples, unsigned threads = 1,
                                      bool locate_peaks = true) {
  if (!(omega_min > 0.0) || !(omega_max > omega_min) || samples < 16)
    throw std::domain_error("scan_response: empty or invalid frequency range");
  ResponseSpectrum spectrum;
  spectrum.geom = geom;
  spectrum.grid.resize(samples);
  spectrum.values.resize(samples);
  const double step = (omega_max - omega_min) / static_cast<double>(samples - 1);
  for (size_t i = 0; i < samples; ++i)
    spectrum.grid[i] = omega_min + step * static_cast<double>(i);
  detail::parallel_map(samples, threads, [&](size_t i) {
    spectrum.values[i] = intensity_ratio(geom, spectrum.grid[i]);
  });
  if (!locate_peaks) return spectrum;

  // Plateau-tolerant local maxima: a symmetric peak can land exactly between
  // two samples, leaving the top two values equal to machine precision.
  for (size_t i = 1; i + 1 < samples; ++i) {
    if (spectrum.values[i] > spectrum.values[i - 1] &&
        spectrum.values[i] >= spectrum.values[i + 1]) {
      auto cand = detail::refine_peak(geom, spectrum.grid[i - 1], spectrum.grid[i + 1]);
      if (cand) spectrum.candidates.push_back(*cand);
    }
  }
  std::sort(spectrum.candidates.begin(), spectrum.candidates.end(),
            [](const PeakCandidate& a, const PeakCandidate& b) {
              return a.center < b.center;
            });
  // Refinement can converge onto the same peak from two coarse maxima.
  auto last = std::unique(spectrum.candidates.begin(), spectrum.candidates.end(),
                          [](const PeakCandidate& a, const PeakCandidate& b) {
                            return std::abs(a.center - b.center) <
                                   0.5 * std::max(a.fwhm, b.fwhm);
                          });
  spectrum.candidates.erase(last, spectrum.candidates.end());
  return spectrum;
}

struct FitOptions {
  double window_halfwidths = 5.0;  // window = center +- W * (gamma/2)
  size_t window_samples = 1001;
  int rounds = 2;                  // initial fit, then refit on the fitted width
  double hard_residual = 0.2;      // beyond this the fit is rejected
  double fidelity = 0.01;          // degraded-fit threshold
  double min_height_fraction = 1e-2;  // drop baseline ripple maxima
};

// Fit every located candidate with a single Lorentzian over +-W half-widths,
// iterating the window on the fitted width. Candidates far below the tallest
// one are background fringes, not resonances, and are skipped; genuinely
// overlapping resonance candidates are refused.
inline std::vector<LorentzianPeak> fit_peaks(ResponseSpectrum& spectrum,
                                             const FitOptions& opts = {}) {
  const auto& geom = spectrum.geom;
  double tallest = 0.0;
  for (const auto& c : spectrum.candidates) tallest = std::max(tallest, c.height);
  std::vector<PeakCandidate> retained;
  for (const auto& c : spectrum.candidates)
    if (c.height >= opts.min_height_fraction * tallest) retained.push_back(c);
  spectrum.candidates = std::move(retained);

  for (size_t i = 0; i + 1 < spectrum.candidates.size(); ++i) {
    const auto& a = spectrum.candidates[i];
    const auto& b = spectrum.candidates[i + 1];
    const double half_a = 0.5 * opts.window_halfwidths * a.fwhm * 0.5;
    const double half_b = 0.5 * opts.window_halfwidths * b.fwhm * 0.5;
    if (a.center + half_a > b.center - half_b)
      throw OverlappingPeaks(a.center, b.center);
  }

  spectrum.peaks.clear();
  for (const auto& cand : spectrum.candidates) {
    double center = cand.center;
    double gamma = cand.fwhm;
    double length = 2.0 * speed_of_light / (cand.height * gamma);
    LorentzianFit fit;
    double window_lo = 0.0, window_hi = 0.0;
    std::vector<double> w(opts.window_samples), y(opts.window_samples);
    for (int round = 0; round < opts.rounds; ++round) {
      // Anchor the window to the measured FWHM: an over-wide refit window on
      // a low-contrast peak would otherwise swallow neighbouring structure
      // and inflate gamma without bound.
      const double half_span = std::min(opts.window_halfwidths * 0.5 * gamma,
                                        2.0 * opts.window_halfwidths * cand.fwhm);
      window_lo = std::max(center - half_span, 1e-12);
      window_hi = center + half_span;
      const double step = (window_hi - window_lo) / static_cast<double>(opts.window_samples - 1);
      for (size_t i = 0; i < opts.window_samples; ++i) {
        w[i] = window_lo + step * static_cast<double>(i);
        y[i] = intensity_ratio(geom, w[i]);
      }
      fit = fit_lorentzian(w, y, center, gamma, length);
      center = fit.center;
      gamma = fit.gamma;
      length = fit.length;
    }
    // A fit that walked away from its own candidate latched onto a stronger
    // neighbour: the candidate is background (band-edge fringe), not a
    // Lorentzian resonance. Drop it.
    if (std::abs(center - cand.center) > 1.5 * cand.fwhm) continue;
    if (!fit.converged || fit.max_rel_dev > opts.hard_residual)
      throw FitDiverged("fit_peaks: residual " + std::to_string(fit.max_rel_dev),
                        window_lo, window_hi);

    LorentzianPeak peak;
    peak.m = antinode_index(center, geom.ell_c);
    peak.omega = center;
    peak.gamma = gamma;
    peak.L_coupling = length;
    peak.ell_eff = peak.m * pi * speed_of_light / center;
    peak.height = 2.0 * speed_of_light / (length * gamma);
    peak.fit_residual = fit.max_rel_dev;
    peak.degraded = fit.max_rel_dev > opts.fidelity;
    peak.window_lo = window_lo;
    peak.window_hi = window_hi;
    spectrum.peaks.push_back(peak);
  }
  return spectrum.peaks;
}

// Adjacent fitted peaks spaced by more than `factor` times the widest width;
// required before single-mode couplings are meaningful.
inline bool well_separated(const std::vector<LorentzianPeak>& peaks,
                           double factor = 10.0) {
  double worst_gamma = 0.0;
  for (const auto& p : peaks) worst_gamma = std::max(worst_gamma, p.gamma);
  for (size_t i = 0; i + 1 < peaks.size(); ++i)
    if (peaks[i + 1].omega - peaks[i].omega <= factor * worst_gamma) return false;
  return true;
}

struct EffectiveLengths {
  double ell_eff = 0.0;
  double L_coupling = 0.0;
  double ell_ratio = 0.0;  // ell_eff / ell_c
  double L_ratio = 0.0;    // L / ell_c
};

inline EffectiveLengths effective_lengths(const LorentzianPeak& peak,
                                          const CavityGeometry& geom) {
  return {peak.ell_eff, peak.L_coupling, peak.ell_eff / geom.ell_c,
          peak.L_coupling / geom.ell_c};
}

}  // namespace cavity
