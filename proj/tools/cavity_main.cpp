// cavity — exact field modes, response spectra, couplings and dynamics of a
// 1D open cavity bounded by a perfect mirror and a quarter-wave Bragg stack.
//
// Subcommands: modes | scan | fit | coupling | dynamics. All options can be
// given on the command line, via a key=value config file (--config), or via
// CAVITY_* environment variables. Grids and trajectories are emitted as CSV
// with a '#' provenance header; structured records as JSON.

#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cavity/config.hpp"
#include "cavity/dynamics.hpp"
#include "cavity/io.hpp"
#include "cavity/version.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace cavity;

json meta_block(const RunConfig& cfg, const std::string& subcommand) {
  json meta;
  meta["tool"] = "cavity";
  meta["version"] = cavity::version;
  meta["subcommand"] = subcommand;
  if (!cfg.no_timestamp) meta["timestamp"] = iso_timestamp();
  json conf;
  for (const auto& [k, v] : cfg.provenance()) conf[k] = v;
  meta["config"] = conf;
  return meta;
}

void emit_warning(const std::string& type, const std::string& message) {
  json rec;
  rec["warning"] = {{"type", type}, {"message", message}};
  std::cerr << rec.dump() << "\n";
}

std::pair<size_t, size_t> parse_grid(const std::string& grid) {
  const auto x = grid.find('x');
  if (x == std::string::npos)
    throw std::invalid_argument("grid must be <lc-count>x<omega-count>");
  const long a = std::stol(grid.substr(0, x));
  const long b = std::stol(grid.substr(x + 1));
  if (a < 1 || b < 16)
    throw std::invalid_argument("grid: need >= 1 lc sample and >= 16 omega samples");
  return {static_cast<size_t>(a), static_cast<size_t>(b)};
}

unsigned thread_count(const RunConfig& cfg) {
  if (cfg.threads) return cfg.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

json peak_record(const LorentzianPeak& p, const CavityGeometry& geom) {
  const double w0 = geom.stack.omega0();
  const auto lengths = effective_lengths(p, geom);
  json rec;
  rec["m"] = p.m;
  rec["omega"] = p.omega / w0;
  rec["gamma"] = p.gamma / w0;
  rec["L_coupling"] = p.L_coupling;
  rec["ell_eff"] = p.ell_eff;
  rec["ell_eff_over_ell_c"] = lengths.ell_ratio;
  rec["L_over_ell_c"] = lengths.L_ratio;
  rec["height"] = p.height;
  rec["fit_residual"] = p.fit_residual;
  rec["degraded"] = p.degraded;
  rec["window"] = {p.window_lo / w0, p.window_hi / w0};
  return rec;
}

// Scan the configured range and fit; used by fit/coupling/dynamics.
ResponseSpectrum fitted_spectrum(const RunConfig& cfg,
                                 const CavityGeometry& geom) {
  const double w0 = geom.stack.omega0();
  const auto [lc_n, w_n] = parse_grid(cfg.grid);
  (void)lc_n;
  auto spectrum = scan_response(geom, cfg.omega_min * w0, cfg.omega_max * w0,
                                w_n, thread_count(cfg));
  FitOptions opts;
  opts.min_height_fraction = cfg.min_height_fraction;
  fit_peaks(spectrum, opts);
  return spectrum;
}

const LorentzianPeak& nearest_peak(const ResponseSpectrum& spectrum,
                                   double omega_raw) {
  const LorentzianPeak* best = nullptr;
  for (const auto& p : spectrum.peaks)
    if (!best || std::abs(p.omega - omega_raw) < std::abs(best->omega - omega_raw))
      best = &p;
  if (!best)
    throw NoResonantMode("no resonance peak found in the configured scan range");
  return *best;
}

int run_modes(const RunConfig& cfg, std::ostream& os) {
  const auto geom = cfg.geometry();
  const double w0 = geom.stack.omega0();
  const auto mode = assemble_mode(geom, cfg.omega * w0, cfg.area);
  write_csv_header(os, cfg, "modes");
  os << "x,re_phi,im_phi,intensity,region_index\n";
  const double x_lo = -geom.ell_c;
  const double x_hi = geom.stack_end() + cfg.x_margin;
  const int n = std::max(cfg.samples, 2);
  for (int i = 0; i < n; ++i) {
    const double x = x_lo + (x_hi - x_lo) * i / (n - 1);
    const complex v = mode.value(x);
    os << csv_num(x) << ',' << csv_num(v.real()) << ',' << csv_num(v.imag())
       << ',' << csv_num(std::norm(v)) << ',' << region_index(geom, x) << "\n";
  }
  return 0;
}

int run_scan(const RunConfig& cfg, std::ostream& os) {
  const auto base = cfg.geometry();
  const double w0 = base.stack.omega0();
  const auto [lc_n, w_n] = parse_grid(cfg.grid);
  std::vector<double> lcs;
  if (cfg.lc_min > 0.0 && cfg.lc_max > cfg.lc_min && lc_n > 1) {
    for (size_t i = 0; i < lc_n; ++i)
      lcs.push_back(cfg.lc_min + (cfg.lc_max - cfg.lc_min) * i / (lc_n - 1.0));
  } else {
    lcs.push_back(cfg.ell_c);
  }
  write_csv_header(os, cfg, "scan");
  os << "ell_c,omega,intensity_ratio\n";
  for (const double lc : lcs) {
    CavityGeometry geom = base;
    geom.ell_c = lc;
    const auto spectrum =
        scan_response(geom, cfg.omega_min * w0, cfg.omega_max * w0, w_n,
                      thread_count(cfg), /*locate_peaks=*/false);
    for (size_t i = 0; i < spectrum.grid.size(); ++i)
      os << csv_num(lc) << ',' << csv_num(spectrum.grid[i] / w0) << ','
         << csv_num(spectrum.values[i]) << "\n";
  }
  return 0;
}

int run_fit(const RunConfig& cfg, std::ostream& os) {
  const auto geom = cfg.geometry();
  auto spectrum = fitted_spectrum(cfg, geom);
  json doc = meta_block(cfg, "fit");
  doc["peaks"] = json::array();
  for (const auto& p : spectrum.peaks) doc["peaks"].push_back(peak_record(p, geom));
  os << doc.dump(2) << "\n";
  return 0;
}

int run_coupling(const RunConfig& cfg, std::ostream& os) {
  const auto geom = cfg.geometry();
  const auto atom = cfg.atom();
  atom.validate(geom);
  const double w0 = geom.stack.omega0();
  auto spectrum = fitted_spectrum(cfg, geom);
  const auto& peak = nearest_peak(spectrum, atom.omega_A);
  const auto coupling = g_effective(atom, peak, geom, cfg.area);
  if (coupling.validity_warning)
    emit_warning("ValidityWarning",
                 "epsilon = " + std::to_string(coupling.epsilon) +
                     " >= 0.1; O(epsilon^2) coupling formula degraded");

  json doc = meta_block(cfg, "coupling");
  doc["peak"] = peak_record(peak, geom);
  doc["g"] = {coupling.g.real() / w0, coupling.g.imag() / w0};
  doc["g_bar"] = {coupling.g_bar.real() / w0, coupling.g_bar.imag() / w0};
  doc["g_perfect"] = {coupling.g_perfect.real() / w0,
                      coupling.g_perfect.imag() / w0};
  doc["epsilon"] = coupling.epsilon;
  doc["validity_warning"] = coupling.validity_warning;
  if (cfg.gamma_atom > 0.0)
    doc["cooperativity"] = cooperativity(coupling, cfg.gamma_atom * w0);
  else
    doc["cooperativity"] = nullptr;
  os << doc.dump(2) << "\n";
  return 0;
}

int run_dynamics(const RunConfig& cfg, std::ostream& os) {
  const auto geom = cfg.geometry();
  const auto atom = cfg.atom();
  atom.validate(geom);
  const double w0 = geom.stack.omega0();

  if (cfg.model == "both") {
    ComparisonOptions opts;
    opts.scan_lo = cfg.omega_min * w0;
    opts.scan_hi = cfg.omega_max * w0;
    opts.K = cfg.window_K;
    opts.samples_per_fwhm = cfg.samples_per_fwhm;
    opts.duration = cfg.duration;
    opts.dt = cfg.dt;
    opts.area = cfg.area;
    opts.threads = thread_count(cfg);
    const auto cmp = compare_models(geom, atom, opts);
    write_csv_header(
        os, cfg, "dynamics",
        {"model = both", "mode_m = " + std::to_string(cmp.peak.m),
         "mode_omega = " + csv_num(cmp.peak.omega / w0),
         "mode_gamma = " + csv_num(cmp.peak.gamma / w0),
         "abs_g = " + csv_num(std::abs(cmp.coupling.g) / w0),
         "epsilon = " + csv_num(cmp.coupling.epsilon),
         "duration = " + csv_num(cmp.duration), "dt = " + csv_num(cmp.dt),
         "max_pop_discrepancy = " + csv_num(cmp.max_pop_diff),
         "max_phase_error = " + csv_num(cmp.max_phase_diff),
         "continuum_norm_drift = " + csv_num(cmp.norm_drift)});
    os << "t,pe_continuum,pe_effective,pop_diff,norm_continuum,norm_effective\n";
    const size_t n = std::min(cmp.continuum.t.size(), cmp.effective.t.size());
    for (size_t i = 0; i < n; ++i)
      os << csv_num(cmp.continuum.t[i]) << ',' << csv_num(cmp.continuum.pe[i])
         << ',' << csv_num(cmp.effective.pe[i]) << ','
         << csv_num(std::abs(cmp.continuum.pe[i] - cmp.effective.pe[i])) << ','
         << csv_num(cmp.continuum.norm[i]) << ','
         << csv_num(cmp.effective.norm[i]) << "\n";
    return 0;
  }

  auto spectrum = fitted_spectrum(cfg, geom);
  const auto& peak = nearest_peak(spectrum, atom.omega_A);
  const auto coupling = g_effective(atom, peak, geom, cfg.area);
  if (coupling.validity_warning)
    emit_warning("ValidityWarning",
                 "epsilon = " + std::to_string(coupling.epsilon) + " >= 0.1");
  const double gmod = std::abs(coupling.g);
  const double duration =
      cfg.duration > 0.0 ? cfg.duration : 5.0 * pi / std::max(gmod, 1e-12);
  double dt = cfg.dt;
  if (!(dt > 0.0)) {
    const double fastest =
        std::max({2.0 * gmod, cfg.window_K * peak.gamma,
                  std::abs(peak.omega - atom.omega_A), atom.omega_A + peak.omega});
    dt = std::min(recommended_dt(fastest, 1e-7 / duration), duration / 1000.0);
  }
  const std::vector<std::string> extra = {
      "model = " + cfg.model, "mode_m = " + std::to_string(peak.m),
      "mode_omega = " + csv_num(peak.omega / w0),
      "mode_gamma = " + csv_num(peak.gamma / w0),
      "abs_g = " + csv_num(gmod / w0),
      "epsilon = " + csv_num(coupling.epsilon), "duration = " + csv_num(duration),
      "dt = " + csv_num(dt)};

  if (cfg.model == "continuum") {
    const auto grid = build_continuum_grid(geom, atom, peak, cfg.area,
                                           cfg.window_K, cfg.samples_per_fwhm);
    const auto traj = evolve_continuum(grid, excited_state(grid), atom.omega_A,
                                       duration, dt);
    write_csv_header(os, cfg, "dynamics", extra);
    os << "t,pe,re_ce,im_ce,field_pop,norm\n";
    for (size_t i = 0; i < traj.t.size(); ++i)
      os << csv_num(traj.t[i]) << ',' << csv_num(traj.pe[i]) << ','
         << csv_num(traj.ce[i].real()) << ',' << csv_num(traj.ce[i].imag())
         << ',' << csv_num(traj.field_pop[i]) << ',' << csv_num(traj.norm[i])
         << "\n";
    return 0;
  }
  if (cfg.model == "effective") {
    // Retain every fitted peak in the scan range.
    std::vector<EffectiveMode> modes;
    std::vector<int> labels;
    for (const auto& p : spectrum.peaks) {
      modes.push_back(effective_mode(g_effective(atom, p, geom, cfg.area)));
      labels.push_back(p.m);
    }
    const auto traj = evolve_effective(modes, atom.omega_A, duration, dt,
                                       cfg.counter_rotating);
    write_csv_header(os, cfg, "dynamics", extra);
    os << "t,pe,re_ce,im_ce";
    for (const int m : labels) os << ",pop_m" << m;
    os << ",norm\n";
    for (size_t i = 0; i < traj.t.size(); ++i) {
      os << csv_num(traj.t[i]) << ',' << csv_num(traj.pe[i]) << ','
         << csv_num(traj.ce[i].real()) << ',' << csv_num(traj.ce[i].imag());
      for (const double pop : traj.mode_pops[i]) os << ',' << csv_num(pop);
      os << ',' << csv_num(traj.norm[i]) << "\n";
    }
    return 0;
  }
  throw std::invalid_argument("model must be continuum, effective or both");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"1D open-cavity fields, spectra, couplings and dynamics"};
  app.fallthrough();
  app.set_config("--config")->check(CLI::ExistingFile);

  app.add_option("--n1", cfg.n1, "high refractive index")->envname("CAVITY_N1");
  app.add_option("--n2", cfg.n2, "low refractive index")->envname("CAVITY_N2");
  app.add_option("--N,--pairs", cfg.layers_N, "pair count N (stack has 2N-1 layers)")
      ->envname("CAVITY_N");
  app.add_option("--ell-c", cfg.ell_c, "geometric cavity length / lambda0")
      ->envname("CAVITY_ELL_C");
  app.add_option("--atom-x", cfg.atom_x, "atom position in (-ell_c, 0)")
      ->envname("CAVITY_ATOM_X");
  app.add_option("--atom-omega", cfg.atom_omega, "atomic frequency / omega0")
      ->envname("CAVITY_ATOM_OMEGA");
  app.add_option("--dipole-re", cfg.dipole_re, "Re d")->envname("CAVITY_DIPOLE_RE");
  app.add_option("--dipole-im", cfg.dipole_im, "Im d")->envname("CAVITY_DIPOLE_IM");
  app.add_option("--area", cfg.area, "transverse mode area A")->envname("CAVITY_AREA");
  app.add_option("--gamma-atom", cfg.gamma_atom,
                 "atomic linewidth / omega0 for the cooperativity output")
      ->envname("CAVITY_GAMMA_ATOM");
  app.add_option("--omega", cfg.omega, "probe frequency / omega0 (modes)")
      ->envname("CAVITY_OMEGA");
  app.add_option("--samples", cfg.samples, "profile sample count (modes)")
      ->envname("CAVITY_SAMPLES");
  app.add_option("--x-margin", cfg.x_margin, "profile margin past the stack")
      ->envname("CAVITY_X_MARGIN");
  app.add_option("--omega-min", cfg.omega_min, "scan start / omega0")
      ->envname("CAVITY_OMEGA_MIN");
  app.add_option("--omega-max", cfg.omega_max, "scan end / omega0")
      ->envname("CAVITY_OMEGA_MAX");
  app.add_option("--lc-min", cfg.lc_min, "cavity-length sweep start")
      ->envname("CAVITY_LC_MIN");
  app.add_option("--lc-max", cfg.lc_max, "cavity-length sweep end")
      ->envname("CAVITY_LC_MAX");
  app.add_option("--grid", cfg.grid, "sweep grid <lc-count>x<omega-count>")
      ->envname("CAVITY_GRID");
  app.add_option("--min-height-fraction", cfg.min_height_fraction,
                 "ignore peak candidates below this fraction of the tallest")
      ->envname("CAVITY_MIN_HEIGHT_FRACTION");
  app.add_option("--duration", cfg.duration, "simulated time (0 = 5 Rabi periods)")
      ->envname("CAVITY_DURATION");
  app.add_option("--dt", cfg.dt, "integrator step (0 = recommended)")
      ->envname("CAVITY_DT");
  app.add_option("--model", cfg.model, "dynamics model: continuum|effective|both")
      ->envname("CAVITY_MODEL");
  app.add_flag("--counter-rotating", cfg.counter_rotating,
               "include counter-rotating couplings (effective model)")
      ->envname("CAVITY_COUNTER_ROTATING");
  app.add_option("--window-K", cfg.window_K, "continuum window half-width, in widths")
      ->envname("CAVITY_WINDOW_K");
  app.add_option("--samples-per-fwhm", cfg.samples_per_fwhm,
                 "continuum grid resolution")
      ->envname("CAVITY_SAMPLES_PER_FWHM");
  app.add_option("--out", cfg.out, "output path (default stdout)")
      ->envname("CAVITY_OUT");
  app.add_option("--format", cfg.format, "output format (auto|csv|json)")
      ->envname("CAVITY_FORMAT");
  app.add_option("--threads", cfg.threads, "scan worker threads (0 = auto)")
      ->envname("CAVITY_THREADS");
  app.add_flag("--no-timestamp", cfg.no_timestamp,
               "suppress the timestamp header for byte-identical reruns")
      ->envname("CAVITY_NO_TIMESTAMP");

  auto* sub_modes = app.add_subcommand("modes", "emit a field profile Phi_omega(x)");
  auto* sub_scan = app.add_subcommand("scan", "emit |T(omega)|^2 over a frequency (x length) grid");
  auto* sub_fit = app.add_subcommand("fit", "locate and fit resonance peaks");
  auto* sub_coupling = app.add_subcommand("coupling", "effective atom-cavity coupling for the nearest mode");
  auto* sub_dynamics = app.add_subcommand("dynamics", "single-excitation dynamics");
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  // Resolve the output stream and validate the configuration.
  std::ofstream file;
  std::ostream* os = &std::cout;
  std::string subcommand;
  try {
    if (sub_modes->parsed()) subcommand = "modes";
    else if (sub_scan->parsed()) subcommand = "scan";
    else if (sub_fit->parsed()) subcommand = "fit";
    else if (sub_coupling->parsed()) subcommand = "coupling";
    else subcommand = "dynamics";

    const bool wants_json = subcommand == "fit" || subcommand == "coupling";
    if (cfg.format != "auto" && cfg.format != (wants_json ? "json" : "csv"))
      throw std::invalid_argument(subcommand + " emits " +
                                  (wants_json ? "json" : "csv") + " output");
    cfg.geometry();  // validates geometry parameters
    parse_grid(cfg.grid);
    if (!cfg.out.empty()) {
      file.open(cfg.out);
      if (!file) throw std::invalid_argument("cannot open output file: " + cfg.out);
      os = &file;
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (subcommand == "modes") return run_modes(cfg, *os);
    if (subcommand == "scan") return run_scan(cfg, *os);
    if (subcommand == "fit") return run_fit(cfg, *os);
    if (subcommand == "coupling") return run_coupling(cfg, *os);
    return run_dynamics(cfg, *os);
  } catch (const std::exception& e) {
    std::string type = "RuntimeError";
    if (dynamic_cast<const FitDiverged*>(&e)) type = "FitDiverged";
    else if (dynamic_cast<const OverlappingPeaks*>(&e)) type = "OverlappingPeaks";
    else if (dynamic_cast<const NumericalInstability*>(&e)) type = "NumericalInstability";
    else if (dynamic_cast<const NoResonantMode*>(&e)) type = "NoResonantMode";
    else if (dynamic_cast<const std::domain_error*>(&e)) type = "DomainError";
    else if (dynamic_cast<const std::invalid_argument*>(&e)) type = "InvalidArgument";
    nlohmann::ordered_json rec;
    rec["error"] = {{"type", type}, {"message", e.what()}};
    std::cerr << rec.dump() << "\n";
    return 3;
  }
}
