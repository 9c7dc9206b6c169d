#include <catch2/catch_amalgamated.hpp>

#include "cavity/dynamics.hpp"
#include "support/oracles.hpp"

using namespace cavity;

namespace {

LorentzianPeak peak_near(const CavityGeometry& geom, double omega,
                         double rel_span = 0.1, size_t samples = 6000) {
  auto spectrum = scan_response(geom, omega * (1.0 - rel_span),
                                omega * (1.0 + rel_span), samples, 2);
  fit_peaks(spectrum);
  REQUIRE(!spectrum.peaks.empty());
  const LorentzianPeak* best = &spectrum.peaks.front();
  for (const auto& p : spectrum.peaks)
    if (std::abs(p.omega - omega) < std::abs(best->omega - omega)) best = &p;
  return *best;
}

template <typename F>
std::complex<double> simpson_c(F&& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  std::complex<double> sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * (h / 3.0);
}

}  // namespace

TEST_CASE("decoupled atom keeps its excitation") {
  ContinuumGrid grid;
  for (int k = 0; k < 64; ++k) {
    grid.omega.push_back(5.0 + 0.01 * k);
    grid.weight.push_back(0.01);
    grid.eta.push_back({0.0, 0.0});  // d = 0
  }
  const auto traj =
      evolve_continuum(grid, excited_state(grid), 5.3, 10.0, 0.01);
  for (const double p : traj.pe) REQUIRE(p == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("effective model: exact Rabi and damped Rabi") {
  EffectiveMode mode;
  mode.omega = 6.0;
  mode.gamma = 0.0;
  mode.g = {0.0, 0.3};
  mode.g_bar = mode.g;

  auto traj = evolve_effective({mode}, 6.0, 20.0, 0.002);
  for (size_t i = 0; i < traj.t.size(); ++i) {
    const double want = std::pow(std::cos(0.3 * traj.t[i]), 2);
    REQUIRE(traj.pe[i] == Catch::Approx(want).margin(1e-9));
  }

  mode.gamma = 0.05;
  traj = evolve_effective({mode}, 6.0, 30.0, 0.002);
  for (size_t i = 0; i < traj.t.size(); ++i) {
    const double want = oracles::damped_rabi_pe(0.3, 0.05, traj.t[i]);
    REQUIRE(traj.pe[i] == Catch::Approx(want).margin(1e-8));
  }
  // leakage accounting: tracked population non-increasing
  for (size_t i = 1; i < traj.norm.size(); ++i)
    REQUIRE(traj.norm[i] <= traj.norm[i - 1] + 1e-10);

  // detuned transfer bound ~ (2g/Delta)^2
  mode.gamma = 0.0;
  const double delta = 3.0;
  traj = evolve_effective({mode}, 6.0 - delta, 40.0, 0.001);
  double max_transfer = 0.0;
  for (const double p : traj.pe) max_transfer = std::max(max_transfer, 1.0 - p);
  const double bound = 4.0 * std::norm(mode.g) / (4.0 * std::norm(mode.g) + delta * delta);
  REQUIRE(max_transfer <= 1.05 * bound);
  REQUIRE(max_transfer >= 0.5 * bound);
}

TEST_CASE("counter-rotating block") {
  EffectiveMode mode;
  mode.omega = 6.3;
  mode.gamma = 1e-4;
  mode.g = {0.0, 0.25};
  mode.g_bar = {0.0, 0.2};

  // starting from |e,0> the counter-rotating terms are spectators
  const auto rwa = evolve_effective({mode}, 6.1, 15.0, 0.001, false);
  const auto crr = evolve_effective({mode}, 6.1, 15.0, 0.001, true);
  for (size_t i = 0; i < rwa.t.size(); ++i)
    REQUIRE(rwa.pe[i] == Catch::Approx(crr.pe[i]).margin(1e-12));
  for (const double p : crr.pg0) REQUIRE(p == 0.0);

  // starting from |g,0>, a virtual |e,1> pair appears with the
  // sum-frequency suppression (2 gbar / (w_A + w_m))^2
  const auto vac = evolve_effective({mode}, 6.1, 30.0, 0.0005, true,
                                    InitialState::GroundVacuum);
  double max_pair = 0.0;
  for (const auto& pops : vac.cr_pops)
    max_pair = std::max(max_pair, pops[0]);
  const double sum_freq = 6.1 + mode.omega;
  const double bound = std::norm(2.0 * mode.g_bar / sum_freq);
  REQUIRE(max_pair > 0.0);
  REQUIRE(max_pair <= 1.1 * bound);
  REQUIRE(max_pair >= 0.5 * bound);

  CHECK_THROWS_AS(
      evolve_effective({mode}, 6.1, 1.0, 0.001, false, InitialState::GroundVacuum),
      std::invalid_argument);
}

TEST_CASE("low-Q slab: golden-rule decay of the excited atom") {
  CavityGeometry g{{1.1, 1.0, 1, 1.0}, 0.5};
  const double w0 = g.stack.omega0();
  AtomSpec atom;
  atom.omega_A = w0;
  atom.x_A = -0.25;
  atom.d = {0.1, 0.0};

  const auto grid = sample_eta_grid(g, atom, 0.25 * w0, 2.0 * w0, 24001);
  const double rate = 2.0 * pi * std::norm(eta_continuum(atom, g, atom.omega_A));
  const double duration = 2.5 / rate;
  const auto traj = evolve_continuum(grid, excited_state(grid), atom.omega_A,
                                     duration, 0.004);
  // fit the log decay over the central stretch
  double t1 = 0.6 / rate, t2 = 2.2 / rate;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t i = 0; i < traj.t.size(); ++i) {
    if (traj.t[i] < t1 || traj.t[i] > t2) continue;
    sx += traj.t[i];
    sy += std::log(traj.pe[i]);
    sxx += traj.t[i] * traj.t[i];
    sxy += traj.t[i] * std::log(traj.pe[i]);
    ++n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  REQUIRE(-slope == Catch::Approx(rate).epsilon(0.15));
}

TEST_CASE("strong coupling: continuum matches the damped-Rabi oracle") {
  CavityGeometry g{{2.0, 1.0, 6, 1.0}, 0.5};
  const auto peak = peak_near(g, g.stack.omega0());
  AtomSpec atom;
  atom.omega_A = peak.omega;
  atom.x_A = -g.ell_c + 0.5 * pi / peak.omega;
  const auto coupling = g_effective(atom, peak, g);
  const double gmod = std::abs(coupling.g);

  const auto grid = build_continuum_grid(g, atom, peak, 1.0, 150.0, 120.0);
  const double duration = 5.0 * pi / gmod;
  const double dt =
      std::min(recommended_dt(2.0 * gmod, 1e-7 / duration), duration / 1200.0);
  const auto traj =
      evolve_continuum(grid, excited_state(grid), atom.omega_A, duration, dt);

  REQUIRE(traj.max_norm_drift < 1e-6);
  double worst = 0.0;
  for (size_t i = 0; i < traj.t.size(); ++i)
    worst = std::max(worst, std::abs(traj.pe[i] - oracles::damped_rabi_pe(
                                                      gmod, peak.gamma, traj.t[i])));
  REQUIRE(worst < 0.05);

  // convergence: halving dt moves the trajectory by < 1e-4 sup-norm,
  // doubling the grid density by < 1e-3
  EvolveOptions opts;
  opts.sample_stride = 50;
  const auto a = evolve_continuum(grid, excited_state(grid), atom.omega_A,
                                  duration / 4.0, dt, opts);
  opts.sample_stride = 100;
  const auto b = evolve_continuum(grid, excited_state(grid), atom.omega_A,
                                  duration / 4.0, dt / 2.0, opts);
  size_t n = std::min(a.t.size(), b.t.size());
  for (size_t i = 0; i < n; ++i) {
    REQUIRE(a.t[i] == Catch::Approx(b.t[i]).margin(1e-9));
    REQUIRE(std::abs(a.pe[i] - b.pe[i]) < 1e-4);
  }
  const auto dense = build_continuum_grid(g, atom, peak, 1.0, 150.0, 240.0);
  opts.sample_stride = 50;
  const auto c = evolve_continuum(dense, excited_state(dense), atom.omega_A,
                                  duration / 4.0, dt, opts);
  n = std::min(a.t.size(), c.t.size());
  for (size_t i = 0; i < n; ++i)
    REQUIRE(std::abs(a.pe[i] - c.pe[i]) < 1e-3);
}

TEST_CASE("I1 and I2 quadratures match their closed forms") {
  CavityGeometry g{{2.0, 1.0, 8, 1.0}, 0.5};
  const auto peak = peak_near(g, g.stack.omega0());
  AtomSpec atom;
  atom.omega_A = peak.omega - 3.0 * peak.gamma;  // slightly detuned
  atom.x_A = -g.ell_c + 0.5 * pi / peak.omega;
  const auto coupling = g_effective(atom, peak, g);
  const double delta_m = peak.omega - atom.omega_A;
  const complex pole(delta_m, -0.5 * peak.gamma);
  const double tol = std::max(0.01, coupling.epsilon * coupling.epsilon);

  const double K = 600.0;
  const double lo = peak.omega - K * peak.gamma, hi = peak.omega + K * peak.gamma;
  auto eta_m = [&](double w) {
    return eta_mode_selective(atom, g, peak, w, K + 1.0);
  };

  const complex i1 = simpson_c([&](double w) -> complex
                               { return std::norm(eta_m(w)); }, lo, hi, 60000);
  REQUIRE(std::abs(i1 - std::norm(coupling.g)) <= tol * std::norm(coupling.g));

  for (double tau : {1.0 / peak.gamma, 5.0 / peak.gamma}) {
    const complex i2 = simpson_c(
        [&](double w) {
          return std::norm(eta_m(w)) * (w - atom.omega_A) *
                 std::exp(complex(0.0, -(w - atom.omega_A) * tau));
        },
        lo, hi, 400000);
    const complex want = std::norm(coupling.g) * pole *
                         std::exp(complex(0.0, -1.0) * pole * tau);
    REQUIRE(std::abs(i2 - want) <= tol * std::abs(want));
  }

  // tau = 0: the symmetric-window quadrature reproduces the real part Delta_m
  const complex i2_0 = simpson_c(
      [&](double w) -> complex { return std::norm(eta_m(w)) * (w - atom.omega_A); },
      lo, hi, 60000);
  REQUIRE(i2_0.real() ==
          Catch::Approx(std::norm(coupling.g) * delta_m).epsilon(0.01));
}

TEST_CASE("norm-drift guard flags an oversized step") {
  CavityGeometry g{{2.0, 1.0, 6, 1.0}, 0.5};
  const auto peak = peak_near(g, g.stack.omega0());
  AtomSpec atom;
  atom.omega_A = peak.omega;
  atom.x_A = -g.ell_c + 0.5 * pi / peak.omega;
  const auto grid = build_continuum_grid(g, atom, peak, 1.0, 50.0, 60.0);
  CHECK_THROWS_AS(
      evolve_continuum(grid, excited_state(grid), atom.omega_A, 40.0, 1.1),
      NumericalInstability);
}

TEST_CASE("stopband-detuned atom: emission inhibited in both models") {
  CavityGeometry g{{1.25, 1.0, 10, 1.0}, 0.5};
  const double w0 = g.stack.omega0();
  const auto peak = peak_near(g, w0);
  AtomSpec atom;
  atom.omega_A = 0.92 * w0;  // mid-stopband, far from the peak
  atom.x_A = -0.25;
  atom.d = {0.007, 0.0};

  const auto grid = sample_eta_grid(g, atom, 0.85 * w0, 1.15 * w0, 30001);
  const double duration = 100.0;
  const auto cont = evolve_continuum(grid, excited_state(grid), atom.omega_A,
                                     duration, 0.02);
  REQUIRE(1.0 - cont.pe.back() < 0.01);

  const auto coupling = g_effective(atom, peak, g);
  const auto eff = evolve_effective({effective_mode(coupling)}, atom.omega_A,
                                    duration, 0.02);
  REQUIRE(1.0 - eff.pe.back() < 0.01);

  // transfer bounded by the detuning suppression factor
  const double delta = std::abs(peak.omega - atom.omega_A);
  const double bound = std::norm(2.0 * coupling.g / delta);
  double max_transfer = 0.0;
  for (const double p : eff.pe) max_transfer = std::max(max_transfer, 1.0 - p);
  REQUIRE(max_transfer <= 1.5 * bound);
}

TEST_CASE("model cross-validation on a moderate stack") {
  CavityGeometry g{{2.0, 1.0, 6, 1.0}, 0.5};
  AtomSpec atom;
  const auto peak = peak_near(g, g.stack.omega0());
  atom.omega_A = peak.omega;
  atom.x_A = -g.ell_c + 0.5 * pi / peak.omega;

  ComparisonOptions opts;
  opts.scan_samples = 6000;
  opts.K = 150.0;
  opts.samples_per_fwhm = 120.0;
  opts.rabi_periods = 2.0;
  opts.threads = 2;
  const auto cmp = compare_models(g, atom, opts);
  CHECK(cmp.max_pop_diff < 0.05);
  CHECK(cmp.norm_drift < 1e-6);
  CHECK(cmp.peak.m == 1);

  AtomSpec detuned = atom;
  detuned.omega_A = 0.9 * peak.omega;
  CHECK_THROWS_AS(compare_models(g, detuned, opts), NoResonantMode);
}
