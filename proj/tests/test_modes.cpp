#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cavity/modes.hpp"
#include "support/oracles.hpp"

using namespace cavity;

namespace {

double max_abs_in_region(const ModeField& mode, int j, int samples = 4000) {
  const auto ival = layer_bounds(mode.geom, j);
  const double hi = std::isfinite(ival.hi) ? ival.hi : ival.lo + 2.0;
  double best = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double x = ival.lo + (hi - ival.lo) * i / samples;
    best = std::max(best, std::abs(mode.value_in_region(j, x)));
  }
  return best;
}

}  // namespace

TEST_CASE("slab reflectivity basics") {
  CHECK(fresnel_r1(1.25) == Catch::Approx(1.0 / 9.0).epsilon(1e-15));

  // n1 -> 1: no dielectric, r = 0 and |t| = 1 at any frequency
  CavityGeometry none{{1.0, 1.0, 1, 1.0}, 0.5};
  for (double w : {1.0, 4.0, 9.3}) {
    const auto bs = single_layer_coeffs(none, w);
    CHECK(std::abs(bs.r) < 1e-15);
    CHECK(std::abs(bs.t) == Catch::Approx(1.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(single_layer_coeffs(none, -1.0), std::domain_error);
}

TEST_CASE("beam splitter relations hold over random samples") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> un1(1.05, 3.0);
  std::uniform_real_distribution<double> uw(1e-3, 3.0 * 2.0 * pi);
  for (int i = 0; i < 2000; ++i) {
    CavityGeometry g{{un1(rng), 1.0, 1, 1.0}, 0.5};
    const auto bs = single_layer_coeffs(g, uw(rng));
    REQUIRE(std::abs(std::norm(bs.t) + std::norm(bs.r) - 1.0) < 1e-12);
    REQUIRE(std::abs(std::conj(bs.r) * bs.t + std::conj(bs.t) * bs.r) < 1e-12);
  }
}

TEST_CASE("multilayer solver reduces to the single-slab closed form") {
  CavityGeometry g{{1.25, 1.0, 1, 1.0}, 0.5};
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> uw(0.5, 3.0 * 2.0 * pi);
  std::uniform_real_distribution<double> ux(-g.ell_c, g.stack_end() + 1.5);
  for (int i = 0; i < 100; ++i) {
    const double w = uw(rng);
    const double x = ux(rng);
    const auto mode = assemble_mode(g, w);
    const complex got = mode.value(x);
    const complex want = oracles::single_slab_mode(g, w, x);
    REQUIRE(std::abs(got - want) <=
            1e-12 * std::max({std::abs(want), std::abs(got), 1e-3}));
  }

  // response function base case
  for (double w : {2.0, 6.0, 11.0}) {
    const auto rv = multilayer_response(g, w);
    const complex T = single_layer_response(g, w);
    REQUIRE(std::abs(rv.response - T) <= 1e-12 * std::abs(T));
    REQUIRE(std::abs(rv.prefactor - 1.0) < 1e-12);
  }
}

TEST_CASE("quarter-wave phase per layer at the design frequency") {
  StackSpec s{1.7, 1.0, 3, 1.0};
  const double w0 = s.omega0();
  CHECK(s.n1 * w0 * s.delta() == Catch::Approx(0.5 * pi).epsilon(1e-14));
  CHECK(s.n2 * w0 * s.alpha() == Catch::Approx(0.5 * pi).epsilon(1e-14));
}

TEST_CASE("recursion prefactor equals the response of the shorter stack") {
  for (int N = 2; N <= 6; ++N) {
    CavityGeometry big{{1.25, 1.0, N, 1.0}, 0.5};
    CavityGeometry small{{1.25, 1.0, N - 1, 1.0}, 0.5};
    for (double r : {0.31, 0.77, 0.99, 1.22, 1.61}) {
      const double w = r * big.stack.omega0();
      const auto rv = multilayer_response(big, w);
      const auto prev = multilayer_response(small, w);
      REQUIRE(std::abs(rv.prefactor - prev.response) <=
              1e-10 * std::abs(prev.response));
    }
  }
}

TEST_CASE("mode continuity, mirror node, unit scattering amplitudes") {
  CavityGeometry g{{1.25, 1.0, 11, 1.0}, 0.75};
  for (double r : {0.93, 1.0, 1.0985, 1.22}) {
    const double w = r * g.stack.omega0();
    const auto mode = assemble_mode(g, w);
    for (int j = 1; j < g.region_count(); ++j) {
      const double xi = region_start(g, j);
      const complex vl = mode.value_in_region(j - 1, xi);
      const complex vr = mode.value_in_region(j, xi);
      const complex dl = mode.derivative_in_region(j - 1, xi);
      const complex dr = mode.derivative_in_region(j, xi);
      REQUIRE(std::abs(vl - vr) <= 1e-10 * std::max(std::abs(vl), std::abs(vr)));
      REQUIRE(std::abs(dl - dr) <= 1e-10 * std::max(std::abs(dl), std::abs(dr)));
    }
    const double peak_in = max_abs_in_region(mode, 0);
    REQUIRE(std::abs(mode.value(-g.ell_c)) < 1e-14 * peak_in);

    // outside region: |incoming| = |outgoing| = 1/sqrt(2 pi c A)
    const auto [ap, am] = mode.amplitude_pair(g.region_count() - 1);
    REQUIRE(std::abs(ap) == Catch::Approx(std::abs(am)).epsilon(1e-12));
    REQUIRE(std::abs(am) * std::sqrt(2.0 * pi * speed_of_light) ==
            Catch::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("inside mode is the response-weighted standing wave") {
  CavityGeometry g{{1.25, 1.0, 7, 1.0}, 0.6};
  const double w = 1.03 * g.stack.omega0();
  const auto mode = assemble_mode(g, w);
  const complex Tcal = multilayer_response(g, w).response;
  for (double x : {-0.55, -0.31, -0.02}) {
    const complex want = 2.0 * complex(0.0, 1.0) *
                         std::exp(complex(0.0, w * g.ell_c)) * Tcal *
                         std::sin(w * (x + g.ell_c)) /
                         std::sqrt(2.0 * pi * speed_of_light);
    REQUIRE(std::abs(mode.value(x) - want) <= 1e-12 * std::abs(want));
  }
}

TEST_CASE("intensity ratio between cavity and outside is |T|^2") {
  CavityGeometry g{{1.25, 1.0, 5, 1.0}, 0.5};
  for (double r : {0.97, 1.0, 1.05}) {
    const double w = r * g.stack.omega0();
    const auto mode = assemble_mode(g, w);
    const double ratio = std::pow(
        max_abs_in_region(mode, 0, 20000) /
            max_abs_in_region(mode, g.region_count() - 1, 20000),
        2);
    const double expect = std::norm(multilayer_response(g, w).response);
    REQUIRE(ratio == Catch::Approx(expect).epsilon(1e-4));
    // and the independent transfer-matrix march agrees
    REQUIRE(oracles::transfer_matrix_ratio(g, w) ==
            Catch::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("stack intensity profiles match the figure regimes") {
  // on design resonance with lc = lambda0/2 the intensity decays layer by layer
  CavityGeometry g_res{{1.25, 1.0, 11, 1.0}, 0.5};
  const auto mode_res = assemble_mode(g_res, g_res.stack.omega0());
  double prev = max_abs_in_region(mode_res, 0);
  for (int j = 1; j < g_res.region_count() - 1; ++j) {
    const double cur = max_abs_in_region(mode_res, j);
    REQUIRE(cur < prev * (1.0 + 1e-9));
    prev = cur;
  }

  // lc = 3 lambda0/4: band-edge resonance stores more light in the stack
  CavityGeometry g_edge{{1.25, 1.0, 11, 1.0}, 0.75};
  const auto mode_edge = assemble_mode(g_edge, 1.1022 * g_edge.stack.omega0());
  double cavity_max = max_abs_in_region(mode_edge, 0);
  double stack_max = 0.0;
  for (int j = 1; j < g_edge.region_count() - 1; ++j)
    stack_max = std::max(stack_max, max_abs_in_region(mode_edge, j));
  REQUIRE(stack_max > cavity_max);
}

TEST_CASE("rejects unsupported inputs") {
  CavityGeometry g{{1.25, 1.2, 3, 1.0}, 0.5};
  CHECK_THROWS_AS(bj_recursion(g, 2.0), std::invalid_argument);  // n2 != 1
  CavityGeometry ok{{1.25, 1.0, 3, 1.0}, 0.5};
  CHECK_THROWS_AS(bj_recursion(ok, 0.0), std::domain_error);
  CHECK_THROWS_AS(assemble_mode(ok, 2.0, -1.0), std::invalid_argument);
  const auto mode = assemble_mode(ok, 2.0);
  CHECK_THROWS_AS(mode.value(-1.0), std::domain_error);
}
