#include <cmath>

#include "doctest.h"
#include "dnls/groundstate.hpp"

using namespace dnls;

TEST_CASE("presets carry the requested power") {
  const auto lat = build_torus(2, 8, 0.5);
  for (auto p : {InitPreset::single_site, InitPreset::gaussian_bump, InitPreset::uniform})
    CHECK(power(preset_state(lat, p, 3.7)) == doctest::Approx(3.7).epsilon(1e-12));
  CHECK(std::string(to_string(InitPreset::gaussian_bump)) == "gaussian_bump");
}

TEST_CASE("uncoupled sites condense on one site") {
  const auto lat = build_torus(1, 10, 1.0);
  const auto m = cubic_focusing(nearest_neighbor_kernel(lat, 0.0));
  const double nu = 2.5;
  const auto ms = minimize_multistart(m, nu);
  // -1/2 sum |f|^4 is smallest with all mass on one site
  CHECK(ms.best.energy == doctest::Approx(-nu * nu / 2.0).epsilon(1e-8));
  CHECK(ms.attempts.size() == 3);
}

TEST_CASE("uniform energy is the delocalized value") {
  const auto lat = build_torus(3, 4, 0.25);
  const auto m = cubic_focusing(nearest_neighbor_kernel(lat));
  const double nu = 5.0;
  CHECK(uniform_energy(m, nu) == doctest::Approx(-nu * nu / (2.0 * lat.n)).epsilon(1e-12));
}

TEST_CASE("wide one-dimensional minimizer approaches the continuum soliton") {
  // continuum: inf { int |u'|^2 - |u|^4 / 2 : int |u|^2 = N } = -N^3 / 48
  const auto lat = build_torus(1, 512, 1.0);
  const auto m = cubic_focusing(nearest_neighbor_kernel(lat));
  const double nu = 0.5;
  MinimizeOptions o;
  o.tol = 1e-9;
  const auto gs = minimize_at_power(m, nu, InitPreset::gaussian_bump, o);
  CHECK(gs.converged);
  CHECK(power(gs.g) == doctest::Approx(nu).epsilon(1e-10));
  CHECK(gs.energy == doctest::Approx(-nu * nu * nu / 48.0).epsilon(0.01));
  CHECK(el_residual(m, gs.g, gs.omega) <= 1e-8);
}

TEST_CASE("minimizer satisfies the Euler-Lagrange equation and beats the presets") {
  const auto lat = build_torus(2, 12, 1.0);
  const auto m = cubic_focusing(nearest_neighbor_kernel(lat));
  const double nu = 20.0;
  const auto ms = minimize_multistart(m, nu);
  CHECK(ms.best.converged);
  CHECK(ms.best.residual <= 1e-8);
  CHECK(el_residual(m, ms.best.g, ms.best.omega) <= 1e-7);
  CHECK(ms.best.energy >= -nu * nu / 2.0);
  CHECK(ms.best.energy <= uniform_energy(m, nu));
  for (auto p : {InitPreset::single_site, InitPreset::gaussian_bump, InitPreset::uniform})
    CHECK(ms.best.energy <= hamiltonian(m, preset_state(lat, p, nu)));
}

TEST_CASE("soliton ansatz is normalized") {
  for (double delta : {0.0, 0.5})
    for (double a : {0.5, 1.0, 2.0}) {
      const int L = static_cast<int>(std::ceil(60.0 / a));
      const double h = 0.1;
      const auto f = soliton_ansatz(3.0, a, delta, h, build_torus(1, L, h));
      CHECK(h * power(f) == doctest::Approx(3.0).epsilon(1e-10));
    }
  CHECK_THROWS_AS(soliton_ansatz(1.0, 1.0, 0.25, 1.0, build_torus(1, 16, 1.0)), std::invalid_argument);
}

TEST_CASE("no threshold on a long chain in one dimension") {
  const auto lat = build_torus(1, 4096, 1.0);
  const auto m = cubic_focusing(nearest_neighbor_kernel(lat));
  MinimizeOptions o;
  o.max_iters = 3000;
  const auto r = excitation_threshold(m, {0.05, 1.0}, 0.01, o);
  CHECK_FALSE(r.nu_c.has_value());
  CHECK_FALSE(r.inconsistent);
  REQUIRE(!r.probes.empty());
  CHECK(r.probes.front().localized);
}

TEST_CASE("threshold exists in three dimensions") {
  const auto lat = build_torus(3, 8, 1.0);
  const auto m = cubic_focusing(nearest_neighbor_kernel(lat));
  const auto r = excitation_threshold(m, {0.5, 200.0}, 0.5);
  REQUIRE(r.nu_c.has_value());
  CHECK_FALSE(r.inconsistent);
  CHECK(r.bracket_hi - r.bracket_lo <= 0.5);
  for (const auto& p : r.probes) CHECK(p.localized == (p.nu >= r.bracket_hi));
}

TEST_CASE("bad arguments") {
  const auto lat = build_torus(1, 8, 1.0);
  const auto m = cubic_focusing(nearest_neighbor_kernel(lat));
  CHECK_THROWS_AS(minimize_at_power(m, -1.0, InitPreset::uniform), std::invalid_argument);
  CHECK_THROWS_AS(excitation_threshold(m, {2.0, 1.0}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(minimize_at_power(cubic_focusing(nearest_neighbor_kernel(build_chain(8, 1.0))), 1.0,
                                    InitPreset::uniform),
                  std::invalid_argument);
}
