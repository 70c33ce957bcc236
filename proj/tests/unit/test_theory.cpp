#include <chrono>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "dnls/theory.hpp"

using namespace dnls::theory;

namespace {

// g written out independently, with r = sqrt(1 - 2/theta)
double g_ref(double t) {
  const double r = std::sqrt(1.0 - 2.0 / t);
  return t / 2 - 0.5 + t * r / 2 + std::log((1.0 - r) / 2.0);
}

}  // namespace

TEST_CASE("threshold root") {
  const double tc = critical_theta(1e-12);
  CHECK(tc > 2.0);
  CHECK(tc < 3.0);
  CHECK(std::abs(g_ref(tc)) < 1e-10);
  CHECK(g_ref(tc - 1e-6) < 0.0);
  CHECK(g_ref(tc + 1e-6) > 0.0);
  CHECK(theta_c() == doctest::Approx(tc).epsilon(1e-12));
  CHECK(critical_theta(1e-3) == doctest::Approx(tc).epsilon(1e-3));
  CHECK_THROWS(critical_theta(0.0));
}

TEST_CASE("g matches the written-out formula") {
  for (double t : {2.0, 2.2, 2.5, 3.0, 5.0, 40.0}) CHECK(g_theta(t) == doctest::Approx(g_ref(t)).epsilon(1e-13));
  CHECK(g_theta(2.0) < 0.0);
  CHECK(g_theta(3.0) > 0.0);
  CHECK_THROWS(g_theta(1.9));
}

TEST_CASE("phase classification") {
  CHECK(classify(1.0, 1.0).phase == Phase::subcritical);
  CHECK(classify(4.0, 1.0).phase == Phase::supercritical);
  CHECK(classify(1.0, 2.0).phase == Phase::supercritical);
  CHECK(classify(theta_c(), 1.0).phase == Phase::critical);
  CHECK(classify(0.5, 3.0).theta == doctest::Approx(4.5));
  CHECK_THROWS(classify(-1.0, 1.0));
}

TEST_CASE("free energy values") {
  CHECK(free_energy(0.0, 1.0) == doctest::Approx(2.14473).epsilon(1e-5));
  CHECK(free_energy(1.0, 1.0) == doctest::Approx(std::log(std::numbers::pi * std::numbers::e)));
  CHECK(free_energy(4.0, 1.0) == doctest::Approx(3.13785).epsilon(1e-5));
  CHECK(free_energy(1.0, 2.0) == doctest::Approx(std::log(2 * std::numbers::pi * std::numbers::e) + g_ref(4.0)));
}

TEST_CASE("free energy is continuous with slope a^2 above threshold") {
  const double tc = theta_c();
  CHECK(free_energy(tc * (1 - 1e-9), 1.0) == doctest::Approx(free_energy(tc * (1 + 1e-9), 1.0)).epsilon(1e-8));
  // d/dbeta (1/n) log Z = -E[H]/n = a^2 in the condensed phase
  for (double beta : {2.6, 4.0, 9.0}) {
    const double B = 1.3, e = 1e-6;
    const double slope = (free_energy(beta + e, B) - free_energy(beta - e, B)) / (2 * e);
    const double a = condensate_fraction(beta, B).a;
    CHECK(slope == doctest::Approx(a * a).epsilon(1e-6));
  }
  const double e = 1e-6;
  CHECK((free_energy(1.0 + e, 1.0) - free_energy(1.0 - e, 1.0)) / (2 * e) == doctest::Approx(0.0));
}

TEST_CASE("exact beta = 0 partition function") {
  // log n! as an explicit sum
  auto oracle = [](double B, long n) {
    double lf = 0.0;
    for (long k = 2; k <= n; ++k) lf += std::log(static_cast<double>(k));
    return std::log(std::numbers::pi * B * n) - lf / n;
  };
  CHECK(log_partition_beta0(1.0, 512) == doctest::Approx(2.137).epsilon(5e-4));
  for (long n : {1L, 2L, 7L, 512L, 8192L})
    CHECK(log_partition_beta0(1.7, n) == doctest::Approx(oracle(1.7, n)).epsilon(1e-12));
  CHECK(std::abs(log_partition_beta0(1.0, 8192) - free_energy(0.0, 1.0)) < 0.002);
  CHECK_THROWS(log_partition_beta0(1.0, 0));
}

TEST_CASE("condensate fraction") {
  const auto c = condensate_fraction(4.0, 1.0);
  CHECK(c.a == doctest::Approx(0.853553).epsilon(1e-6));
  CHECK(c.energy_density == doctest::Approx(-c.a * c.a));
  for (double beta : {2.5, 3.0, 10.0}) CHECK(condensate_fraction(beta, 1.0).a > 0.5);
  CHECK(condensate_fraction(2.0, 1.0).a == doctest::Approx(0.5));
  CHECK_THROWS(condensate_fraction(1.0, 1.0));
}

TEST_CASE("continuum exponents and constants") {
  CHECK(continuum_exponent(0.75).alpha == doctest::Approx(0.75));
  CHECK(continuum_exponent(2.0).alpha == doctest::Approx(1.0));
  CHECK(continuum_exponent(1.0).log_correction);
  CHECK_FALSE(continuum_exponent(1.5).log_correction);
  CHECK_THROWS(continuum_exponent(0.5));
  CHECK(continuum_constant(0.75) == doctest::Approx(3.34217).epsilon(1e-5));
  CHECK(continuum_constant(2.0) == doctest::Approx(1.2020569).epsilon(1e-7));
  CHECK_THROWS(continuum_constant(1.0));
}

TEST_CASE("threshold computation is fast") {
  const auto t0 = std::chrono::steady_clock::now();
  volatile double tc = critical_theta(1e-12);
  const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(tc > 2.0);
  CHECK(dt < 1e-3);
}
