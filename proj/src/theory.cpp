#include "dnls/theory.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dnls::theory {

double g_theta(double theta) {
  if (!(theta >= 2.0)) throw std::domain_error("g_theta: theta must be >= 2");
  const double r = std::sqrt(1.0 - 2.0 / theta);
  return 0.5 * theta - 0.5 + 0.5 * theta * r + std::log(0.5 - 0.5 * r);
}

double critical_theta(double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("critical_theta: tol must be positive");
  double lo = 2.0, hi = 3.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (g_theta(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double theta_c() {
  static const double value = critical_theta(1e-12);
  return value;
}

PhasePoint classify(double beta, double B) {
  if (!(beta >= 0.0)) throw std::invalid_argument("classify: beta must be >= 0");
  if (!(B > 0.0)) throw std::invalid_argument("classify: B must be positive");
  PhasePoint p{beta, B, beta * B * B, Phase::subcritical};
  const double tc = theta_c();
  if (std::abs(p.theta - tc) <= 1e-12)
    p.phase = Phase::critical;
  else if (p.theta > tc)
    p.phase = Phase::supercritical;
  return p;
}

double free_energy(double beta, double B) {
  if (!(beta >= 0.0)) throw std::invalid_argument("free_energy: beta must be >= 0");
  if (!(B > 0.0)) throw std::invalid_argument("free_energy: B must be positive");
  const double base = std::log(B * std::numbers::pi * std::numbers::e);
  const double theta = beta * B * B;
  return theta <= theta_c() ? base : base + g_theta(theta);
}

double log_partition_beta0(double B, long n) {
  if (n < 1) throw std::invalid_argument("log_partition_beta0: n must be >= 1");
  const double nn = static_cast<double>(n);
  return std::log(std::numbers::pi * B * nn) - std::lgamma(nn + 1.0) / nn;
}

CondensateFraction condensate_fraction(double beta, double B) {
  if (!(B > 0.0)) throw std::invalid_argument("condensate_fraction: B must be positive");
  const double theta = beta * B * B;
  if (!(theta >= 2.0)) throw std::domain_error("condensate_fraction: beta B^2 must be >= 2");
  const double a = 0.5 * B + 0.5 * B * std::sqrt(1.0 - 2.0 / theta);
  return {a, -a * a};
}

ContinuumExponent continuum_exponent(double s) {
  if (!(s > 0.5)) throw std::domain_error("continuum_exponent: s must exceed 1/2");
  if (s < 1.0) return {s, false};
  return {1.0, s == 1.0};
}

double continuum_constant(double s) {
  if (!(s > 0.0)) throw std::domain_error("continuum_constant: s must be positive");
  if (s < 1.0) return std::numbers::pi / (std::tgamma(1.0 + 2.0 * s) * std::sin(std::numbers::pi * s));
  if (s == 1.0) throw std::domain_error("continuum_constant: s = 1 carries a logarithmic factor");
  return std::riemann_zeta(2.0 * s - 1.0);
}

}  // namespace dnls::theory
