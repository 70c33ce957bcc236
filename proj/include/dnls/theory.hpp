#pragma once

#include <string>

namespace dnls::theory {

enum class Phase { subcritical, critical, supercritical };

struct PhasePoint {
  double beta = 0.0;
  double B = 1.0;
  double theta = 0.0;  // beta B^2
  Phase phase = Phase::subcritical;
};

/// g(theta) = theta/2 - 1/2 + (theta/2) r + log(1/2 - r/2), r = sqrt(1 - 2/theta).
/// Defined for theta >= 2; its root on [2, 3] is the condensation threshold.
double g_theta(double theta);

/// Bisection root of g on [2, 3] to the requested bracket width.
double critical_theta(double tol);

/// Root cached at 1e-12.
double theta_c();

PhasePoint classify(double beta, double B);

/// Limiting (1/n) log Z: log(B pi e), plus g(beta B^2) above threshold.
double free_energy(double beta, double B);

/// (1/n) log Z(0) for n sites exactly: log(pi B n) - log(n!)/n.
double log_partition_beta0(double B, long n);

struct CondensateFraction {
  double a = 0.0;
  double energy_density = 0.0;  // -a^2
};

/// a = B/2 + (B/2) sqrt(1 - 2/(beta B^2)); needs beta B^2 >= 2.
CondensateFraction condensate_fraction(double beta, double B);

struct ContinuumExponent {
  double alpha = 0.0;
  bool log_correction = false;  // s == 1: logarithmic factor in the scaling constants
};

/// Order of the limiting fractional Laplacian for long-range exponent s > 1/2.
ContinuumExponent continuum_exponent(double s);

/// Constant c(s) of the limiting multiplier c |xi|^{2 alpha} for the
/// long-range lattice operator: pi / (Gamma(1+2s) sin(pi s)) for s < 1,
/// zeta(2s-1) for s > 1 (after the h^{2s-2} normalization).
double continuum_constant(double s);

}  // namespace dnls::theory
