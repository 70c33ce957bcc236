#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dnls/observables.hpp"

namespace dnls {

enum class InitPreset { single_site, gaussian_bump, uniform };

const char* to_string(InitPreset p);

struct MinimizeOptions {
  int max_iters = 20000;
  double step = 1.0;          // initial step length of the preconditioned flow
  double tol = 1e-8;          // target Euler-Lagrange residual
  double bump_width = 0.0;    // gaussian_bump width in sites; 0 means L/8
};

struct GroundState {
  Wavefunction g;
  double omega = 0.0;
  double energy = 0.0;  // attained H, an upper bound on I_nu
  double nu = 0.0;
  double residual = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string origin;
};

/// Normalized imaginary-time descent for inf { H : N = nu }.
///
/// Each step moves along the Sobolev-preconditioned projected gradient and
/// renormalizes to power nu; an Armijo backtrack keeps H non-increasing.
/// The standing-wave frequency is
///   omega = Re <A g + N(g) g, g> / nu,
/// and the iteration stops once ||omega g - A g - N(g) g|| / ||g|| <= tol.
GroundState minimize_at_power(const ModelSpec& model, double nu, const Wavefunction& init,
                              const MinimizeOptions& opts = {});
GroundState minimize_at_power(const ModelSpec& model, double nu, InitPreset preset,
                              const MinimizeOptions& opts = {});

Wavefunction preset_state(const LatticeConfig& lattice, InitPreset preset, double nu, double bump_width = 0.0);

struct MultiStart {
  GroundState best;
  std::vector<GroundState> attempts;
};

/// Runs every preset and keeps the lowest energy; all attempts are returned.
MultiStart minimize_multistart(const ModelSpec& model, double nu, const MinimizeOptions& opts = {});

/// ||omega g + Delta g - N(g) g||_2 / ||g||_2 for the model's evolution operator.
double el_residual(const ModelSpec& model, const Wavefunction& g, double omega);

/// Energy of the spatially uniform state at power nu (the delocalized branch).
double uniform_energy(const ModelSpec& model, double nu);

struct ThresholdProbe {
  double nu = 0.0;
  double energy = 0.0;
  double baseline = 0.0;
  bool localized = false;
};

struct ThresholdResult {
  std::optional<double> nu_c;  // empty means none_detected
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  bool inconsistent = false;   // sign pattern contradicted monotonicity
  std::vector<ThresholdProbe> probes;
};

/// Bisection on whether the ground-state energy drops below the
/// delocalized energy by more than eps_num = 1e-8 nu^2 / h^2.
ThresholdResult excitation_threshold(const ModelSpec& model, std::pair<double, double> bracket, double tol,
                                     const MinimizeOptions& opts = {});

/// sqrt(h^-1 N sinh a / cosh(a(2 delta - 1))) exp(-a |k - delta|), centered
/// at site L/2 with periodic distance; delta is 0 (on-site) or 1/2 (inter-site).
Wavefunction soliton_ansatz(double N, double a, double delta, double h, const LatticeConfig& lattice);

}  // namespace dnls
