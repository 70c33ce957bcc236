#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dnls/gibbs.hpp"
#include "dnls/groundstate.hpp"

namespace dnls {

// ---- phase diagram --------------------------------------------------------

struct SweepOptions {
  double B = 1.0;
  std::vector<double> betas;     // increasing
  LatticeConfig lattice;
  SamplerOptions sampler;
  int threads = 1;
  double min_ess = 50.0;         // below this a grid point is flagged
  double edge_weight = 2.0;      // see gibbs_model
};

struct SweepRow {
  double beta = 0.0;
  EnsembleStats stats;
  double F_sampled = 0.0;        // (1/n) log Z from cumulative trapezoid of E[H]/n
  double F_theory = 0.0;
  std::optional<double> a_theory;
  bool low_ess = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<double> jump_beta;   // midpoint of the largest rise in M1/N
  double jump_size = 0.0;
  std::vector<double> swap_acceptance;
  bool mixing_ok = true;
};

/// Tempered chains over the grid; a beta = 0 replica is added when missing so the
/// sampled free energy can be integrated from the exact value at beta = 0.
SweepResult sweep_beta(const SweepOptions& opts, std::uint64_t seed);

// ---- breather persistence -------------------------------------------------

struct BreatherOptions {
  double beta = 4.0;
  double B = 1.0;
  LatticeConfig lattice;
  int samples = 50;              // condensed initial states wanted
  double T = 100.0;
  double dt = 2e-3;
  int snapshot_stride = 50;
  long sweeps_between = 100;     // Gibbs sweeps separating initial states
  long burn_in = 2000;
  double condensed_fraction = 0.5;
  long max_draws = 0;            // 0: 4 * samples
  double edge_weight = 2.0;
};

struct BreatherRun {
  std::size_t site = 0;
  bool persisted = true;
  double min_mass_fraction = 1.0;
  int hops = 0;
};

struct BreatherResult {
  int condensed = 0;
  int excluded = 0;              // non-condensed draws
  double persistence = 1.0;      // fraction of condensed runs with a fixed argmax
  double min_mass_fraction = 1.0;
  double max_power_drift = 0.0;
  std::vector<BreatherRun> runs;
};

/// Gibbs samples as initial data for i f' = -Delta f - |f|^2 f; counts the runs whose
/// argmax site is the same at every snapshot up to time T.
BreatherResult breather_persistence(const BreatherOptions& opts, std::uint64_t seed);

// ---- coordinate marginals -------------------------------------------------

struct MarginalOptions {
  double beta = 1.0;
  double B = 1.0;
  LatticeConfig lattice;
  int m = 8;                      // coordinates per sample
  int samples = 2000;
  long thin = 10;
  long burn_in = 2000;
  double edge_weight = 2.0;
};

struct MarginalReport {
  int m = 0;
  long values = 0;                // pooled coordinates
  double variance = 0.0;          // B or B - a
  bool argmax_removed = false;
  double second_moment_ratio = 0.0;   // E|psi|^2 / variance
  double mean_re = 0.0, mean_im = 0.0;  // in units of sqrt(variance)
  double ks_stat = 0.0;
  double ks_p = 1.0;
  bool shortage = false;          // fewer than 200 effective values
};

/// Pools m spread-out coordinates per thinned sample and compares Re psi with
/// N(0, variance / 2). Above threshold the argmax site is skipped and the
/// variance is B - a.
MarginalReport marginal_test(const MarginalOptions& opts, std::uint64_t seed);

/// Kolmogorov-Smirnov statistic of xs against a CDF, and the asymptotic p-value
/// (Kolmogorov series with Stephens' small-sample correction).
struct KsResult {
  double D = 0.0;
  double p = 1.0;
};
KsResult ks_test_normal(std::vector<double> xs, double sd);
double kolmogorov_sf(double lambda);

// ---- continuum limit ------------------------------------------------------

struct ContinuumOptions {
  double s = 2.0;
  std::vector<double> hs{1.0 / 32, 1.0 / 64, 1.0 / 128};
  double T = 0.5;
  double dt = 1e-4;
  double period = 4.0;           // length of the periodic box standing in for the line
  double amplitude = 1.0;        // u0(x) = amplitude * exp(cos(2 pi x / period))
  int ref_modes = 1024;
  std::optional<double> ref_alpha;  // default alpha(s)
  std::optional<double> ref_c;      // default c(s)
};

struct ContinuumResult {
  double alpha = 0.0;
  double c = 0.0;
  std::vector<double> hs;
  std::vector<double> errors;    // relative discrete l^2 error at T
  double order = 0.0;            // least-squares slope of log err vs log h
  double ref_self_check = 0.0;   // reference change when halving modes and dt
  bool monotone = true;
};

/// Periodized long-range lattice model on [0, period) against a spectral solution of
/// i u_t = c (-Delta)^alpha u - |u|^2 u. For s > 1 the kernel carries the factor
/// h^(2s-2) so the lattice symbol tends to zeta(2s-1) |xi|^2.
ContinuumResult continuum_convergence(const ContinuumOptions& opts);

/// Spectral split-step solution on an M-point grid of [0, period).
std::vector<cplx> continuum_reference(double alpha, double c, int M, double period, double amplitude, double T,
                                      double dt);

// ---- saturable concentration ---------------------------------------------

struct JjtOptions {
  std::vector<int> modes{8, 16, 32};
  double B = 3.0;
  double C = 20.0;               // beta_n = C n
  int kappa = -1;                // +1 for the defocusing control
  int grid = 512;                // ground-state grid
  PcnOptions pcn;
};

struct JjtRow {
  int n_modes = 0;
  double beta = 0.0;
  Estimate distance;             // H^1 distance to the ground-state orbit
  double acceptance = 0.0;
  long samples = 0;
};

struct JjtResult {
  double ground_energy = 0.0;
  double ground_h1 = 0.0;
  std::vector<JjtRow> rows;
  bool non_increasing = true;    // within two standard errors
};

JjtResult jjt_concentration(const JjtOptions& opts, std::uint64_t seed);

/// min over translation and phase of ||u - e^{i theta} Q(. - y)||_{H^1}, both given
/// on the same M-point grid of [0, 1).
double h1_orbit_distance(const std::vector<cplx>& u, const std::vector<cplx>& Q);

// ---- ground states on a power grid ----------------------------------------

struct GroundStateRow {
  double nu = 0.0;
  double omega = 0.0;
  double energy = 0.0;
  double residual = 0.0;
  double mass_fraction = 0.0;
  double uniform_energy = 0.0;
  bool converged = false;
  std::string origin;
};

std::vector<GroundStateRow> groundstate_grid(const ModelSpec& model, const std::vector<double>& nus,
                                             const MinimizeOptions& opts);

// ---- closed-form table -----------------------------------------------------

struct TheoryRow {
  double beta = 0.0;
  double B = 1.0;
  double theta = 0.0;
  std::optional<double> g;
  double F = 0.0;
  std::optional<double> a;
  std::string phase;
};

std::vector<TheoryRow> theory_table(const std::vector<double>& betas, double B);

std::vector<double> linspace(double a, double b, int points);

}  // namespace dnls
