#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "dnls/observables.hpp"

namespace dnls {

/// Target of the sampler: Z^-1 exp(-beta H(f)) 1{N(f) <= B n} df.
struct GibbsParams {
  double beta = 0.0;
  double B = 1.0;
  ModelSpec model;

  const LatticeConfig& lattice() const { return model.lattice(); }
  void validate() const;
};

/// Nearest-neighbor cubic focusing model with the site-normalized energy;
/// edge_weight 2 counts each edge once, 4 sums over ordered neighbor pairs.
ModelSpec gibbs_model(const LatticeConfig& lattice, double edge_weight = 2.0);

enum class ChainInit { ball, condensed };

struct SamplerOptions {
  long sweeps = 10000;          // total, burn-in included
  long burn_in = 1000;
  int record_every = 1;         // statistics taken every this many sweeps after burn-in
  long snapshot_every = 0;      // keep full states every this many sweeps (0: none)
  int transfer_moves = 1;       // pairwise mass transfers per sweep
  int swap_moves = 1;           // two-site exchanges per sweep
  int condensate_moves = 1;     // collective condensate resizes per sweep
  double initial_sigma = 0.5;
  ChainInit init = ChainInit::ball;
};

struct MoveCounts {
  long proposed = 0;
  long accepted = 0;
  double rate() const { return proposed > 0 ? static_cast<double>(accepted) / proposed : 0.0; }
};

struct ChainState {
  Wavefunction f;
  double N = 0.0;
  double K = 0.0;   // sum over edges of |f_k - f_j|^2
  double Q = 0.0;   // sum of |f_k|^(p+1)
  double H = 0.0;
  double sigma = 0.5;
  MoveCounts local, transfer, swap, condensate;
  std::mt19937_64 rng;
};

/// Metropolis-Hastings chain for one GibbsParams.
///
/// A sweep is n single-site complex Gaussian updates in site order, then the
/// configured number of mass transfers, site swaps and condensate moves.
/// The condensate move picks a site (the current argmax with probability 1/2,
/// otherwise uniform), redraws its mass at fixed total power, and rescales all
/// other sites to compensate; the Hastings factor carries the radial Jacobian
/// (R'/R)^(n-2) of the rescaled block. This is what lets a chain nucleate or
/// dissolve the condensate at n in the hundreds.
class GibbsChain {
 public:
  GibbsChain(const GibbsParams& params, std::uint64_t seed, std::uint64_t stream, double sigma = 0.5,
             ChainInit init = ChainInit::ball);

  void sweep(const SamplerOptions& opts, bool adapt);
  /// Re-derive N, K, Q, H from the field.
  void recompute();

  void set_beta(double beta) { params_.beta = beta; }
  const GibbsParams& params() const { return params_; }
  ChainState& state() { return st_; }
  const ChainState& state() const { return st_; }

  /// Energy of the current field with the cached sums.
  double energy(double K, double Q) const { return cK_ * K + cQ_ * Q; }

 private:
  double local_k(std::size_t k, cplx value) const;
  double qterm(double mass) const;
  void local_move(std::size_t k);
  void transfer_move();
  void swap_move();
  void condensate_move();
  bool metropolis(double dH, double log_extra);

  GibbsParams params_;
  ChainState st_;
  std::vector<std::size_t> nbr_;  // n x 2d neighbor table
  int deg_ = 0;
  double cK_ = 0.0;
  double cQ_ = 0.0;
  double qexp_ = 2.0;  // (p+1)/2
  double cap_ = 0.0;   // B n
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

/// Per-site observables: N/n, H/n, M1/n, M2/n and M1/N.
struct EnsembleStats {
  Estimate N, H, M1, M2, mass_fraction;
  double ess = 0.0;
  long samples = 0;
  double accept_local = 0.0, accept_transfer = 0.0, accept_swap = 0.0, accept_condensate = 0.0;
  double sigma = 0.0;
};

struct SampleRecord {
  long sweep = 0;
  double N = 0.0, H = 0.0, M1 = 0.0, M2 = 0.0;
  std::size_t argmax = 0;
};

struct ChainResult {
  double beta = 0.0;
  EnsembleStats stats;
  std::vector<SampleRecord> records;
  std::vector<Wavefunction> snapshots;
};

/// Batch-means estimate with `batches` equal batches (the tail remainder is dropped).
Estimate batch_means(const std::vector<double>& xs, int batches = 20);

ChainResult run_chain(const GibbsParams& params, std::uint64_t seed, const SamplerOptions& opts);

struct TemperedResult {
  std::vector<ChainResult> chains;          // one per beta, grid order
  std::vector<double> swap_acceptance;      // per adjacent pair
};

/// Replica exchange over an increasing beta grid with shared lattice, model and B.
/// Every sweep each replica advances, then adjacent pairs (alternating even/odd)
/// attempt a swap accepted with min(1, exp((b_i - b_j)(H_i - H_j))).
/// Replicas run on `threads` workers between swap points; results do not depend on it.
TemperedResult tempered_sweep(const std::vector<double>& betas, double B, const ModelSpec& model, std::uint64_t seed,
                              const SamplerOptions& opts, int threads = 1);

struct LogZNode {
  double beta = 0.0;
  double weight = 0.0;
  Estimate energy;          // E[H]/n
  double mass_fraction = 0.0;
};

struct LogZOptions {
  int nodes = 16;                 // Gauss-Legendre nodes in total
  SamplerOptions sampler;         // per node
  int scan_points = 12;           // coarse grid used to find the jump
  long scan_sweeps = 3000;
  int bisection_steps = 10;
  long bisection_sweeps = 3000;
  int threads = 1;
};

struct LogZResult {
  double value = 0.0;             // (1/n) log Z(beta)
  double error = 0.0;             // propagated standard error
  double log_z0 = 0.0;            // exact (1/n) log Z(0)
  std::optional<double> breakpoint;
  std::vector<LogZNode> nodes;
  bool monotone = true;           // E[H] non-increasing in beta across nodes
};

/// Thermodynamic integration (1/n) log Z(beta) = (1/n) log Z(0) - (1/n) int_0^beta E[H].
/// When the mass fraction jumps inside [0, beta] the jump is located by bisection and
/// each side gets its own Gauss-Legendre rule, since E[H] is discontinuous there.
LogZResult log_partition(const GibbsParams& params, std::uint64_t seed, const LogZOptions& opts);

/// Gauss-Legendre nodes and weights on [a, b].
std::vector<std::pair<double, double>> gauss_legendre(int m, double a, double b);

EnsembleStats condensation_stats(const ModelSpec& model, const std::vector<Wavefunction>& samples);

/// Uniform draw from the ball {N <= B n}, i.e. the beta = 0 measure.
Wavefunction sample_ball(const LatticeConfig& lattice, double B, std::mt19937_64& rng);

// Binary wave dumps: "DNLSWAVE", u32 n, u32 0, then n (re, im) little-endian doubles.
void write_wave(std::ostream& os, const Wavefunction& f);
Wavefunction read_wave(std::istream& is, const LatticeConfig& lattice);

/// One JSON object per record: sweep, N, H, M1, M2, argmax.
void write_samples_jsonl(std::ostream& os, const std::vector<SampleRecord>& records);

// ---------------------------------------------------------------------------
// Spectrally truncated 1D ensemble on the unit circle.
//
// u(x) = sum_{|k| <= n} a_k e^{2 pi i k x}, a_0 uniform on the disk |a_0| <= B,
// a_k = g_k / (2 pi |k| sqrt(beta)) with Re g_k, Im g_k i.i.d. N(0, 1), which is
// the Gaussian measure exp(-(beta/2) int |u_x|^2). Draws with int |u|^2 > B^2
// are discarded and the rest carry weights exp(beta W(u)).

/// W(u) from samples of u on an M-point grid of the circle.
using SpectralWeight = std::function<double(const std::vector<cplx>& grid)>;

/// (1/(p+1)) int |u|^(p+1), exact on the grid when M > (p+1) n.
SpectralWeight power_weight(double p);
/// (1/2) int G(|u|^2) with G(a) = a - log(1 + a).
SpectralWeight saturable_weight();

struct SpectralOptions {
  int n_modes = 8;
  double B = 1.0;
  double beta = 1.0;
  long samples = 1000;
  int grid = 0;                 // quadrature points; 0 means 4 (2 n_modes + 1) + 1
  SpectralWeight weight;        // empty: unweighted
};

struct SpectralEnsemble {
  std::vector<std::vector<cplx>> coeffs;  // a_k at index k + n_modes
  std::vector<double> weights;            // self-normalized
  long drawn = 0;
  long rejected = 0;
  double ess = 0.0;
  bool ess_low = false;                   // ess < 10% of accepted draws
};

SpectralEnsemble sample_spectral_1d(const SpectralOptions& opts, std::uint64_t seed);

struct PcnOptions {
  long steps = 20000;
  long burn_in = 2000;
  int thin = 10;
  double rho = 0.2;            // pCN innovation weight
  double zero_mode_step = 0.1; // random-walk step of a_0 relative to B
  bool adapt = true;           // tune rho toward 25% acceptance during burn-in
  std::vector<cplx> init;      // starting coefficients; empty: a reference draw
};

struct PcnResult {
  std::vector<std::vector<cplx>> coeffs;
  double acceptance = 0.0;     // after burn-in
  double rho = 0.0;            // final innovation weight
};

/// Preconditioned Crank-Nicolson chain for the same weighted ensemble; usable when
/// importance weights degenerate (large beta).
PcnResult pcn_spectral_1d(const SpectralOptions& opts, const PcnOptions& pcn, std::uint64_t seed);

/// u on an M-point grid of [0, 1) from coefficients a_{-n..n}.
std::vector<cplx> spectral_to_grid(const std::vector<cplx>& coeffs, int M);

}  // namespace dnls
