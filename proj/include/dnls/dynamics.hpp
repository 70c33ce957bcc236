#pragma once

#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include "dnls/fft.hpp"
#include "dnls/observables.hpp"

namespace dnls {

/// Strang split-step integrator: half nonlinear phase rotation, exact linear
/// flow in Fourier space, half nonlinear rotation. Both substeps are exact
/// isometries, so power is conserved to roundoff. dt may be negative.
class SplitStepper {
 public:
  explicit SplitStepper(const ModelSpec& model);

  void step(Wavefunction& f, double dt);
  /// Linear flow exp(-i t A) applied exactly.
  void linear(Wavefunction& f, double t);
  void nonlinear(Wavefunction& f, double t) const;

 private:
  ModelSpec model_;
  Fft fft_;
  double cached_dt_ = 0.0;
  std::vector<cplx> phase_;
};

struct EvolveOptions {
  double dt = 1e-3;
  double T = 1.0;
  int snapshot_stride = 100;
  bool keep_states = true;
  double blowup_threshold = 1e8;
};

struct SnapshotRecord {
  double t = 0.0;
  double N = 0.0;
  double H = 0.0;
  double M1 = 0.0;
  double M2 = 0.0;
  std::size_t argmax = 0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Wavefunction> states;      // empty when keep_states is false
  std::vector<SnapshotRecord> records;
  std::vector<double> N_drift;           // relative to t = 0
  std::vector<double> H_drift;
};

/// Invoked at each snapshot; return false to stop early.
using SnapshotObserver = std::function<bool(double t, const Wavefunction& f)>;

Trajectory evolve(const ModelSpec& model, const Wavefunction& f0, const EvolveOptions& opts,
                  const SnapshotObserver& observer = {});

/// exp(-i t A) f0 evaluated in one shot through the kernel symbol.
Wavefunction evolve_free(const LatticeConfig& lattice, const CouplingKernel& kernel, const Wavefunction& f0,
                         double t);

/// (max relative N drift, max relative H drift)
std::pair<double, double> conservation_report(const Trajectory& traj);

struct DecayResult {
  double exponent = 0.0;
  std::vector<double> times;
  std::vector<double> sup_norm;
  double wrap_time = 0.0;
};

/// Free evolution of a unit delta on a d-dimensional torus with h = 1;
/// least-squares slope of log ||f(t)||_inf against log t over [t1, t2].
DecayResult decay_experiment(int d, int L, double T, std::pair<double, double> window, int samples = 64);

struct ScatterReport {
  double sup_linf = 0.0;
  double initial_l4 = 0.0;
  double final_l4 = 0.0;
  Wavefunction final_state;
};

/// Evolve small data scaled to ||f(0)||_2 = eps and report sup-norm decay.
ScatterReport small_data_scatter(const ModelSpec& model, const Wavefunction& profile, double eps, double T,
                                 double dt = 1e-2);

/// One JSON object per snapshot: t, N, H, M1, M2, argmax [, state].
void write_trajectory_jsonl(std::ostream& os, const Trajectory& traj, bool include_state);

}  // namespace dnls
