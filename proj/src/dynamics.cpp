#include "dnls/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "dnls/errors.hpp"

namespace dnls {

SplitStepper::SplitStepper(const ModelSpec& model) : model_(model), fft_(model.lattice()) {
  model_.validate();
  if (model_.kernel.symbol.size() != model_.lattice().n)
    throw std::invalid_argument("SplitStepper: kernel symbol missing");
}

void SplitStepper::linear(Wavefunction& f, double t) {
  if (phase_.empty() || t != cached_dt_) {
    const auto& sym = model_.kernel.symbol;
    const double inv = 1.0 / static_cast<double>(sym.size());
    phase_.resize(sym.size());
    for (std::size_t m = 0; m < sym.size(); ++m) phase_[m] = std::polar(inv, t * sym[m]);
    cached_dt_ = t;
  }
  fft_.forward(f.values);
  for (std::size_t m = 0; m < phase_.size(); ++m) f.values[m] *= phase_[m];
  fft_.backward(f.values);
}

void SplitStepper::nonlinear(Wavefunction& f, double t) const {
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double v = model_.site_potential(k, std::norm(f[k]));
    f[k] *= std::polar(1.0, -t * v);
  }
}

void SplitStepper::step(Wavefunction& f, double dt) {
  nonlinear(f, 0.5 * dt);
  linear(f, dt);
  nonlinear(f, 0.5 * dt);
}

namespace {

double relative_drift(double value, double ref) {
  const double diff = std::abs(value - ref);
  return std::abs(ref) > 0.0 ? diff / std::abs(ref) : diff;
}

}  // namespace

Trajectory evolve(const ModelSpec& model, const Wavefunction& f0, const EvolveOptions& opts,
                  const SnapshotObserver& observer) {
  if (!(opts.dt > 0.0) || !(opts.T >= 0.0)) throw std::invalid_argument("evolve: need dt > 0 and T >= 0");
  if (opts.T > 0.0 && opts.dt > opts.T) throw std::invalid_argument("evolve: dt exceeds T");
  if (opts.snapshot_stride < 1) throw std::invalid_argument("evolve: snapshot_stride must be >= 1");
  if (!(model.lattice() == f0.lattice)) throw std::invalid_argument("evolve: lattice mismatch");
  if (!f0.all_finite()) throw NumericalError("evolve: non-finite initial data", 0);

  const long steps = opts.T > 0.0 ? std::max(1L, std::lround(opts.T / opts.dt)) : 0L;
  const double dt = steps > 0 ? opts.T / static_cast<double>(steps) : opts.dt;

  SplitStepper stepper(model);
  Wavefunction f = f0;
  Trajectory traj;
  double N0 = 0.0, H0 = 0.0;

  auto snapshot = [&](long step) {
    const double t = static_cast<double>(step) * dt;
    auto stats = top_two_masses(model, f);
    if (step == 0) {
      N0 = stats.N;
      H0 = stats.H;
    }
    traj.times.push_back(t);
    traj.records.push_back({t, stats.N, stats.H, stats.M1, stats.M2, stats.argmax_site});
    traj.N_drift.push_back(relative_drift(stats.N, N0));
    traj.H_drift.push_back(relative_drift(stats.H, H0));
    if (opts.keep_states) traj.states.push_back(f);
    return observer ? observer(t, f) : true;
  };

  if (!snapshot(0)) return traj;
  for (long s = 1; s <= steps; ++s) {
    stepper.step(f, dt);
    double sup = 0.0;
    for (const auto& z : f.values) {
      const double v = std::norm(z);
      if (!(v <= sup)) sup = v;  // lets NaN through, unlike std::max
    }
    if (!std::isfinite(sup)) throw NumericalError("evolve: non-finite field", s);
    if (std::sqrt(sup) > opts.blowup_threshold) throw NumericalError("evolve: blow-up guard triggered", s);
    if (s % opts.snapshot_stride == 0 || s == steps) {
      if (!snapshot(s)) break;
    }
  }
  return traj;
}

Wavefunction evolve_free(const LatticeConfig& lattice, const CouplingKernel& kernel, const Wavefunction& f0,
                         double t) {
  if (lattice.kind != LatticeKind::torus) throw std::invalid_argument("evolve_free: torus lattice required");
  if (!(f0.lattice == lattice) || !(kernel.lattice == lattice))
    throw std::invalid_argument("evolve_free: lattice mismatch");
  Wavefunction f = f0;
  if (t == 0.0) return f;
  Fft(lattice).apply_diagonal(f.values, [&](std::size_t m) { return std::polar(1.0, t * kernel.symbol[m]); });
  return f;
}

std::pair<double, double> conservation_report(const Trajectory& traj) {
  if (traj.N_drift.empty()) throw std::invalid_argument("conservation_report: empty trajectory");
  return {*std::max_element(traj.N_drift.begin(), traj.N_drift.end()),
          *std::max_element(traj.H_drift.begin(), traj.H_drift.end())};
}

DecayResult decay_experiment(int d, int L, double T, std::pair<double, double> window, int samples) {
  auto [t1, t2] = window;
  if (!(t1 > 0.0) || !(t2 > t1) || t2 > T) throw std::invalid_argument("decay_experiment: bad fit window");
  if (samples < 2) throw std::invalid_argument("decay_experiment: need at least 2 samples");
  const auto lattice = build_torus(d, L, 1.0);
  DecayResult res;
  // fastest group velocity along an axis is 2/h^2 sites per unit time
  res.wrap_time = 0.5 * L / 2.0;
  if (t2 > res.wrap_time)
    throw std::invalid_argument("decay_experiment: fit window extends past the wrap-around time");

  const auto kernel = nearest_neighbor_kernel(lattice);
  Wavefunction f0(lattice);
  f0[0] = 1.0;
  res.times.push_back(0.0);
  res.sup_norm.push_back(1.0);

  std::vector<double> lx, ly;
  for (int i = 0; i < samples; ++i) {
    const double t = t1 * std::pow(t2 / t1, static_cast<double>(i) / (samples - 1));
    const auto f = evolve_free(lattice, kernel, f0, t);
    const double sup = lr_norm(f, INFINITY);
    res.times.push_back(t);
    res.sup_norm.push_back(sup);
    lx.push_back(std::log(t));
    ly.push_back(std::log(sup));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  res.exponent = sxy / sxx;
  return res;
}

ScatterReport small_data_scatter(const ModelSpec& model, const Wavefunction& profile, double eps, double T,
                                 double dt) {
  if (!(eps >= 0.0)) throw std::invalid_argument("small_data_scatter: eps must be >= 0");
  Wavefunction f0 = profile;
  const double norm = std::sqrt(power(profile));
  for (auto& z : f0.values) z = norm > 0.0 ? z * (eps / norm) : cplx{};

  ScatterReport rep;
  rep.initial_l4 = lr_norm(f0, 4.0);
  EvolveOptions opts;
  opts.dt = dt;
  opts.T = T;
  opts.snapshot_stride = 10;
  opts.keep_states = false;
  double sup = 0.0;
  Wavefunction last = f0;
  evolve(model, f0, opts, [&](double, const Wavefunction& f) {
    sup = std::max(sup, lr_norm(f, INFINITY));
    last = f;
    return true;
  });
  rep.sup_linf = sup;
  rep.final_l4 = lr_norm(last, 4.0);
  rep.final_state = std::move(last);
  return rep;
}

void write_trajectory_jsonl(std::ostream& os, const Trajectory& traj, bool include_state) {
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const auto& r = traj.records[i];
    nlohmann::json j = {{"t", r.t}, {"N", r.N}, {"H", r.H}, {"M1", r.M1}, {"M2", r.M2}, {"argmax", r.argmax}};
    if (include_state && i < traj.states.size()) {
      std::vector<double> flat;
      flat.reserve(2 * traj.states[i].size());
      for (const auto& z : traj.states[i].values) {
        flat.push_back(z.real());
        flat.push_back(z.imag());
      }
      j["state"] = std::move(flat);
    }
    os << j.dump() << '\n';
  }
}

}  // namespace dnls
