#include "dnls/groundstate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dnls/errors.hpp"
#include "dnls/fft.hpp"

namespace dnls {

const char* to_string(InitPreset p) {
  switch (p) {
    case InitPreset::single_site: return "single_site";
    case InitPreset::gaussian_bump: return "gaussian_bump";
    case InitPreset::uniform: return "uniform";
  }
  return "?";
}

namespace {

double inner_re(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return acc;
}

double norm2(const std::vector<cplx>& a) { return inner_re(a, a); }

void check_supported(const ModelSpec& model) {
  model.validate();
  if (model.lattice().kind != LatticeKind::torus) throw std::invalid_argument("ground states need a torus lattice");
  if (model.convention == HamiltonianConvention::ck_normalized && model.ck_edge_weight != 2.0)
    throw std::invalid_argument("ground states: ck_normalized energy with ck_edge_weight != 2 has no matching flow");
}

/// A g + N(g) g, the right-hand side of i dg/dt.
std::vector<cplx> generator(const ModelSpec& model, const Fft& fft, const std::vector<cplx>& g) {
  std::vector<cplx> out = g;
  const auto& sym = model.kernel.symbol;
  fft.apply_diagonal(out, [&](std::size_t m) { return -sym[m]; });
  for (std::size_t k = 0; k < g.size(); ++k) out[k] += model.site_potential(k, std::norm(g[k])) * g[k];
  return out;
}

void rescale_to(std::vector<cplx>& g, double nu) {
  const double p = norm2(g);
  if (!(p > 0.0) || !std::isfinite(p)) throw NumericalError("minimize_at_power: iterate lost all mass or blew up");
  const double c = std::sqrt(nu / p);
  for (auto& z : g) z *= c;
}

}  // namespace

Wavefunction preset_state(const LatticeConfig& lattice, InitPreset preset, double nu, double bump_width) {
  Wavefunction f(lattice);
  const std::vector<int> center(static_cast<std::size_t>(lattice.d), lattice.L / 2);
  switch (preset) {
    case InitPreset::single_site:
      f[lattice.site(center)] = 1.0;
      break;
    case InitPreset::uniform:
      for (auto& z : f.values) z = 1.0;
      break;
    case InitPreset::gaussian_bump: {
      const double w = bump_width > 0.0 ? bump_width : std::max(1.0, lattice.L / 8.0);
      for (std::size_t k = 0; k < lattice.n; ++k) {
        double r2 = 0.0;
        const auto c = lattice.coords(k);
        for (int i = 0; i < lattice.d; ++i) {
          int dx = std::abs(c[static_cast<std::size_t>(i)] - lattice.L / 2);
          dx = std::min(dx, lattice.L - dx);
          r2 += static_cast<double>(dx) * dx;
        }
        f[k] = std::exp(-0.5 * r2 / (w * w));
      }
      break;
    }
  }
  rescale_to(f.values, nu);
  return f;
}

double el_residual(const ModelSpec& model, const Wavefunction& g, double omega) {
  check_supported(model);
  const double gn = norm2(g.values);
  if (!(gn > 0.0)) throw std::invalid_argument("el_residual: zero wavefunction");
  const Fft fft(g.lattice);
  auto r = generator(model, fft, g.values);
  for (std::size_t k = 0; k < r.size(); ++k) r[k] -= omega * g[k];
  return std::sqrt(norm2(r) / gn);
}

GroundState minimize_at_power(const ModelSpec& model, double nu, const Wavefunction& init,
                              const MinimizeOptions& opts) {
  check_supported(model);
  if (!(nu > 0.0)) throw std::invalid_argument("minimize_at_power: nu must be positive");
  if (!(init.lattice == model.lattice())) throw std::invalid_argument("minimize_at_power: lattice mismatch");

  const auto& lat = model.lattice();
  const Fft fft(lat);
  const auto& sym = model.kernel.symbol;

  Wavefunction g = init;
  rescale_to(g.values, nu);
  double energy = hamiltonian(model, g);
  double tau = opts.step;
  const double tau_floor = 1e-14 * opts.step;

  GroundState out;
  out.nu = nu;
  int it = 0;
  double omega = 0.0, residual = std::numeric_limits<double>::infinity();
  for (;; ++it) {
    const auto Rg = generator(model, fft, g.values);
    omega = inner_re(Rg, g.values) / nu;
    std::vector<cplx> r(Rg.size());
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = Rg[k] - omega * g[k];
    residual = std::sqrt(norm2(r) / nu);
    if (!std::isfinite(residual)) throw NumericalError("minimize_at_power: non-finite residual", it);
    if (residual <= opts.tol) {
      out.converged = true;
      break;
    }
    if (it >= opts.max_iters) break;

    // Sobolev preconditioner (sigma + A)^-1, projected onto the tangent of the sphere N = nu
    const double sigma = std::max(std::abs(omega), 1e-300);
    auto Pr = r;
    auto Pg = g.values;
    fft.apply_diagonal(Pr, [&](std::size_t m) { return 1.0 / (sigma - sym[m]); });
    fft.apply_diagonal(Pg, [&](std::size_t m) { return 1.0 / (sigma - sym[m]); });
    const double coef = inner_re(Pr, g.values) / inner_re(Pg, g.values);
    for (std::size_t k = 0; k < Pr.size(); ++k) Pr[k] -= coef * Pg[k];
    const double slope = inner_re(r, Pr);  // > 0 for a descent direction

    bool accepted = false;
    while (tau >= tau_floor) {
      Wavefunction trial = g;
      for (std::size_t k = 0; k < trial.size(); ++k) trial[k] -= tau * Pr[k];
      rescale_to(trial.values, nu);
      const double e_trial = hamiltonian(model, trial);
      if (e_trial <= energy - 1e-4 * tau * slope * std::abs(energy / std::max(std::abs(energy), 1e-300)) &&
          e_trial <= energy) {
        g = std::move(trial);
        energy = e_trial;
        accepted = true;
        tau = std::min(tau * 1.5, 1e3 * opts.step);
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) {
      // energy differences are at roundoff: accept steps that shrink the residual instead
      auto residual_of = [&](const std::vector<cplx>& v) {
        const auto Rv = generator(model, fft, v);
        const double w = inner_re(Rv, v) / nu;
        double acc = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) acc += std::norm(Rv[k] - w * v[k]);
        return std::sqrt(acc / nu);
      };
      const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(energy), 1.0);
      for (tau = opts.step; tau >= tau_floor; tau *= 0.5) {
        Wavefunction trial = g;
        for (std::size_t k = 0; k < trial.size(); ++k) trial[k] -= tau * Pr[k];
        rescale_to(trial.values, nu);
        const double e_trial = hamiltonian(model, trial);
        if (e_trial <= energy + slack && residual_of(trial.values) < residual) {
          g = std::move(trial);
          energy = std::min(energy, e_trial);
          accepted = true;
          break;
        }
      }
      if (!accepted) break;  // stalled at roundoff level
      tau = std::max(tau, tau_floor);
    }
  }
  out.g = std::move(g);
  out.omega = omega;
  out.energy = energy;
  out.residual = residual;
  out.iterations = it;
  return out;
}

GroundState minimize_at_power(const ModelSpec& model, double nu, InitPreset preset, const MinimizeOptions& opts) {
  auto gs = minimize_at_power(model, nu, preset_state(model.lattice(), preset, nu, opts.bump_width), opts);
  gs.origin = to_string(preset);
  return gs;
}

MultiStart minimize_multistart(const ModelSpec& model, double nu, const MinimizeOptions& opts) {
  MultiStart ms;
  for (auto p : {InitPreset::single_site, InitPreset::gaussian_bump, InitPreset::uniform})
    ms.attempts.push_back(minimize_at_power(model, nu, p, opts));
  ms.best = *std::min_element(ms.attempts.begin(), ms.attempts.end(),
                              [](const GroundState& a, const GroundState& b) { return a.energy < b.energy; });
  return ms;
}

double uniform_energy(const ModelSpec& model, double nu) {
  return hamiltonian(model, preset_state(model.lattice(), InitPreset::uniform, nu));
}

ThresholdResult excitation_threshold(const ModelSpec& model, std::pair<double, double> bracket, double tol,
                                     const MinimizeOptions& opts) {
  auto [lo, hi] = bracket;
  if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("excitation_threshold: need 0 < nu_lo < nu_hi");
  if (!(tol > 0.0)) throw std::invalid_argument("excitation_threshold: tol must be positive");
  const double h = model.lattice().h;

  ThresholdResult res;
  auto probe = [&](double nu) {
    const auto ms = minimize_multistart(model, nu, opts);
    const double base = uniform_energy(model, nu);
    const double eps_num = 1e-8 * nu * nu / (h * h);
    ThresholdProbe p{nu, ms.best.energy, base, ms.best.energy < base - eps_num};
    res.probes.push_back(p);
    return p.localized;
  };

  if (probe(lo)) {
    res.bracket_lo = res.bracket_hi = lo;
    return res;  // none_detected
  }
  if (!probe(hi)) {
    res.bracket_lo = lo;
    res.bracket_hi = hi;
    res.inconsistent = true;  // no crossing inside the bracket
    return res;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid))
      hi = mid;
    else
      lo = mid;
  }
  // localized probes must sit above every delocalized one
  double max_deloc = 0.0, min_loc = std::numeric_limits<double>::infinity();
  for (const auto& p : res.probes) {
    if (p.localized)
      min_loc = std::min(min_loc, p.nu);
    else
      max_deloc = std::max(max_deloc, p.nu);
  }
  res.inconsistent = max_deloc > min_loc;
  res.bracket_lo = lo;
  res.bracket_hi = hi;
  res.nu_c = 0.5 * (lo + hi);
  return res;
}

Wavefunction soliton_ansatz(double N, double a, double delta, double h, const LatticeConfig& lattice) {
  if (lattice.d != 1) throw std::invalid_argument("soliton_ansatz: 1D lattice required");
  if (delta != 0.0 && delta != 0.5) throw std::invalid_argument("soliton_ansatz: delta must be 0 or 1/2");
  if (!(N > 0.0) || !(a > 0.0) || !(h > 0.0)) throw std::invalid_argument("soliton_ansatz: N, a, h must be positive");
  const double amp = std::sqrt(N * std::sinh(a) / (h * std::cosh(a * (2.0 * delta - 1.0))));
  const int L = lattice.L;
  const double center = L / 2 + delta;
  Wavefunction f(lattice);
  for (int k = 0; k < L; ++k) {
    double dist = std::fmod(std::abs(k - center), static_cast<double>(L));
    dist = std::min(dist, L - dist);
    f[static_cast<std::size_t>(k)] = amp * std::exp(-a * dist);
  }
  return f;
}

}  // namespace dnls
