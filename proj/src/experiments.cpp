#include "dnls/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dnls/dynamics.hpp"
#include "dnls/errors.hpp"
#include "dnls/fft.hpp"
#include "dnls/rng.hpp"
#include "dnls/theory.hpp"

namespace dnls {

std::vector<double> linspace(double a, double b, int points) {
  if (points < 1) throw std::invalid_argument("linspace: need at least one point");
  if (points == 1) return {a};
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = a + (b - a) * i / (points - 1);
  return out;
}

// ---------------------------------------------------------------------------

SweepResult sweep_beta(const SweepOptions& opts, std::uint64_t seed) {
  if (opts.betas.empty()) throw std::invalid_argument("sweep_beta: empty beta grid");
  std::vector<double> grid = opts.betas;
  if (grid.front() > 0.0) grid.insert(grid.begin(), 0.0);
  const auto model = gibbs_model(opts.lattice, opts.edge_weight);
  const auto tr = tempered_sweep(grid, opts.B, model, seed, opts.sampler, opts.threads);

  SweepResult res;
  res.swap_acceptance = tr.swap_acceptance;
  double F = theory::log_partition_beta0(opts.B, static_cast<long>(opts.lattice.n));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    SweepRow row;
    row.beta = grid[i];
    row.stats = tr.chains[i].stats;
    if (i > 0) F -= 0.5 * (grid[i] - grid[i - 1]) * (row.stats.H.mean + res.rows.back().stats.H.mean);
    row.F_sampled = F;
    row.F_theory = theory::free_energy(row.beta, opts.B);
    if (row.beta * opts.B * opts.B >= 2.0) row.a_theory = theory::condensate_fraction(row.beta, opts.B).a;
    row.low_ess = row.stats.ess < opts.min_ess;
    if (row.low_ess) res.mixing_ok = false;
    res.rows.push_back(row);
  }
  for (std::size_t i = 0; i + 1 < res.rows.size(); ++i) {
    const double d = res.rows[i + 1].stats.mass_fraction.mean - res.rows[i].stats.mass_fraction.mean;
    if (d > res.jump_size) {
      res.jump_size = d;
      res.jump_beta = 0.5 * (res.rows[i].beta + res.rows[i + 1].beta);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------

BreatherResult breather_persistence(const BreatherOptions& opts, std::uint64_t seed) {
  if (opts.samples < 0) throw std::invalid_argument("breather: samples must be >= 0");
  if (!(opts.T >= 0.0) || !(opts.dt > 0.0)) throw std::invalid_argument("breather: need T >= 0 and dt > 0");
  GibbsParams params{opts.beta, opts.B, gibbs_model(opts.lattice, opts.edge_weight)};
  GibbsChain chain(params, seed, 0);
  SamplerOptions so;
  for (long s = 0; s < opts.burn_in; ++s) chain.sweep(so, true);

  const auto dyn = cubic_focusing(nearest_neighbor_kernel(opts.lattice));
  EvolveOptions eo;
  eo.dt = std::min(opts.dt, opts.T > 0.0 ? opts.T : opts.dt);
  eo.T = opts.T;
  eo.snapshot_stride = opts.snapshot_stride;
  eo.keep_states = false;

  BreatherResult res;
  const long max_draws = opts.max_draws > 0 ? opts.max_draws : 4L * std::max(opts.samples, 1);
  int persisted = 0;
  for (long draw = 0; draw < max_draws && res.condensed < opts.samples; ++draw) {
    for (long s = 0; s < opts.sweeps_between; ++s) chain.sweep(so, false);
    const Wavefunction f0 = chain.state().f;
    const auto c0 = top_two_masses(f0);
    if (c0.M1 / c0.N <= opts.condensed_fraction) {
      ++res.excluded;
      continue;
    }
    ++res.condensed;
    BreatherRun run;
    run.site = c0.argmax_site;
    run.min_mass_fraction = c0.mass_fraction;
    if (opts.T > 0.0) {
      const auto traj = evolve(dyn, f0, eo, [&](double, const Wavefunction& f) {
        const auto c = top_two_masses(f);
        run.min_mass_fraction = std::min(run.min_mass_fraction, c.mass_fraction);
        if (c.argmax_site != run.site) {
          ++run.hops;
          run.persisted = false;
          return false;
        }
        return true;
      });
      res.max_power_drift = std::max(res.max_power_drift, conservation_report(traj).first);
    }
    persisted += run.persisted;
    res.min_mass_fraction = std::min(res.min_mass_fraction, run.min_mass_fraction);
    res.runs.push_back(run);
  }
  res.persistence = res.condensed > 0 ? static_cast<double>(persisted) / res.condensed : 1.0;
  return res;
}

// ---------------------------------------------------------------------------

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Jacobi-transformed series converges fast for small lambda
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double acc = 0.0;
    for (int k = 1; k <= 20; ++k) acc += std::exp(-(2.0 * k - 1) * (2.0 * k - 1) * pi2 / (8.0 * lambda * lambda));
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * acc, 0.0, 1.0);
  }
  double acc = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    acc += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * acc, 0.0, 1.0);
}

KsResult ks_test_normal(std::vector<double> xs, double sd) {
  if (xs.empty()) return {};
  if (!(sd > 0.0)) throw std::invalid_argument("ks_test_normal: sd must be positive");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double D = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = 0.5 * std::erfc(-xs[i] / (sd * std::numbers::sqrt2));
    D = std::max({D, (i + 1) / n - F, F - i / n});
  }
  const double sn = std::sqrt(n);
  return {D, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * D)};
}

MarginalReport marginal_test(const MarginalOptions& opts, std::uint64_t seed) {
  if (opts.m < 0) throw std::invalid_argument("marginal_test: m must be >= 0");
  const std::size_t n = opts.lattice.n;
  if (static_cast<std::size_t>(opts.m) * 2 > n) throw std::invalid_argument("marginal_test: m must be small against n");
  MarginalReport rep;
  rep.m = opts.m;
  const double theta = opts.beta * opts.B * opts.B;
  rep.argmax_removed = theta > theory::theta_c();
  rep.variance = rep.argmax_removed ? opts.B - theory::condensate_fraction(opts.beta, opts.B).a : opts.B;
  if (opts.m == 0) return rep;

  GibbsParams params{opts.beta, opts.B, gibbs_model(opts.lattice, opts.edge_weight)};
  GibbsChain chain(params, seed, 0, 0.5, rep.argmax_removed ? ChainInit::condensed : ChainInit::ball);
  SamplerOptions so;
  for (long s = 0; s < opts.burn_in; ++s) chain.sweep(so, true);

  // m + 1 evenly spread sites so one can be dropped when it carries the condensate
  std::vector<std::size_t> sites;
  for (int i = 0; i <= opts.m; ++i) sites.push_back(n * static_cast<std::size_t>(i) / (opts.m + 1));

  const double sd = std::sqrt(rep.variance);
  std::vector<double> re;
  double m2 = 0.0, sre = 0.0, sim = 0.0;
  for (int sample = 0; sample < opts.samples; ++sample) {
    for (long s = 0; s < opts.thin; ++s) chain.sweep(so, false);
    const auto& f = chain.state().f;
    const std::size_t amax = top_two_masses(f).argmax_site;
    int used = 0;
    for (std::size_t site : sites) {
      if (used == opts.m) break;
      if (rep.argmax_removed && site == amax) continue;
      const cplx z = f[site] / sd;
      re.push_back(z.real());
      m2 += std::norm(z);
      sre += z.real();
      sim += z.imag();
      ++used;
    }
  }
  rep.values = static_cast<long>(re.size());
  if (rep.values > 0) {
    const double cnt = static_cast<double>(rep.values);
    rep.second_moment_ratio = m2 / cnt;
    rep.mean_re = sre / cnt;
    rep.mean_im = sim / cnt;
    const auto ks = ks_test_normal(re, std::sqrt(0.5));
    rep.ks_stat = ks.D;
    rep.ks_p = ks.p;
  }
  rep.shortage = rep.values < 200;
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

double signed_freq(std::size_t m, std::size_t M) {
  return m <= M / 2 ? static_cast<double>(m) : static_cast<double>(m) - static_cast<double>(M);
}

std::vector<cplx> initial_profile(int M, double amplitude) {
  // sampled at x_j = j P / M, so the period itself drops out
  std::vector<cplx> u(static_cast<std::size_t>(M));
  for (int j = 0; j < M; ++j) u[static_cast<std::size_t>(j)] = amplitude * std::exp(std::cos(2.0 * std::numbers::pi * j / M));
  return u;
}

}  // namespace

std::vector<cplx> continuum_reference(double alpha, double c, int M, double period, double amplitude, double T,
                                      double dt) {
  if (M < 4) throw std::invalid_argument("continuum_reference: grid too small");
  if (!(period > 0.0)) throw std::invalid_argument("continuum_reference: period must be positive");
  if (!(dt > 0.0) || !(T >= 0.0)) throw std::invalid_argument("continuum_reference: need dt > 0, T >= 0");
  const auto lat = build_torus(1, M, period / M);
  const Fft fft(lat);
  auto u = initial_profile(M, amplitude);
  const long steps = T > 0.0 ? std::max(1L, std::lround(T / dt)) : 0L;
  if (steps == 0) return u;
  const double h = T / static_cast<double>(steps);
  std::vector<cplx> phase(static_cast<std::size_t>(M));
  for (std::size_t m = 0; m < phase.size(); ++m) {
    const double xi = 2.0 * std::numbers::pi * std::abs(signed_freq(m, phase.size())) / period;
    phase[m] = std::polar(1.0, -h * c * std::pow(xi, 2.0 * alpha));
  }
  auto half_nonlinear = [&] {
    for (auto& z : u) z *= std::polar(1.0, 0.5 * h * std::norm(z));
  };
  for (long s = 0; s < steps; ++s) {
    half_nonlinear();
    fft.apply_diagonal(u, [&](std::size_t m) { return phase[m]; });
    half_nonlinear();
  }
  return u;
}

ContinuumResult continuum_convergence(const ContinuumOptions& opts) {
  if (opts.hs.empty()) throw std::invalid_argument("continuum_convergence: empty h grid");
  ContinuumResult res;
  res.alpha = opts.ref_alpha.value_or(theory::continuum_exponent(opts.s).alpha);
  res.c = opts.ref_c.value_or(theory::continuum_constant(opts.s));
  const int M = opts.ref_modes;
  const auto ref = continuum_reference(res.alpha, res.c, M, opts.period, opts.amplitude, opts.T, opts.dt);
  {
    const auto coarse = continuum_reference(res.alpha, res.c, M / 2, opts.period, opts.amplitude, opts.T, opts.dt / 2);
    double num = 0.0, den = 0.0;
    for (int j = 0; j < M / 2; ++j) {
      num += std::norm(coarse[static_cast<std::size_t>(j)] - ref[static_cast<std::size_t>(2 * j)]);
      den += std::norm(ref[static_cast<std::size_t>(2 * j)]);
    }
    res.ref_self_check = std::sqrt(num / den);
  }

  for (double h : opts.hs) {
    const int L = static_cast<int>(std::lround(opts.period / h));
    if (L < 4 || std::abs(L * h - opts.period) > 1e-9 * opts.period)
      throw std::invalid_argument("continuum_convergence: period / h must be an integer");
    if (M % L != 0) throw std::invalid_argument("continuum_convergence: reference grid must be a multiple of period / h");
    const auto lat = build_torus(1, L, h);
    auto kernel = periodize_kernel(opts.s, lat);
    if (opts.s > 1.0) {
      kernel.scale = std::pow(h, 2.0 * opts.s - 2.0);
      kernel.symbol = coupling_symbol(kernel, lat);
    }
    const ModelSpec model{kernel, PowerNonlinearity{3.0, -1}, std::nullopt, HamiltonianConvention::long_range};
    Wavefunction f0(lat, initial_profile(L, opts.amplitude));
    Wavefunction f = f0;
    if (opts.T > 0.0) {
      EvolveOptions eo;
      eo.dt = opts.dt;
      eo.T = opts.T;
      eo.snapshot_stride = 1 << 30;
      eo.keep_states = false;
      evolve(model, f0, eo, [&](double, const Wavefunction& g) {
        f = g;
        return true;
      });
    }
    double num = 0.0, den = 0.0;
    const int stride = M / L;
    for (int k = 0; k < L; ++k) {
      const cplx r = ref[static_cast<std::size_t>(k * stride)];
      num += std::norm(f[static_cast<std::size_t>(k)] - r);
      den += std::norm(r);
    }
    res.hs.push_back(h);
    res.errors.push_back(std::sqrt(num / den));
  }
  for (std::size_t i = 1; i < res.errors.size(); ++i)
    if (!(res.errors[i] < res.errors[i - 1])) res.monotone = false;
  if (res.errors.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < res.hs.size(); ++i) {
      mx += std::log(res.hs[i]);
      my += std::log(res.errors[i]);
    }
    mx /= res.hs.size();
    my /= res.hs.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < res.hs.size(); ++i) {
      sxy += (std::log(res.hs[i]) - mx) * (std::log(res.errors[i]) - my);
      sxx += (std::log(res.hs[i]) - mx) * (std::log(res.hs[i]) - mx);
    }
    res.order = sxy / sxx;
  }
  return res;
}

// ---------------------------------------------------------------------------

double h1_orbit_distance(const std::vector<cplx>& u, const std::vector<cplx>& Q) {
  if (u.size() != Q.size() || u.size() < 2) throw std::invalid_argument("h1_orbit_distance: grids differ");
  const std::size_t M = u.size();
  const Fft fft(build_torus(1, static_cast<int>(M), 1.0 / static_cast<double>(M)));
  auto uh = u, qh = Q;
  fft.forward(uh);
  fft.forward(qh);
  double nu = 0.0, nq = 0.0;
  std::vector<cplx> cross(M);
  for (std::size_t m = 0; m < M; ++m) {
    const double k = signed_freq(m, M);
    const double w = (1.0 + 4.0 * std::numbers::pi * std::numbers::pi * k * k) / (static_cast<double>(M) * M);
    nu += w * std::norm(uh[m]);
    nq += w * std::norm(qh[m]);
    cross[m] = w * uh[m] * std::conj(qh[m]);
  }
  fft.backward(cross);
  double best = 0.0;
  for (const auto& z : cross) best = std::max(best, std::abs(z));
  return std::sqrt(std::max(0.0, nu + nq - 2.0 * best));
}

JjtResult jjt_concentration(const JjtOptions& opts, std::uint64_t seed) {
  if (opts.modes.empty()) throw std::invalid_argument("jjt: empty mode grid");
  if (!(opts.B > 0.0) || !(opts.C > 0.0)) throw std::invalid_argument("jjt: B and C must be positive");
  if (opts.kappa != 1 && opts.kappa != -1) throw std::invalid_argument("jjt: kappa must be +1 or -1");
  const int M = opts.grid;
  const auto lat = build_torus(1, M, 1.0 / M);
  const ModelSpec focusing{nearest_neighbor_kernel(lat), SaturableNonlinearity{-1}, std::nullopt,
                           HamiltonianConvention::standard};
  MinimizeOptions mo;
  mo.tol = 1e-9;
  const auto gs = minimize_multistart(focusing, opts.B * opts.B * M, mo).best;

  JjtResult res;
  res.ground_energy = gs.energy;
  const std::vector<cplx> zero(static_cast<std::size_t>(M));
  res.ground_h1 = h1_orbit_distance(zero, gs.g.values);

  std::vector<cplx> qhat = gs.g.values;
  Fft(lat).forward(qhat);
  for (auto& z : qhat) z /= static_cast<double>(M);

  const auto sat = saturable_weight();
  for (std::size_t i = 0; i < opts.modes.size(); ++i) {
    const int n = opts.modes[i];
    if (2 * n + 1 > M) throw std::invalid_argument("jjt: ground-state grid too coarse for the mode count");
    SpectralOptions so;
    so.n_modes = n;
    so.B = opts.B;
    so.beta = opts.C * n;
    if (opts.kappa < 0)
      so.weight = sat;
    else
      so.weight = [sat](const std::vector<cplx>& u) { return -sat(u); };
    PcnOptions po = opts.pcn;
    po.init.assign(static_cast<std::size_t>(2 * n + 1), cplx{});
    for (int k = -n; k <= n; ++k) po.init[static_cast<std::size_t>(k + n)] = qhat[static_cast<std::size_t>((k + M) % M)];
    const auto chain = pcn_spectral_1d(so, po, seed + static_cast<std::uint64_t>(i));
    std::vector<double> dist;
    for (const auto& a : chain.coeffs) dist.push_back(h1_orbit_distance(spectral_to_grid(a, M), gs.g.values));
    JjtRow row;
    row.n_modes = n;
    row.beta = so.beta;
    row.distance = batch_means(dist);
    row.acceptance = chain.acceptance;
    row.samples = static_cast<long>(dist.size());
    res.rows.push_back(row);
  }
  for (std::size_t i = 1; i < res.rows.size(); ++i) {
    const auto& a = res.rows[i - 1].distance;
    const auto& b = res.rows[i].distance;
    if (b.mean > a.mean + 2.0 * std::hypot(a.se, b.se)) res.non_increasing = false;
  }
  return res;
}

// ---------------------------------------------------------------------------

std::vector<GroundStateRow> groundstate_grid(const ModelSpec& model, const std::vector<double>& nus,
                                             const MinimizeOptions& opts) {
  std::vector<GroundStateRow> rows;
  for (double nu : nus) {
    const auto ms = minimize_multistart(model, nu, opts);
    const auto& g = ms.best;
    GroundStateRow r;
    r.nu = nu;
    r.omega = g.omega;
    r.energy = g.energy;
    r.residual = g.residual;
    r.mass_fraction = top_two_masses(g.g).M1 / nu;
    r.uniform_energy = uniform_energy(model, nu);
    r.converged = g.converged;
    r.origin = g.origin;
    rows.push_back(r);
  }
  return rows;
}

std::vector<TheoryRow> theory_table(const std::vector<double>& betas, double B) {
  std::vector<TheoryRow> rows;
  for (double beta : betas) {
    const auto pp = theory::classify(beta, B);
    TheoryRow r;
    r.beta = beta;
    r.B = B;
    r.theta = pp.theta;
    if (pp.theta >= 2.0) {
      r.g = theory::g_theta(pp.theta);
      if (pp.phase != theory::Phase::subcritical) r.a = theory::condensate_fraction(beta, B).a;
    }
    r.F = theory::free_energy(beta, B);
    r.phase = pp.phase == theory::Phase::subcritical ? "subcritical"
              : pp.phase == theory::Phase::critical  ? "critical"
                                                     : "supercritical";
    rows.push_back(r);
  }
  return rows;
}

}  // namespace dnls
