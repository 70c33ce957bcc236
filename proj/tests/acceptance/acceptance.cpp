// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Usage: acceptance [id ...]   (no ids runs everything)
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "dnls/dynamics.hpp"
#include "dnls/experiments.hpp"
#include "dnls/gibbs.hpp"
#include "dnls/groundstate.hpp"
#include "dnls/theory.hpp"

using namespace dnls;
namespace th = dnls::theory;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Verdict threshold_root() {
  const auto t0 = std::chrono::steady_clock::now();
  const double tc = th::critical_theta(1e-6);
  const double dt = seconds_since(t0);
  return {std::abs(tc - 2.455407) <= 1e-5 && dt < 1e-3,
          fmt::format("theta_c = {:.7f} (want 2.455407 +- 1e-5), {:.1f} us", tc, dt * 1e6)};
}

Verdict closed_form() {
  const auto t0 = std::chrono::steady_clock::now();
  const double g2 = th::g_theta(2.0), g3 = th::g_theta(3.0);
  const double tc = th::theta_c(), d = 1e-4;
  // B = 1 so beta = theta
  const double F = th::free_energy(tc, 1.0);
  const double jump = std::abs(th::free_energy(tc + 1e-12, 1.0) - th::free_energy(tc - 1e-12, 1.0));
  const double left = (F - th::free_energy(tc - d, 1.0)) / d;
  const double right = (th::free_energy(tc + d, 1.0) - F) / d;
  double min_ratio = INFINITY;
  for (double beta : linspace(tc + 0.01, 20.0, 200)) min_ratio = std::min(min_ratio, th::condensate_fraction(beta, 1.0).a);
  const double dt = seconds_since(t0);
  const bool ok = g2 < 0 && g3 > 0 && jump < 1e-9 && left == 0.0 && right > 0.0 && min_ratio > 0.5 && dt < 1.0;
  return {ok, fmt::format("g(2) = {:.4f}, g(3) = {:.4f}, F jump {:.1e}, slopes {:.3g} | {:.4f}, min a/B {:.4f}", g2,
                          g3, jump, left, right, min_ratio)};
}

Verdict partition_beta0() {
  const double z512 = th::log_partition_beta0(1.0, 512), z8192 = th::log_partition_beta0(1.0, 8192);
  const double F0 = th::free_energy(0.0, 1.0);
  return {std::abs(z512 - 2.137) <= 1e-3 && std::abs(z8192 - F0) < 0.002 && std::abs(F0 - 2.14473) < 1e-5,
          fmt::format("n = 512: {:.5f}; n = 8192: {:.5f} vs F(0,1) = {:.5f}", z512, z8192, F0)};
}

Verdict thermodynamic_integration() {
  const auto lat = build_torus(3, 8, 1.0);
  GibbsParams p{4.0, 1.0, gibbs_model(lat)};
  LogZOptions o;
  o.nodes = 16;
  o.sampler.sweeps = 12500;
  o.sampler.burn_in = 1250;
  const auto r = log_partition(p, 7, o);
  long total = 0;
  total = static_cast<long>(r.nodes.size()) * o.sampler.sweeps;
  const double F = th::free_energy(4.0, 1.0);
  return {std::abs(r.value - F) <= 0.1 && r.nodes.size() >= 16 && total >= 200000,
          fmt::format("(1/n) log Z = {:.4f} +- {:.4f} vs F(4,1) = {:.4f}; {} nodes, {} node sweeps, jump at {:.3f}",
                      r.value, r.error, F, r.nodes.size(), total, r.breakpoint.value_or(NAN))};
}

Verdict condensation() {
  const auto lat = build_torus(3, 8, 1.0);
  SamplerOptions so;
  so.sweeps = 20000;
  so.burn_in = 4000;
  so.init = ChainInit::condensed;
  const auto hot = run_chain({4.0, 1.0, gibbs_model(lat)}, 21, so).stats;
  so.init = ChainInit::ball;
  const auto cold = run_chain({1.0, 1.0, gibbs_model(lat)}, 22, so).stats;
  const bool ok = hot.M1.mean >= 0.72 && hot.M1.mean <= 0.99 && hot.M2.mean <= 0.05 && hot.N.mean >= 0.9 &&
                  hot.N.mean <= 1.0 && hot.H.mean >= -0.9 && hot.H.mean <= -0.5 && cold.M1.mean <= 0.1 &&
                  std::abs(cold.H.mean) <= 0.1;
  return {ok, fmt::format("beta 4: M1/n {:.4f}, M2/n {:.4f}, N/n {:.4f}, H/n {:.4f}; beta 1: M1/n {:.4f}, H/n {:.4f}",
                          hot.M1.mean, hot.M2.mean, hot.N.mean, hot.H.mean, cold.M1.mean, cold.H.mean)};
}

// n = 2 oracle. With N = m0 + m1, t = m0 / N and dphi the phase difference, the
// law is proportional to N exp(-beta H) dN dt dphi on [0, 2B] x [0, 1] x [0, 2 pi),
// H = 2 (m0 + m1 - 2 sqrt(m0 m1) cos dphi) - (m0^2 + m1^2) / 2.
constexpr int kBins = 10;
using Hist = std::array<double, kBins>;

struct Marg {
  Hist N{}, t{}, phi{};
  void normalize() {
    for (Hist* h : {&N, &t, &phi}) {
      double s = 0.0;
      for (double v : *h) s += v;
      for (double& v : *h) v /= s;
    }
  }
};

int bin_of(double x, double hi) { return std::clamp(static_cast<int>(x / hi * kBins), 0, kBins - 1); }

double tv(const Hist& a, const Hist& b) {
  double s = 0.0;
  for (int i = 0; i < kBins; ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

Verdict two_site_oracle() {
  const double twopi = 2.0 * std::numbers::pi;
  std::string detail;
  bool ok = true;
  for (auto [beta, B] : {std::pair{0.0, 1.0}, std::pair{1.0, 1.0}, std::pair{4.0, 1.0}}) {
    Marg q, s;
    const int G = 240;
    for (int i = 0; i < G; ++i) {
      const double N = (i + 0.5) * 2.0 * B / G;
      for (int j = 0; j < G; ++j) {
        const double t = (j + 0.5) / G, m0 = N * t, m1 = N - m0;
        for (int k = 0; k < G; ++k) {
          const double phi = (k + 0.5) * twopi / G;
          const double H = 2.0 * (m0 + m1 - 2.0 * std::sqrt(m0 * m1) * std::cos(phi)) - 0.5 * (m0 * m0 + m1 * m1);
          const double w = N * std::exp(-beta * H);
          q.N[bin_of(N, 2.0 * B)] += w;
          q.t[bin_of(t, 1.0)] += w;
          q.phi[bin_of(phi, twopi)] += w;
        }
      }
    }
    q.normalize();

    GibbsChain chain({beta, B, gibbs_model(build_torus(1, 2, 1.0))}, 31, 0);
    SamplerOptions so;
    for (int i = 0; i < 20000; ++i) chain.sweep(so, true);
    for (long i = 0; i < 1000000; ++i) {
      chain.sweep(so, false);
      const auto& f = chain.state().f;
      const double m0 = std::norm(f[0]), N = m0 + std::norm(f[1]);
      double phi = std::arg(f[0] * std::conj(f[1]));
      if (phi < 0) phi += twopi;
      s.N[bin_of(N, 2.0 * B)] += 1;
      s.t[bin_of(N > 0 ? m0 / N : 0.5, 1.0)] += 1;
      s.phi[bin_of(phi, twopi)] += 1;
    }
    s.normalize();
    const double worst = std::max({tv(q.N, s.N), tv(q.t, s.t), tv(q.phi, s.phi)});
    ok = ok && worst < 0.02;
    detail += fmt::format("{}(beta {}, B {}): max TV {:.4f}", detail.empty() ? "" : "; ", beta, B, worst);
  }
  return {ok, detail};
}

Verdict conservation() {
  const auto lat = build_torus(3, 8, 1.0);
  const auto m = cubic_focusing(nearest_neighbor_kernel(lat));
  Wavefunction f0(lat);
  for (std::size_t k = 0; k < lat.n; ++k) {
    const auto c = lat.coords(k);
    const double x = 2 * std::numbers::pi * c[0] / 8, y = 2 * std::numbers::pi * c[1] / 8,
                 z = 2 * std::numbers::pi * c[2] / 8;
    f0[k] = 0.5 * std::polar(1.0 + 0.5 * std::cos(x) * std::sin(y) + 0.3 * std::cos(z), 0.7 * std::sin(x + z));
  }
  auto drift = [&](double dt, int stride) {
    EvolveOptions o;
    o.dt = dt;
    o.T = 10.0;
    o.snapshot_stride = stride;
    o.keep_states = false;
    return conservation_report(evolve(m, f0, o));
  };
  const auto coarse = drift(1e-3, 50), fine = drift(5e-4, 100);
  const double ratio = coarse.second / fine.second;
  return {coarse.first <= 1e-10 && fine.first <= 1e-10 && ratio >= 3.5 && ratio <= 4.5,
          fmt::format("10^4 steps: N drift {:.1e}, H drift {:.3e} (dt 1e-3) / {:.3e} (dt 5e-4) = {:.3f}", coarse.first,
                      coarse.second, fine.second, ratio)};
}

Verdict decay() {
  const auto d1 = decay_experiment(1, 4096, 400.0, {20.0, 400.0});
  const auto d2 = decay_experiment(2, 256, 60.0, {10.0, 60.0});
  return {std::abs(d1.exponent + 1.0 / 3) <= 0.05 && std::abs(d2.exponent + 2.0 / 3) <= 0.1,
          fmt::format("d = 1: {:.4f} (want -0.3333 +- 0.05); d = 2: {:.4f} (want -0.6667 +- 0.1)", d1.exponent,
                      d2.exponent)};
}

Verdict excitation_threshold_dichotomy() {
  MinimizeOptions o1;
  o1.max_iters = 3000;
  const auto chain = build_torus(1, 1 << 17, 1.0);
  const auto one = excitation_threshold(cubic_focusing(nearest_neighbor_kernel(chain)), {1e-3, 10.0}, 1e-3, o1);
  const bool none = !one.nu_c && !one.probes.empty() && one.probes.front().localized;
  const double I1 = one.probes.empty() ? NAN : one.probes.front().energy;

  const auto lat = build_torus(3, 16, 1.0 / 16);
  const auto m = cubic_focusing(nearest_neighbor_kernel(lat));
  MinimizeOptions coarse, fine;
  coarse.tol = 1e-6;
  coarse.max_iters = 1000;
  fine.tol = 1e-8;
  fine.max_iters = 3000;
  const auto a = excitation_threshold(m, {100.0, 1e4}, 5.0, coarse);
  const auto b = excitation_threshold(m, {100.0, 1e4}, 5.0, fine);
  const bool found = a.nu_c && b.nu_c && *a.nu_c > 0 && !a.inconsistent && !b.inconsistent;
  const double rel = found ? std::abs(*a.nu_c - *b.nu_c) / *b.nu_c : NAN;
  return {none && found && rel <= 0.05,
          fmt::format("d = 1: {} (I at nu = 1e-3: {:.3e}); d = 3: nu_c = {:.1f} / {:.1f}, spread {:.2f}%",
                      none ? "none_detected" : "threshold reported", I1, a.nu_c.value_or(NAN), b.nu_c.value_or(NAN),
                      100 * rel)};
}

Verdict soliton_normalization() {
  double worst = 0.0;
  for (double delta : {0.0, 0.5})
    for (double a : {0.5, 1.0, 2.0})
      for (double h : {1.0, 0.1}) {
        const int L = static_cast<int>(std::ceil(30.0 / a)) + 2;
        const auto f = soliton_ansatz(2.0, a, delta, h, build_torus(1, L, h));
        worst = std::max(worst, std::abs(h * power(f) - 2.0));
      }
  return {worst <= 1e-10, fmt::format("max |h sum |phi|^2 - N| = {:.2e}", worst)};
}

Verdict continuum() {
  ContinuumOptions local;
  local.s = 2.0;
  const auto r2 = continuum_convergence(local);
  ContinuumOptions frac;
  frac.s = 0.75;
  const auto r075 = continuum_convergence(frac);
  ContinuumOptions cross = frac;
  cross.ref_alpha = 1.0;
  cross.ref_c = th::continuum_constant(2.0);
  const auto rx = continuum_convergence(cross);
  const auto [lo, hi] = std::minmax_element(rx.errors.begin(), rx.errors.end());
  const bool plateau = *lo >= 0.3 && *hi / *lo <= 2.0;
  auto list = [](const std::vector<double>& e) {
    std::string s;
    for (double x : e) s += fmt::format("{}{:.3e}", s.empty() ? "" : " ", x);
    return s;
  };
  return {r2.monotone && r075.monotone && plateau,
          fmt::format("s = 2: [{}]; s = 0.75: [{}]; cross: [{}]", list(r2.errors), list(r075.errors), list(rx.errors))};
}

Verdict breather() {
  BreatherOptions o;
  o.lattice = build_torus(3, 8, 1.0);
  o.samples = 50;
  o.T = 100.0;
  const auto r = breather_persistence(o, 11);
  return {r.condensed == 50 && r.persistence >= 0.9,
          fmt::format("{} condensed samples ({} excluded), persistence {:.3f}, min M1/N {:.3f}, power drift {:.1e}",
                      r.condensed, r.excluded, r.persistence, r.min_mass_fraction, r.max_power_drift)};
}

Verdict marginals() {
  std::string detail;
  bool ok = true;
  for (double beta : {1.0, 4.0}) {
    MarginalOptions o;
    o.beta = beta;
    o.lattice = build_torus(3, 8, 1.0);
    const auto r = marginal_test(o, 5);
    const double tol = beta > th::theta_c() ? 0.15 : 0.1;
    const bool here = !r.shortage && std::abs(r.second_moment_ratio - 1.0) <= tol && std::abs(r.mean_re) <= 0.1 &&
                      std::abs(r.mean_im) <= 0.1 && r.ks_p > 0.01 && r.argmax_removed == (beta > th::theta_c());
    ok = ok && here;
    detail += fmt::format("{}beta {}: E|psi|^2/var {:.4f}, mean ({:.3f}, {:.3f}), KS p {:.3f}, {} values",
                          detail.empty() ? "" : "; ", beta, r.second_moment_ratio, r.mean_re, r.mean_im, r.ks_p,
                          r.values);
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"threshold root", threshold_root},
      {"closed-form sanity", closed_form},
      {"partition function at beta = 0", partition_beta0},
      {"thermodynamic integration", thermodynamic_integration},
      {"condensation observables", condensation},
      {"two-site sampler oracle", two_site_oracle},
      {"dynamics conservation", conservation},
      {"free-evolution decay", decay},
      {"excitation threshold dichotomy", excitation_threshold_dichotomy},
      {"soliton ansatz normalization", soliton_normalization},
      {"continuum limit", continuum},
      {"breather persistence", breather},
      {"Gaussian marginals", marginals},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double dt = seconds_since(t0);
    std::printf("%s %2d %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first, v.detail.c_str(), dt);
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
