#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "dnls/experiments.hpp"
#include "dnls/gibbs.hpp"
#include "dnls/rng.hpp"

using namespace dnls;

namespace {

constexpr int kBins = 10;
using Hist = std::array<double, kBins>;

struct Marginals {
  Hist N{}, t{}, phi{};
};

int bin(double x, double lo, double hi) {
  return std::clamp(static_cast<int>((x - lo) / (hi - lo) * kBins), 0, kBins - 1);
}

void normalize(Hist& h) {
  double s = 0.0;
  for (double v : h) s += v;
  for (double& v : h) v /= s;
}

double tv(const Hist& a, const Hist& b) {
  double s = 0.0;
  for (int i = 0; i < kBins; ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

// Two-site ring: H = 2 |f0 - f1|^2 - (m0^2 + m1^2) / 2. In (N, t = m0/N, dphi) the
// Lebesgue measure on C^2 becomes N dN dt dphi (up to a constant), so the law is
// proportional to N exp(-beta H) on [0, 2B] x [0, 1] x [0, 2 pi).
Marginals quadrature_oracle(double beta, double B) {
  const int G = 200;
  Marginals m;
  const double twopi = 2.0 * std::numbers::pi;
  for (int i = 0; i < G; ++i) {
    const double N = (i + 0.5) * 2.0 * B / G;
    for (int j = 0; j < G; ++j) {
      const double t = (j + 0.5) / G;
      const double m0 = N * t, m1 = N * (1.0 - t);
      for (int k = 0; k < G; ++k) {
        const double phi = (k + 0.5) * twopi / G;
        const double d2 = m0 + m1 - 2.0 * std::sqrt(m0 * m1) * std::cos(phi);
        const double w = N * std::exp(-beta * (2.0 * d2 - 0.5 * (m0 * m0 + m1 * m1)));
        m.N[bin(N, 0.0, 2.0 * B)] += w;
        m.t[bin(t, 0.0, 1.0)] += w;
        m.phi[bin(phi, 0.0, twopi)] += w;
      }
    }
  }
  normalize(m.N);
  normalize(m.t);
  normalize(m.phi);
  return m;
}

Marginals sampled(double beta, double B, long sweeps, std::uint64_t seed) {
  const auto lat = build_torus(1, 2, 1.0);
  GibbsChain chain({beta, B, gibbs_model(lat)}, seed, 0);
  SamplerOptions so;
  for (int s = 0; s < 20000; ++s) chain.sweep(so, true);
  Marginals m;
  const double twopi = 2.0 * std::numbers::pi;
  for (long s = 0; s < sweeps; ++s) {
    chain.sweep(so, false);
    const auto& f = chain.state().f;
    const double m0 = std::norm(f[0]), N = m0 + std::norm(f[1]);
    double phi = std::arg(f[0] * std::conj(f[1]));
    if (phi < 0.0) phi += twopi;
    m.N[bin(N, 0.0, 2.0 * B)] += 1;
    m.t[bin(N > 0 ? m0 / N : 0.5, 0.0, 1.0)] += 1;
    m.phi[bin(phi, 0.0, twopi)] += 1;
  }
  normalize(m.N);
  normalize(m.t);
  normalize(m.phi);
  return m;
}

}  // namespace

TEST_CASE("two-site chain matches a quadrature oracle") {
  for (auto [beta, B] : {std::pair{0.0, 1.0}, std::pair{1.0, 1.0}, std::pair{4.0, 1.0}}) {
    CAPTURE(beta);
    const auto want = quadrature_oracle(beta, B);
    const auto got = sampled(beta, B, 1000000, 17);
    CHECK(tv(want.N, got.N) < 0.02);
    CHECK(tv(want.t, got.t) < 0.02);
    CHECK(tv(want.phi, got.phi) < 0.02);
  }
}

TEST_CASE("cached sums agree with a recomputation") {
  const auto lat = build_torus(2, 6, 1.0);
  const auto model = gibbs_model(lat);
  GibbsChain chain({3.0, 1.0, model}, 5, 0, 0.5, ChainInit::condensed);
  SamplerOptions so;
  so.transfer_moves = 3;
  so.swap_moves = 2;
  so.condensate_moves = 2;
  for (int s = 0; s < 500; ++s) chain.sweep(so, true);
  const auto before = chain.state();
  chain.recompute();
  CHECK(before.N == doctest::Approx(chain.state().N).epsilon(1e-10));
  CHECK(before.K == doctest::Approx(chain.state().K).epsilon(1e-10));
  CHECK(before.Q == doctest::Approx(chain.state().Q).epsilon(1e-10));
  CHECK(before.H == doctest::Approx(hamiltonian(model, chain.state().f)).epsilon(1e-9));
  CHECK(chain.state().N <= 1.0 * lat.n * (1 + 1e-12));
}

TEST_CASE("batch means") {
  const std::vector<double> flat(1000, 2.5);
  const auto e = batch_means(flat);
  CHECK(e.mean == doctest::Approx(2.5));
  CHECK(e.se == doctest::Approx(0.0));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> xs(200000);
  for (auto& x : xs) x = g(rng);
  const auto iid = batch_means(xs, 20);
  CHECK(std::abs(iid.mean) < 4.0 / std::sqrt(200000.0));
  CHECK(iid.se == doctest::Approx(1.0 / std::sqrt(200000.0)).epsilon(0.4));
}

TEST_CASE("chains are reproducible from the seed") {
  const auto lat = build_torus(2, 6, 1.0);
  GibbsParams p{2.0, 1.0, gibbs_model(lat)};
  SamplerOptions so;
  so.sweeps = 400;
  so.burn_in = 100;
  const auto a = run_chain(p, 99, so), b = run_chain(p, 99, so), c = run_chain(p, 100, so);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].H == b.records[i].H);
  CHECK(a.records.back().H != c.records.back().H);
}

TEST_CASE("tempered results do not depend on the thread count") {
  const auto lat = build_torus(2, 6, 1.0);
  SamplerOptions so;
  so.sweeps = 300;
  so.burn_in = 50;
  const std::vector<double> betas{0.5, 1.5, 3.0, 5.0};
  const auto a = tempered_sweep(betas, 1.0, gibbs_model(lat), 7, so, 1);
  const auto b = tempered_sweep(betas, 1.0, gibbs_model(lat), 7, so, 4);
  REQUIRE(a.chains.size() == 4);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(a.chains[c].stats.H.mean == b.chains[c].stats.H.mean);
    CHECK(a.chains[c].stats.mass_fraction.mean == b.chains[c].stats.mass_fraction.mean);
  }
  CHECK(a.swap_acceptance == b.swap_acceptance);
}

TEST_CASE("uniform ball draws") {
  const auto lat = build_torus(1, 5, 1.0);
  auto rng = make_stream(1, 0);
  double acc = 0.0, worst = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const double r = power(sample_ball(lat, 2.0, rng)) / (2.0 * 5);
    worst = std::max(worst, r);
    acc += r;
  }
  CHECK(worst <= 1.0);
  // radius^2 of a uniform point in the 2n-ball has mean n / (n + 1)
  CHECK(acc / draws == doctest::Approx(5.0 / 6.0).epsilon(0.005));
}

TEST_CASE("wave dump round-trip and bad input") {
  const auto lat = build_torus(2, 3, 1.0);
  auto rng = make_stream(2, 0);
  const auto f = sample_ball(lat, 1.0, rng);
  std::stringstream ss;
  write_wave(ss, f);
  CHECK(ss.str().size() == 8 + 8 + 16 * lat.n);
  const auto g = read_wave(ss, lat);
  for (std::size_t k = 0; k < lat.n; ++k) CHECK(g[k] == f[k]);

  std::stringstream bad("NOTAWAVE\0\0\0\0");
  CHECK_THROWS(read_wave(bad, lat));
  std::stringstream wrong;
  write_wave(wrong, f);
  CHECK_THROWS(read_wave(wrong, build_torus(1, 4, 1.0)));
}

TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
  for (int m : {1, 2, 5, 8, 16}) {
    const auto rule = gauss_legendre(m, -0.5, 2.0);
    for (int p = 0; p <= 2 * m - 1; ++p) {
      double s = 0.0;
      for (auto [x, w] : rule) s += w * std::pow(x, p);
      const double exact = (std::pow(2.0, p + 1) - std::pow(-0.5, p + 1)) / (p + 1);
      CHECK(s == doctest::Approx(exact).epsilon(1e-12));
    }
  }
}

TEST_CASE("spectral ensemble has the Gaussian free-field moments") {
  SpectralOptions o;
  o.n_modes = 4;
  o.B = 100.0;  // makes the power cutoff irrelevant for the nonzero modes
  o.beta = 2.0;
  o.samples = 40000;
  const auto ens = sample_spectral_1d(o, 11);
  REQUIRE(ens.coeffs.size() == 40000);
  for (int k : {-3, 1, 4}) {
    double m2 = 0.0;
    for (const auto& c : ens.coeffs) m2 += std::norm(c[static_cast<std::size_t>(k + o.n_modes)]);
    m2 /= ens.coeffs.size();
    const double want = 2.0 / (4.0 * std::numbers::pi * std::numbers::pi * k * k * o.beta);
    CHECK(m2 == doctest::Approx(want).epsilon(0.03));
  }
  double z = 0.0;
  for (const auto& c : ens.coeffs) z += std::norm(c[static_cast<std::size_t>(o.n_modes)]);
  CHECK(z / ens.coeffs.size() == doctest::Approx(o.B * o.B / 2).epsilon(0.02));
}

TEST_CASE("grid synthesis of Fourier coefficients") {
  std::vector<cplx> c(5);
  c[3] = 1.0;  // k = 1
  c[2] = 0.5;  // k = 0
  const auto u = spectral_to_grid(c, 8);
  for (int j = 0; j < 8; ++j)
    CHECK(std::abs(u[static_cast<std::size_t>(j)] - (0.5 + std::polar(1.0, 2.0 * std::numbers::pi * j / 8))) < 1e-12);
}

TEST_CASE("Kolmogorov distribution tail") {
  CHECK(kolmogorov_sf(1.0) == doctest::Approx(0.26999967).epsilon(1e-7));
  CHECK(kolmogorov_sf(1.36) == doctest::Approx(0.0494).epsilon(0.01));
  CHECK(kolmogorov_sf(1.18 - 1e-9) == doctest::Approx(kolmogorov_sf(1.18 + 1e-9)).epsilon(1e-8));
  CHECK(kolmogorov_sf(0.0) == 1.0);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 2.0);
  std::vector<double> xs(5000);
  for (auto& x : xs) x = g(rng);
  CHECK(ks_test_normal(xs, 2.0).p > 0.01);
  CHECK(ks_test_normal(xs, 1.0).p < 1e-6);
}

TEST_CASE("invalid sampler parameters") {
  const auto lat = build_torus(1, 4, 1.0);
  CHECK_THROWS(GibbsParams{-1.0, 1.0, gibbs_model(lat)}.validate());
  CHECK_THROWS(GibbsParams{1.0, 0.0, gibbs_model(lat)}.validate());
}
