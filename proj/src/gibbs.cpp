#include "dnls/gibbs.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "dnls/errors.hpp"
#include "dnls/fft.hpp"
#include "dnls/rng.hpp"
#include "dnls/theory.hpp"

namespace dnls {

void GibbsParams::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("GibbsParams: beta must be finite and >= 0");
  if (!(B > 0.0) || !std::isfinite(B)) throw std::invalid_argument("GibbsParams: B must be positive");
  model.validate();
  if (lattice().kind != LatticeKind::torus) throw std::invalid_argument("GibbsParams: torus lattice required");
  if (model.kernel.kind != KernelKind::nearest_neighbor)
    throw std::invalid_argument("GibbsParams: nearest-neighbor kernel required");
  if (model.potential) throw std::invalid_argument("GibbsParams: external potential not supported");
  if (!std::holds_alternative<PowerNonlinearity>(model.nonlinearity))
    throw std::invalid_argument("GibbsParams: power nonlinearity required");
  if (model.convention == HamiltonianConvention::long_range)
    throw std::invalid_argument("GibbsParams: long_range convention not supported");
}

ModelSpec gibbs_model(const LatticeConfig& lattice, double edge_weight) {
  auto m = cubic_focusing(nearest_neighbor_kernel(lattice), HamiltonianConvention::ck_normalized);
  m.ck_edge_weight = edge_weight;
  m.validate();
  return m;
}

Wavefunction sample_ball(const LatticeConfig& lattice, double B, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Wavefunction f(lattice);
  double s = 0.0;
  for (auto& z : f.values) {
    z = {normal(rng), normal(rng)};
    s += std::norm(z);
  }
  const double n = static_cast<double>(lattice.n);
  const double radius = std::sqrt(B * n) * std::pow(uniform01(rng), 1.0 / (2.0 * n));
  const double c = radius / std::sqrt(s);
  for (auto& z : f.values) z *= c;
  return f;
}

// ---------------------------------------------------------------------------

GibbsChain::GibbsChain(const GibbsParams& params, std::uint64_t seed, std::uint64_t stream, double sigma,
                       ChainInit init)
    : params_(params) {
  params_.validate();
  const auto& lat = params_.lattice();
  const double n = static_cast<double>(lat.n);
  const auto& pw = std::get<PowerNonlinearity>(params_.model.nonlinearity);
  const double inv_h2 = params_.model.kernel.scale / (lat.h * lat.h);
  qexp_ = 0.5 * (pw.p + 1.0);
  if (params_.model.convention == HamiltonianConvention::ck_normalized) {
    cK_ = params_.model.ck_edge_weight * inv_h2 / n;
    cQ_ = -1.0 / n;
  } else {
    cK_ = inv_h2;
    cQ_ = pw.kappa * 2.0 / (pw.p + 1.0);
  }
  cap_ = params_.B * n;

  deg_ = 2 * lat.d;
  nbr_.resize(lat.n * static_cast<std::size_t>(deg_));
  for (std::size_t k = 0; k < lat.n; ++k)
    for (int a = 0; a < lat.d; ++a) {
      nbr_[k * deg_ + 2 * a] = lat.neighbor(k, a, +1);
      nbr_[k * deg_ + 2 * a + 1] = lat.neighbor(k, a, -1);
    }

  st_.rng = make_stream(seed, stream);
  st_.sigma = sigma;
  if (init == ChainInit::condensed) {
    const double theta = params_.beta * params_.B * params_.B;
    const double a = theta >= 2.0 ? theory::condensate_fraction(params_.beta, params_.B).a : 0.5 * params_.B;
    st_.f = sample_ball(lat, params_.B - a, st_.rng);
    st_.f[0] = std::sqrt(a * n);
  } else {
    st_.f = sample_ball(lat, params_.B, st_.rng);
  }
  recompute();
}

void GibbsChain::recompute() {
  const auto& f = st_.f.values;
  const std::size_t n = f.size();
  double N = 0.0, K = 0.0, Q = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double m = std::norm(f[k]);
    N += m;
    Q += qterm(m);
    for (int a = 0; a < deg_; a += 2) K += std::norm(f[k] - f[nbr_[k * deg_ + a]]);
  }
  if (!std::isfinite(N) || !std::isfinite(K) || !std::isfinite(Q))
    throw NumericalError("GibbsChain: non-finite field");
  st_.N = N;
  st_.K = K;
  st_.Q = Q;
  st_.H = energy(K, Q);
}

double GibbsChain::qterm(double mass) const { return qexp_ == 2.0 ? mass * mass : std::pow(mass, qexp_); }

double GibbsChain::local_k(std::size_t k, cplx value) const {
  double acc = 0.0;
  const auto* nb = &nbr_[k * deg_];
  for (int a = 0; a < deg_; ++a) acc += std::norm(value - st_.f[nb[a]]);
  return acc;
}

bool GibbsChain::metropolis(double dH, double log_extra) {
  const double logr = -params_.beta * dH + log_extra;
  if (logr >= 0.0) return true;
  return uniform01(st_.rng) < std::exp(logr);
}

void GibbsChain::local_move(std::size_t k) {
  auto& f = st_.f.values;
  const cplx old = f[k];
  const cplx prop = old + st_.sigma * cplx(normal_(st_.rng), normal_(st_.rng));
  const double m_old = std::norm(old), m_new = std::norm(prop);
  ++st_.local.proposed;
  const double N_new = st_.N - m_old + m_new;
  if (N_new > cap_) return;
  const double dK = local_k(k, prop) - local_k(k, old);
  const double dQ = qterm(m_new) - qterm(m_old);
  if (!metropolis(cK_ * dK + cQ_ * dQ, 0.0)) return;
  f[k] = prop;
  st_.N = N_new;
  st_.K += dK;
  st_.Q += dQ;
  st_.H = energy(st_.K, st_.Q);
  ++st_.local.accepted;
}

namespace {

// K restricted to edges touching j or k, each edge once.
double pair_k(const std::vector<cplx>& f, const std::vector<std::size_t>& nbr, int deg, std::size_t j,
              std::size_t k) {
  double acc = 0.0;
  int shared = 0;
  for (int a = 0; a < deg; ++a) {
    const std::size_t nj = nbr[j * deg + a];
    acc += std::norm(f[j] - f[nj]);
    if (nj == k) ++shared;
    acc += std::norm(f[k] - f[nbr[k * deg + a]]);
  }
  return acc - shared * std::norm(f[j] - f[k]);
}

}  // namespace

void GibbsChain::transfer_move() {
  auto& f = st_.f.values;
  const std::size_t n = f.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t j = pick(st_.rng);
  std::size_t k = pick(st_.rng);
  while (k == j) k = pick(st_.rng);
  const double u = uniform01(st_.rng);
  ++st_.transfer.proposed;
  const double mj = std::norm(f[j]), mk = std::norm(f[k]);
  if (!(mj > 0.0)) return;
  const double delta = u * mj;
  const double mj2 = mj - delta, mk2 = mk + delta;
  if (!(mk2 > 0.0)) return;
  const cplx fj = f[j], fk = f[k];
  const double K_before = pair_k(f, nbr_, deg_, j, k);
  f[j] = fj * std::sqrt(mj2 / mj);
  f[k] = mk > 0.0 ? fk * std::sqrt(mk2 / mk) : cplx(std::sqrt(mk2), 0.0);
  const double dK = pair_k(f, nbr_, deg_, j, k) - K_before;
  const double dQ = qterm(mj2) + qterm(mk2) - qterm(mj) - qterm(mk);
  if (!metropolis(cK_ * dK + cQ_ * dQ, std::log(mj / mk2))) {
    f[j] = fj;
    f[k] = fk;
    return;
  }
  st_.K += dK;
  st_.Q += dQ;
  st_.H = energy(st_.K, st_.Q);
  ++st_.transfer.accepted;
}

void GibbsChain::swap_move() {
  auto& f = st_.f.values;
  const std::size_t n = f.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t j = pick(st_.rng);
  std::size_t k = pick(st_.rng);
  while (k == j) k = pick(st_.rng);
  ++st_.swap.proposed;
  const double K_before = pair_k(f, nbr_, deg_, j, k);
  std::swap(f[j], f[k]);
  const double dK = pair_k(f, nbr_, deg_, j, k) - K_before;
  if (!metropolis(cK_ * dK, 0.0)) {
    std::swap(f[j], f[k]);
    return;
  }
  st_.K += dK;
  st_.H = energy(st_.K, st_.Q);
  ++st_.swap.accepted;
}

void GibbsChain::condensate_move() {
  auto& f = st_.f.values;
  const std::size_t n = f.size();
  const double nd = static_cast<double>(n);

  std::size_t i1 = 0, i2 = n > 1 ? 1 : 0;
  double m1 = -1.0, m2 = -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double m = std::norm(f[k]);
    if (m > m1) {
      m2 = m1;
      i2 = i1;
      m1 = m;
      i1 = k;
    } else if (m > m2) {
      m2 = m;
      i2 = k;
    }
  }

  std::size_t k;
  if (uniform01(st_.rng) < 0.5) {
    k = i1;
  } else {
    k = std::uniform_int_distribution<std::size_t>(0, n - 1)(st_.rng);
  }
  const bool uniform_draw = uniform01(st_.rng) < 0.5;
  const double u = uniform01(st_.rng);
  ++st_.condensate.proposed;

  const double N = st_.N;
  const double mk = std::norm(f[k]);
  const double R = N - mk;
  if (!(R > 0.0)) return;
  const double mk2 = uniform_draw ? u * N : mk + 0.05 * N * (2.0 * u - 1.0);
  if (mk2 < 0.0 || mk2 >= N) return;
  const double R2 = N - mk2;
  const double s2 = R2 / R;
  const double s = std::sqrt(s2);
  const cplx zk = mk > 0.0 ? f[k] * std::sqrt(mk2 / mk) : cplx(std::sqrt(mk2), 0.0);

  const double Kk_old = local_k(k, f[k]);
  double Kk_new = 0.0;
  const auto* nb = &nbr_[k * deg_];
  for (int a = 0; a < deg_; ++a) Kk_new += std::norm(zk - s * f[nb[a]]);
  const double K2 = s2 * (st_.K - Kk_old) + Kk_new;
  const double Q2 = std::pow(s2, qexp_) * (st_.Q - qterm(mk)) + qterm(mk2);
  const double H2 = energy(K2, Q2);

  // argmax after the move: the rescaling keeps the order of the other sites
  const std::size_t jo = k == i1 ? i2 : i1;
  const double mo = s2 * (k == i1 ? m2 : m1);
  std::size_t amax2;
  if (mk2 > mo)
    amax2 = k;
  else if (mk2 < mo)
    amax2 = jo;
  else
    amax2 = std::min(k, jo);
  const double q_fwd = 0.5 * (k == i1) + 0.5 / nd;
  const double q_rev = 0.5 * (k == amax2) + 0.5 / nd;
  const double log_extra = (nd - 2.0) * std::log(s2) + std::log(q_rev / q_fwd);
  if (!metropolis(H2 - st_.H, log_extra)) return;

  for (std::size_t j = 0; j < n; ++j) f[j] *= s;
  f[k] = zk;
  st_.K = K2;
  st_.Q = Q2;
  st_.H = H2;
  ++st_.condensate.accepted;
}

void GibbsChain::sweep(const SamplerOptions& opts, bool adapt) {
  const std::size_t n = st_.f.size();
  const long prop0 = st_.local.proposed, acc0 = st_.local.accepted;
  for (std::size_t k = 0; k < n; ++k) local_move(k);
  for (int i = 0; i < opts.transfer_moves; ++i) transfer_move();
  for (int i = 0; i < opts.swap_moves; ++i) swap_move();
  for (int i = 0; i < opts.condensate_moves; ++i) condensate_move();
  if (adapt) {
    const double rate = static_cast<double>(st_.local.accepted - acc0) / static_cast<double>(st_.local.proposed - prop0);
    if (rate < 0.23 || rate > 0.44) st_.sigma *= std::exp(rate - 0.33);
    st_.sigma = std::clamp(st_.sigma, 1e-8, std::sqrt(cap_));
  }
  recompute();
}

// ---------------------------------------------------------------------------

Estimate batch_means(const std::vector<double>& xs, int batches) {
  Estimate e;
  if (xs.empty()) return e;
  const std::size_t nb = std::min<std::size_t>(static_cast<std::size_t>(std::max(batches, 1)), xs.size());
  const std::size_t len = xs.size() / nb;
  double total = 0.0;
  for (double x : xs) total += x;
  e.mean = total / static_cast<double>(xs.size());
  if (nb < 2) return e;
  std::vector<double> means(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t i = 0; i < len; ++i) means[b] += xs[b * len + i];
    means[b] /= static_cast<double>(len);
  }
  double mb = 0.0;
  for (double m : means) mb += m;
  mb /= static_cast<double>(nb);
  double var = 0.0;
  for (double m : means) var += (m - mb) * (m - mb);
  var /= static_cast<double>(nb - 1);
  e.se = std::sqrt(var / static_cast<double>(nb));
  return e;
}

namespace {

struct Series {
  std::vector<double> N, H, M1, M2, mf;

  void push(const CondensationStats& c, double n) {
    N.push_back(c.N / n);
    H.push_back(c.H / n);
    M1.push_back(c.M1 / n);
    M2.push_back(c.M2 / n);
    mf.push_back(c.mass_fraction);
  }

  EnsembleStats stats() const {
    EnsembleStats s;
    s.samples = static_cast<long>(N.size());
    s.N = batch_means(N);
    s.H = batch_means(H);
    s.M1 = batch_means(M1);
    s.M2 = batch_means(M2);
    s.mass_fraction = batch_means(mf);
    double ess = static_cast<double>(N.size());
    for (const auto* xs : {&N, &H, &M1}) {
      const auto e = batch_means(*xs);
      double var = 0.0;
      for (double x : *xs) var += (x - e.mean) * (x - e.mean);
      if (xs->size() > 1) var /= static_cast<double>(xs->size() - 1);
      if (e.se > 0.0 && var > 0.0) ess = std::min(ess, var / (e.se * e.se));
    }
    s.ess = ess;
    return s;
  }
};

CondensationStats chain_stats(const ChainState& st) {
  auto c = top_two_masses(st.f);
  c.N = st.N;
  c.H = st.H;
  c.mass_fraction = st.N > 0.0 ? c.M1 / st.N : 0.0;
  return c;
}

void reset_counts(ChainState& st) { st.local = st.transfer = st.swap = st.condensate = MoveCounts{}; }

void fill_acceptance(EnsembleStats& s, const ChainState& st) {
  s.accept_local = st.local.rate();
  s.accept_transfer = st.transfer.rate();
  s.accept_swap = st.swap.rate();
  s.accept_condensate = st.condensate.rate();
  s.sigma = st.sigma;
}

void check_options(const SamplerOptions& opts) {
  if (opts.burn_in < 0 || opts.sweeps <= opts.burn_in)
    throw std::invalid_argument("sampler: need sweeps > burn_in >= 0");
  if (opts.record_every < 1) throw std::invalid_argument("sampler: record_every must be >= 1");
  if (opts.snapshot_every < 0) throw std::invalid_argument("sampler: snapshot_every must be >= 0");
  if (!(opts.initial_sigma > 0.0)) throw std::invalid_argument("sampler: initial_sigma must be positive");
}

// Bookkeeping shared by single and tempered runs.
struct Recorder {
  const SamplerOptions& opts;
  ChainResult result;
  Series series;

  void observe(long sweep, const ChainState& st) {
    if (sweep < opts.burn_in) return;
    const long rel = sweep - opts.burn_in;
    if (rel % opts.record_every == 0) {
      const auto c = chain_stats(st);
      const double n = static_cast<double>(st.f.size());
      series.push(c, n);
      result.records.push_back({sweep, c.N, c.H, c.M1, c.M2, c.argmax_site});
    }
    if (opts.snapshot_every > 0 && rel % opts.snapshot_every == 0) result.snapshots.push_back(st.f);
  }

  ChainResult finish(const ChainState& st) {
    result.stats = series.stats();
    fill_acceptance(result.stats, st);
    return std::move(result);
  }
};

}  // namespace

ChainResult run_chain(const GibbsParams& params, std::uint64_t seed, const SamplerOptions& opts) {
  check_options(opts);
  GibbsChain chain(params, seed, 0, opts.initial_sigma, opts.init);
  Recorder rec{opts, {}, {}};
  rec.result.beta = params.beta;
  for (long s = 0; s < opts.sweeps; ++s) {
    chain.sweep(opts, s < opts.burn_in);
    if (s + 1 == opts.burn_in) reset_counts(chain.state());
    rec.observe(s, chain.state());
  }
  return rec.finish(chain.state());
}

TemperedResult tempered_sweep(const std::vector<double>& betas, double B, const ModelSpec& model, std::uint64_t seed,
                              const SamplerOptions& opts, int threads) {
  check_options(opts);
  if (betas.empty()) throw std::invalid_argument("tempered_sweep: empty beta grid");
  for (std::size_t i = 1; i < betas.size(); ++i)
    if (!(betas[i] >= betas[i - 1])) throw std::invalid_argument("tempered_sweep: beta grid must be increasing");
  const std::size_t R = betas.size();

  std::vector<GibbsChain> chains;
  chains.reserve(R);
  for (std::size_t i = 0; i < R; ++i)
    chains.emplace_back(GibbsParams{betas[i], B, model}, seed, i, opts.initial_sigma, opts.init);
  std::vector<Recorder> recs;
  recs.reserve(R);
  for (std::size_t i = 0; i < R; ++i) {
    recs.push_back(Recorder{opts, {}, {}});
    recs.back().result.beta = betas[i];
  }
  auto swap_rng = make_stream(seed, 0xC0FFEEULL + R);
  std::vector<MoveCounts> swaps(R > 1 ? R - 1 : 0);

  const int workers = std::clamp(threads, 1, static_cast<int>(R));
  auto advance = [&](std::size_t lo, std::size_t hi, long s) {
    for (std::size_t i = lo; i < hi; ++i) chains[i].sweep(opts, s < opts.burn_in);
  };

  for (long s = 0; s < opts.sweeps; ++s) {
    if (workers == 1) {
      advance(0, R, s);
    } else {
      std::vector<std::jthread> pool;
      for (int w = 0; w < workers; ++w)
        pool.emplace_back(advance, R * w / workers, R * (w + 1) / workers, s);
    }
    for (std::size_t i = s % 2; i + 1 < R; i += 2) {
      auto& a = chains[i].state();
      auto& b = chains[i + 1].state();
      const double logr = (betas[i] - betas[i + 1]) * (a.H - b.H);
      ++swaps[i].proposed;
      if (logr >= 0.0 || uniform01(swap_rng) < std::exp(logr)) {
        std::swap(a.f, b.f);
        std::swap(a.N, b.N);
        std::swap(a.K, b.K);
        std::swap(a.Q, b.Q);
        std::swap(a.H, b.H);
        ++swaps[i].accepted;
      }
    }
    for (std::size_t i = 0; i < R; ++i) {
      if (s + 1 == opts.burn_in) reset_counts(chains[i].state());
      recs[i].observe(s, chains[i].state());
    }
  }

  TemperedResult out;
  for (std::size_t i = 0; i < R; ++i) out.chains.push_back(recs[i].finish(chains[i].state()));
  for (const auto& m : swaps) out.swap_acceptance.push_back(m.rate());
  return out;
}

std::vector<std::pair<double, double>> gauss_legendre(int m, double a, double b) {
  if (m < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
  std::vector<std::pair<double, double>> out(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out[static_cast<std::size_t>(m - 1 - i)] = {0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w};
  }
  return out;
}

LogZResult log_partition(const GibbsParams& params, std::uint64_t seed, const LogZOptions& opts) {
  params.validate();
  if (opts.nodes < 2) throw std::invalid_argument("log_partition: need at least 2 nodes");
  LogZResult res;
  const auto& lat = params.lattice();
  res.log_z0 = theory::log_partition_beta0(params.B, static_cast<long>(lat.n));
  res.value = res.log_z0;
  if (params.beta == 0.0) return res;

  // coarse tempered scan for a jump in the condensate fraction
  std::vector<double> scan;
  for (int i = 0; i <= opts.scan_points; ++i) scan.push_back(params.beta * i / opts.scan_points);
  SamplerOptions so = opts.sampler;
  so.sweeps = opts.scan_sweeps;
  so.burn_in = opts.scan_sweeps / 5;
  so.snapshot_every = 0;
  const auto coarse = tempered_sweep(scan, params.B, params.model, seed ^ 0x5CA9ULL, so, opts.threads);
  double jump = 0.0;
  std::size_t at = 0;
  for (std::size_t i = 0; i + 1 < scan.size(); ++i) {
    const double d = coarse.chains[i + 1].stats.mass_fraction.mean - coarse.chains[i].stats.mass_fraction.mean;
    if (d > jump) {
      jump = d;
      at = i;
    }
  }

  std::vector<std::pair<double, double>> rule;
  if (jump > 0.25) {
    double lo = scan[at], hi = scan[at + 1];
    const double thr =
        0.5 * (coarse.chains[at].stats.mass_fraction.mean + coarse.chains[at + 1].stats.mass_fraction.mean);
    SamplerOptions bo = so;
    bo.sweeps = opts.bisection_sweeps;
    bo.burn_in = opts.bisection_sweeps / 5;
    for (int step = 0; step < opts.bisection_steps; ++step) {
      const double mid = 0.5 * (lo + hi);
      GibbsParams p = params;
      p.beta = mid;
      double mf = 0.0;
      for (auto init : {ChainInit::ball, ChainInit::condensed}) {
        bo.init = init;
        mf += 0.5 * run_chain(p, seed + 7919ULL * (step + 1) + (init == ChainInit::condensed), bo)
                        .stats.mass_fraction.mean;
      }
      if (mf > thr)
        hi = mid;
      else
        lo = mid;
    }
    res.breakpoint = 0.5 * (lo + hi);
    const int m1 = opts.nodes / 2;
    for (auto nw : gauss_legendre(m1, 0.0, *res.breakpoint)) rule.push_back(nw);
    for (auto nw : gauss_legendre(opts.nodes - m1, *res.breakpoint, params.beta)) rule.push_back(nw);
  } else {
    rule = gauss_legendre(opts.nodes, 0.0, params.beta);
  }

  std::vector<double> betas;
  for (auto [b, w] : rule) betas.push_back(b);
  const auto tr = tempered_sweep(betas, params.B, params.model, seed, opts.sampler, opts.threads);
  double integral = 0.0, var = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const auto& st = tr.chains[i].stats;
    res.nodes.push_back({rule[i].first, rule[i].second, st.H, st.mass_fraction.mean});
    integral += rule[i].second * st.H.mean;
    var += rule[i].second * rule[i].second * st.H.se * st.H.se;
  }
  for (std::size_t i = 1; i < res.nodes.size(); ++i) {
    const auto& a = res.nodes[i - 1].energy;
    const auto& b = res.nodes[i].energy;
    if (b.mean > a.mean + 3.0 * std::hypot(a.se, b.se) + 1e-12) res.monotone = false;
  }
  res.value = res.log_z0 - integral;
  res.error = std::sqrt(var);
  return res;
}

EnsembleStats condensation_stats(const ModelSpec& model, const std::vector<Wavefunction>& samples) {
  if (samples.empty()) throw std::invalid_argument("condensation_stats: no samples");
  Series series;
  for (const auto& f : samples) {
    auto c = top_two_masses(model, f);
    series.push(c, static_cast<double>(f.size()));
  }
  return series.stats();
}

// ---------------------------------------------------------------------------

namespace {

template <class T>
void put_le(std::ostream& os, T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    os.write(bytes.data(), sizeof(T));
  } else {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
}

template <class T>
T get_le(std::istream& is) {
  std::array<char, sizeof(T)> bytes{};
  if (!is.read(bytes.data(), sizeof(T))) throw std::runtime_error("read_wave: truncated input");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace

void write_wave(std::ostream& os, const Wavefunction& f) {
  os.write("DNLSWAVE", 8);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.size()));
  put_le<std::uint32_t>(os, 0);
  for (const auto& z : f.values) {
    put_le<double>(os, z.real());
    put_le<double>(os, z.imag());
  }
}

Wavefunction read_wave(std::istream& is, const LatticeConfig& lattice) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, "DNLSWAVE", 8) != 0)
    throw std::runtime_error("read_wave: bad magic");
  const auto n = get_le<std::uint32_t>(is);
  get_le<std::uint32_t>(is);
  if (n != lattice.n) throw std::runtime_error("read_wave: site count does not match the lattice");
  Wavefunction f(lattice);
  for (auto& z : f.values) {
    const double re = get_le<double>(is);
    const double im = get_le<double>(is);
    z = {re, im};
  }
  return f;
}

void write_samples_jsonl(std::ostream& os, const std::vector<SampleRecord>& records) {
  for (const auto& r : records) {
    nlohmann::json j = {{"sweep", r.sweep}, {"N", r.N}, {"H", r.H}, {"M1", r.M1}, {"M2", r.M2}, {"argmax", r.argmax}};
    os << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------

std::vector<cplx> spectral_to_grid(const std::vector<cplx>& coeffs, int M) {
  const int n = static_cast<int>(coeffs.size() / 2);
  if (coeffs.size() != static_cast<std::size_t>(2 * n + 1)) throw std::invalid_argument("spectral_to_grid: need 2n+1 coefficients");
  if (M < 2 * n + 1) throw std::invalid_argument("spectral_to_grid: grid too coarse");
  std::vector<cplx> buf(static_cast<std::size_t>(M));
  for (int k = -n; k <= n; ++k) buf[static_cast<std::size_t>((k % M + M) % M)] += coeffs[static_cast<std::size_t>(k + n)];
  Fft(build_torus(1, M, 1.0 / M)).backward(buf);
  return buf;
}

SpectralWeight power_weight(double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("power_weight: p must be >= 1");
  return [p](const std::vector<cplx>& u) {
    double acc = 0.0;
    for (const auto& z : u) acc += std::pow(std::abs(z), p + 1.0);
    return acc / (static_cast<double>(u.size()) * (p + 1.0));
  };
}

SpectralWeight saturable_weight() {
  return [](const std::vector<cplx>& u) {
    double acc = 0.0;
    for (const auto& z : u) {
      const double a = std::norm(z);
      acc += a - std::log1p(a);
    }
    return 0.5 * acc / static_cast<double>(u.size());
  };
}

namespace {

void check_spectral(const SpectralOptions& o) {
  if (o.n_modes < 1) throw std::invalid_argument("spectral: n_modes must be >= 1");
  if (!(o.B > 0.0)) throw std::invalid_argument("spectral: B must be positive");
  if (!(o.beta > 0.0)) throw std::invalid_argument("spectral: beta must be positive");
}

int grid_size(const SpectralOptions& o) { return o.grid > 0 ? o.grid : 4 * (2 * o.n_modes + 1) + 1; }

double mass(const std::vector<cplx>& a) {
  double s = 0.0;
  for (const auto& z : a) s += std::norm(z);
  return s;
}

// Gaussian reference for k != 0, uniform disk for a_0.
std::vector<cplx> draw_reference(const SpectralOptions& o, std::mt19937_64& rng, std::normal_distribution<double>& nd) {
  const int n = o.n_modes;
  std::vector<cplx> a(static_cast<std::size_t>(2 * n + 1));
  const double r = o.B * std::sqrt(uniform01(rng));
  a[static_cast<std::size_t>(n)] = std::polar(r, 2.0 * std::numbers::pi * uniform01(rng));
  for (int k = 1; k <= n; ++k) {
    const double c = 1.0 / (2.0 * std::numbers::pi * k * std::sqrt(o.beta));
    a[static_cast<std::size_t>(n + k)] = c * cplx(nd(rng), nd(rng));
    a[static_cast<std::size_t>(n - k)] = c * cplx(nd(rng), nd(rng));
  }
  return a;
}

}  // namespace

SpectralEnsemble sample_spectral_1d(const SpectralOptions& opts, std::uint64_t seed) {
  check_spectral(opts);
  if (opts.samples < 1) throw std::invalid_argument("sample_spectral_1d: samples must be >= 1");
  const int M = grid_size(opts);
  auto rng = make_stream(seed, 0);
  std::normal_distribution<double> nd(0.0, 1.0);
  SpectralEnsemble ens;
  std::vector<double> logw;
  for (long i = 0; i < opts.samples; ++i) {
    auto a = draw_reference(opts, rng, nd);
    ++ens.drawn;
    if (mass(a) > opts.B * opts.B) {
      ++ens.rejected;
      continue;
    }
    logw.push_back(opts.weight ? opts.beta * opts.weight(spectral_to_grid(a, M)) : 0.0);
    ens.coeffs.push_back(std::move(a));
  }
  if (ens.coeffs.empty()) {
    ens.ess_low = true;
    return ens;
  }
  const double mx = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  for (double lw : logw) total += std::exp(lw - mx);
  double sq = 0.0;
  for (double lw : logw) {
    const double w = std::exp(lw - mx) / total;
    ens.weights.push_back(w);
    sq += w * w;
  }
  ens.ess = 1.0 / sq;
  ens.ess_low = ens.ess < 0.1 * static_cast<double>(ens.coeffs.size());
  return ens;
}

PcnResult pcn_spectral_1d(const SpectralOptions& opts, const PcnOptions& pcn, std::uint64_t seed) {
  check_spectral(opts);
  if (!(pcn.rho > 0.0 && pcn.rho <= 1.0)) throw std::invalid_argument("pcn: rho must lie in (0, 1]");
  if (pcn.steps <= pcn.burn_in || pcn.burn_in < 0 || pcn.thin < 1) throw std::invalid_argument("pcn: bad step counts");
  const int M = grid_size(opts);
  const int n = opts.n_modes;
  auto rng = make_stream(seed, 1);
  std::normal_distribution<double> nd(0.0, 1.0);

  std::vector<cplx> a = pcn.init;
  if (!a.empty()) {
    if (a.size() != static_cast<std::size_t>(2 * n + 1)) throw std::invalid_argument("pcn: init has the wrong length");
    if (mass(a) > opts.B * opts.B) throw std::invalid_argument("pcn: init violates the mass cutoff");
  } else {
    for (int tries = 0;; ++tries) {
      a = draw_reference(opts, rng, nd);
      if (mass(a) <= opts.B * opts.B) break;
      if (tries > 100000) throw DiagnosticError("pcn: cannot draw a state inside the mass cutoff");
    }
  }
  auto W = [&](const std::vector<cplx>& c) { return opts.weight ? opts.weight(spectral_to_grid(c, M)) : 0.0; };
  double w = W(a);
  double rho = pcn.rho;
  long accepted = 0, window_acc = 0;
  PcnResult out;
  for (long step = 0; step < pcn.steps; ++step) {
    const double keep = std::sqrt(1.0 - rho * rho);
    auto xi = draw_reference(opts, rng, nd);
    std::vector<cplx> b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) b[i] = keep * a[i] + rho * xi[i];
    b[static_cast<std::size_t>(n)] =
        a[static_cast<std::size_t>(n)] + rho * pcn.zero_mode_step * opts.B * cplx(nd(rng), nd(rng));
    const double u = uniform01(rng);
    bool acc = false;
    if (mass(b) <= opts.B * opts.B) {
      const double wb = W(b);
      if (u < std::exp(std::min(0.0, opts.beta * (wb - w)))) {
        a = std::move(b);
        w = wb;
        acc = true;
      }
    }
    if (step >= pcn.burn_in) {
      accepted += acc;
      if ((step - pcn.burn_in) % pcn.thin == 0) out.coeffs.push_back(a);
    } else if (pcn.adapt) {
      window_acc += acc;
      if ((step + 1) % 100 == 0) {
        rho = std::clamp(rho * std::exp(window_acc / 100.0 - 0.25), 1e-4, 1.0);
        window_acc = 0;
      }
    }
  }
  out.rho = rho;
  out.acceptance = static_cast<double>(accepted) / static_cast<double>(pcn.steps - pcn.burn_in);
  return out;
}

}  // namespace dnls
