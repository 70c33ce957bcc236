#include "dnls/lattice.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dnls/fft.hpp"

namespace dnls {

std::vector<int> LatticeConfig::coords(std::size_t s) const {
  std::vector<int> c(static_cast<std::size_t>(d));
  for (int i = d - 1; i >= 0; --i) {
    c[static_cast<std::size_t>(i)] = static_cast<int>(s % static_cast<std::size_t>(L));
    s /= static_cast<std::size_t>(L);
  }
  return c;
}

std::size_t LatticeConfig::site(std::span<const int> c) const {
  std::size_t s = 0;
  for (int x : c) {
    const int w = ((x % L) + L) % L;
    s = s * static_cast<std::size_t>(L) + static_cast<std::size_t>(w);
  }
  return s;
}

std::size_t LatticeConfig::neighbor(std::size_t s, int axis, int dir) const {
  std::size_t stride = 1;
  for (int i = d - 1; i > axis; --i) stride *= static_cast<std::size_t>(L);
  const int x = static_cast<int>((s / stride) % static_cast<std::size_t>(L));
  int y = x + dir;
  if (kind == LatticeKind::chain) {
    if (y < 0 || y >= L) return s;
  } else {
    y = (y + L) % L;
  }
  return s + static_cast<std::size_t>(y) * stride - static_cast<std::size_t>(x) * stride;
}

LatticeConfig build_torus(int d, int L, std::optional<double> h) {
  if (d < 1) throw std::invalid_argument("build_torus: d must be >= 1");
  if (L < 2) throw std::invalid_argument("build_torus: L must be >= 2");
  const double spacing = h.value_or(1.0 / L);
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw std::invalid_argument("build_torus: spacing h must be positive");
  std::size_t n = 1;
  for (int i = 0; i < d; ++i) {
    if (n > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(L) ||
        n * static_cast<std::size_t>(L) > (std::size_t{1} << 40))
      throw std::overflow_error("build_torus: L^d exceeds index capacity");
    n *= static_cast<std::size_t>(L);
  }
  return LatticeConfig{LatticeKind::torus, d, L, spacing, n};
}

LatticeConfig build_chain(int L, double h) {
  if (L < 2) throw std::invalid_argument("build_chain: L must be >= 2");
  if (!(h > 0.0)) throw std::invalid_argument("build_chain: spacing h must be positive");
  return LatticeConfig{LatticeKind::chain, 1, L, h, static_cast<std::size_t>(L)};
}

Wavefunction::Wavefunction(const LatticeConfig& lat, std::vector<cplx> v)
    : lattice(lat), values(std::move(v)) {
  if (values.size() != lattice.n) throw std::invalid_argument("Wavefunction: length != lattice site count");
}

bool Wavefunction::all_finite() const {
  for (const auto& z : values)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

CouplingKernel nearest_neighbor_kernel(const LatticeConfig& lattice, double scale) {
  CouplingKernel k;
  k.kind = KernelKind::nearest_neighbor;
  k.lattice = lattice;
  k.scale = scale;
  if (lattice.kind == LatticeKind::torus) k.symbol = coupling_symbol(k, lattice);
  return k;
}

double image_sum(double sigma, double q, double tol, double* bound) {
  if (!(sigma > 1.0)) throw std::invalid_argument("image_sum: sigma must exceed 1");
  if (!(q > 0.0)) throw std::invalid_argument("image_sum: q must be positive");
  // Euler-Maclaurin tail; f(x) = (x+q)^-sigma is completely monotone, so the
  // remainder is bounded by the first omitted correction term.
  static constexpr std::array<double, 8> kB2j = {1.0 / 6,  -1.0 / 30, 1.0 / 42,       -1.0 / 30,
                                                 5.0 / 66, -691.0 / 2730, 7.0 / 6, -3617.0 / 510};
  int W = 4;
  for (;;) {
    double head = 0.0;
    for (int w = W - 1; w >= 0; --w) head += std::pow(w + q, -sigma);
    const double x = W + q;
    double tail = std::pow(x, 1.0 - sigma) / (sigma - 1.0) + 0.5 * std::pow(x, -sigma);
    // derivative of order k: (-1)^k (sigma)_k x^(-sigma-k)
    double rising = sigma;  // (sigma)_1
    double fact = 2.0;      // (2j)!
    double next_term = 0.0;
    for (std::size_t j = 1; j <= kB2j.size(); ++j) {
      const int k = static_cast<int>(2 * j - 1);
      const double deriv = -rising * std::pow(x, -sigma - k);
      const double term = -kB2j[j - 1] / fact * deriv;
      if (j == kB2j.size()) {
        next_term = std::abs(term);
      } else {
        tail += term;
      }
      rising *= (sigma + k) * (sigma + k + 1);
      fact *= (2.0 * j + 1) * (2.0 * j + 2);
    }
    if (next_term <= tol || W > (1 << 20)) {
      if (bound) *bound = next_term;
      return head + tail;
    }
    W *= 2;
  }
}

CouplingKernel periodize_kernel(double s, const LatticeConfig& lattice, double tol) {
  if (!(s > 0.0)) throw std::invalid_argument("periodize_kernel: s must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("periodize_kernel: tol must be positive");
  if (lattice.kind != LatticeKind::torus || lattice.d != 1)
    throw std::invalid_argument("periodize_kernel: 1D torus required");
  const int L = lattice.L;
  const double sigma = 1.0 + 2.0 * s;
  const double period = L * lattice.h;
  const double prefactor = std::pow(period, -sigma);
  const double local_tol = tol / prefactor;

  CouplingKernel k;
  k.kind = KernelKind::long_range;
  k.lattice = lattice;
  k.s = s;
  k.coeffs.assign(static_cast<std::size_t>(L), 0.0);
  double worst = 0.0;
  for (int r = 1; r <= L / 2; ++r) {
    const double q = static_cast<double>(r) / L;
    double b1 = 0.0, b2 = 0.0;
    const double v = prefactor * (image_sum(sigma, q, local_tol, &b1) + image_sum(sigma, 1.0 - q, local_tol, &b2));
    k.coeffs[static_cast<std::size_t>(r)] = v;
    k.coeffs[static_cast<std::size_t>(L - r)] = v;
    worst = std::max(worst, prefactor * (b1 + b2));
  }
  k.truncation_bound = worst;
  k.symbol = coupling_symbol(k, lattice);
  return k;
}

std::vector<double> coupling_symbol(const CouplingKernel& kernel, const LatticeConfig& lattice) {
  if (lattice.kind != LatticeKind::torus)
    throw std::invalid_argument("coupling_symbol: chain lattice has no periodic Fourier basis");
  std::vector<double> sym(lattice.n, 0.0);
  const double two_pi_over_L = 2.0 * std::numbers::pi / lattice.L;
  if (kernel.kind == KernelKind::nearest_neighbor) {
    std::vector<double> axis(static_cast<std::size_t>(lattice.L));
    for (int m = 0; m < lattice.L; ++m)
      axis[static_cast<std::size_t>(m)] = 2.0 / (lattice.h * lattice.h) * (std::cos(two_pi_over_L * m) - 1.0);
    axis[0] = 0.0;
    for (std::size_t site = 0; site < lattice.n; ++site) {
      double v = 0.0;
      for (int c : lattice.coords(site)) v += axis[static_cast<std::size_t>(c)];
      sym[site] = kernel.scale * v;
    }
  } else {
    if (lattice.d != 1) throw std::invalid_argument("coupling_symbol: long-range kernel is 1D only");
    const int L = lattice.L;
    for (int m = 1; m < L; ++m) {
      double v = 0.0;
      for (int r = 1; r < L; ++r) {
        const long mr = (static_cast<long>(m) * r) % L;
        v += kernel.coeffs[static_cast<std::size_t>(r)] * (1.0 - std::cos(two_pi_over_L * static_cast<double>(mr)));
      }
      sym[static_cast<std::size_t>(m)] = -kernel.scale * lattice.h * v;
    }
  }
  return sym;
}

Wavefunction apply_coupling(const CouplingKernel& kernel, const Wavefunction& f) {
  const auto& lat = f.lattice;
  if (!(kernel.lattice == lat)) throw std::invalid_argument("apply_coupling: lattice mismatch");
  Wavefunction out(lat);
  if (kernel.kind == KernelKind::nearest_neighbor) {
    const double c = kernel.scale / (lat.h * lat.h);
    for (std::size_t k = 0; k < lat.n; ++k) {
      cplx acc = 0.0;
      for (int axis = 0; axis < lat.d; ++axis)
        for (int dir : {-1, 1}) {
          const std::size_t j = lat.neighbor(k, axis, dir);
          if (j != k || lat.kind == LatticeKind::torus) acc += f[j] - f[k];
        }
      out[k] = c * acc;
    }
  } else {
    const std::size_t L = lat.n;
    const double c = kernel.scale * lat.h;
    for (std::size_t k = 0; k < L; ++k) {
      cplx acc = 0.0;
      for (std::size_t j = 0; j < L; ++j) {
        if (j == k) continue;
        acc += kernel.coeffs[(k + L - j) % L] * (f[k] - f[j]);
      }
      out[k] = -c * acc;
    }
  }
  return out;
}

Wavefunction apply_coupling_spectral(const CouplingKernel& kernel, const Wavefunction& f) {
  if (!(kernel.lattice == f.lattice)) throw std::invalid_argument("apply_coupling_spectral: lattice mismatch");
  if (kernel.symbol.size() != f.size()) throw std::invalid_argument("apply_coupling_spectral: kernel has no symbol");
  Wavefunction out = f;
  Fft fft(f.lattice);
  fft.apply_diagonal(out.values, [&](std::size_t m) { return kernel.symbol[m]; });
  return out;
}

double coupling_energy(const CouplingKernel& kernel, const Wavefunction& f) {
  if (f.lattice.kind == LatticeKind::torus && kernel.symbol.size() == f.size()) {
    std::vector<cplx> buf = f.values;
    Fft(f.lattice).forward(buf);
    double acc = 0.0;
    for (std::size_t m = 0; m < buf.size(); ++m) acc -= kernel.symbol[m] * std::norm(buf[m]);
    return acc / static_cast<double>(f.size());
  }
  const Wavefunction lf = apply_coupling(kernel, f);
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) acc -= std::real(std::conj(f[k]) * lf[k]);
  return acc;
}

}  // namespace dnls
