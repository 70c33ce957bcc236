#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace dnls {

using cplx = std::complex<double>;

enum class LatticeKind { torus, chain };

/// Geometry of the discrete domain. Sites are indexed row-major over
/// coordinates {0,...,L-1}^d, the last axis varying fastest.
struct LatticeConfig {
  LatticeKind kind = LatticeKind::torus;
  int d = 1;
  int L = 2;
  double h = 0.5;
  std::size_t n = 2;

  /// n h^2; the Gibbs results need this large ("high-dimensional" graphs).
  double nh2() const { return static_cast<double>(n) * h * h; }

  std::vector<int> coords(std::size_t site) const;
  std::size_t site(std::span<const int> coords) const;
  /// Neighbor of `site` one step along `axis` in direction dir = +1 / -1.
  /// Periodic on a torus; returns `site` itself past the end of a chain.
  std::size_t neighbor(std::size_t site, int axis, int dir) const;

  bool operator==(const LatticeConfig&) const = default;
};

/// Torus {0,...,L-1}^d with spacing h (default 1/L, the unit torus).
LatticeConfig build_torus(int d, int L, std::optional<double> h = std::nullopt);

/// Open 1D chain of L sites with spacing h.
LatticeConfig build_chain(int L, double h);

/// Complex field over the sites of a lattice.
struct Wavefunction {
  LatticeConfig lattice;
  std::vector<cplx> values;

  Wavefunction() = default;
  explicit Wavefunction(const LatticeConfig& lat) : lattice(lat), values(lat.n) {}
  Wavefunction(const LatticeConfig& lat, std::vector<cplx> v);

  std::size_t size() const { return values.size(); }
  cplx& operator[](std::size_t k) { return values[k]; }
  const cplx& operator[](std::size_t k) const { return values[k]; }

  bool all_finite() const;
};

enum class KernelKind { nearest_neighbor, long_range };

/// Dispersive coupling operator. `apply_coupling` returns Delta f (the
/// negative semidefinite operator); evolution reads i df/dt = -Delta f + ...
///
/// For long_range kernels the operator is
///   (Delta f)_k = -scale * h * sum_{j != k} coeffs[k-j] (f_k - f_j)
/// with coeffs[r] the image sum of |x_r|^-(1+2s) over periodic copies.
/// `scale` is 1 for the lattice model as written; a scale of 0 decouples sites.
struct CouplingKernel {
  KernelKind kind = KernelKind::nearest_neighbor;
  LatticeConfig lattice;
  double s = 0.0;
  double scale = 1.0;
  std::vector<double> coeffs;      // long_range: index = displacement r in sites, coeffs[0] = 0
  double truncation_bound = 0.0;   // long_range: bound on the neglected image tail
  std::vector<double> symbol;      // eigenvalues in the DFT basis (torus only)
};

CouplingKernel nearest_neighbor_kernel(const LatticeConfig& lattice, double scale = 1.0);

/// Long-range kernel with exponent s on a 1D torus, periodized over images
/// until the remaining tail is below `tol`.
CouplingKernel periodize_kernel(double s, const LatticeConfig& lattice, double tol = 1e-12);

/// Eigenvalues of the coupling in the DFT basis, FFT index order.
std::vector<double> coupling_symbol(const CouplingKernel& kernel, const LatticeConfig& lattice);

/// Direct (stencil / double loop) application of the coupling.
Wavefunction apply_coupling(const CouplingKernel& kernel, const Wavefunction& f);

/// Same operator applied as inverse-DFT(symbol x DFT(f)).
Wavefunction apply_coupling_spectral(const CouplingKernel& kernel, const Wavefunction& f);

/// <A f, f> with A = -Delta, real and >= 0. Uses the spectral form on tori.
double coupling_energy(const CouplingKernel& kernel, const Wavefunction& f);

/// Sum_{w >= 0} (w + q)^-sigma for q in (0, 1], sigma > 1, with a rigorous-ish
/// bound on the omitted tail written to `bound`.
double image_sum(double sigma, double q, double tol, double* bound = nullptr);

}  // namespace dnls
