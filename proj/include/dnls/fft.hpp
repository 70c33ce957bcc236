#pragma once

#include <span>

#include "dnls/lattice.hpp"

namespace dnls {

/// Unnormalized d-dimensional complex DFT over a torus, in place.
///
/// Plans are created once per (d, L) with FFTW_ESTIMATE so results are
/// bit-reproducible, and shared; executing is thread-safe.
class Fft {
 public:
  explicit Fft(const LatticeConfig& lattice);

  void forward(std::span<cplx> data) const;
  void backward(std::span<cplx> data) const;

  /// data <- IDFT(multiplier .* DFT(data)), normalized.
  template <class Multiplier>
  void apply_diagonal(std::span<cplx> data, Multiplier&& mult) const {
    forward(data);
    const double inv = 1.0 / static_cast<double>(n_);
    for (std::size_t m = 0; m < n_; ++m) data[m] *= mult(m) * inv;
    backward(data);
  }

 private:
  void* fwd_;
  void* bwd_;
  std::size_t n_;
};

}  // namespace dnls
