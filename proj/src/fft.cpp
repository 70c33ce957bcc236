#include "dnls/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dnls {

namespace {

struct PlanPair {
  fftw_plan fwd;
  fftw_plan bwd;
};

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Plans live for the whole process; FFTW cleans up at exit.
PlanPair plans_for(int d, int L) {
  static std::map<std::pair<int, int>, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find({d, L});
  if (it != cache.end()) return it->second;

  std::vector<int> dims(static_cast<std::size_t>(d), L);
  std::size_t n = 1;
  for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(L);
  auto* buf = fftw_alloc_complex(n);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p{fftw_plan_dft(d, dims.data(), buf, buf, FFTW_FORWARD, flags),
             fftw_plan_dft(d, dims.data(), buf, buf, FFTW_BACKWARD, flags)};
  fftw_free(buf);
  if (!p.fwd || !p.bwd) throw std::runtime_error("FFTW planning failed");
  cache.emplace(std::make_pair(d, L), p);
  return p;
}

}  // namespace

Fft::Fft(const LatticeConfig& lattice) : n_(lattice.n) {
  if (lattice.kind != LatticeKind::torus) throw std::invalid_argument("Fft: torus lattice required");
  auto p = plans_for(lattice.d, lattice.L);
  fwd_ = p.fwd;
  bwd_ = p.bwd;
}

void Fft::forward(std::span<cplx> data) const {
  if (data.size() != n_) throw std::invalid_argument("Fft: size mismatch");
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(fwd_), ptr, ptr);
}

void Fft::backward(std::span<cplx> data) const {
  if (data.size() != n_) throw std::invalid_argument("Fft: size mismatch");
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(bwd_), ptr, ptr);
}

}  // namespace dnls
