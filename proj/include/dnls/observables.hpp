#pragma once

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "dnls/lattice.hpp"

namespace dnls {

/// kappa |f|^(p-1) f with kappa = -1 focusing, +1 defocusing.
struct PowerNonlinearity {
  double p = 3.0;
  int kappa = -1;
};

/// Focusing saturable nonlinearity g(a) = a / (1 + a), primitive G(a) = a - log(1 + a).
struct SaturableNonlinearity {
  int kappa = -1;
};

using Nonlinearity = std::variant<PowerNonlinearity, SaturableNonlinearity>;

enum class HamiltonianConvention { standard, ck_normalized, long_range };

/// Everything needed to write down the evolution
///   i df/dt = A f + V f + (nonlinear term) f,   A = -Delta (coupling)
/// and the matching energy.
struct ModelSpec {
  CouplingKernel kernel;
  Nonlinearity nonlinearity = PowerNonlinearity{};
  std::optional<std::vector<double>> potential;
  HamiltonianConvention convention = HamiltonianConvention::standard;
  /// Weight per unordered edge in the site-normalized energy; 2 counts each
  /// edge once, 4 reproduces summing over ordered neighbor pairs.
  double ck_edge_weight = 2.0;

  const LatticeConfig& lattice() const { return kernel.lattice; }
  /// Throws std::invalid_argument if the parts are inconsistent.
  void validate() const;
  /// Site-wise real potential of the nonlinear step: V_k + N(|f_k|^2).
  double site_potential(std::size_t k, double mass) const;
};

ModelSpec cubic_focusing(const CouplingKernel& kernel,
                         HamiltonianConvention conv = HamiltonianConvention::standard);

struct CondensationStats {
  double M1 = 0.0;
  double M2 = 0.0;
  std::size_t argmax_site = 0;
  double N = 0.0;
  double H = 0.0;
  double mass_fraction = 0.0;
};

double power(const Wavefunction& f);
double hamiltonian(const ModelSpec& model, const Wavefunction& f);

/// Largest and second largest |f_k|^2; ties go to the lowest index. H is left at 0.
CondensationStats top_two_masses(const Wavefunction& f);
CondensationStats top_two_masses(const ModelSpec& model, const Wavefunction& f);

/// (1/n) sum |f|^2 + (1/n) sum_{edges} |(f_k - f_j)/h|^2, each edge once.
double discrete_h1(const Wavefunction& f);
double discrete_h1(const CouplingKernel& kernel, const Wavefunction& f);

/// ||f||_{l^r} with r = infinity allowed.
double lr_norm(const Wavefunction& f, double r);

/// L^q_t l^r_x norm of a sampled trajectory, trapezoidal in time.
double mixed_norm(std::span<const double> times, std::span<const Wavefunction> states, double q, double r);

}  // namespace dnls
