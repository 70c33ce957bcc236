#include "dnls/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dnls {

namespace {

double saturable_primitive(double a) { return a - std::log1p(a); }

double nonlinear_energy_density(const Nonlinearity& nl, double mass) {
  if (const auto* pw = std::get_if<PowerNonlinearity>(&nl))
    return pw->kappa * 2.0 / (pw->p + 1.0) * std::pow(mass, 0.5 * (pw->p + 1.0));
  return std::get<SaturableNonlinearity>(nl).kappa * saturable_primitive(mass);
}

double potential_energy(const ModelSpec& model, const Wavefunction& f) {
  if (!model.potential) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) acc += (*model.potential)[k] * std::norm(f[k]);
  return acc;
}

double edge_gradient_sum(const Wavefunction& f) {
  const auto& lat = f.lattice;
  double acc = 0.0;
  for (std::size_t k = 0; k < lat.n; ++k)
    for (int axis = 0; axis < lat.d; ++axis) {
      const std::size_t j = lat.neighbor(k, axis, +1);
      if (j == k && lat.kind == LatticeKind::chain) continue;
      acc += std::norm(f[k] - f[j]);
    }
  return acc / (lat.h * lat.h);
}

}  // namespace

void ModelSpec::validate() const {
  const auto& lat = kernel.lattice;
  if (potential && potential->size() != lat.n) throw std::invalid_argument("ModelSpec: potential length != n");
  if (const auto* pw = std::get_if<PowerNonlinearity>(&nonlinearity)) {
    if (!(pw->p >= 1.0)) throw std::invalid_argument("ModelSpec: power p must be >= 1");
    if (pw->kappa != 1 && pw->kappa != -1) throw std::invalid_argument("ModelSpec: kappa must be +1 or -1");
  } else if (const auto* sat = std::get_if<SaturableNonlinearity>(&nonlinearity)) {
    if (sat->kappa != 1 && sat->kappa != -1) throw std::invalid_argument("ModelSpec: kappa must be +1 or -1");
  }
  switch (convention) {
    case HamiltonianConvention::ck_normalized: {
      const auto* pw = std::get_if<PowerNonlinearity>(&nonlinearity);
      if (!pw || pw->p != 3.0 || pw->kappa != -1)
        throw std::invalid_argument("ck_normalized convention requires the cubic focusing nonlinearity");
      if (kernel.kind != KernelKind::nearest_neighbor)
        throw std::invalid_argument("ck_normalized convention requires the nearest-neighbor kernel");
      if (potential) throw std::invalid_argument("ck_normalized convention takes no external potential");
      if (!(ck_edge_weight > 0.0)) throw std::invalid_argument("ck_edge_weight must be positive");
      break;
    }
    case HamiltonianConvention::long_range:
      if (kernel.kind != KernelKind::long_range)
        throw std::invalid_argument("long_range convention requires a long-range kernel");
      if (!std::holds_alternative<PowerNonlinearity>(nonlinearity))
        throw std::invalid_argument("long_range convention requires a power nonlinearity");
      break;
    case HamiltonianConvention::standard:
      break;
  }
}

double ModelSpec::site_potential(std::size_t k, double mass) const {
  double v = potential ? (*potential)[k] : 0.0;
  if (const auto* pw = std::get_if<PowerNonlinearity>(&nonlinearity)) {
    v += pw->kappa * (pw->p == 3.0 ? mass : std::pow(mass, 0.5 * (pw->p - 1.0)));
  } else {
    v += std::get<SaturableNonlinearity>(nonlinearity).kappa * mass / (1.0 + mass);
  }
  return v;
}

ModelSpec cubic_focusing(const CouplingKernel& kernel, HamiltonianConvention conv) {
  ModelSpec m;
  m.kernel = kernel;
  m.nonlinearity = PowerNonlinearity{3.0, -1};
  m.convention = conv;
  return m;
}

double power(const Wavefunction& f) {
  double acc = 0.0;
  for (const auto& z : f.values) acc += std::norm(z);
  return acc;
}

double hamiltonian(const ModelSpec& model, const Wavefunction& f) {
  if (!(model.lattice() == f.lattice)) throw std::invalid_argument("hamiltonian: lattice mismatch");
  const auto& lat = f.lattice;
  if (model.convention == HamiltonianConvention::ck_normalized) {
    model.validate();
    double quartic = 0.0;
    for (const auto& z : f.values) quartic += std::norm(z) * std::norm(z);
    const double n = static_cast<double>(lat.n);
    return model.ck_edge_weight / n * model.kernel.scale * edge_gradient_sum(f) - quartic / n;
  }

  double nonlinear = 0.0;
  for (const auto& z : f.values) nonlinear += nonlinear_energy_density(model.nonlinearity, std::norm(z));
  const double kinetic = coupling_energy(model.kernel, f);
  const double pot = potential_energy(model, f);

  if (model.convention == HamiltonianConvention::long_range) {
    model.validate();
    // (h^2/4) sum_{j != k} w |f_k - f_j|^2 = (h/2) <A f, f>
    return 0.5 * lat.h * (kinetic + pot + nonlinear);
  }
  if (std::holds_alternative<SaturableNonlinearity>(model.nonlinearity)) {
    // (1/2) integral (|grad u|^2 -+ G(|u|^2)) with cell volume h^d
    return 0.5 * std::pow(lat.h, lat.d) * (kinetic + pot + nonlinear);
  }
  return kinetic + pot + nonlinear;
}

CondensationStats top_two_masses(const Wavefunction& f) {
  CondensationStats s;
  double m1 = -1.0, m2 = -1.0;
  std::size_t arg = 0;
  double total = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double m = std::norm(f[k]);
    total += m;
    if (m > m1) {
      m2 = m1;
      m1 = m;
      arg = k;
    } else if (m > m2) {
      m2 = m;
    }
  }
  s.M1 = std::max(m1, 0.0);
  s.M2 = std::max(m2, 0.0);
  if (f.size() < 2) s.M2 = 0.0;
  s.argmax_site = arg;
  s.N = total;
  s.mass_fraction = total > 0.0 ? s.M1 / total : 0.0;
  return s;
}

CondensationStats top_two_masses(const ModelSpec& model, const Wavefunction& f) {
  auto s = top_two_masses(f);
  s.H = hamiltonian(model, f);
  return s;
}

double discrete_h1(const Wavefunction& f) {
  const double n = static_cast<double>(f.lattice.n);
  return (power(f) + edge_gradient_sum(f)) / n;
}

double discrete_h1(const CouplingKernel& kernel, const Wavefunction& f) {
  if (kernel.kind != KernelKind::nearest_neighbor)
    throw std::invalid_argument("discrete_h1: defined for nearest-neighbor lattices only");
  return discrete_h1(f);
}

double lr_norm(const Wavefunction& f, double r) {
  if (std::isinf(r)) {
    double m = 0.0;
    for (const auto& z : f.values) m = std::max(m, std::abs(z));
    return m;
  }
  if (!(r >= 1.0)) throw std::invalid_argument("lr_norm: r must be >= 1");
  double acc = 0.0;
  for (const auto& z : f.values) acc += std::pow(std::abs(z), r);
  return std::pow(acc, 1.0 / r);
}

double mixed_norm(std::span<const double> times, std::span<const Wavefunction> states, double q, double r) {
  if (times.size() != states.size()) throw std::invalid_argument("mixed_norm: times/states length mismatch");
  if (times.empty()) throw std::invalid_argument("mixed_norm: empty trajectory");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("mixed_norm: times must be strictly increasing");
  std::vector<double> spatial(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) spatial[i] = lr_norm(states[i], r);
  if (std::isinf(q)) return *std::max_element(spatial.begin(), spatial.end());
  if (!(q >= 1.0)) throw std::invalid_argument("mixed_norm: q must be >= 1");
  if (times.size() < 2) throw std::invalid_argument("mixed_norm: need at least 2 snapshots for finite q");
  double integral = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i)
    integral += 0.5 * (times[i] - times[i - 1]) * (std::pow(spatial[i], q) + std::pow(spatial[i - 1], q));
  return std::pow(integral, 1.0 / q);
}

}  // namespace dnls
