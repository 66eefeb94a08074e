#pragma once

// Physical constants, derived lattice scales and the reductions to the
// dimensionless parameters used by the DNLS and continuum solvers.
//
// Internally energies are carried in units of the recoil energy E_R and
// lengths in units of the lattice period b; SI values only appear here and
// at the CLI boundary.

#include <cmath>
#include <numbers>
#include <string>

#include "blochsim/error.hpp"

namespace blochsim::units {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;                // J s
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double bohr_radius = 5.29177210903e-11;       // m
}  // namespace constants

struct PhysicalParams {
  double mass = 0.0;        // kg
  double g = 0.0;           // m/s^2
  double wavelength = 0.0;  // lambda_L, m
  double depth = 0.0;       // Lambda0, V0 in units of E_R
  double gamma = 0.0;       // 1D nonlinearity strength, J m
  double hbar = constants::hbar;

  double period() const { return 0.5 * wavelength; }
};

struct DerivedScales {
  double recoil_energy = 0.0;  // E_R, J
  double wavenumber = 0.0;     // k_L, 1/m
  double depth_energy = 0.0;   // V0 = Lambda0 E_R, J
  double force = 0.0;          // f = m g, N
  double bloch_period = 0.0;   // s
  double epsilon = 0.0;        // 1/sqrt(Lambda0)
};

struct DimensionlessParams {
  double eta = 0.0;    // gamma ||u||_4^4 / beta
  double delta = 0.0;  // f b / beta
  double beta = 0.0;   // hopping energy, J
  double F = 0.0;      // m g / (2 E_R k_L)
  double zeta = 0.0;   // 2 k_L gamma / E_R
  int N = 0;
};

namespace detail {
inline void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw DomainError(std::string(name) + " must be positive and finite");
}
}  // namespace detail

inline double mass_from_atomic_units(double au) {
  detail::require_positive(au, "mass");
  return au * constants::atomic_mass_unit;
}

/// E_R = 2 pi^2 hbar^2 / (m lambda_L^2).
inline double recoil_energy(const PhysicalParams& p) {
  detail::require_positive(p.mass, "mass");
  detail::require_positive(p.wavelength, "wavelength");
  detail::require_positive(p.hbar, "hbar");
  constexpr double pi = std::numbers::pi;
  return 2.0 * pi * pi * p.hbar * p.hbar / (p.mass * p.wavelength * p.wavelength);
}

/// T = 2 pi hbar / (m g b).
inline double bloch_period(const PhysicalParams& p) {
  detail::require_positive(p.mass, "mass");
  detail::require_positive(p.g, "g");
  detail::require_positive(p.wavelength, "wavelength");
  return 2.0 * std::numbers::pi * p.hbar / (p.mass * p.g * p.period());
}

/// Spatial amplitude B1/|f| of a semiclassical Bloch oscillation.
inline double oscillation_range(double band_width, double force) {
  if (force == 0.0 || !std::isfinite(force)) throw DomainError("force must be nonzero");
  if (!(band_width >= 0.0)) throw DomainError("band width must be nonnegative");
  return band_width / std::abs(force);
}

/// gamma = gamma_3D / (2 pi d_perp^2) with gamma_3D = 4 N pi a_s hbar^2 / m.
inline double one_dimensional_coupling(double n_atoms, double scattering_length, double transverse_length,
                                       double mass, double hbar = constants::hbar) {
  detail::require_positive(n_atoms, "n_atoms");
  detail::require_positive(transverse_length, "d_perp");
  detail::require_positive(mass, "mass");
  const double pi = std::numbers::pi;
  const double gamma3d = 4.0 * n_atoms * pi * scattering_length * hbar * hbar / mass;
  return gamma3d / (2.0 * pi * transverse_length * transverse_length);
}

inline DerivedScales derived_scales(const PhysicalParams& p) {
  detail::require_positive(p.depth, "depth");
  DerivedScales s;
  s.recoil_energy = recoil_energy(p);
  s.wavenumber = 2.0 * std::numbers::pi / p.wavelength;
  s.depth_energy = p.depth * s.recoil_energy;
  s.force = p.mass * p.g;
  s.bloch_period = bloch_period(p);
  s.epsilon = 1.0 / std::sqrt(p.depth);
  return s;
}

/// Reduce physical inputs to the DNLS (eta, delta) and continuum (F, zeta)
/// parameters. `l4norm` is ||u_0||^4_{L^4} in 1/m, `beta` the hopping energy in J.
inline DimensionlessParams dimensionless_params(const PhysicalParams& p, double beta, double l4norm, int N) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be positive");
  if (N < 2) throw DomainError("N must be at least 2");
  const double er = recoil_energy(p);
  const double kl = 2.0 * std::numbers::pi / p.wavelength;
  const double force = p.mass * p.g;
  DimensionlessParams d;
  d.eta = p.gamma * l4norm / beta;
  d.delta = force * p.period() / beta;
  d.beta = beta;
  d.F = force / (2.0 * er * kl);
  d.zeta = 2.0 * kl * p.gamma / er;
  d.N = N;
  return d;
}

/// The 88Sr data set: lambda_L = 532 nm, m = 87.91 au, g = 9.807 m/s^2,
/// N = 1e6 atoms, a_s = 13 a0, d_perp = 180 um.
inline PhysicalParams strontium88(double depth = 10.0) {
  PhysicalParams p;
  p.mass = mass_from_atomic_units(87.91);
  p.g = 9.807;
  p.wavelength = 532e-9;
  p.depth = depth;
  p.gamma = one_dimensional_coupling(1e6, 13.0 * constants::bohr_radius, 180e-6, p.mass);
  return p;
}

}  // namespace blochsim::units
