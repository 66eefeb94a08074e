#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "blochsim/semiclassical.hpp"
#include "blochsim/units.hpp"

using namespace blochsim;
using namespace blochsim::units;

namespace {

PhysicalParams sr88() { return strontium88(10.0); }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(Units, RecoilEnergyMatchesStrontiumValue) {
  const auto p = sr88();
  EXPECT_NEAR(p.mass, 1.46e-25, 0.01e-25);
  // 50.38 kHz hbar: E_R / hbar in s^-1.
  EXPECT_LT(rel(recoil_energy(p) / p.hbar, 50.38e3), 5e-3);
}

TEST(Units, RecoilEnergyScaling) {
  auto p = sr88();
  const double e0 = recoil_energy(p);
  auto q = p;
  q.wavelength *= 2.0;
  EXPECT_NEAR(recoil_energy(q), e0 / 4.0, 1e-12 * e0);
  q = p;
  q.mass *= 2.0;
  EXPECT_NEAR(recoil_energy(q), e0 / 2.0, 1e-12 * e0);
}

TEST(Units, BlochPeriod) {
  const auto p = sr88();
  EXPECT_NEAR(p.period(), 266e-9, 1e-18);
  EXPECT_NEAR(bloch_period(p), 1.740e-3, 0.002e-3);
  auto q = p;
  q.g *= 2.0;
  EXPECT_NEAR(bloch_period(q), bloch_period(p) / 2.0, 1e-15);
  q = p;
  q.wavelength *= 2.0;  // b -> 2b
  EXPECT_NEAR(bloch_period(q), bloch_period(p) / 2.0, 1e-15);
}

TEST(Units, OscillationRange) {
  const auto p = sr88();
  const double er = recoil_energy(p);
  const double f = p.mass * p.g;
  const double range = oscillation_range(0.26 * er, f);
  EXPECT_LT(rel(range, 9.65e-7), 0.02);
  EXPECT_LT(rel(range / p.period(), 3.6), 0.02);
  EXPECT_EQ(oscillation_range(0.0, f), 0.0);
  EXPECT_NEAR(oscillation_range(0.26 * er, 2.0 * f), range / 2.0, 1e-20);
  EXPECT_NEAR(oscillation_range(0.26 * er, -f), range, 1e-20);
  EXPECT_THROW(oscillation_range(0.26 * er, 0.0), DomainError);
}

TEST(Units, DimensionlessParametersForStrontium88) {
  auto p = sr88();
  const double er = recoil_energy(p);
  const double beta = 0.065 * er;
  const double l4 = semiclassical::reported_l4_norm_pow4(p.depth, p.period());
  const auto d = dimensionless_params(p, beta, l4, 40);
  EXPECT_NEAR(d.delta, 1.103, 0.01);
  EXPECT_LT(rel(d.eta, 0.197), 0.05);
  EXPECT_EQ(d.N, 40);
  EXPECT_EQ(d.beta, beta);
  EXPECT_NEAR(d.F, 0.01141, 1e-4);

  // Attractive end of the scattering-length interval, a_s = -a0.
  p.gamma = one_dimensional_coupling(1e6, -constants::bohr_radius, 180e-6, p.mass);
  EXPECT_LT(rel(dimensionless_params(p, beta, l4, 40).eta, -0.0151), 0.05);
}

TEST(Units, DimensionlessDegenerateInputs) {
  auto p = sr88();
  const double beta = 0.065 * recoil_energy(p);
  p.gamma = 0.0;
  auto d = dimensionless_params(p, beta, 1e7, 40);
  EXPECT_EQ(d.eta, 0.0);
  EXPECT_EQ(d.zeta, 0.0);
  p = sr88();
  p.g = 0.0;
  d = dimensionless_params(p, beta, 1e7, 40);
  EXPECT_EQ(d.delta, 0.0);
  EXPECT_EQ(d.F, 0.0);
}

TEST(Units, DomainErrors) {
  auto p = sr88();
  EXPECT_THROW(dimensionless_params(p, 0.0, 1.0, 40), DomainError);
  EXPECT_THROW(dimensionless_params(p, -1.0, 1.0, 40), DomainError);
  p.mass = 0.0;
  EXPECT_THROW(recoil_energy(p), DomainError);
  EXPECT_THROW(bloch_period(p), DomainError);
  p = sr88();
  p.wavelength = -1.0;
  EXPECT_THROW(recoil_energy(p), DomainError);
  p = sr88();
  p.g = 0.0;
  EXPECT_THROW(bloch_period(p), DomainError);
}

TEST(Units, RoundTripAndScalingProperties) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> mass_au(1.0, 250.0), lambda_nm(200.0, 2000.0), grav(0.1, 50.0),
      depth(0.5, 40.0), factor(0.2, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    PhysicalParams p;
    p.mass = mass_from_atomic_units(mass_au(rng));
    p.wavelength = lambda_nm(rng) * 1e-9;
    p.g = grav(rng);
    p.depth = depth(rng);
    const auto s = derived_scales(p);

    // Recover the inputs from the derived scales.
    constexpr double pi = std::numbers::pi;
    const double m_back = 2.0 * pi * pi * p.hbar * p.hbar / (s.recoil_energy * p.wavelength * p.wavelength);
    const double lambda_back = 2.0 * pi / s.wavenumber;
    const double g_back = 2.0 * pi * p.hbar / (s.bloch_period * p.mass * p.period());
    EXPECT_LT(rel(m_back, p.mass), 1e-12);
    EXPECT_LT(rel(lambda_back, p.wavelength), 1e-12);
    EXPECT_LT(rel(g_back, p.g), 1e-12);
    EXPECT_LT(rel(s.depth_energy / s.recoil_energy, p.depth), 1e-12);
    EXPECT_NEAR(s.epsilon * s.epsilon * p.depth, 1.0, 1e-14);

    const double c = factor(rng);
    auto q = p;
    q.wavelength *= c;
    EXPECT_LT(rel(recoil_energy(q), recoil_energy(p) / (c * c)), 1e-12);
    EXPECT_LT(rel(bloch_period(q), bloch_period(p) / c), 1e-12);
    q = p;
    q.mass *= c;
    EXPECT_LT(rel(recoil_energy(q), recoil_energy(p) / c), 1e-12);
    EXPECT_LT(rel(bloch_period(q), bloch_period(p) / c), 1e-12);
    q = p;
    q.g *= c;
    EXPECT_LT(rel(bloch_period(q), bloch_period(p) / c), 1e-12);
  }
}
