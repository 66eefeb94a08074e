#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "blochsim/dnls.hpp"
#include "blochsim/initial_states.hpp"
#include "support/dense_oracle.hpp"

using namespace blochsim;
using namespace blochsim::dnls;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double sr88_delta = 1.1026;

std::vector<complex> random_state(std::mt19937_64& rng, int N) {
  std::normal_distribution<double> g;
  std::vector<complex> c(N);
  for (auto& v : c) v = complex(g(rng), g(rng));
  return initial_states::normalized(c);
}

double max_abs_diff(const std::vector<complex>& a, const std::vector<complex>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

DnlsState evolve_to(const DnlsState& s0, const DnlsParams& p, double dtau, std::size_t steps) {
  DnlsState s = s0;
  Stepper st(p);
  for (std::size_t i = 0; i < steps; ++i) st.step(s, dtau);
  return s;
}

}  // namespace

TEST(DnlsRhs, TwoSiteHopping) {
  const DnlsParams p{2, 0.0, 0.0};
  const auto d = rhs({{1.0, 0.0}}, p);
  EXPECT_EQ(d[0], complex(0.0, 0.0));
  EXPECT_EQ(d[1], complex(0.0, 1.0));
}

TEST(DnlsRhs, MatchesDenseMatrixInLinearCase) {
  std::mt19937_64 rng(5);
  for (int N : {2, 3, 10, 40}) {
    for (double delta : {0.0, 0.37, sr88_delta}) {
      const oracle::LinearChain chain(N, delta);
      const auto d = random_state(rng, N);
      const auto got = rhs({d}, {N, 0.0, delta});
      for (int j = 0; j < N; ++j) {
        complex md = 0.0;
        for (int k = 0; k < N; ++k) md += chain.matrix()(j, k) * d[k];
        EXPECT_NEAR(std::abs(got[j] - complex(0.0, -1.0) * md), 0.0, 1e-13);
      }
    }
  }
  // Uniform vector, no tilt: interior rows vanish, end rows keep one neighbour.
  const std::vector<complex> u(6, complex(1.0, 0.0));
  const auto got = rhs({u}, {6, 0.0, 0.0});
  EXPECT_NEAR(std::abs(got[0] - complex(0.0, 1.0)), 0.0, 1e-15);
  for (int j = 1; j < 5; ++j) EXPECT_NEAR(std::abs(got[j] - complex(0.0, 2.0)), 0.0, 1e-15);
}

TEST(DnlsRhs, SingleSitePhaseRate) {
  const int N = 7, l0 = 4;
  const double eta = 0.3, delta = 0.9;
  const auto d = rhs({initial_states::single_site(N, l0)}, {N, eta, delta});
  EXPECT_NEAR(std::abs(d[l0 - 1] - complex(0.0, -(eta + l0 * delta))), 0.0, 1e-15);
  EXPECT_EQ(d[l0 - 2], complex(0.0, 1.0));
  EXPECT_EQ(d[l0], complex(0.0, 1.0));
}

TEST(DnlsRhs, ShapeAndDomainErrors) {
  EXPECT_THROW(rhs({{1.0, 0.0, 0.0}}, {2, 0.0, 0.0}), ShapeError);
  EXPECT_THROW(rhs({{1.0}}, {1, 0.0, 0.0}), DomainError);
  EXPECT_THROW(step({{1.0, 0.0}}, {2, 0.0, 0.0}, 0.02), DomainError);
  EXPECT_THROW(step({{1.0, 0.0}}, {2, 0.0, 0.0}, 0.0), DomainError);
  EXPECT_THROW(evolve({{1.0, 0.0}}, {2, 0.0, 0.0}, 1.00005, 1e-3), DomainError);
  EXPECT_THROW(evolve({{1.0, 0.0}}, {2, 0.0, 0.0}, -1.0, 1e-3), DomainError);
}

TEST(DnlsStep, TwoSiteClosedForm) {
  for (auto frame : {LadderFrame::centered, LadderFrame::as_printed}) {
    DnlsParams p{2, 0.0, 0.0};
    p.frame = frame;
    const std::size_t steps = 1571;
    const double h = 0.5 * pi / steps;
    const auto s = evolve_to({{1.0, 0.0}}, p, h, steps);
    EXPECT_NEAR(std::abs(s.amplitudes[1]), 1.0, 1e-8);
    EXPECT_NEAR(s.tau, 0.5 * pi, 1e-12);
    const auto mid = evolve_to({{1.0, 0.0}}, p, h, 600);
    EXPECT_NEAR(std::abs(mid.amplitudes[0] - std::cos(mid.tau)), 0.0, 1e-10);
    EXPECT_NEAR(std::abs(mid.amplitudes[1] - complex(0.0, std::sin(mid.tau))), 0.0, 1e-10);
  }
}

TEST(DnlsStep, LinearChainMatchesDensePropagator) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> delta(-1.5, 1.5);
  for (int trial = 0; trial < 6; ++trial) {
    const int N = 3 + trial * 7;
    const double dl = delta(rng);
    const oracle::LinearChain chain(N, dl);
    const auto d0 = random_state(rng, N);
    const auto s = evolve_to({d0}, {N, 0.0, dl}, 1e-3, 10000);
    EXPECT_LT(max_abs_diff(s.amplitudes, chain.propagate(d0, 10.0)), 1e-7) << "N=" << N;
  }
}

TEST(DnlsStep, NormDriftOverManySteps) {
  const DnlsParams p{40, 0.2, sr88_delta};
  const auto s = evolve_to({initial_states::table1()}, p, 1e-3, 100000);
  EXPECT_LT(std::abs(s.norm_squared() - 1.0), 1e-9);
}

TEST(DnlsStep, PrintedFrameAlsoConvergesToOracle) {
  DnlsParams p{40, 0.0, sr88_delta};
  p.frame = LadderFrame::as_printed;
  const oracle::LinearChain chain(40, sr88_delta);
  const auto d0 = initial_states::table1();
  const auto s = evolve_to({d0}, p, 1e-3, 10000);
  EXPECT_LT(max_abs_diff(s.amplitudes, chain.propagate(d0, 10.0)), 1e-6);
}

TEST(DnlsStep, DivergenceNamesTime) {
  const DnlsParams p{4, 1e6, 0.0};
  try {
    evolve({{1.0, 0.0, 0.0, 0.0}}, p, 5.0, 1e-2);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.time(), 0.0);
    EXPECT_NE(std::string(e.what()).find("tau"), std::string::npos);
  }
}

TEST(DnlsEvolve, SamplingLayout) {
  const DnlsParams p{5, 0.1, 0.5};
  const auto tr = evolve({initial_states::single_site(5, 3)}, p, 1.0, 1e-3, 10);
  ASSERT_EQ(tr.size(), 101u);
  EXPECT_EQ(tr.taus.front(), 0.0);
  EXPECT_NEAR(tr.taus.back(), 1.0, 1e-12);
  EXPECT_NEAR(tr.final_state.tau, 1.0, 1e-12);
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_NEAR(tr.taus[i] - tr.taus[i - 1], 0.01, 1e-12);
  EXPECT_DOUBLE_EQ(tr.com_reference, 3.0);
  EXPECT_TRUE(tr.states.empty());
  EvolveOptions opt;
  opt.record_states = true;
  opt.com_reference = 1.0;
  const auto tr2 = evolve({initial_states::single_site(5, 3)}, p, 1.0, 1e-3, 10, opt);
  ASSERT_EQ(tr2.states.size(), tr2.size());
  EXPECT_DOUBLE_EQ(tr2.com.front(), 2.0);
  EXPECT_EQ(tr2.states.back(), tr2.final_state.amplitudes);
}

TEST(DnlsEvolve, UntiltedSingleSiteKeepsCentre) {
  const auto tr = evolve({initial_states::single_site(41, 21)}, {41, 0.0, 0.0}, 20.0, 1e-3, 10);
  for (double c : tr.com) EXPECT_NEAR(c, 0.0, 1e-9);
}

TEST(DnlsEvolve, EnergyConservationOverFourteenBlochPeriods) {
  const DnlsParams p{40, 0.2, sr88_delta};
  const double tau_end = std::ceil(14.0 * bloch_period(p.delta) / 1e-3) * 1e-3;
  const auto tr = evolve({initial_states::table1()}, p, tau_end, 1e-3, 100);
  double max_e = 0.0, max_n = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    max_e = std::max(max_e, std::abs(tr.energies[i] - tr.energies[0]) / std::abs(tr.energies[0]));
    max_n = std::max(max_n, std::abs(tr.norms[i] - 1.0));
  }
  EXPECT_LT(max_e, 1e-8);
  EXPECT_LT(max_n, 1e-8);
}

TEST(DnlsEnergy, ClosedFormForSimpleStates) {
  EXPECT_NEAR(energy({initial_states::single_site(5, 2)}, {5, 0.4, 0.5, 0.1}), 0.2 + 1.0 + 0.1, 1e-15);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(energy({{r, r}}, {2, 0.0, 0.0}), -1.0, 1e-15);
}

// Constant ladder shifts only rotate the global phase.
TEST(DnlsProperties, GaugeCovariance) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> shift(-5.0, 5.0), eta(-0.3, 0.3);
  for (int trial = 0; trial < 8; ++trial) {
    const int N = 6 + trial;
    const double c = shift(rng);
    const auto d0 = random_state(rng, N);
    DnlsParams p{N, eta(rng), 0.8};
    DnlsParams q = p;
    q.ladder_offset = c;
    const auto a = evolve_to({d0}, p, 1e-3, 5000);
    const auto b = evolve_to({d0}, q, 1e-3, 5000);
    const complex phase = std::polar(1.0, -c * a.tau);
    for (int j = 0; j < N; ++j) {
      EXPECT_NEAR(std::abs(a.amplitudes[j]), std::abs(b.amplitudes[j]), 1e-12);
      EXPECT_NEAR(std::abs(a.amplitudes[j] * phase - b.amplitudes[j]), 0.0, 1e-10);
    }
    // Printed-frame stepping agrees to truncation level.
    p.frame = q.frame = LadderFrame::as_printed;
    const auto pa = evolve_to({d0}, p, 1e-3, 5000);
    const auto pb = evolve_to({d0}, q, 1e-3, 5000);
    for (int j = 0; j < N; ++j) EXPECT_NEAR(std::abs(pa.amplitudes[j]), std::abs(pb.amplitudes[j]), 1e-8);
  }
}

// delta -> -delta with the mirrored initial state gives the mirrored |d| history.
TEST(DnlsProperties, ReflectionSymmetry) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> eta(-0.3, 0.3), delta(0.2, 1.5);
  for (int trial = 0; trial < 8; ++trial) {
    const int N = 5 + 3 * trial;
    const auto d0 = random_state(rng, N);
    std::vector<complex> m0(d0.rbegin(), d0.rend());
    const DnlsParams p{N, eta(rng), delta(rng)};
    DnlsParams q = p;
    q.delta = -p.delta;
    const auto a = evolve_to({d0}, p, 1e-3, 4000);
    const auto b = evolve_to({m0}, q, 1e-3, 4000);
    for (int j = 0; j < N; ++j)
      EXPECT_NEAR(std::abs(a.amplitudes[j]), std::abs(b.amplitudes[N - 1 - j]), 1e-12);
  }
}

TEST(DnlsProperties, RandomStatesConserveNormAndEnergy) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> eta(-0.5, 0.5), delta(-1.5, 1.5);
  for (int trial = 0; trial < 10; ++trial) {
    const int N = 2 + static_cast<int>(rng() % 40);
    const DnlsParams p{N, eta(rng), delta(rng)};
    const DnlsState s0{random_state(rng, N)};
    const auto s = evolve_to(s0, p, 1e-3, 10000);
    EXPECT_NEAR(s.norm_squared(), 1.0, 1e-8);
    EXPECT_NEAR(energy(s, p), energy(s0, p), 1e-8 * std::max(1.0, std::abs(energy(s0, p))));
  }
}
