#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "blochsim/initial_states.hpp"
#include "blochsim/observables.hpp"
#include "support/dense_oracle.hpp"

using namespace blochsim;
using namespace blochsim::observables;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double sr88_delta = 1.1026;

struct Series {
  std::vector<double> t, y;
};

template <class F>
Series sample(F f, double t_end, double h) {
  Series s;
  for (std::size_t i = 0; i * h <= t_end + 1e-12; ++i) {
    s.t.push_back(i * h);
    s.y.push_back(f(i * h));
  }
  return s;
}

}  // namespace

TEST(CenterOfMass, Examples) {
  EXPECT_EQ(center_of_mass(dnls::DnlsState{initial_states::single_site(41, 21)}), 0.0);
  std::vector<complex> uniform(40, complex(1.0 / std::sqrt(40.0)));
  EXPECT_NEAR(center_of_mass(dnls::DnlsState{uniform}), 0.0, 1e-14);
  const dnls::DnlsState t1{initial_states::table1()};
  // The table is symmetric about site 20, half a site left of the chain middle.
  EXPECT_NEAR(center_of_mass(t1, 20.0), 0.0, 0.02);
  EXPECT_NEAR(center_of_mass(t1), -0.5, 0.02);
  EXPECT_EQ(center_of_mass(dnls::DnlsState{initial_states::single_site(40, 20)}, 20.0), 0.0);
}

TEST(InitialStates, TablesAndSingleSite) {
  EXPECT_EQ(initial_states::table1_raw[20], 0.460);
  EXPECT_EQ(initial_states::table2_raw[17], 0.496);
  for (const auto& c : {initial_states::table1(), initial_states::table2()}) {
    ASSERT_EQ(c.size(), 40u);
    double n = 0.0;
    for (auto v : c) n += std::norm(v);
    EXPECT_NEAR(n, 1.0, 1e-14);
  }
  // Rounded to three digits, the table's squared norm is just under one.
  double raw = 0.0;
  for (double v : initial_states::table1_raw) raw += v * v;
  EXPECT_NEAR(raw, 0.999528, 1e-6);
  const auto s = initial_states::builtin("single-site", 40);
  EXPECT_EQ(s[19], complex(1.0));
  EXPECT_THROW(initial_states::builtin("table1", 30), ShapeError);
  EXPECT_THROW(initial_states::builtin("gaussian", 40), DomainError);
  const std::vector<complex> bad(3, complex(1.0));
  EXPECT_THROW(initial_states::custom(bad, 4), ShapeError);
  EXPECT_NEAR(std::abs(initial_states::custom(bad, 3)[0]), 1.0 / std::sqrt(3.0), 1e-15);
}

TEST(DetectExtrema, PureCosine) {
  const double h = 0.01;
  const auto s = sample([](double t) { return std::cos(t); }, 40.0, h);
  const auto maxima = detect_extrema(s.t, s.y, ExtremumKind::max);
  const auto minima = detect_extrema(s.t, s.y, ExtremumKind::min);
  ASSERT_EQ(maxima.size(), 6u);  // 2 pi .. 12 pi; t = 0 is not interior
  for (std::size_t k = 0; k < maxima.size(); ++k) EXPECT_NEAR(maxima[k], 2.0 * pi * (k + 1), h * h);
  ASSERT_EQ(minima.size(), 6u);
  for (std::size_t k = 0; k < minima.size(); ++k) EXPECT_NEAR(minima[k], pi * (2 * k + 1), h * h);
}

TEST(DetectExtrema, ModulatedSignalSpacing) {
  // y = A(t) cos t peaks where tan t = A'/A; the exact peaks come from Newton
  // on that condition. The envelope drift moves gaps by up to ~2 pi d(A'/A)/dt.
  auto env = [](double t) { return 1.0 + 0.1 * std::cos(0.05 * t); };
  auto env_d = [](double t) { return -0.005 * std::sin(0.05 * t); };
  auto g = [&](double t) { return env_d(t) * std::cos(t) - env(t) * std::sin(t); };
  const auto s = sample([&](double t) { return env(t) * std::cos(t); }, 200.0, 0.01);
  const auto maxima = detect_extrema(s.t, s.y, ExtremumKind::max);
  ASSERT_EQ(maxima.size(), 31u);
  for (std::size_t k = 0; k < maxima.size(); ++k) {
    double t = 2.0 * pi * (k + 1);
    for (int it = 0; it < 30; ++it) t -= g(t) / ((g(t + 1e-6) - g(t - 1e-6)) / 2e-6);
    EXPECT_NEAR(maxima[k], t, 1e-5);
  }
  for (std::size_t k = 1; k < maxima.size(); ++k) EXPECT_NEAR(maxima[k] - maxima[k - 1], 2.0 * pi, 2e-3);
}

TEST(DetectExtrema, MonotoneAndShortSignals) {
  const auto s = sample([](double t) { return t * t + t; }, 10.0, 0.1);
  EXPECT_TRUE(detect_extrema(s.t, s.y, ExtremumKind::max).empty());
  EXPECT_TRUE(detect_extrema(s.t, s.y, ExtremumKind::min).empty());
  const std::vector<double> t{0.0, 1.0}, y{0.0, 1.0};
  EXPECT_TRUE(detect_extrema(t, y, ExtremumKind::max).empty());
  const std::vector<double> flat(50, 2.0), tf = sample([](double) { return 0.0; }, 4.9, 0.1).t;
  EXPECT_TRUE(detect_extrema(tf, flat, ExtremumKind::max).empty());
  EXPECT_THROW(detect_extrema(t, flat, ExtremumKind::max), ShapeError);
}

TEST(DetectExtrema, OffsetInvarianceAndShiftEquivariance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> period(2.0, 9.0), phase(0.0, 2.0 * pi), offset(-50.0, 50.0),
      amp(0.01, 100.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double T = period(rng), ph = phase(rng), c = offset(rng), a = amp(rng);
    const auto s = sample([&](double t) { return std::sin(2.0 * pi * t / T + ph); }, 60.0, 0.01);
    auto shifted = s;
    for (auto& v : shifted.y) v += c;
    auto scaled = s;
    for (auto& v : scaled.y) v *= a;
    auto later = s;
    const double dt = 3.7;
    for (auto& v : later.t) v += dt;
    const auto base = detect_extrema(s.t, s.y, ExtremumKind::max);
    const auto with_offset = detect_extrema(shifted.t, shifted.y, ExtremumKind::max);
    const auto moved = detect_extrema(later.t, later.y, ExtremumKind::max);
    ASSERT_EQ(base.size(), with_offset.size());
    ASSERT_EQ(base.size(), moved.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
      EXPECT_NEAR(with_offset[k], base[k], 1e-9);
      EXPECT_NEAR(moved[k], base[k] + dt, 1e-9);
    }
    const auto e1 = pseudo_period_stats(s.t, s.y, 5, T);
    const auto e2 = pseudo_period_stats(scaled.t, scaled.y, 5, T);
    EXPECT_NEAR(e1.mean_period, e2.mean_period, 1e-12);
  }
}

TEST(PseudoPeriod, SyntheticCosine) {
  const double T0 = 5.3;
  const auto s = sample([&](double t) { return std::cos(2.0 * pi * t / T0); }, 100.0, 0.01);
  const auto e = pseudo_period_stats(s.t, s.y, 14, T0);
  EXPECT_NEAR(e.mean_period, T0, 1e-6);
  EXPECT_NEAR(e.mean_period_minima, T0, 1e-6);
  EXPECT_LT(e.rel_dev, 1e-6);
  EXPECT_EQ(e.pseudo_periods.size(), e.maxima.size() - 1);
  for (double g : e.pseudo_periods) EXPECT_GT(g, 0.0);
}

TEST(PseudoPeriod, TooFewMaximaNamesCount) {
  const auto s = sample([](double t) { return std::cos(t); }, 20.0, 0.01);
  try {
    pseudo_period_stats(s.t, s.y, 14, 2.0 * pi);
    FAIL();
  } catch (const AnalysisError& e) {
    EXPECT_NE(std::string(e.what()).find("found 3 maxima"), std::string::npos) << e.what();
  }
}

TEST(PseudoPeriod, LinearTableOneRecoversBlochPeriod) {
  const dnls::DnlsParams p{40, 0.0, sr88_delta};
  const double tau_B = dnls::bloch_period(p.delta);
  EXPECT_DOUBLE_EQ(tau_B, 2.0 * pi / sr88_delta);
  const SweepOptions opt;
  dnls::EvolveOptions eo;
  eo.com_reference = 20.0;
  eo.record_states = true;
  const auto tr = dnls::evolve({initial_states::table1()}, p, sweep_run_length(tau_B, opt), opt.dtau,
                               opt.sample_every, eo);
  const auto e = pseudo_period_stats(tr, 14, tau_B);
  EXPECT_LT(e.rel_dev, 1e-4);
  EXPECT_NEAR(e.mean_period, 5.696, 5.696e-3);
  // Same trajectory from the exact propagator.
  const oracle::LinearChain chain(40, sr88_delta);
  const auto d0 = initial_states::table1();
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.size(); i += 50) {
    const auto exact = chain.propagate(d0, tr.taus[i]);
    for (int j = 0; j < 40; ++j) worst = std::max(worst, std::abs(exact[j] - tr.states[i][j]));
  }
  EXPECT_LT(worst, 1e-7);
}

TEST(EtaSweep, OrderingErrorsAndDeterminism) {
  const dnls::DnlsParams p{40, 0.0, sr88_delta};
  const dnls::DnlsState s0{initial_states::table2()};
  const std::vector<double> etas{0.2, -0.1, 0.0};
  SweepOptions opt;
  opt.n_bloch_periods = 6.0;
  opt.com_reference = 20.0;
  opt.jobs = 1;
  const auto serial = eta_sweep(p, s0, etas, 4, opt);
  opt.jobs = 3;
  const auto threaded = eta_sweep(p, s0, etas, 4, opt);
  ASSERT_EQ(serial.size(), 3u);
  for (std::size_t i = 0; i < etas.size(); ++i) {
    EXPECT_EQ(serial[i].eta, etas[i]);
    EXPECT_EQ(threaded[i].eta, etas[i]);
    ASSERT_TRUE(serial[i].estimate) << serial[i].error;
    ASSERT_TRUE(threaded[i].estimate);
    EXPECT_EQ(serial[i].estimate->maxima, threaded[i].estimate->maxima);
  }
  EXPECT_LT(serial[2].estimate->rel_dev, 1e-6);
  // Too many requested oscillations: each entry records the failure, nothing throws.
  const auto failed = eta_sweep(p, s0, etas, 40, opt);
  for (const auto& e : failed) {
    EXPECT_FALSE(e.estimate);
    EXPECT_NE(e.error.find("maxima"), std::string::npos);
  }
  EXPECT_THROW(summarize(failed), AnalysisError);
  const std::vector<double> out_of_range{0.6};
  EXPECT_THROW(eta_sweep(p, s0, out_of_range, 4, opt), DomainError);
}

TEST(EtaSweep, LinearPeriodIndependentOfInitialState) {
  const dnls::DnlsParams p{40, 0.0, sr88_delta};
  const std::vector<double> etas{0.0};
  SweepOptions opt;
  opt.com_reference = 20.0;
  const auto a = eta_sweep(p, {initial_states::table1()}, etas, 14, opt);
  const auto b = eta_sweep(p, {initial_states::table2()}, etas, 14, opt);
  ASSERT_TRUE(a[0].estimate && b[0].estimate);
  EXPECT_NEAR(a[0].estimate->mean_period / b[0].estimate->mean_period, 1.0, 1e-6);
}

TEST(EtaSweep, UniformGrid) {
  const auto g = uniform_etas();
  ASSERT_EQ(g.size(), 31u);
  EXPECT_DOUBLE_EQ(g.front(), -0.1);
  EXPECT_DOUBLE_EQ(g.back(), 0.2);
  EXPECT_NEAR(g[1] - g[0], 0.01, 1e-15);
}
