#pragma once

// Band structure and first-band Wannier function of the Hill equation
//
//     psi'' = -(E + A cos(q x)) psi,      q b = 2 pi,
//
// obtained from the fundamental system psi1(0)=1, psi1'(0)=0, psi2(0)=0,
// psi2'(0)=1. The potential is even, so the Floquet discriminant is psi1(b)
// and bands are the sets |psi1(b, E)| <= 1. The energy derivative of the
// discriminant comes from integrating the variational equation alongside.

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "blochsim/error.hpp"
#include "blochsim/grid.hpp"
#include "blochsim/parallel.hpp"

namespace blochsim::mathieu {

/// How a lattice depth Lambda0 maps onto the cosine amplitude of the ODE.
///
/// `literal`:   A = V~0 = Lambda0 k_L^2 / 2, the exact transcription of
///              V0 sin^2(k_L x) (up to the constant V0/2).
/// `tabulated`: A = V~0 / 2, the Mathieu-function parameterization
///              C[4E/q^2, -V~0/q^2, q x / 2]; this is the convention behind
///              the reported 88Sr band tables and Wannier overlaps.
enum class DepthConvention { tabulated, literal };

/// Affine map from the ODE energy to the energy units reported to callers.
struct EnergyMap {
  double scale = 1.0;
  double offset = 0.0;

  double to_reported(double ode_energy) const { return ode_energy * scale + offset; }
  double to_ode(double reported) const { return (reported - offset) / scale; }
};

struct MathieuProblem {
  double depth = 0.0;             // V~0
  double cosine_amplitude = 0.0;  // A in the ODE
  double wavenumber = 0.0;        // q
  double period = 0.0;            // b
  EnergyMap energy;

  /// Hill equation with amplitude A and period b; energies reported through `map`.
  static MathieuProblem hill(double amplitude, double period, EnergyMap map = {}) {
    if (!(period > 0.0)) throw DomainError("period must be positive");
    if (!(amplitude >= 0.0)) throw DomainError("cosine amplitude must be nonnegative");
    MathieuProblem p;
    p.depth = amplitude;
    p.cosine_amplitude = amplitude;
    p.period = period;
    p.wavenumber = 2.0 * std::numbers::pi / period;
    p.energy = map;
    return p;
  }

  /// V0 sin^2(k_L x) with V0 = Lambda0 E_R, lengths in units of b and
  /// energies reported in units of E_R.
  static MathieuProblem optical_lattice(double lambda0,
                                        DepthConvention convention = DepthConvention::tabulated) {
    if (!(lambda0 >= 0.0)) throw DomainError("lattice depth must be nonnegative");
    constexpr double pi = std::numbers::pi;
    const double vtilde = 0.5 * pi * pi * lambda0;
    const double amp = convention == DepthConvention::tabulated ? 0.5 * vtilde : vtilde;
    MathieuProblem p = hill(amp, 1.0, EnergyMap{1.0 / (pi * pi), 0.5 * lambda0});
    p.depth = vtilde;
    return p;
  }

  double potential(double x) const { return -cosine_amplitude * std::cos(wavenumber * x); }
};

/// psi1, psi2, their x-derivatives and d(psi1)/dE at one point x.
struct FundamentalPair {
  double x = 0.0;
  double psi1 = 0.0, dpsi1 = 0.0;
  double psi2 = 0.0, dpsi2 = 0.0;
  double psi1_dE = 0.0;

  double wronskian() const { return psi1 * dpsi2 - dpsi1 * psi2; }
  /// Discriminant and its derivative when x == b.
  double mu() const { return psi1; }
  double dmu_dE() const { return psi1_dE; }
};

struct IntegrationOptions {
  double abs_tol = 1e-13;
  double rel_tol = 1e-13;
  double wronskian_tol = 1e-9;
};

namespace detail {

using State = std::array<double, 6>;  // psi1, psi1', psi2, psi2', d psi1/dE, (d psi1/dE)'

struct HillRhs {
  double energy, amplitude, q;
  void operator()(const State& y, State& dy, double x) const {
    const double w = -(energy + amplitude * std::cos(q * x));
    dy[0] = y[1];
    dy[1] = w * y[0];
    dy[2] = y[3];
    dy[3] = w * y[2];
    dy[4] = y[5];
    dy[5] = w * y[4] - y[0];
  }
};

inline FundamentalPair to_pair(const State& y, double x) { return {x, y[0], y[1], y[2], y[3], y[4]}; }

inline void check_wronskian(const FundamentalPair& p, double tol, double energy) {
  const double scale = std::max(1.0, std::abs(p.psi1 * p.dpsi2) + std::abs(p.dpsi1 * p.psi2));
  const double w = p.wronskian();
  if (!std::isfinite(w) || std::abs(w - 1.0) > tol * scale) {
    std::ostringstream os;
    os.precision(17);
    os << "Wronskian drifted to " << w << " at x=" << p.x << " (E=" << energy << ")";
    throw IntegrationError(os.str());
  }
}

}  // namespace detail

/// Integrates the fundamental system from 0 through the sorted, nonnegative
/// points `xs` and returns the solution at each of them.
inline std::vector<FundamentalPair> integrate_fundamental_on(const MathieuProblem& prob, double energy,
                                                             const std::vector<double>& xs,
                                                             const IntegrationOptions& opt = {}) {
  namespace odeint = boost::numeric::odeint;
  if (xs.empty()) return {};
  if (!std::is_sorted(xs.begin(), xs.end()) || xs.front() < 0.0)
    throw DomainError("sample points must be sorted and nonnegative");
  if (!std::isfinite(energy)) throw DomainError("energy must be finite");

  std::vector<double> times;
  times.reserve(xs.size() + 1);
  if (xs.front() > 0.0) times.push_back(0.0);
  times.insert(times.end(), xs.begin(), xs.end());

  detail::State y{1.0, 0.0, 0.0, 1.0, 0.0, 0.0};
  std::vector<FundamentalPair> out;
  out.reserve(xs.size());
  const bool skip_origin = xs.front() > 0.0;
  bool first = true;
  auto observer = [&](const detail::State& s, double x) {
    if (first && skip_origin) {
      first = false;
      return;
    }
    first = false;
    out.push_back(detail::to_pair(s, x));
  };
  auto stepper =
      odeint::make_controlled<odeint::runge_kutta_fehlberg78<detail::State>>(opt.abs_tol, opt.rel_tol);
  const double dx0 = std::min(1e-3 * prob.period, std::max(times.back(), 1e-300));
  try {
    odeint::integrate_times(stepper, detail::HillRhs{energy, prob.cosine_amplitude, prob.wavenumber}, y,
                            times.begin(), times.end(), dx0, observer, odeint::max_step_checker(1000000));
  } catch (const std::exception& e) {
    std::ostringstream os;
    os << "fundamental-system integration failed at E=" << energy << ": " << e.what();
    throw IntegrationError(os.str());
  }
  if (out.size() != xs.size()) throw IntegrationError("integrator returned too few samples");
  for (const auto& p : out) detail::check_wronskian(p, opt.wronskian_tol, energy);
  return out;
}

inline FundamentalPair integrate_fundamental(const MathieuProblem& prob, double energy, double x_end,
                                             const IntegrationOptions& opt = {}) {
  if (!(x_end > 0.0)) throw DomainError("x_end must be positive");
  return integrate_fundamental_on(prob, energy, {x_end}, opt).front();
}

/// mu(E) = psi1(b, E), with E the ODE energy.
inline double discriminant(const MathieuProblem& prob, double energy) {
  return integrate_fundamental(prob, energy, prob.period).mu();
}

/// Bloch normalization N(E) = -(4 pi / b) psi2(b, E) dmu/dE.
inline double bloch_normalization(const MathieuProblem& prob, double energy) {
  const auto p = integrate_fundamental(prob, energy, prob.period);
  return -(4.0 * std::numbers::pi / prob.period) * p.psi2 * p.dmu_dE();
}

struct BandSample {
  double k = 0.0;       // quasimomentum in [0, pi/b]
  double energy = 0.0;  // reported units
};

struct BandStructure {
  int n = 0;  // 1-based band index
  std::vector<BandSample> samples;
  double bottom = 0.0;      // E_n^b, reported units
  double top = 0.0;         // E_n^t
  double width = 0.0;       // B_n
  double gap_above = 0.0;   // E_{n+1}^b - E_n^t
  double ode_bottom = 0.0;  // same edges as ODE energies
  double ode_top = 0.0;
};

struct BandSearchOptions {
  int scan_points = 2000;
  double rel_tol = 1e-12;
  /// Upper end of the scanned window (ODE energy); defaults to the free
  /// estimate ((n_max + 1) pi / b)^2 + A.
  std::optional<double> upper;
  /// |mu| at a discriminant extremum below 1 + this counts as a closed gap.
  double closed_gap_tol = 1e-10;
};

namespace detail {

struct MuSample {
  double energy, mu, dmu;
};

inline MuSample sample_mu(const MathieuProblem& prob, double energy) {
  const auto p = integrate_fundamental(prob, energy, prob.period);
  return {energy, p.mu(), p.dmu_dE()};
}

/// Bisection for a sign change of f on [a, b]; fa, fb have opposite signs.
template <class F>
double bisect(F&& f, double a, double b, double fa, double tol) {
  for (int it = 0; it < 400 && std::abs(b - a) > tol; ++it) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

inline double energy_tol(const MathieuProblem& prob, double a, double b, double rel) {
  const double scale = std::numbers::pi / prob.period;
  return rel * std::max({std::abs(a), std::abs(b), scale * scale});
}

}  // namespace detail

/// Locates the edges of the first n_max bands.
inline std::vector<BandStructure> band_edges(const MathieuProblem& prob, int n_max,
                                             const BandSearchOptions& opt = {}) {
  if (n_max < 1) throw DomainError("n_max must be at least 1");
  if (opt.scan_points < 10) throw DomainError("scan needs at least 10 points");
  const double kb = std::numbers::pi / prob.period;
  const double amp = std::abs(prob.cosine_amplitude);
  const double lo = -amp - kb * kb;
  const double hi = opt.upper.value_or((n_max + 1) * (n_max + 1) * kb * kb + amp);
  if (!(hi > lo)) throw DomainError("empty band search window");

  std::vector<detail::MuSample> scan(static_cast<std::size_t>(opt.scan_points));
  const double step = (hi - lo) / (opt.scan_points - 1);
  parallel_for(scan.size(),
               [&](std::size_t i) { scan[i] = detail::sample_mu(prob, lo + step * static_cast<double>(i)); });

  auto mu_of = [&](double e) { return discriminant(prob, e); };
  auto dmu_of = [&](double e) { return integrate_fundamental(prob, e, prob.period).dmu_dE(); };

  // Extrema of mu separate consecutive bands; between two of them mu is monotone.
  std::vector<double> extrema;
  for (std::size_t i = 0; i + 1 < scan.size() && static_cast<int>(extrema.size()) < n_max + 1; ++i) {
    const auto& a = scan[i];
    const auto& b = scan[i + 1];
    if (a.dmu == 0.0) {
      extrema.push_back(a.energy);
    } else if ((a.dmu < 0.0) != (b.dmu < 0.0) && b.dmu != 0.0) {
      extrema.push_back(detail::bisect(dmu_of, a.energy, b.energy, a.dmu,
                                       detail::energy_tol(prob, a.energy, b.energy, opt.rel_tol)));
    }
  }
  if (static_cast<int>(extrema.size()) < n_max) {
    std::ostringstream os;
    os << "found only " << extrema.size() << " gaps while scanning E in [" << lo << ", " << hi << "] for "
       << n_max << " bands";
    throw SearchError(os.str());
  }

  // Edge of band n facing target mu = s inside the monotone segment [a, b].
  auto edge_in_segment = [&](double a, double b, double s, bool at_a) -> double {
    const double ma = mu_of(a) - s;
    const double mb = mu_of(b) - s;
    if ((ma < 0.0) != (mb < 0.0))
      return detail::bisect([&](double e) { return mu_of(e) - s; }, a, b, ma,
                            detail::energy_tol(prob, a, b, opt.rel_tol));
    // No crossing: the gap closes at the segment end (|mu| touches 1 there).
    const double end = at_a ? a : b;
    if (std::abs(mu_of(end)) <= 1.0 + opt.closed_gap_tol) return end;
    std::ostringstream os;
    os << "no crossing of mu = " << s << " in [" << a << ", " << b << "]";
    throw SearchError(os.str());
  };

  auto segment = [&](int n) {
    const double a = n == 1 ? lo : extrema[static_cast<std::size_t>(n - 2)];
    const double b =
        static_cast<std::size_t>(n - 1) < extrema.size() ? extrema[static_cast<std::size_t>(n - 1)] : hi;
    return std::pair{a, b};
  };

  std::vector<BandStructure> bands;
  double next_bottom = 0.0;
  for (int n = 1; n <= n_max + 1; ++n) {
    const auto [a, b] = segment(n);
    // Odd bands start at mu = +1 (k = 0); even bands at mu = -1 (k = pi/b).
    const double s_bottom = n % 2 == 1 ? 1.0 : -1.0;
    const double bottom = edge_in_segment(a, b, s_bottom, true);
    if (n == n_max + 1) {
      next_bottom = bottom;
      break;
    }
    const double top = edge_in_segment(a, b, -s_bottom, false);
    BandStructure band;
    band.n = n;
    band.ode_bottom = bottom;
    band.ode_top = top;
    band.bottom = prob.energy.to_reported(bottom);
    band.top = prob.energy.to_reported(top);
    band.width = band.top - band.bottom;
    bands.push_back(band);
  }
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const double above = i + 1 < bands.size() ? bands[i + 1].bottom : prob.energy.to_reported(next_bottom);
    bands[i].gap_above = above - bands[i].top;
  }
  return bands;
}

/// Solves mu(E) = cos(k b) on a uniform k grid over [0, pi/b] inside one band.
inline BandStructure band_function(const MathieuProblem& prob, BandStructure band, int k_samples,
                                   double rel_tol = 1e-12) {
  if (k_samples < 2) throw DomainError("need at least two k samples");
  const double kmax = std::numbers::pi / prob.period;
  const double sign = band.n % 2 == 1 ? 1.0 : -1.0;  // mu at the band bottom
  band.samples.assign(static_cast<std::size_t>(k_samples), {});
  const double a = band.ode_bottom;
  const double b = band.ode_top;
  parallel_for(band.samples.size(), [&](std::size_t j) {
    const double k = kmax * static_cast<double>(j) / (k_samples - 1);
    double e;
    if (j == 0) {
      e = band.n % 2 == 1 ? a : b;
    } else if (static_cast<int>(j) == k_samples - 1) {
      e = band.n % 2 == 1 ? b : a;
    } else {
      const double target = std::cos(k * prob.period);
      auto f = [&](double x) { return discriminant(prob, x) - target; };
      // Sign sampling here avoids relying on edge rounding.
      const double fa = sign - target;
      const double fb = -sign - target;
      if ((fa < 0.0) == (fb < 0.0)) throw SearchError("band root not bracketed");
      e = detail::bisect(f, a, b, fa, detail::energy_tol(prob, a, b, rel_tol));
    }
    band.samples[j] = {k, prob.energy.to_reported(e)};
  });
  return band;
}

struct WannierOptions {
  int k_samples = 257;  // odd, Simpson rule
  // The fundamental system grows through several barriers before the k
  // integral cancels it, so the Wronskian guard is looser than for a single period.
  IntegrationOptions integration{1e-13, 1e-13, 1e-7};
  unsigned jobs = 0;  // threads over k samples, 0 = hardware concurrency
};

/// First-band Wannier function from the k-domain representation
///
///   w1(x) ~ int_0^{pi/b} sqrt(psi2(b, E1(k))) psi1(x, E1(k)) / sqrt(-dmu/dE) dk,
///
/// evaluated at arbitrary points. The scale is the analytic one (unit L2 norm
/// up to quadrature error) and the sign makes w1(0) > 0.
inline std::vector<double> wannier_first_band_at(const MathieuProblem& prob, std::span<const double> xs,
                                                 const WannierOptions& opt = {}) {
  if (opt.k_samples < 3 || opt.k_samples % 2 == 0)
    throw DomainError("Wannier quadrature needs an odd number (>= 3) of k samples");
  if (xs.empty()) return {};

  const auto bands = band_edges(prob, 1);
  const auto band = band_function(prob, bands.front(), opt.k_samples);

  // psi1 is even in x, so integrate over the distinct |x| values only.
  std::vector<double> abs_x(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) abs_x[i] = std::abs(xs[i]);
  std::vector<double> nodes = abs_x;
  nodes.push_back(0.0);
  nodes.push_back(prob.period);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end(),
                          [&](double a, double b) { return std::abs(a - b) <= 1e-13 * prob.period; }),
              nodes.end());
  auto node_index = [&](double x) {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), x - 1e-13 * prob.period);
    return static_cast<std::size_t>(it - nodes.begin());
  };
  const std::size_t period_node = node_index(prob.period);

  const std::size_t nk = band.samples.size();
  std::vector<std::vector<double>> columns(nk);
  parallel_for(
      nk,
      [&](std::size_t j) {
        const double e = prob.energy.to_ode(band.samples[j].energy);
        const auto sol = integrate_fundamental_on(prob, e, nodes, opt.integration);
        const double psi2b = sol[period_node].psi2;
        const double dmu = sol[period_node].dmu_dE();
        if (!(psi2b > 0.0) || !(dmu < 0.0)) {
          std::ostringstream os;
          os << "band-1 sign convention violated at k=" << band.samples[j].k << ": psi2(b)=" << psi2b
             << ", dmu/dE=" << dmu;
          throw DomainError(os.str());
        }
        const double weight = std::sqrt(psi2b) / std::sqrt(-dmu);
        auto& col = columns[j];
        col.resize(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) col[i] = weight * sol[i].psi1;
      },
      opt.jobs);

  const double dk = band.samples[1].k - band.samples[0].k;
  const double prefactor = prob.period / (std::sqrt(2.0) * std::numbers::pi);
  std::vector<double> at_node(nodes.size());
  std::vector<double> integrand(nk);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = 0; j < nk; ++j) integrand[j] = columns[j][i];
    at_node[i] = prefactor * simpson<double>(integrand, dk);
  }
  const double sign = at_node[0] >= 0.0 ? 1.0 : -1.0;
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = sign * at_node[node_index(abs_x[i])];
  return out;
}

/// Wannier function sampled on `grid`, normalized there.
inline RealGridFunction wannier_first_band(const MathieuProblem& prob, const GridSpec& grid,
                                           const WannierOptions& opt = {}) {
  if (grid.points < 2) throw DomainError("Wannier grid needs at least two points");
  std::vector<double> xs(grid.points);
  for (std::size_t i = 0; i < grid.points; ++i) xs[i] = grid.x(i);
  RealGridFunction w(grid, wannier_first_band_at(prob, xs, opt));
  const double norm = w.l2_norm();
  if (!(norm > 0.0)) throw DomainError("Wannier function vanished on the grid");
  for (auto& v : w.values) v /= norm;
  return w;
}

/// Default comparison grid: x in [-4b, 4b], 1025 points.
inline GridSpec default_grid(double period = 1.0) { return GridSpec::symmetric(4.0 * period, 1025); }

}  // namespace blochsim::mathieu
