#pragma once

// Direct solver for the dimensionless continuum equation
//
//     i psi_t = -psi_xx + V_N(x) psi + F (W_N(x) + w0) psi + zeta |psi|^2 psi,
//
// with V_N the eps^-2 sin^2 lattice cut to N wells of period 2 pi (flat
// walls outside) and W_N = x clipped to [-L, L]. Time stepping is Strang
// split-step Fourier on a periodic box; the localized basis for projection
// is built from translated first-band Wannier functions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blochsim/dnls.hpp"
#include "blochsim/error.hpp"
#include "blochsim/fft.hpp"
#include "blochsim/grid.hpp"
#include "blochsim/mathieu.hpp"

namespace blochsim::continuum {

inline constexpr double lattice_period = 2.0 * std::numbers::pi;

struct ContinuumConfig {
  double epsilon = 1.0 / std::sqrt(10.0);
  double F = 0.0;
  double zeta = 0.0;
  double box_half_width = 20.0 * lattice_period;  // box [-h, h), periodic
  std::size_t n_grid = 4096;
  double dt = 1e-4;
  int N_wells = 9;
  std::optional<double> L_clip;  // default (N/2 + 1) b
  double w_offset = 0.0;         // constant added to W_N
  std::size_t sample_every = 100;

  double depth() const { return 1.0 / (epsilon * epsilon); }
  double clip() const { return L_clip.value_or((0.5 * N_wells + 1.0) * lattice_period); }
  double well_center(int l) const { return (l - 0.5 * (N_wells + 1)) * lattice_period; }
  GridSpec grid() const {
    return {-box_half_width, 2.0 * box_half_width / static_cast<double>(n_grid), n_grid};
  }
};

inline void validate(const ContinuumConfig& c) {
  if (!(c.epsilon > 0.0) || !std::isfinite(c.epsilon)) throw ConfigError("epsilon", "must be positive");
  if (!std::isfinite(c.F)) throw ConfigError("F", "must be finite");
  if (!std::isfinite(c.zeta)) throw ConfigError("zeta", "must be finite");
  if (c.N_wells < 1) throw ConfigError("N_wells", "must be at least 1");
  if (c.n_grid < 16 || (c.n_grid & (c.n_grid - 1)) != 0)
    throw ConfigError("n_grid", "must be a power of two >= 16");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw ConfigError("dt", "must be positive");
  if (c.sample_every == 0) throw ConfigError("sample_every", "must be positive");
  if (!(c.box_half_width > 0.0)) throw ConfigError("box", "half width must be positive");
  const double L = c.clip();
  if (!(L > 0.5 * (c.N_wells + 1) * lattice_period - 1e-12))
    throw ConfigError("L_clip", "must exceed (N+1) b / 2");
  if (2.0 * c.box_half_width < 2.0 * L + 2.0 * lattice_period)
    throw ConfigError("box", "length must be at least 2 L_clip + 2 b");
  const double window = 0.5 * c.N_wells * lattice_period;
  if (window >= c.box_half_width) throw ConfigError("box", "well window exceeds the box");
}

struct Potentials {
  GridSpec grid;
  std::vector<double> V;
  std::vector<double> W;
};

/// V: wells at x_l = (l - (N+1)/2) b inside [x_1 - b/2, x_N + b/2], flat
/// barrier height eps^-2 outside. W: x clipped to [-L, L].
inline Potentials build_potentials(const ContinuumConfig& cfg) {
  validate(cfg);
  Potentials p;
  p.grid = cfg.grid();
  p.V.resize(cfg.n_grid);
  p.W.resize(cfg.n_grid);
  const double x_first = cfg.well_center(1);
  const double lo = x_first - 0.5 * lattice_period;
  const double hi = cfg.well_center(cfg.N_wells) + 0.5 * lattice_period;
  const double depth = cfg.depth();
  const double L = cfg.clip();
  for (std::size_t i = 0; i < cfg.n_grid; ++i) {
    const double x = p.grid.x(i);
    if (x <= lo || x >= hi) {
      p.V[i] = depth;
    } else {
      const double s = std::sin(0.5 * (x - x_first));
      p.V[i] = depth * s * s;
    }
    p.W[i] = std::clamp(x, -L, L);
  }
  return p;
}

struct ContinuumState {
  ComplexGridFunction psi;
  double t = 0.0;
};

/// Periodic-grid quadrature sum_j f_j dx.
template <class T>
T periodic_integral(std::span<const T> f, double dx) {
  CompensatedSum<T> s;
  for (const auto& v : f) s.add(v);
  return s.value() * dx;
}

inline double periodic_norm_squared(const ComplexGridFunction& f) {
  NeumaierSum s;
  for (const auto& v : f.values) s.add(std::norm(v));
  return s.value() * f.grid.dx;
}

struct ContinuumTrajectory {
  std::vector<double> times;
  std::vector<double> norms;  // ||psi||^2
  std::vector<double> energies;
  std::vector<double> com;  // int x |psi|^2, in units of b

  std::size_t size() const { return times.size(); }
};

class SplitStepSolver {
 public:
  SplitStepSolver(GridSpec grid, std::vector<double> potential, double zeta, double dt)
      : grid_(grid), potential_(std::move(potential)), zeta_(zeta), dt_(dt), fft_(grid.points) {
    if (potential_.size() != grid_.points) throw ShapeError("potential does not match grid");
    if (dt_ == 0.0 || !std::isfinite(dt_)) throw DomainError("dt must be nonzero");
    const std::size_t n = grid_.points;
    k2_.resize(n);
    kinetic_.resize(n);
    const double dk = 2.0 * std::numbers::pi / (static_cast<double>(n) * grid_.dx);
    for (std::size_t j = 0; j < n; ++j) {
      const double m = j < n / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
      k2_[j] = (m * dk) * (m * dk);
      kinetic_[j] = std::polar(1.0 / static_cast<double>(n), -k2_[j] * dt_);
    }
    half_.resize(n);
    full_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      half_[i] = std::polar(1.0, -0.5 * dt_ * potential_[i]);
      full_[i] = std::polar(1.0, -dt_ * potential_[i]);
    }
  }

  const GridSpec& grid() const { return grid_; }
  double dt() const { return dt_; }

  /// Advances `steps` Strang steps, calling observe(state) after every
  /// `sample_every`-th. Adjacent half potential steps are fused, which is
  /// exact because the potential step leaves |psi| unchanged.
  template <class Observer>
  void advance(ContinuumState& s, std::size_t steps, std::size_t sample_every, Observer&& observe) {
    if (!s.psi.grid.same_as(grid_)) throw ShapeError("state grid does not match solver grid");
    if (steps == 0) return;
    auto& psi = s.psi.values;
    const double t0 = s.t;
    potential_step(psi, half_, 0.5 * dt_);
    for (std::size_t i = 1; i <= steps; ++i) {
      kinetic_step(psi);
      const bool sample = i % sample_every == 0;
      if (sample || i == steps) {
        potential_step(psi, half_, 0.5 * dt_);
        s.t = t0 + static_cast<double>(i) * dt_;
        if (sample) observe(static_cast<const ContinuumState&>(s));
        if (i < steps) potential_step(psi, half_, 0.5 * dt_);
      } else {
        potential_step(psi, full_, dt_);
      }
    }
  }

  /// int |psi_x|^2 + (V + F W) |psi|^2 + zeta/2 |psi|^4.
  double energy(const ContinuumState& s) {
    const auto& psi = s.psi.values;
    auto buf = fft_.data();
    std::copy(psi.begin(), psi.end(), buf.begin());
    fft_.forward();
    NeumaierSum kin, pot;
    for (std::size_t j = 0; j < buf.size(); ++j) kin.add(k2_[j] * std::norm(buf[j]));
    for (std::size_t i = 0; i < psi.size(); ++i) {
      const double rho = std::norm(psi[i]);
      pot.add(potential_[i] * rho + 0.5 * zeta_ * rho * rho);
    }
    const double n = static_cast<double>(buf.size());
    return kin.value() * grid_.dx / n + pot.value() * grid_.dx;
  }

 private:
  void kinetic_step(std::vector<complex>& psi) {
    auto buf = fft_.data();
    std::copy(psi.begin(), psi.end(), buf.begin());
    fft_.forward();
    for (std::size_t j = 0; j < buf.size(); ++j) buf[j] *= kinetic_[j];
    fft_.backward();
    std::copy(buf.begin(), buf.end(), psi.begin());
  }

  void potential_step(std::vector<complex>& psi, const std::vector<complex>& phase, double h) {
    if (zeta_ == 0.0) {
      for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= phase[i];
      return;
    }
    for (std::size_t i = 0; i < psi.size(); ++i)
      psi[i] *= phase[i] * std::polar(1.0, -zeta_ * h * std::norm(psi[i]));
  }

  GridSpec grid_;
  std::vector<double> potential_;
  double zeta_;
  double dt_;
  FftPlan fft_;
  std::vector<double> k2_;
  std::vector<complex> kinetic_, half_, full_;
};

inline std::vector<double> static_potential(const ContinuumConfig& cfg, const Potentials& pot) {
  std::vector<double> u(pot.V.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = pot.V[i] + cfg.F * (pot.W[i] + cfg.w_offset);
  return u;
}

inline double continuum_com(const ContinuumState& s) {
  NeumaierSum m;
  for (std::size_t i = 0; i < s.psi.size(); ++i) m.add(s.psi.x(i) * std::norm(s.psi.values[i]));
  return m.value() * s.psi.grid.dx / lattice_period;
}

inline constexpr double norm_drift_limit = 1e-6;

struct EvolveResult {
  ContinuumState state;
  ContinuumTrajectory trajectory;
};

/// Evolves to t + t_end (t_end may be negative, which runs the flow
/// backwards). Samples, including the initial state, are taken every
/// cfg.sample_every steps; observe(state) is called at each one.
template <class Observer>
EvolveResult split_step_evolve(const ContinuumState& state0, const ContinuumConfig& cfg, double t_end,
                               Observer&& observe) {
  validate(cfg);
  if (!state0.psi.grid.same_as(cfg.grid())) throw ShapeError("initial state grid does not match config");
  const double steps_real = std::abs(t_end) / cfg.dt;
  const auto steps = static_cast<std::size_t>(std::llround(steps_real));
  if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * std::max(1.0, steps_real))
    throw DomainError("t_end must be a whole number of time steps");

  const auto pot = build_potentials(cfg);
  SplitStepSolver solver(pot.grid, static_potential(cfg, pot), cfg.zeta, t_end < 0.0 ? -cfg.dt : cfg.dt);

  EvolveResult r;
  r.state = state0;
  const double norm0 = periodic_norm_squared(state0.psi);
  auto record = [&](const ContinuumState& s) {
    const double n = periodic_norm_squared(s.psi);
    if (!std::isfinite(n) || std::abs(n - norm0) > norm_drift_limit)
      throw SolverError("continuum norm drifted to " + std::to_string(n) + " at t = " + std::to_string(s.t));
    r.trajectory.times.push_back(s.t);
    r.trajectory.norms.push_back(n);
    r.trajectory.energies.push_back(solver.energy(s));
    r.trajectory.com.push_back(continuum_com(s));
    observe(s);
  };
  record(r.state);
  solver.advance(r.state, steps, cfg.sample_every, record);
  return r;
}

inline EvolveResult split_step_evolve(const ContinuumState& state0, const ContinuumConfig& cfg,
                                      double t_end) {
  return split_step_evolve(state0, cfg, t_end, [](const ContinuumState&) {});
}

/// Real localized functions on a common grid with their Gram deviation.
struct Basis {
  GridSpec grid;
  std::vector<std::vector<double>> functions;
  double gram_deviation = 0.0;  // max |<u_i, u_j> - delta_ij|

  std::size_t size() const { return functions.size(); }
};

inline double gram_deviation(const GridSpec& grid, const std::vector<std::vector<double>>& fs) {
  double dev = 0.0;
  for (std::size_t i = 0; i < fs.size(); ++i)
    for (std::size_t j = i; j < fs.size(); ++j) {
      NeumaierSum s;
      for (std::size_t k = 0; k < grid.points; ++k) s.add(fs[i][k] * fs[j][k]);
      dev = std::max(dev, std::abs(s.value() * grid.dx - (i == j ? 1.0 : 0.0)));
    }
  return dev;
}

inline Basis make_basis(const GridSpec& grid, std::vector<std::vector<double>> fs) {
  for (const auto& f : fs)
    if (f.size() != grid.points) throw ShapeError("basis function does not match grid");
  Basis b{grid, std::move(fs), 0.0};
  b.gram_deviation = gram_deviation(b.grid, b.functions);
  return b;
}

struct BasisOptions {
  double support_radius = 4.0 * lattice_period;
  mathieu::WannierOptions wannier;
};

/// The Mathieu problem of one cell of V_N: -psi'' + eps^-2 sin^2(x/2) psi = E psi.
inline mathieu::MathieuProblem cell_problem(const ContinuumConfig& cfg) {
  const double half = 0.5 * cfg.depth();
  return mathieu::MathieuProblem::hill(half, lattice_period, {1.0, half});
}

/// Translates of the first-band Wannier function of the infinite lattice,
/// truncated to |x - x_l| <= support_radius and normalized on the grid.
inline Basis wannier_basis(const ContinuumConfig& cfg, const BasisOptions& opt = {}) {
  validate(cfg);
  const auto grid = cfg.grid();
  const auto prob = cell_problem(cfg);
  std::vector<double> offsets;
  for (int l = 1; l <= cfg.N_wells; ++l)
    for (std::size_t i = 0; i < grid.points; ++i) {
      const double d = grid.x(i) - cfg.well_center(l);
      if (std::abs(d) <= opt.support_radius) offsets.push_back(d);
    }
  const auto values = mathieu::wannier_first_band_at(prob, offsets, opt.wannier);
  std::vector<std::vector<double>> fs(cfg.N_wells, std::vector<double>(grid.points, 0.0));
  std::size_t next = 0;
  for (int l = 1; l <= cfg.N_wells; ++l) {
    auto& f = fs[l - 1];
    for (std::size_t i = 0; i < grid.points; ++i)
      if (std::abs(grid.x(i) - cfg.well_center(l)) <= opt.support_radius) f[i] = values[next++];
    NeumaierSum s;
    for (double v : f) s.add(v * v);
    const double norm = std::sqrt(s.value() * grid.dx);
    for (double& v : f) v /= norm;
  }
  return make_basis(grid, std::move(fs));
}

inline constexpr double max_gram_deviation = 1e-3;

struct Projection {
  std::vector<complex> coeffs;
  double remainder_norm = 0.0;
};

/// c_l = <u_l, psi> and ||psi - sum c_l u_l||.
inline Projection project_onto_sites(const ContinuumState& s, const Basis& basis) {
  if (!s.psi.grid.same_as(basis.grid)) throw ShapeError("state and basis grids differ");
  if (!(basis.gram_deviation <= max_gram_deviation))
    throw BasisError("basis Gram deviation " + std::to_string(basis.gram_deviation) + " exceeds " +
                     std::to_string(max_gram_deviation));
  Projection p;
  const double dx = basis.grid.dx;
  const auto& psi = s.psi.values;
  p.coeffs.resize(basis.size());
  std::vector<complex> r(psi.begin(), psi.end());
  for (std::size_t l = 0; l < basis.size(); ++l) {
    const auto& u = basis.functions[l];
    CompensatedSum<complex> c;
    for (std::size_t i = 0; i < psi.size(); ++i)
      if (u[i] != 0.0) c.add(u[i] * psi[i]);
    p.coeffs[l] = c.value() * dx;
  }
  for (std::size_t l = 0; l < basis.size(); ++l) {
    const auto& u = basis.functions[l];
    for (std::size_t i = 0; i < psi.size(); ++i) r[i] -= p.coeffs[l] * u[i];
  }
  NeumaierSum n;
  for (const auto& v : r) n.add(std::norm(v));
  p.remainder_norm = std::sqrt(n.value() * dx);
  return p;
}

/// sum c_l u_l on the basis grid.
inline ContinuumState synthesize(const Basis& basis, std::span<const complex> coeffs) {
  if (coeffs.size() != basis.size()) throw ShapeError("coefficient count does not match basis");
  ContinuumState s{ComplexGridFunction(basis.grid), 0.0};
  for (std::size_t l = 0; l < basis.size(); ++l)
    for (std::size_t i = 0; i < basis.grid.points; ++i) s.psi.values[i] += coeffs[l] * basis.functions[l][i];
  return s;
}

/// The DNLS constants implied by the continuum problem and its basis:
/// beta = B1 / 4, delta = F b / beta, eta = zeta ||u||_4^4 / beta with the
/// basis' own L4 norm.
struct ReducedParams {
  double beta = 0.0;
  double band_width = 0.0;
  double l4_norm_pow4 = 0.0;
  dnls::DnlsParams dnls;
};

inline ReducedParams reduced_params(const ContinuumConfig& cfg, const Basis& basis) {
  const auto edges = mathieu::band_edges(cell_problem(cfg), 1);
  ReducedParams r;
  r.band_width = edges.front().width;
  r.beta = 0.25 * r.band_width;
  const auto& u = basis.functions[basis.size() / 2];
  NeumaierSum s;
  for (double v : u) s.add(v * v * v * v);
  r.l4_norm_pow4 = s.value() * basis.grid.dx;
  r.dnls.N = cfg.N_wells;
  r.dnls.delta = cfg.F * lattice_period / r.beta;
  r.dnls.eta = cfg.zeta * r.l4_norm_pow4 / r.beta;
  return r;
}

struct CoefficientSeries {
  std::vector<double> times;  // continuum time
  std::vector<std::vector<complex>> coeffs;
  std::vector<double> remainder;
};

struct ErrorSeries {
  std::vector<double> taus;
  std::vector<double> max_coeff_error;
  std::vector<double> remainder_norm;

  double max_error() const {
    return max_coeff_error.empty() ? 0.0 : *std::max_element(max_coeff_error.begin(), max_coeff_error.end());
  }
  double max_remainder() const {
    return remainder_norm.empty() ? 0.0 : *std::max_element(remainder_norm.begin(), remainder_norm.end());
  }
};

/// max_l |c_l - e^{i phi} d_l| per sample, with phi = arg <d, c>, the phase
/// that minimizes the l2 distance. DNLS time is tau = beta t.
inline ErrorSeries compare_with_dnls(const CoefficientSeries& cont, const dnls::Trajectory& dn, double beta) {
  if (cont.times.size() != dn.states.size() || cont.coeffs.size() != cont.times.size())
    throw AlignmentError("continuum has " + std::to_string(cont.times.size()) + " samples, DNLS has " +
                         std::to_string(dn.states.size()) + " recorded states");
  ErrorSeries e;
  for (std::size_t k = 0; k < cont.times.size(); ++k) {
    const double tau = beta * cont.times[k];
    if (std::abs(tau - dn.taus[k]) > 1e-9 * std::max(1.0, std::abs(tau)))
      throw AlignmentError("sample " + std::to_string(k) + ": continuum tau " + std::to_string(tau) +
                           " vs DNLS tau " + std::to_string(dn.taus[k]));
    const auto& c = cont.coeffs[k];
    const auto& d = dn.states[k];
    if (c.size() != d.size()) throw AlignmentError("coefficient vectors differ in length");
    complex overlap = 0.0;
    for (std::size_t l = 0; l < c.size(); ++l) overlap += std::conj(d[l]) * c[l];
    const complex phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : complex(1.0);
    double worst = 0.0;
    for (std::size_t l = 0; l < c.size(); ++l) worst = std::max(worst, std::abs(c[l] - phase * d[l]));
    e.taus.push_back(tau);
    e.max_coeff_error.push_back(worst);
    e.remainder_norm.push_back(k < cont.remainder.size() ? cont.remainder[k] : std::nan(""));
  }
  return e;
}

struct OracleOptions {
  BasisOptions basis;
  double max_dnls_dtau = dnls::default_dtau;
};

struct OracleRun {
  ReducedParams reduced;
  Basis basis;
  CoefficientSeries continuum_coeffs;
  ContinuumTrajectory continuum;
  dnls::Trajectory dnls;
  ErrorSeries errors;
  std::size_t dnls_substeps = 0;
  double gram_deviation = 0.0;
};

/// Starts both models from psi0 = sum c_l u_l (c normalized), evolves the
/// continuum for t_end and the DNLS for beta t_end on a matched time grid,
/// and returns the error series.
inline OracleRun run_oracle(const ContinuumConfig& cfg, std::span<const complex> c0, double t_end,
                            const OracleOptions& opt = {}) {
  validate(cfg);
  if (c0.size() != static_cast<std::size_t>(cfg.N_wells))
    throw ShapeError("initial coefficients must have N_wells entries");
  if (!(t_end > 0.0)) throw DomainError("t_end must be positive");
  OracleRun run;
  run.basis = wannier_basis(cfg, opt.basis);
  run.gram_deviation = run.basis.gram_deviation;
  run.reduced = reduced_params(cfg, run.basis);

  auto psi0 = synthesize(run.basis, c0);
  const double n0 = std::sqrt(periodic_norm_squared(psi0.psi));
  for (auto& v : psi0.psi.values) v /= n0;

  auto observe = [&](const ContinuumState& s) {
    auto p = project_onto_sites(s, run.basis);
    run.continuum_coeffs.times.push_back(s.t);
    run.continuum_coeffs.coeffs.push_back(std::move(p.coeffs));
    run.continuum_coeffs.remainder.push_back(p.remainder_norm);
  };
  auto evolved = split_step_evolve(psi0, cfg, t_end, observe);
  run.continuum = std::move(evolved.trajectory);

  // DNLS on the same sample grid: each continuum sample interval spans
  // `substeps` RK4 steps, small enough for the ladder's stiffness.
  const auto& p = run.reduced.dnls;
  const double sample_tau = run.reduced.beta * cfg.dt * static_cast<double>(cfg.sample_every);
  const double stiffness = 2.0 + std::abs(p.eta) + 0.5 * (p.N + 1) * std::abs(p.delta);
  const double dtau_cap = std::min(opt.max_dnls_dtau, 0.1 / stiffness);
  run.dnls_substeps = static_cast<std::size_t>(std::ceil(sample_tau / dtau_cap));
  const double dtau = sample_tau / static_cast<double>(run.dnls_substeps);
  const std::size_t intervals = run.continuum_coeffs.times.size() - 1;
  dnls::EvolveOptions eo;
  eo.record_states = true;
  dnls::DnlsState d0{run.continuum_coeffs.coeffs.front(), 0.0};
  if (intervals == 0) {
    run.dnls.taus = {0.0};
    run.dnls.states = {d0.amplitudes};
    run.dnls.final_state = d0;
  } else {
    run.dnls = dnls::evolve(d0, p, dtau * static_cast<double>(run.dnls_substeps * intervals), dtau,
                            run.dnls_substeps, eo);
  }
  run.errors = compare_with_dnls(run.continuum_coeffs, run.dnls, run.reduced.beta);
  return run;
}

/// Remainder threshold for one Bloch period, fixed from calibration runs.
inline constexpr double calibrated_remainder_threshold = 0.05;

}  // namespace blochsim::continuum
