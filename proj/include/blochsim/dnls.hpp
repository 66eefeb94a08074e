#pragma once

// Dimensionless N-site DNLS with a Stark ladder and open ends,
//
//     i d_l' = -(d_{l+1} + d_{l-1}) + eta |d_l|^2 d_l + (l delta + c) d_l,
//     l = 1..N,  d_0 = d_{N+1} = 0,
//
// advanced by fixed-step classical RK4.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blochsim/error.hpp"
#include "blochsim/grid.hpp"

namespace blochsim::dnls {

/// Where RK4 sees the ladder. `centered` integrates l - (N+1)/2 and restores
/// the constant part as an exact phase after each step, which removes the
/// large uniform rotation from the truncation error. `as_printed` steps the
/// l = 1..N ladder directly. Both produce states in the printed gauge.
enum class LadderFrame { centered, as_printed };

struct DnlsParams {
  int N = 0;
  double eta = 0.0;
  double delta = 0.0;
  double ladder_offset = 0.0;  // c
  LadderFrame frame = LadderFrame::centered;
};

struct DnlsState {
  std::vector<complex> amplitudes;  // d_1 .. d_N
  double tau = 0.0;

  double norm_squared() const {
    NeumaierSum s;
    for (const auto& d : amplitudes) s.add(std::norm(d));
    return s.value();
  }
};

inline constexpr double default_dtau = 1e-3;
inline constexpr double max_dtau = 1e-2;

inline void validate(const DnlsParams& p) {
  if (p.N < 2) throw DomainError("DNLS needs N >= 2");
  if (!std::isfinite(p.eta) || !std::isfinite(p.delta) || !std::isfinite(p.ladder_offset))
    throw DomainError("DNLS parameters must be finite");
}

inline void check_shape(const DnlsState& s, const DnlsParams& p) {
  if (s.amplitudes.size() != static_cast<std::size_t>(p.N))
    throw ShapeError("state has " + std::to_string(s.amplitudes.size()) +
                     " amplitudes, expected N = " + std::to_string(p.N));
}

namespace detail {

inline void apply_rhs(std::span<const complex> d, std::span<complex> out, double eta, double delta,
                      double ladder0) {
  const std::size_t n = d.size();
  const complex minus_i(0.0, -1.0);
  for (std::size_t j = 0; j < n; ++j) {
    complex h = eta * std::norm(d[j]) * d[j] + (ladder0 + delta * static_cast<double>(j)) * d[j];
    if (j > 0) h -= d[j - 1];
    if (j + 1 < n) h -= d[j + 1];
    out[j] = minus_i * h;
  }
}

// Ladder value at site l = 1 in the frame used by RK4.
inline double frame_ladder0(const DnlsParams& p) {
  if (p.frame == LadderFrame::as_printed) return p.delta + p.ladder_offset;
  return p.delta * (1.0 - 0.5 * (p.N + 1));
}

inline double frame_shift(const DnlsParams& p) {
  return p.frame == LadderFrame::as_printed ? 0.0 : 0.5 * (p.N + 1) * p.delta + p.ladder_offset;
}

}  // namespace detail

/// d' for the printed equation.
inline std::vector<complex> rhs(const DnlsState& s, const DnlsParams& p) {
  validate(p);
  check_shape(s, p);
  std::vector<complex> out(s.amplitudes.size());
  detail::apply_rhs(s.amplitudes, out, p.eta, p.delta, p.delta + p.ladder_offset);
  return out;
}

/// -sum 2 Re(conj(d_l) d_{l+1}) + eta/2 sum |d_l|^4 + sum (l delta + c) |d_l|^2.
inline double energy(const DnlsState& s, const DnlsParams& p) {
  validate(p);
  check_shape(s, p);
  NeumaierSum e;
  const auto& d = s.amplitudes;
  for (std::size_t j = 0; j < d.size(); ++j) {
    const double rho = std::norm(d[j]);
    e.add(0.5 * p.eta * rho * rho);
    e.add((p.delta * static_cast<double>(j + 1) + p.ladder_offset) * rho);
    if (j + 1 < d.size()) e.add(-2.0 * std::real(std::conj(d[j]) * d[j + 1]));
  }
  return e.value();
}

/// Reusable RK4 stage storage so long runs do not allocate per step.
class Stepper {
 public:
  explicit Stepper(const DnlsParams& p) : p_(p) {
    validate(p_);
    const auto n = static_cast<std::size_t>(p_.N);
    k1_.resize(n);
    k2_.resize(n);
    k3_.resize(n);
    k4_.resize(n);
    tmp_.resize(n);
    ladder0_ = detail::frame_ladder0(p_);
    shift_ = detail::frame_shift(p_);
  }

  const DnlsParams& params() const { return p_; }

  void step(DnlsState& s, double dtau) {
    if (!(dtau > 0.0) || dtau > max_dtau)
      throw DomainError("dtau must lie in (0, " + std::to_string(max_dtau) + "]");
    check_shape(s, p_);
    auto& d = s.amplitudes;
    const std::size_t n = d.size();
    const double h = dtau;
    detail::apply_rhs(d, k1_, p_.eta, p_.delta, ladder0_);
    for (std::size_t j = 0; j < n; ++j) tmp_[j] = d[j] + 0.5 * h * k1_[j];
    detail::apply_rhs(tmp_, k2_, p_.eta, p_.delta, ladder0_);
    for (std::size_t j = 0; j < n; ++j) tmp_[j] = d[j] + 0.5 * h * k2_[j];
    detail::apply_rhs(tmp_, k3_, p_.eta, p_.delta, ladder0_);
    for (std::size_t j = 0; j < n; ++j) tmp_[j] = d[j] + h * k3_[j];
    detail::apply_rhs(tmp_, k4_, p_.eta, p_.delta, ladder0_);
    const complex phase = shift_ == 0.0 ? complex(1.0) : std::polar(1.0, -shift_ * h);
    bool finite = true;
    for (std::size_t j = 0; j < n; ++j) {
      d[j] += (h / 6.0) * (k1_[j] + 2.0 * k2_[j] + 2.0 * k3_[j] + k4_[j]);
      d[j] *= phase;
      finite = finite && std::isfinite(d[j].real()) && std::isfinite(d[j].imag());
    }
    s.tau += h;
    if (!finite)
      throw DivergenceError("DNLS amplitudes became non-finite at tau = " + std::to_string(s.tau), s.tau);
  }

 private:
  DnlsParams p_;
  double ladder0_ = 0.0;
  double shift_ = 0.0;
  std::vector<complex> k1_, k2_, k3_, k4_, tmp_;
};

/// One RK4 step; returns the advanced state.
inline DnlsState step(DnlsState s, const DnlsParams& p, double dtau) {
  Stepper(p).step(s, dtau);
  return s;
}

/// Sum (l - l_ref) |d_l|^2 in units of b, l = 1..N.
inline double center_of_mass(std::span<const complex> d, double reference_site) {
  NeumaierSum s;
  for (std::size_t j = 0; j < d.size(); ++j)
    s.add((static_cast<double>(j + 1) - reference_site) * std::norm(d[j]));
  return s.value();
}

/// Centre of mass relative to the middle of the chain, (N+1)/2.
inline double center_of_mass(const DnlsState& s) {
  return center_of_mass(s.amplitudes, 0.5 * (static_cast<double>(s.amplitudes.size()) + 1.0));
}

inline double center_of_mass(const DnlsState& s, double reference_site) {
  return center_of_mass(s.amplitudes, reference_site);
}

/// Uniformly sampled observables of a DNLS run.
struct Trajectory {
  std::vector<double> taus;
  std::vector<double> com;
  std::vector<double> norms;
  std::vector<double> energies;
  std::vector<std::vector<complex>> states;  // filled only when requested
  double com_reference = 0.0;
  DnlsState final_state;

  std::size_t size() const { return taus.size(); }
  double sample_spacing() const { return taus.size() > 1 ? taus[1] - taus[0] : 0.0; }
};

struct EvolveOptions {
  bool record_states = false;
  std::optional<double> com_reference;  // default (N+1)/2
};

/// Advances state0 to tau_end with fixed dtau, sampling every `sample_every`
/// steps (the initial state is sample 0). The step count is
/// round(tau_end / dtau); tau_end must be a whole number of steps to 1e-9.
inline Trajectory evolve(const DnlsState& state0, const DnlsParams& p, double tau_end,
                         double dtau = default_dtau, std::size_t sample_every = 1,
                         const EvolveOptions& opt = {}) {
  validate(p);
  check_shape(state0, p);
  if (!(tau_end > 0.0)) throw DomainError("tau_end must be positive");
  if (!(dtau > 0.0) || dtau > max_dtau) throw DomainError("dtau out of range");
  if (sample_every == 0) throw DomainError("sample_every must be positive");
  const double steps_real = tau_end / dtau;
  const auto steps = static_cast<std::size_t>(std::llround(steps_real));
  if (steps == 0 || std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * std::max(1.0, steps_real))
    throw DomainError("tau_end must be a positive multiple of dtau");

  Trajectory tr;
  tr.com_reference = opt.com_reference.value_or(0.5 * (p.N + 1));
  const std::size_t samples = steps / sample_every + 1;
  tr.taus.reserve(samples);
  tr.com.reserve(samples);
  tr.norms.reserve(samples);
  tr.energies.reserve(samples);

  DnlsState s = state0;
  const double tau0 = s.tau;
  auto record = [&](std::size_t i) {
    tr.taus.push_back(tau0 + static_cast<double>(i) * dtau);
    tr.com.push_back(center_of_mass(s.amplitudes, tr.com_reference));
    tr.norms.push_back(s.norm_squared());
    tr.energies.push_back(energy(s, p));
    if (opt.record_states) tr.states.push_back(s.amplitudes);
  };
  record(0);
  Stepper stepper(p);
  for (std::size_t i = 1; i <= steps; ++i) {
    stepper.step(s, dtau);
    if (i % sample_every == 0) record(i);
  }
  s.tau = tau0 + static_cast<double>(steps) * dtau;
  tr.final_state = std::move(s);
  return tr;
}

/// Bloch period 2 pi / delta in dimensionless time.
inline double bloch_period(double delta) {
  if (delta == 0.0 || !std::isfinite(delta)) throw DomainError("delta must be nonzero");
  return 2.0 * std::numbers::pi / std::abs(delta);
}

}  // namespace blochsim::dnls
