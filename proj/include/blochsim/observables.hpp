#pragma once

// Extremum detection on the centre-of-mass signal, pseudo-period statistics
// and eta sweeps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blochsim/dnls.hpp"
#include "blochsim/error.hpp"
#include "blochsim/grid.hpp"
#include "blochsim/parallel.hpp"

namespace blochsim::observables {

using dnls::center_of_mass;
using dnls::Trajectory;

enum class ExtremumKind { max, min };

inline constexpr std::size_t default_window = 5;

/// Times of strict local extrema of y over a +-window neighbourhood, each
/// refined by the vertex of the parabola through its two neighbours.
/// Samples must be uniform in t.
inline std::vector<double> detect_extrema(std::span<const double> t, std::span<const double> y,
                                          ExtremumKind kind, std::size_t window = default_window) {
  if (t.size() != y.size()) throw ShapeError("detect_extrema: time and value series differ in length");
  if (window == 0) throw DomainError("extremum window must be positive");
  std::vector<double> out;
  if (y.size() < 3 || y.size() <= 2 * window) return out;
  const double sign = kind == ExtremumKind::max ? 1.0 : -1.0;
  const double h = t[1] - t[0];
  for (std::size_t i = window; i + window < y.size(); ++i) {
    const double yi = sign * y[i];
    bool strict = true;
    for (std::size_t j = i - window; j <= i + window && strict; ++j)
      if (j != i && !(yi > sign * y[j])) strict = false;
    if (!strict) continue;
    const double ym = sign * y[i - 1], yp = sign * y[i + 1];
    const double curvature = ym - 2.0 * yi + yp;
    double offset = 0.0;
    if (curvature < 0.0) offset = std::clamp(0.5 * (ym - yp) / curvature, -0.5, 0.5);
    out.push_back(t[i] + offset * h);
  }
  return out;
}

inline std::vector<double> detect_extrema(const Trajectory& tr, ExtremumKind kind,
                                          std::size_t window = default_window) {
  return detect_extrema(tr.taus, tr.com, kind, window);
}

struct PeriodEstimate {
  std::vector<double> maxima;
  std::vector<double> minima;
  std::vector<double> pseudo_periods;         // consecutive maxima gaps
  std::vector<double> minima_pseudo_periods;  // consecutive minima gaps
  double mean_period = 0.0;                   // first n_osc maxima gaps
  double mean_period_minima = 0.0;            // first n_osc minima gaps, NaN if too few
  double tau_B = 0.0;
  double rel_dev = 0.0;  // |mean_period - tau_B| / tau_B

  double period_over_tau_B() const { return mean_period / tau_B; }
};

namespace detail {
inline std::vector<double> gaps(const std::vector<double>& ts) {
  std::vector<double> g;
  for (std::size_t i = 1; i < ts.size(); ++i) g.push_back(ts[i] - ts[i - 1]);
  return g;
}
inline double mean_first(const std::vector<double>& v, std::size_t n) {
  NeumaierSum s;
  for (std::size_t i = 0; i < n; ++i) s.add(v[i]);
  return s.value() / static_cast<double>(n);
}
}  // namespace detail

inline PeriodEstimate pseudo_period_stats(std::span<const double> t, std::span<const double> y,
                                          std::size_t n_osc, double tau_B,
                                          std::size_t window = default_window) {
  if (n_osc == 0) throw DomainError("n_osc must be positive");
  if (!(tau_B > 0.0)) throw DomainError("tau_B must be positive");
  PeriodEstimate e;
  e.tau_B = tau_B;
  e.maxima = detect_extrema(t, y, ExtremumKind::max, window);
  e.minima = detect_extrema(t, y, ExtremumKind::min, window);
  if (e.maxima.size() < n_osc + 1)
    throw AnalysisError("found " + std::to_string(e.maxima.size()) + " maxima, need " +
                        std::to_string(n_osc + 1) + " for " + std::to_string(n_osc) + " oscillations");
  e.pseudo_periods = detail::gaps(e.maxima);
  e.minima_pseudo_periods = detail::gaps(e.minima);
  e.mean_period = detail::mean_first(e.pseudo_periods, n_osc);
  e.mean_period_minima = e.minima_pseudo_periods.size() >= n_osc
                             ? detail::mean_first(e.minima_pseudo_periods, n_osc)
                             : std::nan("");
  e.rel_dev = std::abs(e.mean_period - tau_B) / tau_B;
  return e;
}

inline PeriodEstimate pseudo_period_stats(const Trajectory& tr, std::size_t n_osc, double tau_B,
                                          std::size_t window = default_window) {
  return pseudo_period_stats(tr.taus, tr.com, n_osc, tau_B, window);
}

struct SweepOptions {
  double n_bloch_periods = 16.0;  // run length in units of tau_B
  double dtau = dnls::default_dtau;
  std::size_t sample_every = 10;
  std::size_t window = default_window;
  std::optional<double> com_reference;
  unsigned jobs = 0;
};

struct SweepEntry {
  double eta = 0.0;
  std::optional<PeriodEstimate> estimate;
  std::string error;  // set when the run or the analysis failed
};

/// 31 values evenly covering [lo, hi].
inline std::vector<double> uniform_etas(double lo = -0.1, double hi = 0.2, std::size_t count = 31) {
  if (count < 2) throw DomainError("eta grid needs at least two points");
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return v;
}

/// Number of steps giving a run of n_bloch_periods tau_B, rounded up to whole samples.
inline double sweep_run_length(double tau_B, const SweepOptions& opt) {
  const double block = opt.dtau * static_cast<double>(opt.sample_every);
  return std::ceil(opt.n_bloch_periods * tau_B / block) * block;
}

/// One evolve + pseudo_period_stats per eta. Entries are returned in eta
/// order; a failure in one entry is recorded and the sweep continues.
inline std::vector<SweepEntry> eta_sweep(const dnls::DnlsParams& base, const dnls::DnlsState& state0,
                                         std::span<const double> etas, std::size_t n_osc,
                                         const SweepOptions& opt = {}) {
  dnls::validate(base);
  for (double eta : etas)
    if (!(std::abs(eta) <= 0.5)) throw DomainError("eta values must lie in [-0.5, 0.5]");
  const double tau_B = dnls::bloch_period(base.delta);
  const double tau_end = sweep_run_length(tau_B, opt);
  std::vector<SweepEntry> out(etas.size());
  parallel_for(
      etas.size(),
      [&](std::size_t i) {
        out[i].eta = etas[i];
        try {
          dnls::DnlsParams p = base;
          p.eta = etas[i];
          dnls::EvolveOptions eo;
          eo.com_reference = opt.com_reference;
          const auto tr = dnls::evolve(state0, p, tau_end, opt.dtau, opt.sample_every, eo);
          out[i].estimate = pseudo_period_stats(tr, n_osc, tau_B, opt.window);
        } catch (const Error& e) {
          out[i].error = e.what();
        }
      },
      opt.jobs);
  return out;
}

struct SweepSummary {
  std::size_t ok = 0;
  double max_rel_dev = 0.0;
  double spread = 0.0;  // max - min of mean_period / tau_B
};

inline SweepSummary summarize(std::span<const SweepEntry> entries) {
  SweepSummary s;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& e : entries) {
    if (!e.estimate) continue;
    ++s.ok;
    s.max_rel_dev = std::max(s.max_rel_dev, e.estimate->rel_dev);
    lo = std::min(lo, e.estimate->period_over_tau_B());
    hi = std::max(hi, e.estimate->period_over_tau_B());
  }
  if (s.ok == 0) throw AnalysisError("no eta sweep entry produced a period estimate");
  s.spread = hi - lo;
  return s;
}

/// max(com) - min(com).
inline double oscillation_range(const Trajectory& tr) {
  if (tr.com.empty()) throw AnalysisError("empty trajectory");
  const auto [lo, hi] = std::minmax_element(tr.com.begin(), tr.com.end());
  return *hi - *lo;
}

inline double max_abs_com(const Trajectory& tr) {
  double m = 0.0;
  for (double c : tr.com) m = std::max(m, std::abs(c));
  return m;
}

}  // namespace blochsim::observables
