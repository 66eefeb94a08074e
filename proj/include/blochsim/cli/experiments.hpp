#pragma once

// Named experiments behind the blochsim command line. Each experiment reads
// its keys from a Config, computes everything in memory and returns the
// artifacts; nothing touches the disk until the whole run has succeeded.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "blochsim/cli/config.hpp"
#include "blochsim/cli/csv.hpp"
#include "blochsim/continuum.hpp"
#include "blochsim/dnls.hpp"
#include "blochsim/error.hpp"
#include "blochsim/initial_states.hpp"
#include "blochsim/mathieu.hpp"
#include "blochsim/observables.hpp"
#include "blochsim/semiclassical.hpp"
#include "blochsim/units.hpp"

namespace blochsim::cli {

inline constexpr const char* version = "1.0.0";

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"bands",      "wannier-overlap", "breathing",     "symmetric",
                                              "asymmetric", "eta-sweep",       "oracle-compare"};
  return names;
}

struct Artifact {
  std::string name;
  std::string content;
};

struct RunSummary {
  using Entry = std::pair<std::string, std::string>;
  std::string experiment;
  std::vector<Entry> inputs;
  std::vector<Entry> results;
  std::vector<std::string> artifacts;
  std::vector<Entry> meta;

  std::optional<std::string> get(const std::string& key) const {
    for (const auto* list : {&results, &inputs, &meta})
      for (const auto& [k, v] : *list)
        if (k == key) return v;
    return std::nullopt;
  }
  double number(const std::string& key) const {
    const auto v = get(key);
    if (!v) throw AnalysisError("summary has no entry '" + key + "'");
    return std::strtod(v->c_str(), nullptr);
  }

  std::string text() const {
    std::ostringstream os;
    auto block = [&](const char* title, const std::vector<Entry>& entries) {
      os << title << "\n";
      std::size_t w = 0;
      for (const auto& e : entries) w = std::max(w, e.first.size());
      for (const auto& [k, v] : entries) os << "  " << k << std::string(w - k.size() + 2, ' ') << v << "\n";
    };
    os << "blochsim " << version << ": " << experiment << "\n\n";
    block("inputs", inputs);
    os << "\n";
    block("results", results);
    os << "\nartifacts\n";
    for (const auto& a : artifacts) os << "  " << a << "\n";
    os << "\n";
    block("meta", meta);
    return os.str();
  }

  std::string key_values() const {
    std::ostringstream os;
    os << "experiment=" << experiment << "\n";
    for (const auto& [k, v] : inputs) os << "input." << k << "=" << v << "\n";
    for (const auto& [k, v] : results) os << "result." << k << "=" << v << "\n";
    for (std::size_t i = 0; i < artifacts.size(); ++i) os << "artifact." << i << "=" << artifacts[i] << "\n";
    for (const auto& [k, v] : meta) os << "meta." << k << "=" << v << "\n";
    return os.str();
  }
};

struct RunOptions {
  std::optional<std::string> output_dir;
  unsigned jobs = 0;
};

struct RunResult {
  RunSummary summary;
  std::vector<Artifact> artifacts;
  std::filesystem::path output_dir;
};

namespace detail {

class Recorder {
 public:
  explicit Recorder(RunResult& r) : r_(r) {}

  void input(const std::string& k, double v) { r_.summary.inputs.emplace_back(k, format_number(v)); }
  void input(const std::string& k, const std::string& v) { r_.summary.inputs.emplace_back(k, v); }
  void result(const std::string& k, double v) { r_.summary.results.emplace_back(k, format_number(v)); }
  void result(const std::string& k, const std::string& v) { r_.summary.results.emplace_back(k, v); }
  void meta(const std::string& k, double v) { r_.summary.meta.emplace_back(k, format_number(v)); }
  void meta(const std::string& k, const std::string& v) { r_.summary.meta.emplace_back(k, v); }
  void artifact(const std::string& name, const CsvTable& t) {
    r_.artifacts.push_back({name, t.text()});
    r_.summary.artifacts.push_back(name);
  }

 private:
  RunResult& r_;
};

inline std::string depth_tag(double depth) {
  std::ostringstream os;
  os << depth;
  std::string s = os.str();
  std::replace(s.begin(), s.end(), '.', 'p');
  return "L" + s;
}

inline units::PhysicalParams physical(const Config& c, Recorder& rec) {
  units::PhysicalParams p;
  const double mass_au = c.positive("physical.mass_au", 87.91);
  p.mass = units::mass_from_atomic_units(mass_au);
  p.g = c.positive("physical.g", 9.807);
  p.wavelength = c.positive("physical.wavelength", 532e-9);
  p.depth = c.positive("physical.depth", 10.0);
  const double n_atoms = c.positive("physical.n_atoms", 1e6);
  const double a_s = c.number("physical.scattering_length_a0", 13.0);
  const double d_perp = c.positive("physical.d_perp", 180e-6);
  p.gamma = units::one_dimensional_coupling(n_atoms, a_s * units::constants::bohr_radius, d_perp, p.mass);
  rec.input("physical.mass_au", mass_au);
  rec.input("physical.g", p.g);
  rec.input("physical.wavelength", p.wavelength);
  rec.input("physical.depth", p.depth);
  rec.input("physical.n_atoms", n_atoms);
  rec.input("physical.scattering_length_a0", a_s);
  rec.input("physical.d_perp", d_perp);
  return p;
}

inline void record_scales(const units::PhysicalParams& p, Recorder& rec) {
  const auto s = units::derived_scales(p);
  rec.result("scales.recoil_energy_J", s.recoil_energy);
  rec.result("scales.recoil_energy_over_hbar_per_s", s.recoil_energy / p.hbar);
  rec.result("scales.bloch_period_ms", 1e3 * s.bloch_period);
  rec.result("scales.period_m", p.period());
  rec.result("scales.force_N", s.force);
}

struct DnlsSetup {
  dnls::DnlsParams params;
  std::string delta_source, eta_source;
};

/// eta and delta either given directly ([dnls] eta, delta) or derived from the
/// physical inputs with beta = beta_er E_R and the chosen L4 norm.
inline DnlsSetup dnls_setup(const Config& c, Recorder& rec, double default_eta) {
  DnlsSetup s;
  const long N = c.integer("dnls.N", 40);
  if (N < 2) throw ConfigError("dnls.N", "must be at least 2");
  s.params.N = static_cast<int>(N);
  const auto delta = c.optional_number("dnls.delta");
  const auto eta = c.optional_number("dnls.eta");
  const std::string l4 = c.choice("physical.l4_norm", "reported", {"reported", "harmonic"});
  const double beta_er = c.positive("physical.beta_er", 0.065);
  const auto p = physical(c, rec);
  const double er = units::recoil_energy(p);
  const double l4v =
      l4 == "reported"
          ? semiclassical::reported_l4_norm_pow4(p.depth, p.period())
          : semiclassical::l4_norm_pow4(semiclassical::semiclassical_ground(p.depth, p.period()));
  const auto d = units::dimensionless_params(p, beta_er * er, l4v, s.params.N);
  rec.input("physical.beta_er", beta_er);
  rec.input("physical.l4_norm", l4);
  s.params.delta = delta.value_or(d.delta);
  s.delta_source = delta ? "direct" : "physical";
  s.params.eta = eta.value_or(default_eta);
  s.eta_source = eta ? "direct" : "default";
  if (c.choice("dnls.eta_from", "config", {"config", "physical"}) == "physical") {
    if (eta) throw ConfigError("dnls.eta_from", "conflicts with an explicit dnls.eta");
    s.params.eta = d.eta;
    s.eta_source = "physical";
  }
  const std::string frame = c.choice("dnls.frame", "centered", {"centered", "as_printed"});
  s.params.frame = frame == "centered" ? dnls::LadderFrame::centered : dnls::LadderFrame::as_printed;
  rec.input("dnls.N", static_cast<double>(s.params.N));
  rec.input("dnls.delta", s.params.delta);
  rec.input("dnls.delta_source", s.delta_source);
  rec.input("dnls.eta", s.params.eta);
  rec.input("dnls.eta_source", s.eta_source);
  rec.input("dnls.frame", frame);
  rec.result("physical.eta", d.eta);
  rec.result("physical.delta", d.delta);
  record_scales(p, rec);
  return s;
}

inline std::vector<complex> initial_state(const Config& c, Recorder& rec, int N,
                                          const std::string& fallback) {
  const std::string name = c.choice("dnls.initial", fallback, {"table1", "table2", "single-site", "custom"});
  rec.input("dnls.initial", name);
  if (name == "custom") {
    const auto values = c.numbers("dnls.amplitudes", {});
    if (values.empty()) throw ConfigError("dnls.amplitudes", "required for a custom initial state");
    std::vector<complex> v(values.begin(), values.end());
    if (v.size() != static_cast<std::size_t>(N))
      throw ConfigError("dnls.amplitudes", "has " + std::to_string(v.size()) + " entries, expected N");
    return initial_states::custom(v, N);
  }
  if (name == "single-site") {
    const long site = c.integer("dnls.site", N / 2);
    if (site < 1 || site > N) throw ConfigError("dnls.site", "must lie in 1..N");
    rec.input("dnls.site", static_cast<double>(site));
    return initial_states::single_site(N, static_cast<int>(site));
  }
  if (N != initial_states::table_sites) throw ConfigError("dnls.N", name + " requires N = 40");
  return initial_states::builtin(name, N);
}

struct TimeGrid {
  double dtau;
  std::size_t sample_every;
  double n_bloch_periods;
  double tau_end;
};

inline TimeGrid time_grid(const Config& c, Recorder& rec, double tau_B, double default_periods) {
  TimeGrid g;
  g.dtau = c.positive("numerics.dtau", dnls::default_dtau);
  if (g.dtau > dnls::max_dtau) throw ConfigError("numerics.dtau", "must not exceed 0.01");
  g.sample_every = static_cast<std::size_t>(c.positive_integer("numerics.sample_every", 10));
  g.n_bloch_periods = c.positive("numerics.n_bloch_periods", default_periods);
  observables::SweepOptions o;
  o.dtau = g.dtau;
  o.sample_every = g.sample_every;
  o.n_bloch_periods = g.n_bloch_periods;
  g.tau_end = observables::sweep_run_length(tau_B, o);
  rec.input("numerics.dtau", g.dtau);
  rec.input("numerics.sample_every", static_cast<double>(g.sample_every));
  rec.input("numerics.n_bloch_periods", g.n_bloch_periods);
  rec.input("numerics.tau_end", g.tau_end);
  return g;
}

inline CsvTable trajectory_table(const dnls::Trajectory& tr) {
  CsvTable t({"tau", "com_in_b", "norm", "energy"});
  for (std::size_t i = 0; i < tr.size(); ++i) t.row(tr.taus[i], tr.com[i], tr.norms[i], tr.energies[i]);
  return t;
}

inline CsvTable state_table(const std::vector<complex>& d) {
  CsvTable t({"ell", "re", "im"});
  for (std::size_t i = 0; i < d.size(); ++i) t.row(i + 1, d[i].real(), d[i].imag());
  return t;
}

inline void record_conservation(const dnls::Trajectory& tr, Recorder& rec) {
  double dn = 0.0, de = 0.0;
  const double e0 = tr.energies.front();
  for (std::size_t i = 0; i < tr.size(); ++i) {
    dn = std::max(dn, std::abs(tr.norms[i] - tr.norms.front()));
    de = std::max(de, std::abs(tr.energies[i] - e0) / std::max(std::abs(e0), 1e-300));
  }
  rec.result("norm_drift", dn);
  rec.result("energy_drift_rel", de);
}

// ---------------------------------------------------------------- experiments

using Plan = std::function<void()>;

inline Plan run_bands(const Config& c, Recorder& rec, unsigned) {
  const auto depths = c.numbers("bands.depths", {3.0, 10.0});
  const long n_max = c.positive_integer("bands.n_max", 3);
  const long k_samples = c.positive_integer("bands.k_samples", 65);
  if (k_samples < 2) throw ConfigError("bands.k_samples", "must be at least 2");
  const std::string conv = c.choice("bands.convention", "tabulated", {"tabulated", "literal"});
  const auto p = physical(c, rec);
  for (double d : depths)
    if (!(d >= 0.0)) throw ConfigError("bands.depths", "depths must be nonnegative");
  rec.input("bands.depths", [&] {
    std::string s;
    for (double d : depths) s += (s.empty() ? "" : ", ") + format_number(d);
    return s;
  }());
  rec.input("bands.n_max", static_cast<double>(n_max));
  rec.input("bands.k_samples", static_cast<double>(k_samples));
  rec.input("bands.convention", conv);
  const auto convention =
      conv == "tabulated" ? mathieu::DepthConvention::tabulated : mathieu::DepthConvention::literal;
  return [=, &rec] {
    CsvTable edges({"depth", "n", "bottom_ER", "top_ER", "width_ER", "gap_above_ER"});
    CsvTable functions({"depth", "n", "k_b_over_pi", "energy_ER"});
    record_scales(p, rec);
    const auto scales = units::derived_scales(p);
    for (double depth : depths) {
      const auto prob = mathieu::MathieuProblem::optical_lattice(depth, convention);
      const auto bands = mathieu::band_edges(prob, static_cast<int>(n_max));
      const std::string tag = depth_tag(depth);
      for (const auto& b : bands) {
        edges.row(depth, b.n, b.bottom, b.top, b.width, b.gap_above);
        const std::string k = tag + ".band" + std::to_string(b.n);
        rec.result(k + ".bottom_ER", b.bottom);
        rec.result(k + ".top_ER", b.top);
        const auto f = mathieu::band_function(prob, b, static_cast<int>(k_samples));
        for (const auto& s : f.samples)
          functions.row(depth, b.n, s.k * prob.period / std::numbers::pi, s.energy);
      }
      rec.result(tag + ".B1_ER", bands.front().width);
      rec.result(tag + ".g1_ER", bands.front().gap_above);
      const double range = units::oscillation_range(bands.front().width * scales.recoil_energy, scales.force);
      rec.result(tag + ".range_over_b", range / p.period());
    }
    rec.artifact("bands.csv", edges);
    rec.artifact("band_functions.csv", functions);
  };
}

inline Plan run_wannier_overlap(const Config& c, Recorder& rec, unsigned jobs) {
  const auto depths = c.numbers("wannier.depths", {3.0, 10.0});
  const double half = c.positive("wannier.half_width_b", 4.0);
  const long points = c.positive_integer("wannier.points", 1025);
  const long k_samples = c.positive_integer("wannier.k_samples", 257);
  if (k_samples % 2 == 0) throw ConfigError("wannier.k_samples", "must be odd");
  if (points < 3) throw ConfigError("wannier.points", "must be at least 3");
  for (double d : depths)
    if (!(d > 0.0)) throw ConfigError("wannier.depths", "depths must be positive");
  rec.input("wannier.half_width_b", half);
  rec.input("wannier.points", static_cast<double>(points));
  rec.input("wannier.k_samples", static_cast<double>(k_samples));
  const auto grid = GridSpec::symmetric(half, static_cast<std::size_t>(points));
  mathieu::WannierOptions wo;
  wo.k_samples = static_cast<int>(k_samples);
  wo.jobs = jobs;
  return [=, &rec] {
    for (double depth : depths) {
      const std::string tag = depth_tag(depth);
      const auto w = mathieu::wannier_first_band(mathieu::MathieuProblem::optical_lattice(depth), grid, wo);
      const auto g = semiclassical::semiclassical_ground(depth, 1.0);
      const auto gs = g.sample(grid);
      CsvTable t({"x_over_b", "wannier", "semiclassical"});
      for (std::size_t i = 0; i < grid.points; ++i) t.row(grid.x(i), w.values[i], gs.values[i]);
      rec.artifact("wannier_" + tag + ".csv", t);
      rec.result(tag + ".distance", semiclassical::overlap_distance(w, gs));
      rec.result(tag + ".l4_semiclassical_closed_form", semiclassical::l4_norm_pow4(g));
      rec.result(tag + ".l4_semiclassical_quadrature", gs.lp_norm_pow(4.0));
      rec.result(tag + ".l4_reported", semiclassical::reported_l4_norm_pow4(depth, 1.0));
      rec.result(tag + ".l4_wannier", w.lp_norm_pow(4.0));
    }
    rec.meta("length_unit", "b");
  };
}

inline Plan run_single(const Config& c, Recorder& rec, const std::string& fallback_state,
                       double default_periods, bool period_analysis) {
  const auto setup = dnls_setup(c, rec, 0.2);
  const auto& p = setup.params;
  const auto d0 = initial_state(c, rec, p.N, fallback_state);
  const double tau_B = dnls::bloch_period(p.delta);
  const auto tg = time_grid(c, rec, tau_B, default_periods);
  const double ref = c.number("dnls.com_reference", 0.5 * p.N);
  rec.input("dnls.com_reference", ref);
  long n_osc = 0, window = 0;
  if (period_analysis) {
    n_osc = c.positive_integer("numerics.n_osc", 14);
    window = c.positive_integer("numerics.extremum_window", observables::default_window);
    rec.input("numerics.n_osc", static_cast<double>(n_osc));
    rec.input("numerics.extremum_window", static_cast<double>(window));
  }
  return [=, &rec] {
    dnls::EvolveOptions eo;
    eo.com_reference = ref;
    const auto tr = dnls::evolve({d0, 0.0}, p, tg.tau_end, tg.dtau, tg.sample_every, eo);
    rec.artifact("trajectory.csv", trajectory_table(tr));
    rec.artifact("state_final.csv", state_table(tr.final_state.amplitudes));
    rec.result("tau_B", tau_B);
    rec.result("max_abs_com", observables::max_abs_com(tr));
    rec.result("com_range", observables::oscillation_range(tr));
    record_conservation(tr, rec);
    if (period_analysis) {
      const auto e = observables::pseudo_period_stats(tr, static_cast<std::size_t>(n_osc), tau_B,
                                                      static_cast<std::size_t>(window));
      CsvTable t({"kind", "index", "tau"});
      for (std::size_t i = 0; i < e.maxima.size(); ++i) t.row("max", i, e.maxima[i]);
      for (std::size_t i = 0; i < e.minima.size(); ++i) t.row("min", i, e.minima[i]);
      rec.artifact("extrema.csv", t);
      rec.result("mean_period", e.mean_period);
      rec.result("mean_period_over_tauB", e.period_over_tau_B());
      rec.result("rel_dev", e.rel_dev);
      rec.result("mean_period_minima", e.mean_period_minima);
      rec.result("n_maxima", static_cast<double>(e.maxima.size()));
    }
  };
}

inline Plan run_breathing(const Config& c, Recorder& rec, unsigned) {
  if (c.string("dnls.initial", "single-site") != "single-site")
    throw ConfigError("dnls.initial", "the breathing experiment starts on a single site");
  rec.meta("breathing_tolerance_b", 0.05);
  return run_single(c, rec, "single-site", 14.0, false);
}

inline Plan run_eta_sweep(const Config& c, Recorder& rec, unsigned jobs) {
  const auto setup = dnls_setup(c, rec, 0.0);
  if (setup.eta_source != "default") throw ConfigError("dnls.eta", "the sweep sets eta itself; use sweep.*");
  const auto& p = setup.params;
  const auto d0 = initial_state(c, rec, p.N, "table1");
  const double tau_B = dnls::bloch_period(p.delta);
  std::vector<double> etas;
  if (c.has("sweep.etas")) {
    etas = c.numbers("sweep.etas", {});
  } else {
    const double lo = c.number("sweep.eta_min", -0.1);
    const double hi = c.number("sweep.eta_max", 0.2);
    const long n = c.positive_integer("sweep.eta_points", 31);
    if (!(hi > lo)) throw ConfigError("sweep.eta_max", "must exceed sweep.eta_min");
    if (n < 2) throw ConfigError("sweep.eta_points", "must be at least 2");
    etas = observables::uniform_etas(lo, hi, static_cast<std::size_t>(n));
    rec.input("sweep.eta_min", lo);
    rec.input("sweep.eta_max", hi);
  }
  for (double e : etas)
    if (!(std::abs(e) <= 0.5)) throw ConfigError("sweep.etas", "values must lie in [-0.5, 0.5]");
  rec.input("sweep.eta_points", static_cast<double>(etas.size()));
  const auto tg = time_grid(c, rec, tau_B, 16.0);
  const long n_osc = c.positive_integer("numerics.n_osc", 14);
  const long window = c.positive_integer("numerics.extremum_window", observables::default_window);
  const double ref = c.number("dnls.com_reference", 0.5 * p.N);
  rec.input("numerics.n_osc", static_cast<double>(n_osc));
  rec.input("numerics.extremum_window", static_cast<double>(window));
  rec.input("dnls.com_reference", ref);
  observables::SweepOptions o;
  o.dtau = tg.dtau;
  o.sample_every = tg.sample_every;
  o.n_bloch_periods = tg.n_bloch_periods;
  o.window = static_cast<std::size_t>(window);
  o.com_reference = ref;
  o.jobs = jobs;
  return [=, &rec] {
    const auto entries = observables::eta_sweep(p, {d0, 0.0}, etas, static_cast<std::size_t>(n_osc), o);
    CsvTable t({"eta", "mean_period_over_tauB", "rel_dev", "n_extrema"});
    std::size_t failures = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      if (e.estimate) {
        t.row(e.eta, e.estimate->period_over_tau_B(), e.estimate->rel_dev, e.estimate->maxima.size());
      } else {
        t.row(e.eta, std::nan(""), std::nan(""), std::size_t{0});
        rec.result("failure." + std::to_string(i), e.error);
        ++failures;
      }
    }
    rec.artifact("sweep.csv", t);
    const auto s = observables::summarize(entries);
    rec.result("tau_B", tau_B);
    rec.result("max_rel_dev", s.max_rel_dev);
    rec.result("spread", s.spread);
    rec.result("failures", static_cast<double>(failures));
    rec.meta("statistic", "max_rel_dev = max over eta of |mean maxima gap - tau_B| / tau_B");
  };
}

inline Plan run_oracle_compare(const Config& c, Recorder& rec, unsigned) {
  const auto p = physical(c, rec);
  const double beta_er = c.positive("physical.beta_er", 0.065);
  const auto d = units::dimensionless_params(p, beta_er * units::recoil_energy(p), 1.0, 2);
  const auto lambdas = c.numbers("oracle.lambdas", {6.0, 10.0, 14.0});
  for (double l : lambdas)
    if (!(l > 0.0)) throw ConfigError("oracle.lambdas", "must be positive");
  continuum::ContinuumConfig base;
  base.F = c.number("oracle.F", d.F);
  base.zeta = c.number("oracle.zeta", d.zeta);
  base.N_wells = static_cast<int>(c.positive_integer("oracle.N_wells", 9));
  base.n_grid = static_cast<std::size_t>(c.positive_integer("oracle.n_grid", 4096));
  base.dt = c.positive("oracle.dt", 1e-4);
  base.box_half_width = c.positive("oracle.box_half_width_b", 20.0) * continuum::lattice_period;
  base.sample_every = static_cast<std::size_t>(c.positive_integer("oracle.sample_every", 100));
  if (auto L = c.optional_number("oracle.L_clip_b")) base.L_clip = *L * continuum::lattice_period;
  const double periods = c.positive("oracle.n_bloch_periods", 1.0);
  const double width = c.positive("oracle.initial_width", 1.5);
  const double threshold =
      c.positive("oracle.remainder_threshold", continuum::calibrated_remainder_threshold);
  continuum::OracleOptions oo;
  oo.basis.support_radius = c.positive("oracle.support_radius_b", 4.0) * continuum::lattice_period;
  if (base.F == 0.0) throw ConfigError("oracle.F", "must be nonzero to define a Bloch period");
  rec.input("oracle.F", base.F);
  rec.input("oracle.zeta", base.zeta);
  rec.input("oracle.N_wells", static_cast<double>(base.N_wells));
  rec.input("oracle.n_grid", static_cast<double>(base.n_grid));
  rec.input("oracle.dt", base.dt);
  rec.input("oracle.box_half_width_b", base.box_half_width / continuum::lattice_period);
  rec.input("oracle.L_clip_b", base.clip() / continuum::lattice_period);
  rec.input("oracle.sample_every", static_cast<double>(base.sample_every));
  rec.input("oracle.n_bloch_periods", periods);
  rec.input("oracle.initial_width", width);
  rec.input("oracle.support_radius_b", oo.basis.support_radius / continuum::lattice_period);
  rec.input("oracle.remainder_threshold", threshold);

  std::vector<complex> c0(static_cast<std::size_t>(base.N_wells));
  const double mid = 0.5 * (base.N_wells + 1);
  for (int l = 1; l <= base.N_wells; ++l)
    c0[l - 1] = std::exp(-0.5 * (l - mid) * (l - mid) / (width * width));
  const double block = base.dt * static_cast<double>(base.sample_every);
  const double t_end = std::max(1.0, std::round(periods / std::abs(base.F) / block)) * block;
  rec.input("oracle.t_end", t_end);
  for (double lambda : lambdas) {
    auto cfg = base;
    cfg.epsilon = 1.0 / std::sqrt(lambda);
    continuum::validate(cfg);
  }
  return [=, &rec] {
    std::vector<double> worst;
    bool below = true;
    for (double lambda : lambdas) {
      auto cfg = base;
      cfg.epsilon = 1.0 / std::sqrt(lambda);
      continuum::validate(cfg);
      const auto run = continuum::run_oracle(cfg, c0, t_end, oo);
      const std::string tag = depth_tag(lambda);
      CsvTable t({"tau", "max_coeff_error", "remainder_norm"});
      for (std::size_t k = 0; k < run.errors.taus.size(); ++k)
        t.row(run.errors.taus[k], run.errors.max_coeff_error[k], run.errors.remainder_norm[k]);
      rec.artifact("comparison_" + tag + ".csv", t);
      const auto psi = continuum::synthesize(run.basis, run.continuum_coeffs.coeffs.back());
      CsvTable snap({"x", "re", "im", "abs2"});
      for (std::size_t i = 0; i < psi.psi.size(); ++i) {
        const auto v = psi.psi.values[i];
        snap.row(psi.psi.x(i), v.real(), v.imag(), std::norm(v));
      }
      rec.artifact("projected_final_" + tag + ".csv", snap);
      const auto& tr = run.continuum;
      double de = 0.0, dn = 0.0;
      for (std::size_t k = 0; k < tr.size(); ++k) {
        de = std::max(de, std::abs(tr.energies[k] - tr.energies[0]) / std::abs(tr.energies[0]));
        dn = std::max(dn, std::abs(tr.norms[k] - tr.norms[0]));
      }
      rec.result(tag + ".beta", run.reduced.beta);
      rec.result(tag + ".delta", run.reduced.dnls.delta);
      rec.result(tag + ".eta", run.reduced.dnls.eta);
      rec.result(tag + ".gram_deviation", run.gram_deviation);
      rec.result(tag + ".max_coeff_error", run.errors.max_error());
      rec.result(tag + ".max_remainder", run.errors.max_remainder());
      rec.result(tag + ".continuum_energy_drift_rel", de);
      rec.result(tag + ".continuum_norm_drift", dn);
      worst.push_back(run.errors.max_error());
      below = below && run.errors.max_remainder() <= threshold;
    }
    bool monotone = true;
    for (std::size_t i = 1; i < worst.size(); ++i) monotone = monotone && worst[i] < worst[i - 1];
    rec.result("monotone_decrease", monotone ? "yes" : "no");
    rec.result("remainder_below_threshold", below ? "yes" : "no");
    rec.meta("phase_alignment", "phi = arg <d, c> per sample");
    rec.meta("lambda_order", "as listed in oracle.lambdas");
  };
}

}  // namespace detail

/// Runs the experiment named in `c` without touching the file system.
inline RunResult run_config(const Config& c, const RunOptions& opt = {}) {
  if (c.empty()) throw ConfigError("experiment", "config file is empty");
  RunResult r;
  detail::Recorder rec(r);
  const std::string name = c.choice("experiment", "", experiment_names());
  r.summary.experiment = name;
  const std::string out = opt.output_dir.value_or(c.string("output_dir", "out/" + name));
  r.output_dir = out;

  // Runners read and validate every key and return the computation, so a bad
  // or unknown key fails before any heavy work starts.
  using Runner = detail::Plan (*)(const Config&, detail::Recorder&, unsigned);
  Runner runner = nullptr;
  if (name == "bands") runner = detail::run_bands;
  if (name == "wannier-overlap") runner = detail::run_wannier_overlap;
  if (name == "breathing") runner = detail::run_breathing;
  if (name == "symmetric")
    runner = [](const Config& cc, detail::Recorder& rr, unsigned) {
      return detail::run_single(cc, rr, "table1", 16.0, true);
    };
  if (name == "asymmetric")
    runner = [](const Config& cc, detail::Recorder& rr, unsigned) {
      return detail::run_single(cc, rr, "table2", 16.0, true);
    };
  if (name == "eta-sweep") runner = detail::run_eta_sweep;
  if (name == "oracle-compare") runner = detail::run_oracle_compare;
  const auto plan = runner(c, rec, opt.jobs);
  c.reject_unused();
  plan();

  rec.meta("version", version);
  rec.meta("csv_precision_digits", 17.0);
  rec.meta("dnls_integrator", "RK4, fixed step");
  rec.meta("mathieu_integrator", "Runge-Kutta-Fehlberg 7(8), rtol 1e-13");
  rec.meta("extremum_refinement", "parabola through 3 samples");
  return r;
}

/// Writes artifacts, summary.txt and summary.kv into r.output_dir.
inline void write_outputs(const RunResult& r) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(r.output_dir, ec);
  if (ec) throw ConfigError("output_dir", "cannot create '" + r.output_dir.string() + "': " + ec.message());
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream f(r.output_dir / name, std::ios::binary | std::ios::trunc);
    f << content;
    if (!f) throw ConfigError("output_dir", "cannot write '" + (r.output_dir / name).string() + "'");
  };
  for (const auto& a : r.artifacts) write(a.name, a.content);
  write("summary.txt", r.summary.text());
  write("summary.kv", r.summary.key_values());
}

/// Loads, runs and writes; on any error nothing is written.
inline RunResult run(const std::string& config_path, const RunOptions& opt = {}) {
  const auto c = Config::load(config_path);
  auto r = run_config(c, opt);
  write_outputs(r);
  return r;
}

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_config = 2,
  exit_divergence = 3,
  exit_analysis = 4
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const ShapeError*>(&e))
    return exit_config;
  if (dynamic_cast<const DivergenceError*>(&e) || dynamic_cast<const SolverError*>(&e) ||
      dynamic_cast<const IntegrationError*>(&e))
    return exit_divergence;
  if (dynamic_cast<const AnalysisError*>(&e) || dynamic_cast<const SearchError*>(&e) ||
      dynamic_cast<const BasisError*>(&e) || dynamic_cast<const AlignmentError*>(&e))
    return exit_analysis;
  return exit_failure;
}

}  // namespace blochsim::cli
