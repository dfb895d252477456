#pragma once

// Run orchestration: the time loop (deposit -> fields -> diagnostics -> push), the radial reference
// loop, and the parameter-sweep study drivers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "deposit.hpp"
#include "diagnostics.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "grid.hpp"
#include "initial_datum.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "particles.hpp"
#include "radial.hpp"
#include "transport.hpp"

namespace vdarwin {

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Everything a step observer may look at. Field pointers are null in modes that do not compute them.
struct StepView {
  int step = 0;
  double t = 0.0;
  const Moments* moments = nullptr;
  const FieldState* fields = nullptr;
  const ParticleEnsemble* ensemble = nullptr;        // 3-D markers (reconstructed shells in radial mode)
  const RadialEnsemble* radial = nullptr;            // radial mode only
  const TimeSeriesRecord* record = nullptr;
};

struct RunOptions {
  std::string output_dir;                          // empty: keep everything in memory only
  bool write_snapshots = true;                     // only used with an output directory
  std::function<void(const StepView&)> observer;  // called once per recorded time level
  const ParticleEnsemble* initial_ensemble = nullptr;  // overrides sampling from f0 when set
};

struct RunResult {
  RunManifest manifest;
  std::vector<TimeSeriesRecord> series;
  std::vector<std::string> snapshot_files;
  std::vector<JacobianReport> jacobian;
  VariationalTracker tracker;
  InitialDatum datum;
  ParticleEnsemble final_ensemble;
  std::size_t radial_reflections = 0;

  bool completed() const { return manifest.termination == TerminationReason::completed; }
};

namespace detail {

inline ParticleEnsemble radial_as_particles(const RadialEnsemble& r) {
  ParticleEnsemble e;
  e.reserve(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) e.push_back(r.position(i), r.momentum(i), r.w[i], 0.0);
  return e;
}

// Largest enclosed-charge field over the shells: the field jumps up just outside each shell radius,
// so the supremum is attained at r -> r_i+ with the charge of all shells up to and including i.
inline double radial_field_sup(const RadialEnsemble& r) {
  std::vector<std::size_t> order(r.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r.r[a] < r.r[b]; });
  double m = 0.0, best = 0.0;
  for (std::size_t i : order) {
    m += r.w[i];
    best = std::max(best, m / (4.0 * std::numbers::pi * r.r[i] * r.r[i]));
  }
  return best;
}

inline void write_step_snapshots(const std::string& dir, int step, const Moments& mo, const FieldState& f,
                                 std::vector<std::string>& files) {
  auto put = [&](const char* name, const GridField& g) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "snap_%06d_%s.vdgf", step, name);
    const std::string path = (std::filesystem::path(dir) / buf).string();
    if (g.values.empty()) return;
    write_snapshot(g, path);
    files.push_back(path);
  };
  put("rho", mo.rho);
  put("e_l", f.e_l);
  put("e_t", f.e_t);
  put("b", f.b);
}

}  // namespace detail

// Runs one simulation. Divergence of the transverse fixed point and marker escape end the run early
// with the termination reason recorded in the manifest; other errors propagate.
inline RunResult run_simulation(const SimConfig& config, const RunOptions& options = {}) {
  validate(config);
  RunLog::instance().drain();
  RunResult res;
  RunManifest& man = res.manifest;
  man.config = config;
  man.start_time = utc_timestamp();
  if (!options.output_dir.empty()) std::filesystem::create_directories(options.output_dir);

  res.datum = build_initial_datum(config);
  man.effective_amplitude = res.datum.delta;
  ParticleEnsemble ens = options.initial_ensemble ? *options.initial_ensemble : sample_particles(res.datum, config);
  man.markers = ens.size();

  const bool solves = config.mode == Mode::darwin || config.mode == Mode::electrostatic;
  std::unique_ptr<FreeSpaceKernel> kernel;
  if (solves) kernel = std::make_unique<FreeSpaceKernel>(config.grid_n, config.box_half_width, config.pad_factor);
  const GridField tmpl(config.box_half_width, config.grid_n, 1, config.pad_factor);
  const double radius = kernel ? kernel->exact_radius() : std::numeric_limits<double>::infinity();

  const bool radial = config.mode == Mode::radial_reference;
  RadialEnsemble shells;
  if (radial) shells = RadialEnsemble::from_particles(ens, config.R0);

  res.tracker = VariationalTracker(radial ? std::vector<std::size_t>{}
                                          : choose_tracked_markers(ens.size(), config.tracked_markers, config.seed));

  const int steps = config.step_count();
  const int cadence = config.snapshot_cadence();
  double q_running = 0.0;
  bool warned_ball = false;
  std::optional<GridField> et_guess;
  double t = 0.0;

  try {
    for (int n = 0; n <= steps; ++n) {
      t = n * config.dt;
      if (radial) ens = detail::radial_as_particles(shells);

      if (kernel && !warned_ball) {
        double rmax = 0.0;
        for (const auto& x : ens.x) rmax = std::max(rmax, norm(x));
        if (rmax > radius) {
          log_warning("markers reached |x| = " + std::to_string(rmax) + " beyond the exactly resolved radius " +
                      std::to_string(radius) + " at t=" + std::to_string(t) + "; fields there are approximate");
          warned_ball = true;
        }
      }

      // Modes without field solves keep the field state empty: its norms are zero and nothing is stored.
      const Moments moments = deposit_moments(ens, tmpl, t, config.mode == Mode::darwin);
      FieldState fields = solves ? solve_fields(moments, ens, *kernel, config.mode, config.fixed_point_tol,
                                                config.fixed_point_max_iter, et_guess ? &*et_guess : nullptr, t)
                                 : FieldState{};
      if (config.mode == Mode::darwin) et_guess = fields.e_t;

      TimeSeriesRecord rec = record_step(moments, fields, ens, t, q_running, radius);
      if (radial) rec.sup_el = detail::radial_field_sup(shells);
      q_running = rec.q_t;
      res.series.push_back(rec);
      man.fixed_point_iters.push_back(fields.fixed_point_iters);

      const bool has_e = solves;
      const bool has_b = config.mode == Mode::darwin;
      GridField e_total, grad_e_total;
      if (has_e) {
        e_total = fields.total_electric();
        grad_e_total = fields.grad_el + fields.grad_et;
      }
      res.tracker.record(ens, t, has_e ? &e_total : nullptr, has_b ? &fields.b : nullptr,
                         has_e ? &grad_e_total : nullptr, has_b ? &fields.grad_b : nullptr);

      if (options.observer) options.observer(StepView{n, t, &moments, &fields, &ens, radial ? &shells : nullptr, &rec});
      if (!options.output_dir.empty() && options.write_snapshots && (n % cadence == 0 || n == steps))
        detail::write_step_snapshots(options.output_dir, n, moments, fields, res.snapshot_files);

      if (n == steps) break;
      if (radial) {
        push_radial(shells, config.dt);
        // Shells carry their own escape check: the reconstructed markers must stay in the box.
        require_inside(radial_positions(shells), tmpl, t + config.dt);
      } else {
        push_markers(ens, has_e ? &e_total : nullptr, has_b ? &fields.b : nullptr, config.dt, t, &tmpl);
      }
    }
  } catch (const FixedPointDivergenceError& e) {
    man.termination = TerminationReason::fixed_point_divergence;
    man.message = std::string(e.what()) + " (t=" + std::to_string(t) + ")";
  } catch (const MarkerEscapeError& e) {
    man.termination = TerminationReason::marker_escape;
    man.message = e.what();
  }

  if (radial) {
    res.radial_reflections = shells.reflections;
    if (shells.reflections > 0)
      log_warning(std::to_string(shells.reflections) + " shell reflections at the origin");
  }
  if (man.termination == TerminationReason::completed && !res.series.empty())
    res.jacobian = res.tracker.reports(config.beta);
  res.final_ensemble = std::move(ens);
  man.warnings = RunLog::instance().drain();
  man.end_time = utc_timestamp();

  if (!options.output_dir.empty()) {
    const std::filesystem::path dir(options.output_dir);
    write_timeseries(res.series, (dir / "timeseries.csv").string());
    write_manifest(man, (dir / "manifest.json").string());
  }
  return res;
}

// ---------------------------------------------------------------------------------------------
// Studies

enum class SweepVariable { amplitude, grid_n, particle_count };

inline const char* to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::amplitude: return "amplitude";
    case SweepVariable::grid_n: return "grid_n";
    case SweepVariable::particle_count: return "particle_count";
  }
  return "unknown";
}

inline SweepVariable parse_sweep_variable(std::string_view s) {
  if (s == "amplitude") return SweepVariable::amplitude;
  if (s == "grid_n") return SweepVariable::grid_n;
  if (s == "particle_count") return SweepVariable::particle_count;
  throw ConfigError("unknown sweep variable '" + std::string(s) + "'");
}

struct StudySpec {
  SimConfig base;
  SweepVariable sweep = SweepVariable::amplitude;
  std::vector<double> values;
  double fit_lo = 0.0;  // 0 selects the default window
  double fit_hi = 0.0;
};

inline SimConfig study_member_config(const StudySpec& spec, double value) {
  SimConfig c = spec.base;
  switch (spec.sweep) {
    case SweepVariable::amplitude: c.amplitude = value; break;
    case SweepVariable::grid_n: c.grid_n = static_cast<int>(std::llround(value)); break;
    case SweepVariable::particle_count: c.particle_count = static_cast<std::int64_t>(std::llround(value)); break;
  }
  return c;
}

inline std::pair<double, double> study_fit_window(const StudySpec& spec) {
  auto w = default_fit_window(spec.base.R0, spec.base.t_end);
  if (spec.fit_lo > 0) w.first = spec.fit_lo;
  if (spec.fit_hi > 0) w.second = spec.fit_hi;
  return w;
}

inline void validate(const StudySpec& spec) {
  if (spec.values.size() < 3) throw ConfigError("a study needs at least 3 sweep values");
  const bool up = spec.values[1] > spec.values[0];
  for (std::size_t i = 1; i < spec.values.size(); ++i)
    if (up ? !(spec.values[i] > spec.values[i - 1]) : !(spec.values[i] < spec.values[i - 1]))
      throw ConfigError("sweep values must be strictly monotone");
  // The bootstrap comparison needs fits that start at t >= 1; reject that before running anything.
  if (!(study_fit_window(spec).first >= 1.0)) throw ConfigError("study fit window must start at t >= 1");
  for (double v : spec.values) validate(study_member_config(spec, v));
}

// Study configuration: the SimConfig keys plus `sweep = <variable>`, `values = v1, v2, ...` and
// optional `fit_lo`, `fit_hi`.
inline StudySpec parse_study(std::istream& in) {
  StudySpec spec;
  bool have_sweep = false, have_values = false;
  for (const auto& [k, v] : parse_key_values(in)) {
    if (k == "sweep") {
      spec.sweep = parse_sweep_variable(v);
      have_sweep = true;
    } else if (k == "values") {
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ',')) spec.values.push_back(detail::parse_number<double>(k, detail::trim(item)));
      have_values = true;
    } else if (k == "fit_lo") {
      spec.fit_lo = detail::parse_number<double>(k, v);
    } else if (k == "fit_hi") {
      spec.fit_hi = detail::parse_number<double>(k, v);
    } else if (!apply_key(spec.base, k, v)) {
      throw ConfigError("unknown study key '" + k + "'");
    }
  }
  if (!have_sweep || !have_values) throw ConfigError("study configuration needs 'sweep' and 'values'");
  validate(spec);
  return spec;
}

inline StudySpec load_study(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open study configuration '" + path + "'");
  return parse_study(in);
}

struct StudyMember {
  double value = 0.0;
  RunManifest manifest;
  std::vector<TimeSeriesRecord> series;
  FreeStreamReport alpha;
  double max_field_sup = 0.0;  // max over the run of sup|E_L| + sup|E_T| + sup|B|
  std::optional<DecayFits> fits;
  std::string fit_error;
};

struct StudyReport {
  StudySpec spec;
  std::vector<StudyMember> members;
  bool all_completed = true;
  std::string failure;  // first member failure, with its manifest
  // Amplitude sweeps.
  bool alpha_decreasing = false;
  bool fields_decreasing = false;
  bool bootstrap_applicable = false;
  BootstrapResult bootstrap;
  // Resolution sweeps: largest spread of the fitted field exponent across members.
  double exponent_spread = 0.0;
  bool passed = false;
};

namespace detail {

// Strict decrease of y along decreasing x (members are ordered by x); all-zero is vacuously monotone.
inline bool strictly_decreasing_with(const std::vector<double>& x, const std::vector<double>& y) {
  if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; })) return true;
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] > x[b]; });
  for (std::size_t i = 1; i < order.size(); ++i)
    if (!(y[order[i]] < y[order[i - 1]])) return false;
  return true;
}

inline std::optional<DecayFits> try_fits(const std::vector<TimeSeriesRecord>& series, double lo, double hi,
                                         std::string& error) {
  try {
    DecayFits f;
    f.fields = fit_decay_exponent(series, select::fields, lo, hi);
    f.gradients = fit_decay_exponent(series, select::gradients, lo, hi);
    return f;
  } catch (const Error& e) {
    error = e.what();
    return std::nullopt;
  }
}

}  // namespace detail

// Runs every member of the sweep and derives the comparisons. For amplitude sweeps: alpha(delta) and
// the maximal field sup-norm must decrease strictly with delta, and the bootstrap check must pass for
// the smallest delta (vacuous when the mode computes no fields). For resolution sweeps the fitted
// field exponents are compared.
inline StudyReport run_study(const StudySpec& spec, const std::function<void(const StudyMember&)>& progress = {}) {
  validate(spec);
  StudyReport rep;
  rep.spec = spec;
  const auto [lo, hi] = study_fit_window(spec);
  for (double v : spec.values) {
    const SimConfig c = study_member_config(spec, v);
    RunResult run = run_simulation(c);
    StudyMember m;
    m.value = v;
    m.manifest = run.manifest;
    m.series = std::move(run.series);
    if (!run.completed()) {
      rep.all_completed = false;
      if (rep.failure.empty())
        rep.failure = "member " + std::string(to_string(spec.sweep)) + "=" + detail::format_double(v) + " terminated (" +
                      to_string(run.manifest.termination) + "): " + to_json(run.manifest).dump(2);
    }
    if (!m.series.empty()) {
      m.alpha = extract_alpha(m.series, c.t_end);
      for (const auto& r : m.series) m.max_field_sup = std::max(m.max_field_sup, r.field_sum());
      if (m.max_field_sup > 0) m.fits = detail::try_fits(m.series, lo, hi, m.fit_error);
    }
    if (progress) progress(m);
    rep.members.push_back(std::move(m));
  }

  if (spec.sweep == SweepVariable::amplitude) {
    std::vector<double> x, a, f;
    for (const auto& m : rep.members) {
      x.push_back(m.value);
      a.push_back(m.alpha.alpha);
      f.push_back(m.max_field_sup);
    }
    rep.alpha_decreasing = detail::strictly_decreasing_with(x, a);
    rep.fields_decreasing = detail::strictly_decreasing_with(x, f);
    const auto smallest = std::min_element(rep.members.begin(), rep.members.end(),
                                           [](const auto& p, const auto& q) { return p.value < q.value; });
    rep.bootstrap_applicable = smallest->max_field_sup > 0;
    bool boot_ok = true;
    if (rep.bootstrap_applicable) {
      if (smallest->fits) {
        rep.bootstrap = check_bootstrap(smallest->alpha, *smallest->fits, lo);
        boot_ok = rep.bootstrap.passed;
      } else {
        boot_ok = false;
      }
    }
    rep.passed = rep.all_completed && rep.alpha_decreasing && rep.fields_decreasing && boot_ok;
  } else {
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    bool all_fit = true;
    for (const auto& m : rep.members) {
      if (!m.fits) {
        all_fit = false;
        continue;
      }
      mn = std::min(mn, m.fits->fields.exponent);
      mx = std::max(mx, m.fits->fields.exponent);
    }
    rep.exponent_spread = all_fit && mx >= mn ? mx - mn : 0.0;
    rep.passed = rep.all_completed;
  }
  return rep;
}

inline StudyReport run_smallness_study(const StudySpec& spec,
                                       const std::function<void(const StudyMember&)>& progress = {}) {
  if (spec.sweep != SweepVariable::amplitude) throw ConfigError("a smallness study sweeps the amplitude");
  return run_study(spec, progress);
}

inline nlohmann::json to_json(const StudyReport& r) {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : r.members) {
    nlohmann::json j = {{"value", m.value},
                        {"termination_reason", to_string(m.manifest.termination)},
                        {"alpha", m.alpha.alpha},
                        {"alpha_binding_time", m.alpha.binding_time},
                        {"alpha_binding_branch", to_string(m.alpha.binding_branch)},
                        {"max_field_sup", m.max_field_sup}};
    if (m.fits) {
      j["field_exponent"] = m.fits->fields.exponent;
      j["gradient_exponent"] = m.fits->gradients.exponent;
    } else if (!m.fit_error.empty()) {
      j["fit_error"] = m.fit_error;
    }
    members.push_back(j);
  }
  const auto [lo, hi] = study_fit_window(r.spec);
  nlohmann::json out = {{"sweep", to_string(r.spec.sweep)},
                        {"fit_window", {lo, hi}},
                        {"members", members},
                        {"all_completed", r.all_completed},
                        {"passed", r.passed}};
  if (r.spec.sweep == SweepVariable::amplitude) {
    out["alpha_strictly_decreasing"] = r.alpha_decreasing;
    out["fields_strictly_decreasing"] = r.fields_decreasing;
    out["bootstrap_applicable"] = r.bootstrap_applicable;
    if (r.bootstrap_applicable)
      out["bootstrap"] = {{"passed", r.bootstrap.passed},
                          {"margin_fields", r.bootstrap.margin_fields},
                          {"margin_gradients", r.bootstrap.margin_gradients}};
  } else {
    out["exponent_spread"] = r.exponent_spread;
  }
  if (!r.failure.empty()) out["failure"] = r.failure;
  return out;
}

// ---------------------------------------------------------------------------------------------
// Radial cross-validation

struct RadialComparison {
  std::vector<double> t;
  std::vector<double> rho_3d;
  std::vector<double> rho_radial;
  std::vector<double> el_3d;
  std::vector<double> et_3d;
  std::vector<double> b_3d;
  double max_rho_deviation = 0.0;     // max_t |rho_3d - rho_radial| / rho_radial
  double max_transverse_ratio = 0.0;  // max_t max(sup|E_T|, sup|B|) / max_t sup|E_L|
  std::size_t reflections = 0;
  RunManifest manifest_3d;
  RunManifest manifest_radial;
};

// Runs the configuration in its own mode and in radial_reference mode from the same markers and
// compares the sup-norm density histories on the shared grid.
inline RadialComparison compare_radial(const SimConfig& config) {
  validate(config);
  const auto datum = build_initial_datum(config);
  const ParticleEnsemble markers = sample_particles(datum, config);
  RunOptions opt;
  opt.initial_ensemble = &markers;
  const RunResult a = run_simulation(config, opt);
  SimConfig rc = config;
  rc.mode = Mode::radial_reference;
  const RunResult b = run_simulation(rc, opt);

  RadialComparison out;
  out.manifest_3d = a.manifest;
  out.manifest_radial = b.manifest;
  out.reflections = b.radial_reflections;
  const std::size_t n = std::min(a.series.size(), b.series.size());
  double el_max = 0.0, tr_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ra = a.series[i];
    const auto& rb = b.series[i];
    out.t.push_back(ra.t);
    out.rho_3d.push_back(ra.sup_rho);
    out.rho_radial.push_back(rb.sup_rho);
    out.el_3d.push_back(ra.sup_el);
    out.et_3d.push_back(ra.sup_et);
    out.b_3d.push_back(ra.sup_b);
    if (rb.sup_rho > 0) out.max_rho_deviation = std::max(out.max_rho_deviation, std::abs(ra.sup_rho - rb.sup_rho) / rb.sup_rho);
    el_max = std::max(el_max, ra.sup_el);
    tr_max = std::max({tr_max, ra.sup_et, ra.sup_b});
  }
  out.max_transverse_ratio = el_max > 0 ? tr_max / el_max : 0.0;
  return out;
}

}  // namespace vdarwin
