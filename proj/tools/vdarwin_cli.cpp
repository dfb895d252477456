// Command-line driver: run, study, verify-gronwall, check-projection, compare-radial.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vdarwin/vdarwin.hpp"

namespace {

using namespace vdarwin;

int cmd_run(const std::string& config_path, const std::string& out_dir, bool snapshots) {
  const SimConfig cfg = load_config(config_path);
  RunOptions opt;
  opt.output_dir = out_dir;
  opt.write_snapshots = snapshots;
  opt.observer = [&](const StepView& v) {
    if (v.step % cfg.snapshot_cadence() == 0)
      std::fprintf(stderr, "t=%-8g sup_rho=%.3e sup_el=%.3e sup_et=%.3e sup_b=%.3e fp_iters=%d\n", v.t,
                   v.record->sup_rho, v.record->sup_el, v.record->sup_et, v.record->sup_b,
                   v.record->fixed_point_iters);
  };
  const RunResult res = run_simulation(cfg, opt);
  std::printf("termination: %s\n", to_string(res.manifest.termination));
  if (!res.manifest.message.empty()) std::printf("message: %s\n", res.manifest.message.c_str());
  std::printf("markers: %zu  effective amplitude: %.6e\n", res.manifest.markers, res.manifest.effective_amplitude);
  if (!res.series.empty()) {
    const auto rep = extract_alpha(res.series, res.series.back().t);
    std::printf("alpha: %.6e (binding %s at t=%g)\n", rep.alpha, to_string(rep.binding_branch), rep.binding_time);
  }
  std::size_t floor_failures = 0;
  for (const auto& j : res.jacobian) floor_failures += j.passed ? 0 : 1;
  if (!res.jacobian.empty())
    std::printf("jacobian floor: %zu of %zu tracked markers below (1-beta)^3 floor\n", floor_failures,
                res.jacobian.size());
  std::printf("output: %s\n", out_dir.c_str());
  return res.completed() ? 0 : 1;
}

int cmd_study(const std::string& path, const std::string& report_path) {
  const StudySpec spec = load_study(path);
  const StudyReport rep = run_study(spec, [&](const StudyMember& m) {
    std::fprintf(stderr, "%s=%g: %s, alpha=%.4e, max field sup=%.4e\n", to_string(spec.sweep), m.value,
                 to_string(m.manifest.termination), m.alpha.alpha, m.max_field_sup);
  });
  const std::string text = to_json(rep).dump(2);
  std::printf("%s\n", text.c_str());
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    out << text << '\n';
    if (!out) throw Error("cannot write study report '" + report_path + "'");
  }
  return rep.passed ? 0 : 1;
}

int cmd_verify_gronwall(int trials, std::uint64_t seed) {
  const auto rep = run_gronwall_campaign(trials, seed);
  std::printf("random problems: %d, trajectories: %zu, violations: %zu, worst ratio: %.12f at s=%g\n", trials,
              rep.trials, rep.violations, rep.worst_ratio, rep.worst_s);
  const auto cf = closed_form_gronwall();
  std::printf("constant forcing: max ratio %.12f at s=%g, |ratio(0) - 1| = %.3e\n", cf.max_ratio, cf.argmax,
              cf.equality_gap);
  return rep.violations == 0 && cf.bounded ? 0 : 1;
}

int cmd_check_projection(int grid, int fields, std::uint64_t seed) {
  const auto rep = run_projection_suite(grid, fields, seed);
  std::printf("grid %d^3 (padded %d^3), %d fields\n", grid, 2 * grid, fields);
  std::printf("max |div PF| / |F|      = %.3e\n", rep.worst_divergence);
  std::printf("max |P(PF) - PF| / |F|  = %.3e\n", rep.worst_idempotence);
  std::printf("max |P grad g| / |grad g| = %.3e\n", rep.worst_gradient);
  const bool ok = rep.worst_divergence <= 1e-10 && rep.worst_idempotence <= 1e-10 && rep.worst_gradient <= 1e-8;
  return ok ? 0 : 1;
}

int cmd_compare_radial(const std::string& config_path) {
  const SimConfig cfg = load_config(config_path);
  const RadialComparison cmp = compare_radial(cfg);
  std::printf("%-10s %-14s %-14s %-14s %-14s %-14s\n", "t", "sup_rho_3d", "sup_rho_radial", "sup_el", "sup_et",
              "sup_b");
  for (std::size_t i = 0; i < cmp.t.size(); ++i)
    std::printf("%-10g %-14.6e %-14.6e %-14.6e %-14.6e %-14.6e\n", cmp.t[i], cmp.rho_3d[i], cmp.rho_radial[i],
                cmp.el_3d[i], cmp.et_3d[i], cmp.b_3d[i]);
  std::printf("max relative density deviation: %.4e\n", cmp.max_rho_deviation);
  std::printf("max transverse / longitudinal ratio: %.4e\n", cmp.max_transverse_ratio);
  std::printf("shell reflections: %zu\n", cmp.reflections);
  std::printf("termination: 3d %s, radial %s\n", to_string(cmp.manifest_3d.termination),
              to_string(cmp.manifest_radial.termination));
  const bool ok = cmp.manifest_3d.termination == TerminationReason::completed &&
                  cmp.manifest_radial.termination == TerminationReason::completed;
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relativistic Vlasov-Darwin particle simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "vdarwin_output", report_path;
  bool no_snapshots = false;
  auto* run = app.add_subcommand("run", "run one simulation from a configuration file");
  run->add_option("config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory")->capture_default_str();
  run->add_flag("--no-snapshots", no_snapshots, "skip grid snapshots");

  std::string study_path;
  auto* study = app.add_subcommand("study", "run a parameter sweep");
  study->add_option("study-config", study_path, "study configuration file")->required()->check(CLI::ExistingFile);
  study->add_option("--report", report_path, "write the JSON report to this file");

  int trials = 200;
  std::uint64_t seed = 1;
  auto* gron = app.add_subcommand("verify-gronwall", "property test of the Gronwall-type bound");
  gron->add_option("--trials", trials, "number of random problems")->capture_default_str()->check(CLI::PositiveNumber);
  gron->add_option("--seed", seed, "random seed")->capture_default_str();

  int grid = 64, fields = 50;
  auto* proj = app.add_subcommand("check-projection", "divergence-free projection suite");
  proj->add_option("--grid", grid, "nodes per axis")->capture_default_str();
  proj->add_option("--fields", fields, "number of random fields")->capture_default_str()->check(CLI::PositiveNumber);
  proj->add_option("--seed", seed, "random seed")->capture_default_str();

  std::string radial_config;
  auto* radial = app.add_subcommand("compare-radial", "compare a 3-D run with the radial reference");
  radial->add_option("config", radial_config, "configuration file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, out_dir, !no_snapshots);
    if (*study) return cmd_study(study_path, report_path);
    if (*gron) return cmd_verify_gronwall(trials, seed);
    if (*proj) return cmd_check_projection(grid, fields, seed);
    if (*radial) return cmd_compare_radial(radial_config);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "vdarwin: error: %s\n", e.what());
    return 2;
  }
  return 2;
}
