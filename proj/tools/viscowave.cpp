// viscowave: command-line driver for the viscoelastic wave solver.
//
//   viscowave simulate <cfg>
//   viscowave verify <cfg>
//   viscowave decay <cfg>
//   viscowave convergence <cfg> --levels L
//   viscowave validate-kernel <cfg>
//
// Exit codes: 0 success, 2 config error, 3 solver failure, 4 acceptance
// check failed (verify/decay).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "viscowave/viscowave.hpp"

namespace fs = std::filesystem;
using namespace viscowave;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitAcceptance = 4;

struct CommonOptions {
  std::string config_path;
  std::string output_dir;
  bool allow_unstable_dt = false;
  bool no_plots = false;
};

RunConfig load(const CommonOptions& opts, RunMode mode) {
  RunConfig cfg = load_config(opts.config_path);
  cfg.mode = mode;
  if (!opts.output_dir.empty()) cfg.output_dir = opts.output_dir;
  if (opts.allow_unstable_dt) cfg.solver.allow_unstable_dt = true;
  if (opts.no_plots) cfg.emit_plots = false;
  return cfg;
}

std::string line(const std::string& key, double value) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s = %.10g\n", key.c_str(), value);
  return buf;
}

void finish(const RunConfig& cfg, const std::string& summary) {
  const fs::path dir(cfg.output_dir);
  write_text_file(dir / "summary.txt", summary);
  write_text_file(dir / "config.used", serialize_config(cfg));
  if (cfg.emit_plots) write_plot_script(dir);
  std::cout << summary;
}

void write_trajectory(const RunConfig& cfg, const Trajectory& trajectory) {
  const fs::path dir(cfg.output_dir);
  write_file(dir / "solution.csv", [&](std::ostream& o) { write_solution_csv(o, trajectory); });
  write_file(dir / "picard.csv",
             [&](std::ostream& o) { write_picard_csv(o, trajectory, cfg.solver.dt); });
  if (!trajectory.energy.empty()) {
    write_file(dir / "energy.csv",
               [&](std::ostream& o) { write_energy_csv(o, trajectory.energy); });
  }
}

int max_iterations(const Trajectory& trajectory) {
  int m = 0;
  for (int i : trajectory.picard_iterations) m = std::max(m, i);
  return m;
}

int run_simulate(const CommonOptions& opts) {
  const RunConfig cfg = load(opts, RunMode::Simulate);
  const Trajectory trajectory = simulate(build_problem(cfg), cfg.solver);
  write_trajectory(cfg, trajectory);
  std::string summary = "mode = simulate\n";
  summary += line("t_final", trajectory.snapshots.back().t);
  summary += line("snapshots", static_cast<double>(trajectory.snapshots.size()));
  summary += line("max_picard_iterations", max_iterations(trajectory));
  if (!trajectory.energy.empty()) {
    summary += line("E_initial", trajectory.energy.front().E);
    summary += line("E_final", trajectory.energy.back().E);
  }
  finish(cfg, summary);
  return kExitOk;
}

int run_verify(const CommonOptions& opts) {
  const RunConfig cfg = load(opts, RunMode::Verify);
  const VerifyResult result = verify_run(cfg);
  write_trajectory(cfg, result.trajectory);
  const fs::path dir(cfg.output_dir);
  write_file(dir / "exact.csv", [&](std::ostream& o) { write_exact_csv(o, result.trajectory); });
  write_file(dir / "errors.csv", [&](std::ostream& o) { write_error_csv(o, result.errors); });
  std::string summary = "mode = verify\n";
  summary += line("max_abs", result.errors.max_abs);
  summary += line("l2", result.errors.l2);
  summary += line("relative_l2", result.errors.relative_l2);
  summary += line("initial_error", result.errors.series.front().max_abs);
  summary += line("tolerance", cfg.verify.tolerance);
  summary += line("max_picard_iterations", max_iterations(result.trajectory));
  summary += std::string("result = ") + (result.passed ? "PASS" : "FAIL") + "\n";
  finish(cfg, summary);
  return result.passed ? kExitOk : kExitAcceptance;
}

int run_decay(const CommonOptions& opts) {
  const RunConfig cfg = load(opts, RunMode::Decay);
  const DecayResult result = decay_run(cfg);
  write_trajectory(cfg, result.trajectory);
  const bool passed = decay_passed(result, cfg.decay);
  std::string summary = "mode = decay\n";
  summary += line("E_initial", result.trajectory.energy.front().E);
  summary += line("E_final", result.trajectory.energy.back().E);
  summary += line("energy_ratio", result.energy_ratio);
  summary += line("max_step_increase", result.max_step_increase);
  summary += line("window_lo", result.window_lo);
  summary += line("window_hi", result.window_hi);
  if (result.fit) {
    summary += line("gamma", result.fit->gamma);
    // E ~ N^2 exp(-2 gamma t) and sqrt(E) ~ N exp(-gamma t): same gamma.
    summary += line("amplitude_sqrtE", result.fit->amplitude);
    summary += line("amplitude_E", result.fit->amplitude * result.fit->amplitude);
    summary += line("r_squared", result.fit->r_squared);
  } else {
    summary += "fit_error = " + result.fit_error + "\n";
  }
  summary += std::string("result = ") + (passed ? "PASS" : "FAIL") + "\n";
  finish(cfg, summary);
  return passed ? kExitOk : kExitAcceptance;
}

int run_convergence(const CommonOptions& opts, int levels) {
  const RunConfig cfg = load(opts, RunMode::Convergence);
  const int n_levels = levels > 0 ? levels : cfg.convergence.levels;
  const auto rows = convergence_study(cfg, n_levels);
  write_file(fs::path(cfg.output_dir) / "convergence.csv",
             [&](std::ostream& o) { write_convergence_csv(o, rows); });
  std::ostringstream summary;
  summary << "mode = convergence\n";
  write_convergence_csv(summary, rows);
  summary << "monotone_with_min_order = "
          << (convergence_passed(rows, cfg.convergence.min_order) ? "true" : "false") << "\n";
  finish(cfg, summary.str());
  return kExitOk;
}

int run_validate_kernel(const CommonOptions& opts) {
  const RunConfig cfg = load(opts, RunMode::ValidateKernel);
  const KernelValidation v = validate_kernel_run(cfg);
  auto flag = [](bool b) { return std::string(b ? "pass" : "fail"); };
  std::string summary = "mode = validate-kernel\n";
  summary += line("k0", v.report.k0);
  summary += line("total_mass", v.report.total_mass);
  summary += line("k_infinity", v.report.k_infinity);
  summary += line("zeta", v.zeta);
  summary += line("zeta_max", v.report.zeta_max);
  summary += line("horizon", v.horizon);
  summary += line("C2T", v.c2t);
  summary += "nonnegative = " + flag(v.report.passes.nonnegative) + "\n";
  summary += "k0_positive = " + flag(v.report.passes.k0_positive) + "\n";
  summary += "k_infinity_in_range = " + flag(v.report.passes.k_infinity_in_range) + "\n";
  summary += "decay_condition = " + flag(v.report.passes.decay_condition) + "\n";
  summary += "tail_covered = " + flag(v.report.passes.tail_covered) + "\n";
  summary += "result = " + std::string(v.report.passes.all() ? "PASS" : "FAIL") + "\n";
  RunConfig out = cfg;
  out.emit_plots = false;
  finish(out, summary);
  return kExitOk;
}

int exit_code_for(const Error& e) {
  if (e.is_solver_failure()) return kExitSolver;
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"viscowave: 1D nonlinear viscoelastic wave solver"};
  app.require_subcommand(1);

  CommonOptions opts;
  int levels = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", opts.config_path, "run configuration file")->required();
    sub->add_option("-o,--output-dir", opts.output_dir, "override output.dir");
    sub->add_flag("--allow-unstable-dt", opts.allow_unstable_dt,
                  "run even when dt exceeds the grid spacing");
    sub->add_flag("--no-plots", opts.no_plots, "skip writing plots.py");
  };
  auto* simulate_cmd = app.add_subcommand("simulate", "run a simulation and write CSVs");
  auto* verify_cmd = app.add_subcommand("verify", "manufactured-solution error check");
  auto* decay_cmd = app.add_subcommand("decay", "unforced energy decay experiment");
  auto* convergence_cmd = app.add_subcommand("convergence", "grid/time refinement study");
  auto* kernel_cmd = app.add_subcommand("validate-kernel", "check kernel hypotheses");
  for (auto* sub : {simulate_cmd, verify_cmd, decay_cmd, convergence_cmd, kernel_cmd}) {
    add_common(sub);
  }
  convergence_cmd->add_option("--levels", levels, "number of refinement levels (>= 2)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate_cmd) return run_simulate(opts);
    if (*verify_cmd) return run_verify(opts);
    if (*decay_cmd) return run_decay(opts);
    if (*convergence_cmd) return run_convergence(opts, levels);
    if (*kernel_cmd) return run_validate_kernel(opts);
  } catch (const Error& e) {
    std::cerr << "viscowave: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "viscowave: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
