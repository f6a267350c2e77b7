#pragma once

// Experiment drivers behind the CLI subcommands.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "viscowave/config.hpp"
#include "viscowave/energy.hpp"
#include "viscowave/error.hpp"
#include "viscowave/kernel.hpp"
#include "viscowave/operators.hpp"
#include "viscowave/reference_problem.hpp"
#include "viscowave/stepper.hpp"

namespace viscowave {

struct ErrorSample {
  double t = 0.0;
  double max_abs = 0.0;
  double l2 = 0.0;
};

struct ErrorReport {
  double max_abs = 0.0;
  double l2 = 0.0;           // space-time L2 of u - U_ex
  double relative_l2 = 0.0;  // divided by the space-time L2 of U_ex
  std::vector<ErrorSample> series;
};

/// Errors against the exact solution on the trajectory's output grid.
/// Time integration uses the trapezoid rule over the snapshot times.
inline ErrorReport solution_error(const Trajectory& trajectory) {
  const Grid& grid = trajectory.grid;
  ErrorReport report;
  std::vector<double> err_sq;
  std::vector<double> exact_sq;
  for (const auto& s : trajectory.snapshots) {
    const NodalField exact = grid.sample([&](double x) { return exact_solution(x, s.t); });
    const NodalField diff = s.u - exact;
    ErrorSample sample{s.t, diff.cwiseAbs().maxCoeff(), norm_l2(diff, grid)};
    report.max_abs = std::max(report.max_abs, sample.max_abs);
    report.series.push_back(sample);
    err_sq.push_back(sample.l2 * sample.l2);
    exact_sq.push_back(norm_l2_squared(exact, grid));
  }
  const auto& snaps = trajectory.snapshots;
  if (snaps.size() == 1) {
    report.l2 = std::sqrt(err_sq[0]);
    report.relative_l2 = report.l2 / std::sqrt(exact_sq[0]);
    return report;
  }
  double err_int = 0.0;
  double exact_int = 0.0;
  for (std::size_t i = 0; i + 1 < snaps.size(); ++i) {
    const double w = 0.5 * (snaps[i + 1].t - snaps[i].t);
    err_int += w * (err_sq[i] + err_sq[i + 1]);
    exact_int += w * (exact_sq[i] + exact_sq[i + 1]);
  }
  report.l2 = std::sqrt(err_int);
  report.relative_l2 = report.l2 / std::sqrt(exact_int);
  return report;
}

struct VerifyResult {
  Trajectory trajectory;
  ErrorReport errors;
  bool passed = false;
};

inline VerifyResult verify_run(const RunConfig& cfg) {
  if (cfg.problem.forcing != "manufactured" || cfg.problem.initial != "reference") {
    throw Error(ErrorKind::ConfigError,
                "verify requires problem.forcing = manufactured and problem.initial = reference");
  }
  VerifyResult result;
  result.trajectory = simulate(build_problem(cfg), cfg.solver);
  result.errors = solution_error(result.trajectory);
  result.passed = result.errors.relative_l2 <= cfg.verify.tolerance;
  return result;
}

/// Worker count for independent runs: VISCOWAVE_THREADS if set, else the
/// hardware concurrency.
inline unsigned sweep_threads() {
  if (const char* env = std::getenv("VISCOWAVE_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs `count` independent jobs on at most `threads` workers. The first
/// exception (by job index) is rethrown after all workers finish.
template <typename Job>
void run_parallel(std::size_t count, unsigned threads, Job&& job) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct ConvergenceRow {
  int level = 0;
  int n = 0;
  double h = 0.0;
  double dt = 0.0;
  double max_abs = 0.0;
  std::optional<double> observed_order;  // log2(err_{i-1} / err_i), from level 1 on
};

/// Halves h and dt per level starting from cfg.solver; all levels share the
/// output times of the coarsest one.
inline std::vector<ConvergenceRow> convergence_study(const RunConfig& cfg, int levels,
                                                     unsigned threads = sweep_threads()) {
  detail::require(levels >= 2, ErrorKind::ConfigError, "convergence: levels must be >= 2");
  if (cfg.problem.forcing != "manufactured" || cfg.problem.initial != "reference") {
    throw Error(
        ErrorKind::ConfigError,
        "convergence requires problem.forcing = manufactured and problem.initial = reference");
  }
  const ProblemSpec problem = build_problem(cfg);
  std::vector<ConvergenceRow> rows(static_cast<std::size_t>(levels));
  run_parallel(rows.size(), threads, [&](std::size_t i) {
    const int factor = 1 << i;
    SolverConfig solver = cfg.solver;
    solver.grid_n = cfg.solver.grid_n * factor;
    solver.dt = cfg.solver.dt / factor;
    solver.snapshot_every = cfg.solver.snapshot_every * factor;
    solver.record_energy = false;
    const Trajectory trajectory = simulate(problem, solver);
    ConvergenceRow& row = rows[i];
    row.level = static_cast<int>(i);
    row.n = solver.grid_n;
    row.h = 1.0 / solver.grid_n;
    row.dt = solver.dt;
    row.max_abs = solution_error(trajectory).max_abs;
  });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    rows[i].observed_order = std::log2(rows[i - 1].max_abs / rows[i].max_abs);
  }
  return rows;
}

inline bool convergence_passed(const std::vector<ConvergenceRow>& rows, double min_order) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].max_abs < rows[i - 1].max_abs)) return false;
    if (!(rows[i].observed_order && *rows[i].observed_order >= min_order)) return false;
  }
  return true;
}

struct KernelValidation {
  KernelReport report;
  double zeta = 0.0;
  double c2t = 0.0;
  double horizon = 0.0;
};

/// Checks the configured kernel; zeta falls back to zeta_max when unset.
inline KernelValidation validate_kernel_run(const RunConfig& cfg) {
  const KernelSpec kernel = build_kernel(cfg);
  KernelValidation out;
  out.horizon =
      cfg.solver.t_final > 0.0 ? std::min(cfg.solver.t_final, kernel_horizon(kernel)) : 1.0;
  double zeta = 0.0;
  if (kernel.zeta && *kernel.zeta > 0.0) {
    zeta = *kernel.zeta;
  } else {
    // Probe with any positive zeta to learn zeta_max, then re-check at it.
    const double zeta_max = validate_hypotheses(kernel, 1.0).zeta_max;
    zeta = (std::isfinite(zeta_max) && zeta_max > 0.0) ? zeta_max : 1.0;
  }
  out.zeta = zeta;
  out.report = validate_hypotheses(kernel, zeta);
  const bool c2t_defined = kernel.is_exponential() || kernel.tabulated().samples.size() >= 3;
  out.c2t = c2t_defined ? theory_constant_c2t(kernel, out.horizon)
                        : std::numeric_limits<double>::quiet_NaN();
  return out;
}

struct DecayResult {
  Trajectory trajectory;
  KernelValidation kernel;
  std::optional<DecayFit> fit;
  std::string fit_error;
  double max_step_increase = 0.0;  // max_m (E_{m+1} - E_m) / E(0)
  double energy_ratio = 0.0;       // E(t_final) / E(0)
  double window_lo = 0.0;
  double window_hi = 0.0;

  bool monotone(double tolerance) const { return max_step_increase <= tolerance; }
};

inline bool decay_passed(const DecayResult& r, const DecayOptions& opts) {
  return r.fit && r.fit->gamma > 0.0 && r.fit->r_squared >= opts.min_r_squared &&
         r.monotone(opts.monotone_tolerance) && r.energy_ratio < opts.max_energy_ratio;
}

/// Unforced run with the dissipative source. Refuses kernels that fail the
/// relaxation hypotheses.
inline DecayResult decay_run(const RunConfig& cfg) {
  if (cfg.problem.forcing != "zero" || cfg.problem.source_sign != -1) {
    throw Error(ErrorKind::ConfigError,
                "decay requires problem.forcing = zero and problem.source_sign = -1");
  }
  detail::require(cfg.solver.record_energy, ErrorKind::ConfigError,
                  "decay requires solver.record_energy = true");
  DecayResult result;
  result.kernel = validate_kernel_run(cfg);
  if (!result.kernel.report.passes.all()) {
    throw Error(ErrorKind::HypothesisFailure,
                "kernel fails the relaxation hypotheses; decay run refused");
  }
  result.trajectory = simulate(build_problem(cfg), cfg.solver);

  const auto& energy = result.trajectory.energy;
  std::vector<double> times;
  std::vector<double> values;
  for (const auto& r : energy) {
    times.push_back(r.t);
    values.push_back(r.E);
  }
  const double e0 = values.front();
  result.energy_ratio = e0 > 0.0 ? values.back() / e0 : std::numeric_limits<double>::quiet_NaN();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < values.size(); ++i)
    worst = std::max(worst, values[i] - values[i - 1]);
  result.max_step_increase =
      values.size() < 2 ? 0.0 : (e0 > 0.0 ? worst / e0 : (worst > 0.0 ? worst : 0.0));

  result.window_lo = cfg.decay.window_lo;
  result.window_hi = cfg.decay.window_hi.value_or(cfg.solver.t_final);
  try {
    result.fit = fit_decay_rate(times, values, result.window_lo, result.window_hi);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonPositiveEnergy && e.kind() != ErrorKind::TooFewSamples) throw;
    result.fit_error = e.what();
  }
  return result;
}

}  // namespace viscowave
