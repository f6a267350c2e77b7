#pragma once

// Method-of-lines solver. Each time step runs a Picard fixed-point loop:
// iterate n integrates the system over one dt with classical RK4, with the
// damping and source terms frozen at iterate n-1 and the memory term held at
// its value at the start of the step. Iterate 0 is the step's start state.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "viscowave/energy.hpp"
#include "viscowave/error.hpp"
#include "viscowave/kernel.hpp"
#include "viscowave/memory.hpp"
#include "viscowave/operators.hpp"
#include "viscowave/problem.hpp"

namespace viscowave {

struct SolverConfig {
  int grid_n = 50;
  double dt = 1e-3;
  double t_final = 2.0;
  double picard_tol = 1e-10;
  int picard_max_iters = 50;
  double regularization_eps = 0.0;
  int snapshot_every = 1;
  bool allow_unstable_dt = false;
  bool record_energy = true;
  LyapunovWeights lyapunov;
};

inline void validate(const SolverConfig& config) {
  detail::require(config.grid_n >= 2, ErrorKind::InvalidArgument, "solver: grid_n must be >= 2");
  detail::require(config.dt > 0.0 && std::isfinite(config.dt), ErrorKind::InvalidArgument,
                  "solver: dt must be > 0");
  detail::require(config.t_final >= 0.0 && std::isfinite(config.t_final),
                  ErrorKind::InvalidArgument, "solver: t_final must be >= 0");
  detail::require(config.picard_tol > 0.0, ErrorKind::InvalidArgument,
                  "solver: picard_tol must be > 0");
  detail::require(config.picard_max_iters >= 1, ErrorKind::InvalidArgument,
                  "solver: picard_max_iters must be >= 1");
  detail::require(config.regularization_eps >= 0.0, ErrorKind::InvalidArgument,
                  "solver: regularization_eps must be >= 0");
  detail::require(config.snapshot_every >= 1, ErrorKind::InvalidArgument,
                  "solver: snapshot_every must be >= 1");
}

/// Number of dt steps to reach t_final; t_final must sit on the step lattice.
inline std::size_t step_count(const SolverConfig& config) {
  const double steps = config.t_final / config.dt;
  const double rounded = std::round(steps);
  detail::require(std::abs(steps - rounded) <= 1e-9 * std::max(1.0, steps),
                  ErrorKind::NonIntegralTime, "solver: t_final is not a multiple of dt");
  return static_cast<std::size_t>(rounded);
}

/// Time derivative of (u, v) with the nonlinear terms taken from `frozen`:
///   du = v
///   dv = L u - eps u - conv - psi_q(frozen.v) + sign psi_p(frozen.u) + F(x, t)
inline std::pair<NodalField, NodalField> semi_discrete_rhs(
    const State& state, const NodalField& conv, const State& frozen, const ProblemSpec& problem,
    const Grid& grid, double regularization_eps = 0.0) {
  detail::check_aligned(conv, grid, "semi_discrete_rhs");
  detail::check_aligned(frozen.u, grid, "semi_discrete_rhs");
  detail::check_aligned(frozen.v, grid, "semi_discrete_rhs");
  const double q = problem.q;
  const double p = problem.p;
  const double sign = static_cast<double>(problem.source_sign);

  NodalField dv = robin_laplacian(state.u, grid, problem.eta) - conv;
  if (regularization_eps != 0.0) dv -= regularization_eps * state.u;
  for (int j = 0; j < grid.nodes(); ++j) {
    dv[j] += -psi_q(frozen.v[j], q) + sign * psi_q(frozen.u[j], p);
  }
  if (problem.forcing) {
    for (int j = 0; j < grid.nodes(); ++j) dv[j] += problem.forcing(grid.x(j), state.t);
  }
  if (!dv.allFinite() || !state.v.allFinite()) {
    throw Error(ErrorKind::NonFiniteState,
                "semi_discrete_rhs: non-finite derivative at t=" + std::to_string(state.t));
  }
  return {state.v, std::move(dv)};
}

struct StepResult {
  State state;
  int iterations = 0;
  double residual = 0.0;
};

namespace detail {

// One RK4 step of the frozen system. The frozen nonlinear trajectory is the
// linear interpolant between the step's start state and the previous iterate.
inline State frozen_rk4(const State& start, const State& previous_iterate, const NodalField& conv,
                        const ProblemSpec& problem, const Grid& grid, double dt, double eps) {
  auto frozen_at = [&](double theta) {
    if (theta == 0.0) return start;
    return State{start.t + theta * dt, start.u + theta * (previous_iterate.u - start.u),
                 start.v + theta * (previous_iterate.v - start.v)};
  };
  auto stage = [&](double theta, const NodalField& u, const NodalField& v) {
    return semi_discrete_rhs(State{start.t + theta * dt, u, v}, conv, frozen_at(theta), problem,
                             grid, eps);
  };

  const auto [k1u, k1v] = stage(0.0, start.u, start.v);
  const auto [k2u, k2v] = stage(0.5, start.u + 0.5 * dt * k1u, start.v + 0.5 * dt * k1v);
  const auto [k3u, k3v] = stage(0.5, start.u + 0.5 * dt * k2u, start.v + 0.5 * dt * k2v);
  const auto [k4u, k4v] = stage(1.0, start.u + dt * k3u, start.v + dt * k3v);

  State next;
  next.t = start.t + dt;
  next.u = start.u + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
  next.v = start.v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  return next;
}

inline double sup_distance(const State& a, const State& b) {
  return std::max((a.u - b.u).cwiseAbs().maxCoeff(), (a.v - b.v).cwiseAbs().maxCoeff());
}

}  // namespace detail

/// Picard loop for one step, given the memory term at the step's start.
/// A non-finite iterate after the first pass means the fixed-point loop
/// diverged and is reported as MaxPicardIters.
inline StepResult picard_step(const State& state, const NodalField& conv,
                              const ProblemSpec& problem, const Grid& grid,
                              const SolverConfig& config) {
  State previous = state;
  double residual = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= config.picard_max_iters; ++n) {
    State next;
    try {
      next = detail::frozen_rk4(state, previous, conv, problem, grid, config.dt,
                                config.regularization_eps);
    } catch (const Error& e) {
      if (n == 1 || e.kind() != ErrorKind::NonFiniteState) throw;
      throw Error(ErrorKind::MaxPicardIters, "Picard iteration diverged at iterate " +
                                                 std::to_string(n) + " (" + e.what() + ")");
    }
    residual = detail::sup_distance(next, previous);
    if (!std::isfinite(residual) || !is_finite(next)) {
      if (n == 1) {
        throw Error(ErrorKind::NonFiniteState,
                    "non-finite state after step from t=" + std::to_string(state.t));
      }
      throw Error(ErrorKind::MaxPicardIters,
                  "Picard iteration diverged at iterate " + std::to_string(n));
    }
    previous = std::move(next);
    if (residual < config.picard_tol) return {std::move(previous), n, residual};
  }
  throw Error(ErrorKind::MaxPicardIters, "Picard residual " + std::to_string(residual) +
                                             " above tolerance after " +
                                             std::to_string(config.picard_max_iters) +
                                             " iterations from t=" + std::to_string(state.t));
}

/// Advances one step using the direct convolution sum and appends the new
/// state to the history.
inline StepResult picard_advance(const State& state, History& history, const ProblemSpec& problem,
                                 const Grid& grid, const SolverConfig& config) {
  const NodalField conv = convolution_term(history, problem.kernel, state.t, problem.memory_rule);
  StepResult result = picard_step(state, conv, problem, grid, config);
  detail::require(history.size() == history.step_index(state.t) + 1, ErrorKind::HistoryTooShort,
                  "picard_advance: history is not filled through t");
  NodalField lap = robin_laplacian(result.state.u, grid, problem.eta);
  history.append(result.state.u, std::move(lap));
  return result;
}

/// Stateful driver: owns the grid, history and the memory evaluator.
class Solver {
 public:
  Solver(ProblemSpec problem, SolverConfig config)
      : problem_(std::move(problem)), config_(config), grid_(config.grid_n), history_(config.dt) {
    validate(problem_);
    validate(config_);
    if (config_.dt > grid_.h() && !config_.allow_unstable_dt) {
      throw Error(ErrorKind::ConfigError,
                  "dt=" + std::to_string(config_.dt) + " exceeds h=" + std::to_string(grid_.h()) +
                      "; explicit stepping is likely unstable (set allow_unstable_dt to override)");
    }
    const double needed = config_.t_final;
    detail::require(kernel_horizon(problem_.kernel) + 1e-12 >= needed, ErrorKind::OutOfRange,
                    "tabulated kernel does not cover t_final");
    if (problem_.kernel.is_exponential()) {
      fast_memory_.emplace(problem_.kernel.exponential(), config_.dt, problem_.memory_rule);
    }
    state_ = initial_state(problem_, grid_);
    detail::require(is_finite(state_), ErrorKind::NonFiniteState, "initial data is not finite");
    history_.append(state_.u, robin_laplacian(state_.u, grid_, problem_.eta));
  }

  StepResult advance() {
    const double t = static_cast<double>(steps_) * config_.dt;
    const NodalField conv =
        fast_memory_ ? fast_memory_->term(history_, t)
                     : convolution_term(history_, problem_.kernel, t, problem_.memory_rule);
    StepResult result = picard_step(state_, conv, problem_, grid_, config_);
    ++steps_;
    result.state.t = static_cast<double>(steps_) * config_.dt;
    history_.append(result.state.u, robin_laplacian(result.state.u, grid_, problem_.eta));
    state_ = result.state;
    return result;
  }

  const State& state() const { return state_; }
  const History& history() const { return history_; }
  const Grid& grid() const { return grid_; }
  const ProblemSpec& problem() const { return problem_; }
  const SolverConfig& config() const { return config_; }
  std::size_t steps() const { return steps_; }

 private:
  ProblemSpec problem_;
  SolverConfig config_;
  Grid grid_;
  History history_;
  std::optional<ExponentialConvolution> fast_memory_;
  State state_;
  std::size_t steps_ = 0;
};

struct Trajectory {
  Grid grid{2};
  std::vector<State> snapshots;
  std::vector<EnergyReport> energy;    // one per step, starting at t = 0
  std::vector<int> picard_iterations;  // one per step taken
  std::vector<double> picard_residuals;
};

/// Runs to t_final, keeping every snapshot_every-th state (plus the last).
inline Trajectory simulate(const ProblemSpec& problem, const SolverConfig& config) {
  Solver solver(problem, config);
  const std::size_t total = step_count(config);
  Trajectory out;
  out.grid = solver.grid();
  out.snapshots.push_back(solver.state());
  out.picard_iterations.reserve(total);
  out.picard_residuals.reserve(total);

  std::optional<EnergyTracker> tracker;
  if (config.record_energy) {
    tracker.emplace(problem.kernel, problem.p, solver.grid(), problem.eta, config.dt,
                    config.lyapunov, problem.memory_rule);
    out.energy.reserve(total + 1);
    out.energy.push_back((*tracker)(solver.state(), solver.history()));
  }

  for (std::size_t step = 1; step <= total; ++step) {
    StepResult result;
    try {
      result = solver.advance();
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " [failing step ends at t=" +
                                std::to_string(static_cast<double>(step) * config.dt) + "]");
    }
    out.picard_iterations.push_back(result.iterations);
    out.picard_residuals.push_back(result.residual);
    if (tracker) out.energy.push_back((*tracker)(solver.state(), solver.history()));
    if (step % static_cast<std::size_t>(config.snapshot_every) == 0 || step == total) {
      out.snapshots.push_back(solver.state());
    }
  }
  return out;
}

}  // namespace viscowave
