#pragma once

// Energy and Lyapunov functionals along a discrete trajectory, and the
// log-linear fit used to estimate the exponential decay rate.
//
//   E  = ||u'||^2 + (1 - int_0^t k) ||u||_eta^2 + (2/p) ||u||_{L^p}^p
//        + int_0^t k(t-s) ||u(s) - u(t)||_eta^2 ds
//   E1 = <u, u'>
//   E2 = -int_0^t k(t-s) <u'(t), u(t) - u(s)> ds
//   Gamma = E + eps1 E1 + eps2 E2

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "viscowave/error.hpp"
#include "viscowave/kernel.hpp"
#include "viscowave/memory.hpp"
#include "viscowave/operators.hpp"
#include "viscowave/problem.hpp"

namespace viscowave {

struct LyapunovWeights {
  double eps1 = 0.01;
  double eps2 = 0.01;
};

struct EnergyReport {
  double t = 0.0;
  double E = 0.0;
  double E1 = 0.0;
  double E2 = 0.0;
  double Gamma = 0.0;
  double kinetic = 0.0;
  double elastic = 0.0;
  double potential = 0.0;
  double memory = 0.0;
};

inline double lyapunov_gamma(double E, double E1, double E2, double eps1, double eps2) {
  return E + eps1 * E1 + eps2 * E2;
}

inline double energy_E1(const State& state, const Grid& grid) {
  return inner_l2(state.u, state.v, grid);
}

inline double energy_E2(const State& state, const History& history, const KernelSpec& kernel,
                        const Grid& grid, QuadratureRule rule = {}) {
  const std::size_t steps = history.step_index(state.t);
  const std::size_t last = detail::quadrature_last_index(history, steps, rule);
  double acc = 0.0;
  for (std::size_t i = 1; i <= last; ++i) {
    const double weight = kernel_eval(kernel, history.dt() * static_cast<double>(steps - i));
    acc += weight * inner_l2(state.v, state.u - history.raw(i), grid);
  }
  return -history.dt() * acc;
}

namespace detail {

inline EnergyReport assemble_energy(const State& state, const KernelSpec& kernel, double p,
                                    const Grid& grid, double eta, double memory, double E2,
                                    LyapunovWeights weights) {
  EnergyReport r;
  r.t = state.t;
  r.kinetic = norm_l2_squared(state.v, grid);
  r.elastic = (1.0 - kernel_integral(kernel, state.t)) * eta_norm_squared(state.u, grid, eta);
  r.potential = 2.0 / p * norm_lp_pow(state.u, grid, p);
  r.memory = memory;
  r.E = r.kinetic + r.elastic + r.potential + r.memory;
  r.E1 = energy_E1(state, grid);
  r.E2 = E2;
  r.Gamma = lyapunov_gamma(r.E, r.E1, r.E2, weights.eps1, weights.eps2);
  return r;
}

}  // namespace detail

/// Full report by direct history quadrature (O(N * steps)).
inline EnergyReport energy_E(const State& state, const History& history, const KernelSpec& kernel,
                             double p, const Grid& grid, double eta, LyapunovWeights weights = {},
                             QuadratureRule rule = {}) {
  detail::require(p >= 2.0, ErrorKind::InvalidArgument, "energy_E: p must be >= 2");
  const double memory = memory_energy_term(history, kernel, state.u, grid, eta, state.t, rule);
  const double E2 = energy_E2(state, history, kernel, grid, rule);
  return detail::assemble_energy(state, kernel, p, grid, eta, memory, E2, weights);
}

/// Evaluates EnergyReport once per step along a run, using running moments
/// for exponential kernels and direct quadrature otherwise.
class EnergyTracker {
 public:
  EnergyTracker(const KernelSpec& kernel, double p, const Grid& grid, double eta, double dt,
                LyapunovWeights weights = {}, QuadratureRule rule = {})
      : kernel_(kernel), p_(p), grid_(grid), eta_(eta), weights_(weights), rule_(rule) {
    if (kernel.is_exponential()) moments_.emplace(kernel.exponential(), dt, grid, eta, rule);
  }

  EnergyReport operator()(const State& state, const History& history) {
    if (!moments_) return energy_E(state, history, kernel_, p_, grid_, eta_, weights_, rule_);
    const auto m = moments_->at(history, state.t);
    // sum_i w_i ||u_i - u||^2 = norm_sum - 2 a(field_sum, u) + weight_sum ||u||^2
    const double memory =
        std::max(0.0, m.norm_sum - 2.0 * bilinear_a_eta(m.field_sum, state.u, grid_, eta_) +
                          m.weight_sum * eta_norm_squared(state.u, grid_, eta_));
    const double E2 =
        -(m.weight_sum * inner_l2(state.v, state.u, grid_) - inner_l2(state.v, m.field_sum, grid_));
    return detail::assemble_energy(state, kernel_, p_, grid_, eta_, memory, E2, weights_);
  }

 private:
  KernelSpec kernel_;
  double p_;
  Grid grid_;
  double eta_;
  LyapunovWeights weights_;
  QuadratureRule rule_;
  std::optional<ExponentialMemoryMoments> moments_;
};

/// Whether alpha1 E <= Gamma <= alpha2 E held at every sample.
struct LyapunovBoundCheck {
  bool held = true;
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = -std::numeric_limits<double>::infinity();
};

inline LyapunovBoundCheck check_lyapunov_bounds(std::span<const EnergyReport> series, double alpha1,
                                                double alpha2) {
  LyapunovBoundCheck check;
  for (const auto& r : series) {
    if (!(alpha1 * r.E <= r.Gamma && r.Gamma <= alpha2 * r.E)) check.held = false;
    if (r.E > 0.0) {
      const double ratio = r.Gamma / r.E;
      check.min_ratio = std::min(check.min_ratio, ratio);
      check.max_ratio = std::max(check.max_ratio, ratio);
    }
  }
  return check;
}

/// Least-squares fit of ln E = ln(N^2) - 2 gamma t over a time window.
struct DecayFit {
  double gamma = 0.0;
  double amplitude = 0.0;  // N, so E ~ N^2 exp(-2 gamma t)
  double r_squared = 0.0;
  std::size_t samples = 0;
};

inline constexpr std::size_t kMinDecaySamples = 10;

inline DecayFit fit_decay_rate(std::span<const double> times, std::span<const double> energy,
                               double t_lo, double t_hi) {
  detail::require(times.size() == energy.size(), ErrorKind::LengthMismatch,
                  "fit_decay_rate: time and energy series differ in length");
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_lo || times[i] > t_hi) continue;
    if (!(energy[i] > 0.0)) {
      throw Error(ErrorKind::NonPositiveEnergy, "fit_decay_rate: E=" + std::to_string(energy[i]) +
                                                    " at t=" + std::to_string(times[i]));
    }
    xs.push_back(times[i]);
    ys.push_back(std::log(energy[i]));
  }
  if (xs.size() < kMinDecaySamples) {
    throw Error(ErrorKind::TooFewSamples, "fit_decay_rate: " + std::to_string(xs.size()) +
                                              " samples in window, need " +
                                              std::to_string(kMinDecaySamples));
  }
  const auto n = static_cast<double>(xs.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mean_x;
    const double dy = ys[i] - mean_y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  detail::require(sxx > 0.0, ErrorKind::TooFewSamples, "fit_decay_rate: degenerate time window");
  const double slope = sxy / sxx;
  const double intercept = mean_y - slope * mean_x;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    ss_res += r * r;
  }

  DecayFit fit;
  fit.gamma = -slope / 2.0;
  fit.amplitude = std::exp(intercept / 2.0);
  // A flat series (up to rounding in the mean) is fit exactly by the flat line.
  const double flat = 1e-24 * n * (1.0 + mean_y * mean_y);
  fit.r_squared = syy > flat ? 1.0 - ss_res / syy : 1.0;
  fit.samples = xs.size();
  return fit;
}

}  // namespace viscowave
