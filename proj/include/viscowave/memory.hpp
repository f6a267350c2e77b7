#pragma once

// Snapshot history and the discrete memory integrals. All quadratures use
// the rectangle rule
//
//   int_0^t k(t - s) f(s) ds  ~  dt * sum_{i=1}^{M-1} k(t - i dt) f(i dt),   t = M dt,
//
// with both endpoints i = 0 and i = M excluded. Setting
// `include_right_endpoint` adds the i = M term.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "viscowave/error.hpp"
#include "viscowave/kernel.hpp"
#include "viscowave/operators.hpp"

namespace viscowave {

struct QuadratureRule {
  bool include_right_endpoint = false;
};

/// Append-only record of u(i dt) and its Laplacian image L u(i dt).
class History {
 public:
  explicit History(double dt) : dt_(dt) {
    detail::require(dt > 0.0 && std::isfinite(dt), ErrorKind::InvalidArgument,
                    "History: dt must be > 0");
  }

  void append(NodalField raw, NodalField laplacian) {
    detail::require(raw.size() == laplacian.size(), ErrorKind::LengthMismatch,
                    "History::append: raw and Laplacian snapshots differ in length");
    if (!raw_.empty()) {
      detail::require(raw.size() == raw_.front().size(), ErrorKind::LengthMismatch,
                      "History::append: snapshot length changed");
    }
    raw_.push_back(std::move(raw));
    laplacian_.push_back(std::move(laplacian));
  }

  double dt() const { return dt_; }
  std::size_t size() const { return raw_.size(); }
  bool empty() const { return raw_.empty(); }
  const NodalField& raw(std::size_t i) const { return raw_.at(i); }
  const NodalField& laplacian(std::size_t i) const { return laplacian_.at(i); }

  /// Number of steps M with t = M dt; throws if t is off the step lattice.
  std::size_t step_index(double t) const {
    const double steps = t / dt_;
    const double rounded = std::round(steps);
    detail::require(
        t >= 0.0 && std::abs(steps - rounded) <= 1e-9, ErrorKind::NonIntegralTime,
        "t=" + std::to_string(t) + " is not an integral multiple of dt=" + std::to_string(dt_));
    return static_cast<std::size_t>(rounded);
  }

 private:
  double dt_;
  std::vector<NodalField> raw_;
  std::vector<NodalField> laplacian_;
};

namespace detail {

// Index range [1, last] of the quadrature at step M, requiring the history
// to contain every snapshot referenced.
inline std::size_t quadrature_last_index(const History& history, std::size_t steps,
                                         QuadratureRule rule) {
  if (rule.include_right_endpoint) {
    if (steps >= 1) {
      require(history.size() >= steps + 1, ErrorKind::HistoryTooShort,
              "history holds " + std::to_string(history.size()) + " snapshots, need " +
                  std::to_string(steps + 1));
    }
    return steps;
  }
  if (steps >= 2) {
    require(history.size() >= steps, ErrorKind::HistoryTooShort,
            "history holds " + std::to_string(history.size()) + " snapshots, need " +
                std::to_string(steps));
  }
  return steps == 0 ? 0 : steps - 1;
}

inline Eigen::Index history_width(const History& history) {
  return history.empty() ? 0 : history.raw(0).size();
}

}  // namespace detail

/// dt * sum_i k(t - i dt) L u(i dt). The 1/h^2 factor lives in the stored images.
inline NodalField convolution_term(const History& history, const KernelSpec& kernel, double t,
                                   QuadratureRule rule = {}) {
  const std::size_t steps = history.step_index(t);
  const std::size_t last = detail::quadrature_last_index(history, steps, rule);
  NodalField out = NodalField::Zero(detail::history_width(history));
  for (std::size_t i = 1; i <= last; ++i) {
    const double weight = kernel_eval(kernel, history.dt() * static_cast<double>(steps - i));
    out += weight * history.laplacian(i);
  }
  return history.dt() * out;
}

/// dt * sum_i k(t - i dt) ||u(i dt) - u_now||_eta^2
inline double memory_energy_term(const History& history, const KernelSpec& kernel,
                                 const NodalField& u_now, const Grid& grid, double eta, double t,
                                 QuadratureRule rule = {}) {
  const std::size_t steps = history.step_index(t);
  const std::size_t last = detail::quadrature_last_index(history, steps, rule);
  double acc = 0.0;
  for (std::size_t i = 1; i <= last; ++i) {
    const double weight = kernel_eval(kernel, history.dt() * static_cast<double>(steps - i));
    const NodalField diff = history.raw(i) - u_now;
    acc += weight * eta_norm_squared(diff, grid, eta);
  }
  return history.dt() * acc;
}

/// dt * sum_i k(t - i dt) u(i dt); the building block of the cross terms.
inline NodalField weighted_raw_sum(const History& history, const KernelSpec& kernel, double t,
                                   QuadratureRule rule = {}) {
  const std::size_t steps = history.step_index(t);
  const std::size_t last = detail::quadrature_last_index(history, steps, rule);
  NodalField out = NodalField::Zero(detail::history_width(history));
  for (std::size_t i = 1; i <= last; ++i) {
    out += kernel_eval(kernel, history.dt() * static_cast<double>(steps - i)) * history.raw(i);
  }
  return history.dt() * out;
}

/// O(1)-per-step evaluation of convolution_term for k = a exp(-b t):
///   S_{M+1} = exp(-b dt) S_M + dt a exp(-b dt) L u(M dt),  S_0 = S_1 = 0.
/// Queries must come in non-decreasing t.
class ExponentialConvolution {
 public:
  ExponentialConvolution(const ExponentialKernel& kernel, double dt, QuadratureRule rule = {})
      : kernel_(kernel), dt_(dt), decay_(std::exp(-kernel.rate * dt)), rule_(rule) {}

  NodalField term(const History& history, double t) {
    detail::require(std::abs(history.dt() - dt_) <= 1e-15 * dt_, ErrorKind::InvalidArgument,
                    "ExponentialConvolution: history dt differs");
    const std::size_t steps = history.step_index(t);
    if (steps < steps_) {
      throw Error(ErrorKind::OutOfOrder, "ExponentialConvolution: requested step " +
                                             std::to_string(steps) + " after step " +
                                             std::to_string(steps_));
    }
    detail::quadrature_last_index(history, steps, rule_);
    if (sum_.size() == 0) sum_ = NodalField::Zero(detail::history_width(history));
    const double inject = dt_ * kernel_.amplitude * decay_;
    while (steps_ < steps) {
      sum_ *= decay_;
      if (steps_ >= 1) sum_ += inject * history.laplacian(steps_);
      ++steps_;
    }
    if (rule_.include_right_endpoint && steps >= 1) {
      return sum_ + dt_ * kernel_.amplitude * history.laplacian(steps);
    }
    return sum_;
  }

  std::size_t steps() const { return steps_; }

 private:
  ExponentialKernel kernel_;
  double dt_;
  double decay_;
  QuadratureRule rule_;
  std::size_t steps_ = 0;
  NodalField sum_;
};

/// Running kernel-weighted moments of the raw history for k = a exp(-b t),
/// enough to evaluate the memory energy and the kernel cross term in O(N):
///   weight_sum  = dt sum_i k(t - i dt)
///   field_sum   = dt sum_i k(t - i dt) u_i
///   norm_sum    = dt sum_i k(t - i dt) ||u_i||_eta^2
class ExponentialMemoryMoments {
 public:
  ExponentialMemoryMoments(const ExponentialKernel& kernel, double dt, const Grid& grid, double eta,
                           QuadratureRule rule = {})
      : kernel_(kernel),
        dt_(dt),
        decay_(std::exp(-kernel.rate * dt)),
        grid_(grid),
        eta_(eta),
        rule_(rule) {}

  struct Moments {
    double weight_sum = 0.0;
    NodalField field_sum;
    double norm_sum = 0.0;
  };

  Moments at(const History& history, double t) {
    const std::size_t steps = history.step_index(t);
    if (steps < steps_) {
      throw Error(ErrorKind::OutOfOrder, "ExponentialMemoryMoments: out-of-order query");
    }
    detail::quadrature_last_index(history, steps, rule_);
    if (moments_.field_sum.size() == 0) {
      moments_.field_sum = NodalField::Zero(detail::history_width(history));
    }
    const double inject = dt_ * kernel_.amplitude * decay_;
    while (steps_ < steps) {
      moments_.weight_sum *= decay_;
      moments_.field_sum *= decay_;
      moments_.norm_sum *= decay_;
      if (steps_ >= 1) {
        const NodalField& u = history.raw(steps_);
        moments_.weight_sum += inject;
        moments_.field_sum += inject * u;
        moments_.norm_sum += inject * eta_norm_squared(u, grid_, eta_);
      }
      ++steps_;
    }
    if (rule_.include_right_endpoint && steps >= 1) {
      Moments out = moments_;
      const NodalField& u = history.raw(steps);
      const double w = dt_ * kernel_.amplitude;
      out.weight_sum += w;
      out.field_sum += w * u;
      out.norm_sum += w * eta_norm_squared(u, grid_, eta_);
      return out;
    }
    return moments_;
  }

 private:
  ExponentialKernel kernel_;
  double dt_;
  double decay_;
  Grid grid_;
  double eta_;
  QuadratureRule rule_;
  std::size_t steps_ = 0;
  Moments moments_;
};

}  // namespace viscowave
