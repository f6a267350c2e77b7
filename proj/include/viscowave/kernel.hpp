#pragma once

// Memory kernels k(t) for the convolution term, the relaxation hypotheses
// checked before decay experiments, and kernel-derived constants.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "viscowave/error.hpp"

namespace viscowave {

/// k(t) = amplitude * exp(-rate * t).
struct ExponentialKernel {
  double amplitude;
  double rate;
};

/// Samples k(i*dt), i = 0..n-1, linearly interpolated in between.
struct TabulatedKernel {
  double dt;
  std::vector<double> samples;

  double t_max() const { return dt * static_cast<double>(samples.size() - 1); }
};

struct KernelSpec {
  std::variant<ExponentialKernel, TabulatedKernel> form;
  std::optional<double> zeta;

  bool is_exponential() const { return std::holds_alternative<ExponentialKernel>(form); }
  const ExponentialKernel& exponential() const { return std::get<ExponentialKernel>(form); }
  const TabulatedKernel& tabulated() const { return std::get<TabulatedKernel>(form); }
};

/// Pass/fail of each relaxation hypothesis clause.
struct HypothesisChecks {
  bool nonnegative = false;          // k >= 0 at every sample
  bool k0_positive = false;          // k(0) > 0
  bool k_infinity_in_range = false;  // 0 < 1 - int k < 1
  bool decay_condition = false;      // k' + zeta k <= 0
  bool tail_covered = false;         // tabulated: last sample below 1e-12 k(0)

  bool all() const {
    return nonnegative && k0_positive && k_infinity_in_range && decay_condition && tail_covered;
  }
};

struct KernelReport {
  double k0 = 0.0;
  double total_mass = 0.0;
  double k_infinity = 0.0;
  double zeta = 0.0;
  double zeta_max = 0.0;
  HypothesisChecks passes;
};

inline constexpr double kTailFraction = 1e-12;

namespace detail {

inline double time_tolerance(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

// Integral over [0, t] of the piecewise-linear interpolant of uniformly
// spaced samples f(i*dt); exact trapezoid including a partial last cell.
inline double integrate_samples(std::span<const double> f, double dt, double t) {
  double acc = 0.0;
  const std::size_t n = f.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double left = dt * static_cast<double>(i);
    if (left >= t) break;
    const double right = left + dt;
    if (right <= t) {
      acc += 0.5 * dt * (f[i] + f[i + 1]);
    } else {
      const double frac = (t - left) / dt;
      const double fr = f[i] + frac * (f[i + 1] - f[i]);
      acc += 0.5 * (t - left) * (f[i] + fr);
      break;
    }
  }
  return acc;
}

}  // namespace detail

inline void validate(const KernelSpec& spec) {
  if (spec.is_exponential()) {
    const auto& e = spec.exponential();
    detail::require(std::isfinite(e.amplitude) && std::isfinite(e.rate), ErrorKind::NonFinite,
                    "exponential kernel parameters must be finite");
    detail::require(e.amplitude > 0.0 && e.rate > 0.0, ErrorKind::InvalidArgument,
                    "exponential kernel requires a > 0 and b > 0");
  } else {
    const auto& tab = spec.tabulated();
    detail::require(std::isfinite(tab.dt) && tab.dt > 0.0, ErrorKind::InvalidArgument,
                    "tabulated kernel requires dt > 0");
    detail::require(tab.samples.size() >= 2, ErrorKind::InvalidArgument,
                    "tabulated kernel requires at least 2 samples");
    detail::require(std::all_of(tab.samples.begin(), tab.samples.end(),
                                [](double s) { return std::isfinite(s); }),
                    ErrorKind::NonFinite, "tabulated kernel samples must be finite");
  }
  if (spec.zeta) {
    detail::require(std::isfinite(*spec.zeta) && *spec.zeta >= 0.0, ErrorKind::InvalidArgument,
                    "zeta must be >= 0");
  }
}

inline KernelSpec make_exponential_kernel(double amplitude, double rate,
                                          std::optional<double> zeta = std::nullopt) {
  KernelSpec spec{ExponentialKernel{amplitude, rate}, zeta};
  validate(spec);
  return spec;
}

inline KernelSpec make_tabulated_kernel(double dt, std::vector<double> samples,
                                        std::optional<double> zeta = std::nullopt) {
  KernelSpec spec{TabulatedKernel{dt, std::move(samples)}, zeta};
  validate(spec);
  return spec;
}

/// The horizon up to which k can be evaluated (infinite for closed forms).
inline double kernel_horizon(const KernelSpec& spec) {
  if (spec.is_exponential()) return std::numeric_limits<double>::infinity();
  return spec.tabulated().t_max();
}

inline double kernel_eval(const KernelSpec& spec, double t) {
  detail::require(std::isfinite(t), ErrorKind::NonFinite, "kernel_eval: t is not finite");
  detail::require(t >= -detail::time_tolerance(t), ErrorKind::OutOfRange, "kernel_eval: t < 0");
  t = std::max(t, 0.0);
  double value = 0.0;
  if (spec.is_exponential()) {
    const auto& e = spec.exponential();
    value = e.amplitude * std::exp(-e.rate * t);
  } else {
    const auto& tab = spec.tabulated();
    const double t_max = tab.t_max();
    if (t > t_max + detail::time_tolerance(t_max)) {
      throw Error(ErrorKind::OutOfRange, "kernel_eval: t=" + std::to_string(t) +
                                             " beyond tabulated range " + std::to_string(t_max));
    }
    const double pos = std::min(t, t_max) / tab.dt;
    const auto i = std::min(static_cast<std::size_t>(pos), tab.samples.size() - 2);
    const double frac = pos - static_cast<double>(i);
    value = tab.samples[i] + frac * (tab.samples[i + 1] - tab.samples[i]);
  }
  detail::require(std::isfinite(value), ErrorKind::NonFinite, "kernel_eval: non-finite value");
  return value;
}

/// int_0^t k(s) ds; trapezoid on the interpolant for tabulated kernels.
inline double kernel_integral(const KernelSpec& spec, double t) {
  detail::require(t >= 0.0, ErrorKind::OutOfRange, "kernel_integral: t < 0");
  if (spec.is_exponential()) {
    const auto& e = spec.exponential();
    return e.amplitude / e.rate * (-std::expm1(-e.rate * t));
  }
  const auto& tab = spec.tabulated();
  detail::require(t <= tab.t_max() + detail::time_tolerance(tab.t_max()), ErrorKind::OutOfRange,
                  "kernel_integral: t beyond tabulated range");
  return detail::integrate_samples(tab.samples, tab.dt, std::min(t, tab.t_max()));
}

/// int_0^inf k. Tabulated kernels are truncated at the last sample.
inline double kernel_total_mass(const KernelSpec& spec) {
  if (spec.is_exponential()) {
    const auto& e = spec.exponential();
    return e.amplitude / e.rate;
  }
  return kernel_integral(spec, spec.tabulated().t_max());
}

namespace detail {

// Finite-difference k' at each sample: centered inside, one-sided at the ends.
inline std::vector<double> sample_derivatives(const TabulatedKernel& tab) {
  const auto& s = tab.samples;
  const std::size_t n = s.size();
  std::vector<double> d(n);
  d.front() = (s[1] - s[0]) / tab.dt;
  d.back() = (s[n - 1] - s[n - 2]) / tab.dt;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (s[i + 1] - s[i - 1]) / (2.0 * tab.dt);
  return d;
}

}  // namespace detail

/// Evaluates every relaxation hypothesis clause. Failures are reported in
/// the returned checks, never thrown.
inline KernelReport validate_hypotheses(const KernelSpec& spec, double zeta) {
  validate(spec);
  detail::require(zeta > 0.0, ErrorKind::InvalidArgument, "validate_hypotheses: zeta must be > 0");

  KernelReport report;
  report.zeta = zeta;
  report.k0 = kernel_eval(spec, 0.0);
  report.total_mass = kernel_total_mass(spec);
  report.k_infinity = 1.0 - report.total_mass;

  if (spec.is_exponential()) {
    const auto& e = spec.exponential();
    report.zeta_max = e.rate;
    report.passes.nonnegative = true;
    report.passes.decay_condition = zeta <= e.rate;
    report.passes.tail_covered = true;
  } else {
    const auto& tab = spec.tabulated();
    const auto deriv = detail::sample_derivatives(tab);
    report.passes.nonnegative =
        std::all_of(tab.samples.begin(), tab.samples.end(), [](double s) { return s >= 0.0; });
    bool decays = true;
    double zeta_max = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tab.samples.size(); ++i) {
      const double k = tab.samples[i];
      if (deriv[i] + zeta * k > 0.0) decays = false;
      if (k > 0.0) {
        zeta_max = std::min(zeta_max, -deriv[i] / k);
      } else if (deriv[i] > 0.0) {
        zeta_max = -std::numeric_limits<double>::infinity();
      }
    }
    report.zeta_max = zeta_max;
    report.passes.decay_condition = decays;
    report.passes.tail_covered = std::abs(tab.samples.back()) < kTailFraction * std::abs(report.k0);
  }
  report.passes.k0_positive = report.k0 > 0.0;
  report.passes.k_infinity_in_range = report.k_infinity > 0.0 && report.k_infinity < 1.0;
  return report;
}

/// Growth constant of the a-priori energy bound over a horizon T:
/// 2 [3 + 2|k(0)| + 6 ||k||^2_{L2(0,T)} + T ||k'||^2_{L2(0,T)}].
inline double theory_constant_c2t(const KernelSpec& spec, double horizon) {
  validate(spec);
  detail::require(horizon > 0.0 && std::isfinite(horizon), ErrorKind::InvalidArgument,
                  "theory_constant_c2t: T must be > 0");
  const double k0 = std::abs(kernel_eval(spec, 0.0));
  double k_sq = 0.0;
  double dk_sq = 0.0;
  if (spec.is_exponential()) {
    const auto& e = spec.exponential();
    const double span = -std::expm1(-2.0 * e.rate * horizon);
    k_sq = e.amplitude * e.amplitude * span / (2.0 * e.rate);
    dk_sq = e.amplitude * e.amplitude * e.rate * span / 2.0;
  } else {
    const auto& tab = spec.tabulated();
    detail::require(tab.samples.size() >= 3, ErrorKind::InvalidArgument,
                    "theory_constant_c2t: tabulated kernel needs >= 3 samples");
    detail::require(horizon <= tab.t_max() + detail::time_tolerance(tab.t_max()),
                    ErrorKind::OutOfRange, "theory_constant_c2t: T beyond tabulated range");
    const double t = std::min(horizon, tab.t_max());
    std::vector<double> squares(tab.samples.size());
    std::transform(tab.samples.begin(), tab.samples.end(), squares.begin(),
                   [](double s) { return s * s; });
    k_sq = detail::integrate_samples(squares, tab.dt, t);
    // The interpolant's derivative is constant per cell.
    for (std::size_t i = 0; i + 1 < tab.samples.size(); ++i) {
      const double left = tab.dt * static_cast<double>(i);
      if (left >= t) break;
      const double width = std::min(tab.dt, t - left);
      const double slope = (tab.samples[i + 1] - tab.samples[i]) / tab.dt;
      dk_sq += slope * slope * width;
    }
  }
  return 2.0 * (3.0 + 2.0 * k0 + 6.0 * k_sq + horizon * dk_sq);
}

/// g1(t_n) = g(t_n) - dt * sum_{i=1}^{n-1} k((n-i) dt) g(t_i), the same
/// endpoint-excluding rule the solver's memory term uses.
inline std::vector<double> g1_transform(std::span<const double> g, double dt,
                                        const KernelSpec& spec,
                                        std::optional<double> horizon = std::nullopt) {
  validate(spec);
  detail::require(dt > 0.0 && std::isfinite(dt), ErrorKind::InvalidArgument,
                  "g1_transform: dt must be > 0");
  if (horizon) {
    const double steps = *horizon / dt;
    const auto expected = static_cast<std::size_t>(std::llround(steps)) + 1;
    detail::require(std::abs(steps - std::round(steps)) < 1e-9 && g.size() == expected,
                    ErrorKind::LengthMismatch,
                    "g1_transform: series length does not match the requested horizon");
  }
  const std::size_t n = g.size();
  std::vector<double> weights(n);
  for (std::size_t m = 0; m < n; ++m) weights[m] = kernel_eval(spec, dt * static_cast<double>(m));
  std::vector<double> out(n);
  for (std::size_t m = 0; m < n; ++m) {
    double acc = 0.0;
    for (std::size_t i = 1; i < m; ++i) acc += weights[m - i] * g[i];
    out[m] = g[m] - dt * acc;
  }
  return out;
}

/// Reads a two-column CSV (header row, then t,k) with uniform spacing from t = 0.
inline KernelSpec load_tabulated_kernel(const std::string& path,
                                        std::optional<double> zeta = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open kernel file " + path);
  std::string line;
  std::getline(in, line);
  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double t = 0.0;
    double k = 0.0;
    if (!(row >> t >> k)) throw Error(ErrorKind::ConfigError, "malformed kernel row: " + line);
    times.push_back(t);
    values.push_back(k);
  }
  if (times.size() < 2) throw Error(ErrorKind::ConfigError, "kernel file needs >= 2 rows");
  const double dt = times[1] - times[0];
  if (std::abs(times[0]) > 1e-12)
    throw Error(ErrorKind::ConfigError, "kernel file must start at t=0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - dt * static_cast<double>(i)) > 1e-9 * std::max(1.0, times[i])) {
      throw Error(ErrorKind::ConfigError, "kernel file must use uniform spacing");
    }
  }
  return make_tabulated_kernel(dt, std::move(values), zeta);
}

}  // namespace viscowave
