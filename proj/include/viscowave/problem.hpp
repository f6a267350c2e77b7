#pragma once

#include <cmath>
#include <functional>

#include "viscowave/error.hpp"
#include "viscowave/kernel.hpp"
#include "viscowave/memory.hpp"
#include "viscowave/operators.hpp"

namespace viscowave {

using SpaceTimeFunction = std::function<double(double x, double t)>;
using SpaceFunction = std::function<double(double x)>;

/// u_tt - u_xx + int_0^t k(t-s) u_xx(s) ds + |u_t|^{q-2} u_t
///     = source_sign |u|^{p-2} u + F(x, t)
/// with u_x(0) = u(0), u_x(1) + eta u(1) = 0.
struct ProblemSpec {
  double p = 3.0;
  double q = 4.0;
  double eta = 1.0;
  int source_sign = 1;
  KernelSpec kernel = make_exponential_kernel(0.5, 1.0, 1.0);
  SpaceTimeFunction forcing;  // empty means F = 0
  SpaceFunction initial_displacement;
  SpaceFunction initial_velocity;
  QuadratureRule memory_rule;
};

inline void validate(const ProblemSpec& problem) {
  detail::require(problem.p >= 2.0 && std::isfinite(problem.p), ErrorKind::InvalidArgument,
                  "problem: p must be >= 2");
  detail::require(problem.q >= 2.0 && std::isfinite(problem.q), ErrorKind::InvalidArgument,
                  "problem: q must be >= 2");
  detail::require(problem.eta >= 0.0 && std::isfinite(problem.eta), ErrorKind::InvalidArgument,
                  "problem: eta must be >= 0");
  detail::require(problem.source_sign == 1 || problem.source_sign == -1, ErrorKind::InvalidArgument,
                  "problem: source_sign must be +1 or -1");
  detail::require(static_cast<bool>(problem.initial_displacement) &&
                      static_cast<bool>(problem.initial_velocity),
                  ErrorKind::InvalidArgument, "problem: initial data missing");
  validate(problem.kernel);
}

struct State {
  double t = 0.0;
  NodalField u;
  NodalField v;
};

inline bool is_finite(const State& s) {
  return std::isfinite(s.t) && s.u.allFinite() && s.v.allFinite();
}

inline State initial_state(const ProblemSpec& problem, const Grid& grid) {
  return State{0.0, grid.sample(problem.initial_displacement),
               grid.sample(problem.initial_velocity)};
}

}  // namespace viscowave
