#pragma once

// The manufactured test problem: p = 3 type source u^2, cubic damping,
// k(t) = exp(-t)/2, eta = 1 and the exact solution
//   U(x, t) = (-x^2 + x + 1) exp(-t).

#include <cmath>
#include <string>
#include <utility>

#include "viscowave/error.hpp"
#include "viscowave/kernel.hpp"
#include "viscowave/operators.hpp"
#include "viscowave/problem.hpp"

namespace viscowave {

namespace detail {

inline void check_space_time(double x, double t) {
  if (!(x >= 0.0 && x <= 1.0 && t >= 0.0)) {
    throw Error(ErrorKind::DomainError, "(x, t) = (" + std::to_string(x) + ", " +
                                            std::to_string(t) + ") outside [0,1]x[0,inf)");
  }
}

}  // namespace detail

inline double reference_profile(double x) { return -x * x + x + 1.0; }

inline double exact_solution(double x, double t) {
  detail::check_space_time(x, t);
  return reference_profile(x) * std::exp(-t);
}

/// F = (2 - t) e^{-t} + U (1 - U - U^2)
inline double manufactured_forcing(double x, double t) {
  const double u = exact_solution(x, t);
  return (2.0 - t) * std::exp(-t) + u * (1.0 - u - u * u);
}

/// u0 = -x^2 + x + 1, u1 = -u0.
inline std::pair<NodalField, NodalField> reference_initial_data(const Grid& grid) {
  NodalField u0 = grid.sample(reference_profile);
  NodalField u1 = -u0;
  return {std::move(u0), std::move(u1)};
}

/// The manufactured-solution problem; with `with_forcing` false this is the
/// unforced run started from the same data.
inline ProblemSpec reference_problem(bool with_forcing = true) {
  ProblemSpec problem;
  problem.p = 3.0;
  problem.q = 4.0;
  problem.eta = 1.0;
  problem.source_sign = 1;
  problem.kernel = make_exponential_kernel(0.5, 1.0, 1.0);
  if (with_forcing) problem.forcing = manufactured_forcing;
  problem.initial_displacement = reference_profile;
  problem.initial_velocity = [](double x) { return -reference_profile(x); };
  return problem;
}

/// Dissipative-source variant (source_sign = -1, F = 0) from the same data,
/// the setting of the exponential decay result.
inline ProblemSpec decay_problem() {
  ProblemSpec problem = reference_problem(false);
  problem.source_sign = -1;
  return problem;
}

}  // namespace viscowave
