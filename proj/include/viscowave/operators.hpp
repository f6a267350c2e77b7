#pragma once

// Uniform grid on [0, 1], the Robin-boundary discrete Laplacian, the
// boundary-weighted bilinear form a_eta and the norms built on it.

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "viscowave/error.hpp"

namespace viscowave {

/// Nodal values u_j = u(x_j), j = 0..N.
using NodalField = Eigen::VectorXd;

class Grid {
 public:
  explicit Grid(int cells) : cells_(cells), h_(0.0) {
    detail::require(cells >= 2, ErrorKind::InvalidArgument, "grid needs N >= 2 cells");
    h_ = 1.0 / static_cast<double>(cells);
  }

  int cells() const { return cells_; }
  int nodes() const { return cells_ + 1; }
  double h() const { return h_; }
  double x(int j) const { return static_cast<double>(j) * h_; }

  template <typename F>
  NodalField sample(F&& f) const {
    NodalField out(nodes());
    for (int j = 0; j < nodes(); ++j) out[j] = f(x(j));
    return out;
  }

  bool operator==(const Grid&) const = default;

 private:
  int cells_;
  double h_;
};

namespace detail {

inline void check_aligned(const NodalField& u, const Grid& grid, const char* who) {
  if (u.size() != grid.nodes()) {
    throw Error(ErrorKind::LengthMismatch, std::string(who) + ": field has " +
                                               std::to_string(u.size()) + " values, grid has " +
                                               std::to_string(grid.nodes()) + " nodes");
  }
}

}  // namespace detail

/// Second difference with the Robin rows u_x(0) = u(0) and u_x(1) + eta u(1) = 0:
///   node 0: [-(1+h) u_0 + u_1] / h^2
///   node N: [u_{N-1} - (1 + eta h) u_N] / h^2
inline NodalField robin_laplacian(const NodalField& u, const Grid& grid, double eta) {
  detail::check_aligned(u, grid, "robin_laplacian");
  const int n = grid.cells();
  const double h = grid.h();
  const double inv_h2 = 1.0 / (h * h);
  NodalField out(grid.nodes());
  out[0] = (-(1.0 + h) * u[0] + u[1]) * inv_h2;
  for (int j = 1; j < n; ++j) out[j] = (u[j - 1] - 2.0 * u[j] + u[j + 1]) * inv_h2;
  out[n] = (u[n - 1] - (1.0 + eta * h) * u[n]) * inv_h2;
  return out;
}

/// int u_x v_x (cell-wise forward differences) + u(0) v(0) + eta u(1) v(1).
inline double bilinear_a_eta(const NodalField& u, const NodalField& v, const Grid& grid,
                             double eta) {
  detail::check_aligned(u, grid, "bilinear_a_eta");
  detail::check_aligned(v, grid, "bilinear_a_eta");
  const int n = grid.cells();
  double gradient = 0.0;
  for (int j = 0; j < n; ++j) gradient += (u[j + 1] - u[j]) * (v[j + 1] - v[j]);
  return gradient / grid.h() + u[0] * v[0] + eta * (u[n] * v[n]);
}

inline double eta_norm_squared(const NodalField& v, const Grid& grid, double eta) {
  return bilinear_a_eta(v, v, grid, eta);
}

inline double eta_norm(const NodalField& v, const Grid& grid, double eta) {
  const double sq = eta_norm_squared(v, grid, eta);
  detail::require(sq >= -1e-12, ErrorKind::DomainError,
                  "eta_norm: negative radicand " + std::to_string(sq));
  return std::sqrt(std::max(sq, 0.0));
}

/// Trapezoid quadrature of nodal values over [0, 1].
inline double trapezoid(const NodalField& f, const Grid& grid) {
  detail::check_aligned(f, grid, "trapezoid");
  const int n = grid.cells();
  return grid.h() * (f.sum() - 0.5 * (f[0] + f[n]));
}

/// Trapezoid L2 inner product <u, v>.
inline double inner_l2(const NodalField& u, const NodalField& v, const Grid& grid) {
  detail::check_aligned(u, grid, "inner_l2");
  detail::check_aligned(v, grid, "inner_l2");
  return trapezoid(u.cwiseProduct(v), grid);
}

/// int |v_x|^2 by forward differences.
inline double gradient_norm_squared(const NodalField& v, const Grid& grid) {
  detail::check_aligned(v, grid, "gradient_norm_squared");
  const int n = grid.cells();
  double acc = 0.0;
  for (int j = 0; j < n; ++j) acc += (v[j + 1] - v[j]) * (v[j + 1] - v[j]);
  return acc / grid.h();
}

inline double norm_1_squared(const NodalField& v, const Grid& grid) {
  detail::check_aligned(v, grid, "norm_1");
  return v[0] * v[0] + gradient_norm_squared(v, grid);
}

/// (v(0)^2 + ||v_x||^2)^{1/2}
inline double norm_1(const NodalField& v, const Grid& grid) {
  return std::sqrt(norm_1_squared(v, grid));
}

inline double norm_l2_squared(const NodalField& v, const Grid& grid) {
  return inner_l2(v, v, grid);
}

inline double norm_l2(const NodalField& v, const Grid& grid) {
  return std::sqrt(norm_l2_squared(v, grid));
}

/// ||v||_{L^p}^p by trapezoid quadrature of |v|^p.
inline double norm_lp_pow(const NodalField& v, const Grid& grid, double p) {
  detail::require(p >= 2.0, ErrorKind::InvalidArgument, "norm_lp: p must be >= 2");
  detail::check_aligned(v, grid, "norm_lp");
  return trapezoid(v.cwiseAbs().array().pow(p).matrix(), grid);
}

inline double norm_lp(const NodalField& v, const Grid& grid, double p) {
  return std::pow(norm_lp_pow(v, grid, p), 1.0 / p);
}

/// ||v||_{H^1}^2 = ||v||^2 + ||v_x||^2
inline double norm_h1_squared(const NodalField& v, const Grid& grid) {
  return norm_l2_squared(v, grid) + gradient_norm_squared(v, grid);
}

/// |z|^{q-2} z
inline double psi_q(double z, double q) {
  if (q == 2.0) return z;
  if (z == 0.0) return 0.0;
  if (q == 4.0) return z * z * z;
  if (q == 3.0) return std::abs(z) * z;
  return std::pow(std::abs(z), q - 2.0) * z;
}

/// Diagnostic only: sup|v| against sqrt(2) ||v||_1. Not a theorem for
/// arbitrary discrete fields.
struct MaxNormCheck {
  double max_norm;
  double bound;
  bool holds() const { return max_norm <= bound; }
};

inline MaxNormCheck max_norm_check(const NodalField& v, const Grid& grid) {
  return {v.cwiseAbs().maxCoeff(), std::sqrt(2.0) * norm_1(v, grid)};
}

}  // namespace viscowave
