#pragma once

// CSV and plot-script writers. All numbers use fixed printf formats so
// repeated runs of one config produce byte-identical files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "viscowave/energy.hpp"
#include "viscowave/error.hpp"
#include "viscowave/experiments.hpp"
#include "viscowave/stepper.hpp"

namespace viscowave {

namespace detail {

inline std::string fmt_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_coord(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  return out;
}

}  // namespace detail

inline constexpr const char* kEnergyCsvHeader = "t,E,E1,E2,Gamma,kinetic,elastic,potential,memory";

/// First row "x,<t0>,<t1>,...", then one row per node: x_j, u(x_j, t_i)...
template <typename Value>
void write_field_csv(std::ostream& out, const Grid& grid, std::span<const double> times,
                     Value&& value) {
  out << "x";
  for (double t : times) out << ',' << detail::fmt_coord(t);
  out << '\n';
  for (int j = 0; j < grid.nodes(); ++j) {
    out << detail::fmt_coord(grid.x(j));
    for (std::size_t i = 0; i < times.size(); ++i) out << ',' << detail::fmt_value(value(i, j));
    out << '\n';
  }
}

inline std::vector<double> snapshot_times(const Trajectory& trajectory) {
  std::vector<double> times;
  for (const auto& s : trajectory.snapshots) times.push_back(s.t);
  return times;
}

inline void write_solution_csv(std::ostream& out, const Trajectory& trajectory) {
  const auto times = snapshot_times(trajectory);
  write_field_csv(out, trajectory.grid, times,
                  [&](std::size_t i, int j) { return trajectory.snapshots[i].u[j]; });
}

inline void write_exact_csv(std::ostream& out, const Trajectory& trajectory) {
  const auto times = snapshot_times(trajectory);
  write_field_csv(out, trajectory.grid, times, [&](std::size_t i, int j) {
    return exact_solution(trajectory.grid.x(j), times[i]);
  });
}

inline void write_energy_csv(std::ostream& out, std::span<const EnergyReport> series) {
  out << kEnergyCsvHeader << '\n';
  for (const auto& r : series) {
    out << detail::fmt_coord(r.t);
    for (double v : {r.E, r.E1, r.E2, r.Gamma, r.kinetic, r.elastic, r.potential, r.memory}) {
      out << ',' << detail::fmt_value(v);
    }
    out << '\n';
  }
}

inline void write_picard_csv(std::ostream& out, const Trajectory& trajectory, double dt) {
  out << "t,iterations,residual\n";
  for (std::size_t i = 0; i < trajectory.picard_iterations.size(); ++i) {
    out << detail::fmt_coord(static_cast<double>(i + 1) * dt) << ','
        << trajectory.picard_iterations[i] << ','
        << detail::fmt_value(trajectory.picard_residuals[i]) << '\n';
  }
}

inline void write_error_csv(std::ostream& out, const ErrorReport& report) {
  out << "t,max_abs,l2\n";
  for (const auto& s : report.series) {
    out << detail::fmt_coord(s.t) << ',' << detail::fmt_value(s.max_abs) << ','
        << detail::fmt_value(s.l2) << '\n';
  }
}

inline void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
  out << "level,n,h,dt,max_abs,observed_order\n";
  for (const auto& r : rows) {
    out << r.level << ',' << r.n << ',' << detail::fmt_value(r.h) << ',' << detail::fmt_value(r.dt)
        << ',' << detail::fmt_value(r.max_abs) << ','
        << (r.observed_order ? detail::fmt_value(*r.observed_order) : "") << '\n';
  }
}

/// Writes plots.py: surface plots for every solution-shaped CSV present and
/// a log-scale E(t) curve when energy.csv exists. Needs numpy + matplotlib.
inline void write_plot_script(const std::filesystem::path& dir) {
  auto out = detail::open_output(dir / "plots.py");
  out << R"PY(#!/usr/bin/env python3
"""Plots for a viscowave run directory. Usage: python3 plots.py [run_dir]"""
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

run_dir = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))


def load_field(path):
    with open(path) as f:
        times = np.array([float(v) for v in f.readline().strip().split(",")[1:]])
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], times, data[:, 1:]


for name in ("solution", "exact"):
    path = os.path.join(run_dir, name + ".csv")
    if not os.path.exists(path):
        continue
    x, t, u = load_field(path)
    X, T = np.meshgrid(x, t, indexing="ij")
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(projection="3d")
    ax.plot_surface(X, T, u, cmap="viridis", linewidth=0)
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.set_zlabel("u(x, t)")
    ax.set_title(name)
    fig.savefig(os.path.join(run_dir, name + ".png"), dpi=120)
    plt.close(fig)

energy = os.path.join(run_dir, "energy.csv")
if os.path.exists(energy):
    data = np.genfromtxt(energy, delimiter=",", names=True)
    fig, ax = plt.subplots(figsize=(7, 4))
    positive = data["E"] > 0
    ax.semilogy(data["t"][positive], data["E"][positive], label="E(t)")
    ax.semilogy(data["t"][positive], np.abs(data["Gamma"][positive]), "--", label="Gamma(t)")
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(run_dir, "energy.png"), dpi=120)
    plt.close(fig)
)PY";
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto out = detail::open_output(path);
  out << text;
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  auto out = detail::open_output(path);
  writer(out);
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

}  // namespace viscowave
