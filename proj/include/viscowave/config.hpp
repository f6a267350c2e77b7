#pragma once

// Run configuration: flat `key = value` text with dotted sections, e.g.
//
//   # manufactured-solution check
//   problem.forcing = manufactured
//   kernel.form = exponential
//   kernel.a = 0.5
//   solver.n = 50
//   solver.dt = 0.001
//
// Blank lines and lines starting with '#' are ignored. Unknown keys are errors.

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "viscowave/error.hpp"
#include "viscowave/kernel.hpp"
#include "viscowave/problem.hpp"
#include "viscowave/reference_problem.hpp"
#include "viscowave/stepper.hpp"

namespace viscowave {

enum class RunMode { Simulate, Verify, Decay, Convergence, ValidateKernel };

inline std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Simulate:
      return "simulate";
    case RunMode::Verify:
      return "verify";
    case RunMode::Decay:
      return "decay";
    case RunMode::Convergence:
      return "convergence";
    case RunMode::ValidateKernel:
      return "validate-kernel";
  }
  return "simulate";
}

struct KernelConfig {
  std::string form = "exponential";  // exponential | tabulated
  double a = 0.5;
  double b = 1.0;
  std::optional<double> zeta = 1.0;
  std::string file;  // tabulated: CSV with header, columns t,k

  bool operator==(const KernelConfig&) const = default;
};

struct ProblemConfig {
  double p = 3.0;
  double q = 4.0;
  double eta = 1.0;
  int source_sign = 1;
  std::string forcing = "manufactured";  // manufactured | zero
  std::string initial = "reference";     // reference | zero

  bool operator==(const ProblemConfig&) const = default;
};

struct VerifyOptions {
  double tolerance = 0.05;  // relative space-time L2 error

  bool operator==(const VerifyOptions&) const = default;
};

struct DecayOptions {
  double window_lo = 0.5;
  std::optional<double> window_hi;  // defaults to t_final
  double min_r_squared = 0.95;
  double max_energy_ratio = 0.2;     // E(t_final) / E(0)
  double monotone_tolerance = 1e-6;  // allowed per-step increase, relative to E(0)

  bool operator==(const DecayOptions&) const = default;
};

struct ConvergenceOptions {
  int levels = 3;
  double min_order = 0.6;

  bool operator==(const ConvergenceOptions&) const = default;
};

struct RunConfig {
  RunMode mode = RunMode::Simulate;
  ProblemConfig problem;
  KernelConfig kernel;
  bool memory_include_right_endpoint = false;
  SolverConfig solver;
  VerifyOptions verify;
  DecayOptions decay;
  ConvergenceOptions convergence;
  std::string output_dir = "out";
  bool emit_plots = true;
  // Directory relative paths (kernel.file) resolve against; not serialized.
  std::filesystem::path base_dir;

  bool operator==(const RunConfig& other) const {
    const auto& s = solver;
    const auto& o = other.solver;
    return mode == other.mode && problem == other.problem && kernel == other.kernel &&
           memory_include_right_endpoint == other.memory_include_right_endpoint &&
           s.grid_n == o.grid_n && s.dt == o.dt && s.t_final == o.t_final &&
           s.picard_tol == o.picard_tol && s.picard_max_iters == o.picard_max_iters &&
           s.regularization_eps == o.regularization_eps && s.snapshot_every == o.snapshot_every &&
           s.allow_unstable_dt == o.allow_unstable_dt && s.record_energy == o.record_energy &&
           s.lyapunov.eps1 == o.lyapunov.eps1 && s.lyapunov.eps2 == o.lyapunov.eps2 &&
           verify == other.verify && decay == other.decay && convergence == other.convergence &&
           output_dir == other.output_dir && emit_plots == other.emit_plots;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

inline double parse_double(const std::string& key, const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    throw Error(ErrorKind::ConfigError, key + ": expected a number, got '" + text + "'");
  }
  return value;
}

inline int parse_int(const std::string& key, const std::string& text) {
  const double value = parse_double(key, text);
  const bool in_range =
      value >= std::numeric_limits<int>::min() && value <= std::numeric_limits<int>::max();
  if (!in_range || value != std::trunc(value)) {
    throw Error(ErrorKind::ConfigError, key + ": expected an integer, got '" + text + "'");
  }
  return static_cast<int>(value);
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(ErrorKind::ConfigError, key + ": expected true/false, got '" + text + "'");
}

inline std::string parse_choice(const std::string& key, const std::string& text,
                                std::initializer_list<std::string_view> choices) {
  for (auto c : choices) {
    if (text == c) return text;
  }
  throw Error(ErrorKind::ConfigError, key + ": unsupported value '" + text + "'");
}

inline RunMode parse_mode(const std::string& text) {
  for (auto m : {RunMode::Simulate, RunMode::Verify, RunMode::Decay, RunMode::Convergence,
                 RunMode::ValidateKernel}) {
    if (text == to_string(m)) return m;
  }
  throw Error(ErrorKind::ConfigError, "mode: unsupported value '" + text + "'");
}

}  // namespace detail

inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  using Setter = std::function<void(RunConfig&, const std::string&)>;
  static const std::map<std::string, Setter, std::less<>> setters = {
      {"mode", [](RunConfig& c, const std::string& v) { c.mode = parse_mode(v); }},
      {"problem.p",
       [](RunConfig& c, const std::string& v) { c.problem.p = parse_double("problem.p", v); }},
      {"problem.q",
       [](RunConfig& c, const std::string& v) { c.problem.q = parse_double("problem.q", v); }},
      {"problem.eta",
       [](RunConfig& c, const std::string& v) { c.problem.eta = parse_double("problem.eta", v); }},
      {"problem.source_sign",
       [](RunConfig& c, const std::string& v) {
         const int sign = parse_int("problem.source_sign", v);
         if (sign != 1 && sign != -1) {
           throw Error(ErrorKind::ConfigError, "problem.source_sign must be 1 or -1, got " + v);
         }
         c.problem.source_sign = sign;
       }},
      {"problem.forcing",
       [](RunConfig& c, const std::string& v) {
         c.problem.forcing = parse_choice("problem.forcing", v, {"manufactured", "zero"});
       }},
      {"problem.initial",
       [](RunConfig& c, const std::string& v) {
         c.problem.initial = parse_choice("problem.initial", v, {"reference", "zero"});
       }},
      {"kernel.form",
       [](RunConfig& c, const std::string& v) {
         c.kernel.form = parse_choice("kernel.form", v, {"exponential", "tabulated"});
       }},
      {"kernel.a",
       [](RunConfig& c, const std::string& v) { c.kernel.a = parse_double("kernel.a", v); }},
      {"kernel.b",
       [](RunConfig& c, const std::string& v) { c.kernel.b = parse_double("kernel.b", v); }},
      {"kernel.zeta",
       [](RunConfig& c, const std::string& v) {
         if (v == "none") {
           c.kernel.zeta.reset();
         } else {
           c.kernel.zeta = parse_double("kernel.zeta", v);
         }
       }},
      {"kernel.file", [](RunConfig& c, const std::string& v) { c.kernel.file = v; }},
      {"memory.include_right_endpoint",
       [](RunConfig& c, const std::string& v) {
         c.memory_include_right_endpoint = parse_bool("memory.include_right_endpoint", v);
       }},
      {"solver.n",
       [](RunConfig& c, const std::string& v) { c.solver.grid_n = parse_int("solver.n", v); }},
      {"solver.dt",
       [](RunConfig& c, const std::string& v) { c.solver.dt = parse_double("solver.dt", v); }},
      {"solver.t_final",
       [](RunConfig& c, const std::string& v) {
         c.solver.t_final = parse_double("solver.t_final", v);
       }},
      {"solver.picard_tol",
       [](RunConfig& c, const std::string& v) {
         c.solver.picard_tol = parse_double("solver.picard_tol", v);
       }},
      {"solver.picard_max_iters",
       [](RunConfig& c, const std::string& v) {
         c.solver.picard_max_iters = parse_int("solver.picard_max_iters", v);
       }},
      {"solver.regularization_eps",
       [](RunConfig& c, const std::string& v) {
         c.solver.regularization_eps = parse_double("solver.regularization_eps", v);
       }},
      {"solver.snapshot_every",
       [](RunConfig& c, const std::string& v) {
         c.solver.snapshot_every = parse_int("solver.snapshot_every", v);
       }},
      {"solver.allow_unstable_dt",
       [](RunConfig& c, const std::string& v) {
         c.solver.allow_unstable_dt = parse_bool("solver.allow_unstable_dt", v);
       }},
      {"solver.record_energy",
       [](RunConfig& c, const std::string& v) {
         c.solver.record_energy = parse_bool("solver.record_energy", v);
       }},
      {"energy.eps1",
       [](RunConfig& c, const std::string& v) {
         c.solver.lyapunov.eps1 = parse_double("energy.eps1", v);
       }},
      {"energy.eps2",
       [](RunConfig& c, const std::string& v) {
         c.solver.lyapunov.eps2 = parse_double("energy.eps2", v);
       }},
      {"verify.tolerance",
       [](RunConfig& c, const std::string& v) {
         c.verify.tolerance = parse_double("verify.tolerance", v);
       }},
      {"decay.window_lo",
       [](RunConfig& c, const std::string& v) {
         c.decay.window_lo = parse_double("decay.window_lo", v);
       }},
      {"decay.window_hi",
       [](RunConfig& c, const std::string& v) {
         if (v == "t_final") {
           c.decay.window_hi.reset();
         } else {
           c.decay.window_hi = parse_double("decay.window_hi", v);
         }
       }},
      {"decay.min_r_squared",
       [](RunConfig& c, const std::string& v) {
         c.decay.min_r_squared = parse_double("decay.min_r_squared", v);
       }},
      {"decay.max_energy_ratio",
       [](RunConfig& c, const std::string& v) {
         c.decay.max_energy_ratio = parse_double("decay.max_energy_ratio", v);
       }},
      {"decay.monotone_tolerance",
       [](RunConfig& c, const std::string& v) {
         c.decay.monotone_tolerance = parse_double("decay.monotone_tolerance", v);
       }},
      {"convergence.levels",
       [](RunConfig& c, const std::string& v) {
         c.convergence.levels = parse_int("convergence.levels", v);
       }},
      {"convergence.min_order",
       [](RunConfig& c, const std::string& v) {
         c.convergence.min_order = parse_double("convergence.min_order", v);
       }},
      {"output.dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
      {"output.emit_plots",
       [](RunConfig& c, const std::string& v) {
         c.emit_plots = parse_bool("output.emit_plots", v);
       }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw Error(ErrorKind::ConfigError, "unknown key '" + key + "'");
  it->second(cfg, value);
}

inline RunConfig parse_config(std::istream& in, RunConfig cfg = {}) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ConfigError,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_setting(cfg, detail::trim(std::string_view(text).substr(0, eq)),
                  detail::trim(std::string_view(text).substr(eq + 1)));
  }
  return cfg;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open config " + path.string());
  RunConfig cfg = parse_config(in);
  cfg.base_dir = path.parent_path();
  return cfg;
}

/// Every key, in a stable order, with doubles printed round-trip exact.
inline std::string serialize_config(const RunConfig& cfg) {
  using detail::format_double;
  std::ostringstream out;
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "mode = " << to_string(cfg.mode) << "\n"
      << "problem.p = " << format_double(cfg.problem.p) << "\n"
      << "problem.q = " << format_double(cfg.problem.q) << "\n"
      << "problem.eta = " << format_double(cfg.problem.eta) << "\n"
      << "problem.source_sign = " << cfg.problem.source_sign << "\n"
      << "problem.forcing = " << cfg.problem.forcing << "\n"
      << "problem.initial = " << cfg.problem.initial << "\n"
      << "kernel.form = " << cfg.kernel.form << "\n"
      << "kernel.a = " << format_double(cfg.kernel.a) << "\n"
      << "kernel.b = " << format_double(cfg.kernel.b) << "\n"
      << "kernel.zeta = " << (cfg.kernel.zeta ? format_double(*cfg.kernel.zeta) : "none") << "\n";
  if (!cfg.kernel.file.empty()) out << "kernel.file = " << cfg.kernel.file << "\n";
  out << "memory.include_right_endpoint = " << b(cfg.memory_include_right_endpoint) << "\n"
      << "solver.n = " << cfg.solver.grid_n << "\n"
      << "solver.dt = " << format_double(cfg.solver.dt) << "\n"
      << "solver.t_final = " << format_double(cfg.solver.t_final) << "\n"
      << "solver.picard_tol = " << format_double(cfg.solver.picard_tol) << "\n"
      << "solver.picard_max_iters = " << cfg.solver.picard_max_iters << "\n"
      << "solver.regularization_eps = " << format_double(cfg.solver.regularization_eps) << "\n"
      << "solver.snapshot_every = " << cfg.solver.snapshot_every << "\n"
      << "solver.allow_unstable_dt = " << b(cfg.solver.allow_unstable_dt) << "\n"
      << "solver.record_energy = " << b(cfg.solver.record_energy) << "\n"
      << "energy.eps1 = " << format_double(cfg.solver.lyapunov.eps1) << "\n"
      << "energy.eps2 = " << format_double(cfg.solver.lyapunov.eps2) << "\n"
      << "verify.tolerance = " << format_double(cfg.verify.tolerance) << "\n"
      << "decay.window_lo = " << format_double(cfg.decay.window_lo) << "\n"
      << "decay.window_hi = "
      << (cfg.decay.window_hi ? format_double(*cfg.decay.window_hi) : "t_final") << "\n"
      << "decay.min_r_squared = " << format_double(cfg.decay.min_r_squared) << "\n"
      << "decay.max_energy_ratio = " << format_double(cfg.decay.max_energy_ratio) << "\n"
      << "decay.monotone_tolerance = " << format_double(cfg.decay.monotone_tolerance) << "\n"
      << "convergence.levels = " << cfg.convergence.levels << "\n"
      << "convergence.min_order = " << format_double(cfg.convergence.min_order) << "\n"
      << "output.dir = " << cfg.output_dir << "\n"
      << "output.emit_plots = " << b(cfg.emit_plots) << "\n";
  return out.str();
}

inline KernelSpec build_kernel(const RunConfig& cfg) {
  if (cfg.kernel.form == "exponential") {
    return make_exponential_kernel(cfg.kernel.a, cfg.kernel.b, cfg.kernel.zeta);
  }
  if (cfg.kernel.file.empty()) {
    throw Error(ErrorKind::ConfigError, "kernel.form = tabulated requires kernel.file");
  }
  std::filesystem::path path(cfg.kernel.file);
  if (path.is_relative() && !cfg.base_dir.empty()) path = cfg.base_dir / path;
  return load_tabulated_kernel(path.string(), cfg.kernel.zeta);
}

inline ProblemSpec build_problem(const RunConfig& cfg) {
  ProblemSpec problem;
  problem.p = cfg.problem.p;
  problem.q = cfg.problem.q;
  problem.eta = cfg.problem.eta;
  problem.source_sign = cfg.problem.source_sign;
  problem.kernel = build_kernel(cfg);
  if (cfg.problem.forcing == "manufactured") problem.forcing = manufactured_forcing;
  if (cfg.problem.initial == "reference") {
    problem.initial_displacement = reference_profile;
    problem.initial_velocity = [](double x) { return -reference_profile(x); };
  } else {
    problem.initial_displacement = [](double) { return 0.0; };
    problem.initial_velocity = [](double) { return 0.0; };
  }
  problem.memory_rule.include_right_endpoint = cfg.memory_include_right_endpoint;
  try {
    validate(problem);
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
  return problem;
}

}  // namespace viscowave
