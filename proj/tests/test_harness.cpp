#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "viscowave/viscowave.hpp"

namespace fs = std::filesystem;
using namespace viscowave;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("viscowave_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig small_verify_config() {
  RunConfig cfg;
  cfg.mode = RunMode::Verify;
  cfg.solver.grid_n = 20;
  cfg.solver.dt = 5e-3;
  cfg.solver.t_final = 0.5;
  cfg.solver.snapshot_every = 10;
  return cfg;
}

RunConfig decay_config() {
  RunConfig cfg;
  cfg.mode = RunMode::Decay;
  cfg.problem.forcing = "zero";
  cfg.problem.source_sign = -1;
  cfg.solver.grid_n = 50;
  cfg.solver.dt = 1e-3;
  cfg.solver.t_final = 2.0;
  cfg.solver.snapshot_every = 20;
  return cfg;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VISCOWAVE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_path(const std::string& name) {
  return (fs::path(VISCOWAVE_CONFIG_DIR) / name).string();
}

// Residual of the PDE at (x, t) for U = (-x^2 + x + 1) e^{-t} with the
// exponential kernel 0.5 e^{-t}, by finite differences and closed-form
// memory integral; F must make it vanish.
double pde_residual(double x, double t) {
  const double d = 1e-4;
  auto U = [](double y, double s) { return (-y * y + y + 1.0) * std::exp(-s); };
  const double u_tt = (U(x, t + d) - 2.0 * U(x, t) + U(x, t - d)) / (d * d);
  const double u_t = (U(x, t + d) - U(x, t - d)) / (2.0 * d);
  const double u_xx = -2.0 * std::exp(-t);
  // int_0^t 0.5 e^{-(t-s)} (-2 e^{-s}) ds = -t e^{-t}
  const double memory = -t * std::exp(-t);
  const double u = U(x, t);
  const double lhs = u_tt - u_xx + memory + u_t * u_t * u_t;
  return lhs - (u * u + manufactured_forcing(x, t));
}

}  // namespace

TEST(ExactSolution, Examples) {
  EXPECT_DOUBLE_EQ(exact_solution(0.5, 0.0), 1.25);
  EXPECT_NEAR(exact_solution(0.0, 1.0), 0.367879, 1e-6);
  for (double t : {0.0, 0.3, 1.7, 5.0}) {
    const double d = 1e-6;
    const double ux0 = (exact_solution(d, t) - exact_solution(0.0, t)) / d;
    EXPECT_NEAR(ux0 - exact_solution(0.0, t), 0.0, 1e-5);
    const double ux1 = (exact_solution(1.0, t) - exact_solution(1.0 - d, t)) / d;
    EXPECT_NEAR(ux1 + exact_solution(1.0, t), 0.0, 1e-5);
  }
}

TEST(ExactSolution, DomainErrors) {
  const std::initializer_list<std::pair<double, double>> bad{
      {-0.1, 0.0}, {1.1, 0.0}, {0.5, -1.0}, {NAN, 0.0}};
  for (auto [x, t] : bad) {
    try {
      exact_solution(x, t);
      FAIL() << x << "," << t;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::DomainError);
    }
    EXPECT_THROW(manufactured_forcing(x, t), Error);
  }
}

TEST(ManufacturedForcing, Examples) {
  EXPECT_DOUBLE_EQ(manufactured_forcing(0.5, 0.0), -0.265625);
  EXPECT_DOUBLE_EQ(manufactured_forcing(0.0, 0.0), 1.0);
  EXPECT_NEAR(manufactured_forcing(0.3, 60.0), 0.0, 1e-20);
}

TEST(ManufacturedForcing, ClosesThePde) {
  for (double x : {0.0, 0.2, 0.5, 0.9, 1.0}) {
    for (double t : {0.1, 0.8, 1.9}) {
      EXPECT_NEAR(pde_residual(x, t), 0.0, 1e-6) << x << "," << t;
    }
  }
}

TEST(ReferenceInitialData, Examples) {
  const Grid grid(50);
  const auto [u0, u1] = reference_initial_data(grid);
  EXPECT_EQ(u0[0], 1.0);
  EXPECT_EQ(u1[0], -1.0);
  EXPECT_EQ(u0[25], 1.25);
  EXPECT_EQ((u0 + u1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(VerifyRun, InitialErrorIsExactlyZero) {
  const auto result = verify_run(small_verify_config());
  ASSERT_FALSE(result.errors.series.empty());
  EXPECT_EQ(result.errors.series.front().t, 0.0);
  EXPECT_EQ(result.errors.series.front().max_abs, 0.0);
  EXPECT_EQ(result.errors.series.front().l2, 0.0);
  EXPECT_EQ(result.errors.series.size(), result.trajectory.snapshots.size());
}

TEST(VerifyRun, ReferenceResolutionMeetsTolerance) {
  RunConfig cfg = small_verify_config();
  cfg.solver.grid_n = 50;
  cfg.solver.dt = 1e-3;
  cfg.solver.t_final = 2.0;
  cfg.solver.record_energy = false;
  const auto result = verify_run(cfg);
  EXPECT_TRUE(result.passed);
  EXPECT_LE(result.errors.relative_l2, 0.05);
}

TEST(VerifyRun, RequiresManufacturedSetup) {
  RunConfig cfg = small_verify_config();
  cfg.problem.forcing = "zero";
  try {
    verify_run(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
  }
}

TEST(SolutionError, TrapezoidInTime) {
  // Hand-built trajectory: exact at t = 0, offset by c at t = 1.
  Trajectory tr;
  tr.grid = Grid(4);
  const NodalField exact0 = tr.grid.sample([](double x) { return exact_solution(x, 0.0); });
  const NodalField exact1 = tr.grid.sample([](double x) { return exact_solution(x, 1.0); });
  const double c = 0.2;
  tr.snapshots.push_back(State{0.0, exact0, exact0});
  tr.snapshots.push_back(State{1.0, exact1 + NodalField::Constant(5, c), exact1});
  const auto report = solution_error(tr);
  EXPECT_NEAR(report.max_abs, c, 1e-15);
  EXPECT_NEAR(report.l2, std::sqrt(0.5 * c * c), 1e-15);
}

TEST(ConvergenceStudy, TwoLevelsGiveOneOrder) {
  RunConfig cfg = small_verify_config();
  cfg.mode = RunMode::Convergence;
  const auto rows = convergence_study(cfg, 2, 2);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].observed_order.has_value());
  ASSERT_TRUE(rows[1].observed_order.has_value());
  EXPECT_EQ(rows[1].n, 40);
  EXPECT_DOUBLE_EQ(rows[1].dt, 2.5e-3);
  EXPECT_LT(rows[1].max_abs, rows[0].max_abs);
}

TEST(ConvergenceStudy, ReferenceLevelsFromN25) {
  RunConfig cfg = small_verify_config();
  cfg.solver.grid_n = 25;
  cfg.solver.dt = 2e-3;
  cfg.solver.t_final = 2.0;
  const auto rows = convergence_study(cfg, 3);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_TRUE(convergence_passed(rows, 0.6));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(*rows[i].observed_order, 0.6) << i;
    EXPECT_LT(rows[i].max_abs, rows[i - 1].max_abs);
  }
}

TEST(ConvergenceStudy, ThreadCountDoesNotChangeResults) {
  RunConfig cfg = small_verify_config();
  const auto serial = convergence_study(cfg, 3, 1);
  const auto parallel = convergence_study(cfg, 3, 3);
  for (std::size_t i = 0; i < serial.size(); ++i) EXPECT_EQ(serial[i].max_abs, parallel[i].max_abs);
  EXPECT_THROW(convergence_study(cfg, 1), Error);
}

TEST(DecayRun, ReferenceDataDecays) {
  const auto result = decay_run(decay_config());
  ASSERT_TRUE(result.fit.has_value());
  EXPECT_GT(result.fit->gamma, 0.0);
  EXPECT_LT(result.trajectory.energy.back().E, result.trajectory.energy.front().E);
  EXPECT_LT(result.energy_ratio, 0.2);
  EXPECT_TRUE(result.monotone(1e-6));
  EXPECT_DOUBLE_EQ(result.window_lo, 0.5);
  EXPECT_DOUBLE_EQ(result.window_hi, 2.0);
}

TEST(DecayRun, ZeroDataReportsNonPositiveEnergy) {
  RunConfig cfg = decay_config();
  cfg.problem.initial = "zero";
  cfg.solver.t_final = 0.5;
  cfg.decay.window_lo = 0.0;
  const auto result = decay_run(cfg);
  EXPECT_FALSE(result.fit.has_value());
  EXPECT_FALSE(result.fit_error.empty());
  std::vector<double> t;
  std::vector<double> e;
  for (const auto& r : result.trajectory.energy) {
    EXPECT_EQ(r.E, 0.0);
    t.push_back(r.t);
    e.push_back(r.E);
  }
  try {
    fit_decay_rate(t, e, 0.0, 0.5);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::NonPositiveEnergy);
  }
  EXPECT_FALSE(decay_passed(result, cfg.decay));
}

TEST(DecayRun, RefusesFailingKernelAndWrongSetup) {
  RunConfig cfg = decay_config();
  cfg.kernel.a = 2.0;
  try {
    decay_run(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::HypothesisFailure);
  }
  RunConfig forced = decay_config();
  forced.problem.forcing = "manufactured";
  EXPECT_THROW(decay_run(forced), Error);
}

TEST(Config, ParsesKeysAndComments) {
  const RunConfig cfg = parse_config_string(
      "# comment\n"
      "mode = decay\n"
      "  problem.p = 2.5   \n"
      "problem.source_sign = -1\n"
      "kernel.zeta = none\n"
      "solver.n = 64\n"
      "solver.allow_unstable_dt = true\n"
      "decay.window_hi = 1.5\n");
  EXPECT_EQ(cfg.mode, RunMode::Decay);
  EXPECT_EQ(cfg.problem.p, 2.5);
  EXPECT_EQ(cfg.problem.source_sign, -1);
  EXPECT_FALSE(cfg.kernel.zeta.has_value());
  EXPECT_EQ(cfg.solver.grid_n, 64);
  EXPECT_TRUE(cfg.solver.allow_unstable_dt);
  EXPECT_EQ(cfg.decay.window_hi, 1.5);
}

TEST(Config, RejectsBadInput) {
  for (const char* text :
       {"solver.n = 12x\n", "no equals sign\n", "unknown.key = 1\n", "mode = teleport\n",
        "problem.forcing = cosine\n", "solver.record_energy = maybe\n", "problem.source_sign = 2\n",
        "solver.n = 1e12\n"}) {
    try {
      parse_config_string(text);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ConfigError) << text;
    }
  }
  EXPECT_THROW(load_config("/nonexistent/viscowave.cfg"), Error);
}

TEST(Config, RoundTripsRandomConfigs) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> small(2, 500);
  for (int trial = 0; trial < 200; ++trial) {
    RunConfig cfg;
    cfg.mode = static_cast<RunMode>(trial % 5);
    cfg.problem.p = 2.0 + 3.0 * unit(rng);
    cfg.problem.q = 2.0 + 3.0 * unit(rng);
    cfg.problem.eta = 4.0 * unit(rng);
    cfg.problem.source_sign = unit(rng) < 0.5 ? -1 : 1;
    cfg.problem.forcing = unit(rng) < 0.5 ? "zero" : "manufactured";
    cfg.problem.initial = unit(rng) < 0.5 ? "zero" : "reference";
    cfg.kernel.form = unit(rng) < 0.5 ? "exponential" : "tabulated";
    cfg.kernel.a = unit(rng);
    cfg.kernel.b = 0.1 + unit(rng);
    if (unit(rng) < 0.3)
      cfg.kernel.zeta.reset();
    else
      cfg.kernel.zeta = unit(rng);
    if (cfg.kernel.form == "tabulated")
      cfg.kernel.file = "tables/k" + std::to_string(trial) + ".csv";
    cfg.memory_include_right_endpoint = unit(rng) < 0.5;
    cfg.solver.grid_n = small(rng);
    cfg.solver.dt = unit(rng) * 1e-2;
    cfg.solver.t_final = 10.0 * unit(rng);
    cfg.solver.picard_tol = std::pow(10.0, -14.0 * unit(rng));
    cfg.solver.picard_max_iters = small(rng);
    cfg.solver.regularization_eps = unit(rng) * 1e-3;
    cfg.solver.snapshot_every = small(rng);
    cfg.solver.allow_unstable_dt = unit(rng) < 0.5;
    cfg.solver.record_energy = unit(rng) < 0.5;
    cfg.solver.lyapunov = {unit(rng) * 0.1, unit(rng) * 0.1};
    cfg.verify.tolerance = unit(rng);
    cfg.decay.window_lo = unit(rng);
    if (unit(rng) < 0.5) cfg.decay.window_hi = 1.0 + unit(rng);
    cfg.decay.min_r_squared = unit(rng);
    cfg.decay.max_energy_ratio = unit(rng);
    cfg.decay.monotone_tolerance = unit(rng) * 1e-5;
    cfg.convergence.levels = 2 + trial % 4;
    cfg.convergence.min_order = unit(rng);
    cfg.output_dir = "runs/r" + std::to_string(trial);
    cfg.emit_plots = unit(rng) < 0.5;
    const RunConfig back = parse_config_string(serialize_config(cfg));
    ASSERT_TRUE(back == cfg) << serialize_config(cfg);
    ASSERT_EQ(serialize_config(back), serialize_config(cfg));
  }
}

TEST(Config, BuildsTabulatedKernelRelativeToConfigFile) {
  const RunConfig cfg = load_config(config_path("kernel_tabulated.cfg"));
  const KernelSpec kernel = build_kernel(cfg);
  ASSERT_FALSE(kernel.is_exponential());
  EXPECT_NEAR(kernel_total_mass(kernel), 0.5, 1e-4);
  const auto v = validate_kernel_run(cfg);
  EXPECT_TRUE(v.report.passes.all());
  EXPECT_NEAR(v.zeta, 1.0, 1e-2);
}

TEST(Output, CsvLayoutAndDeterminism) {
  RunConfig cfg = small_verify_config();
  auto render = [&] {
    const auto result = verify_run(cfg);
    std::ostringstream solution, energy, errors;
    write_solution_csv(solution, result.trajectory);
    write_energy_csv(energy, result.trajectory.energy);
    write_error_csv(errors, result.errors);
    return std::array<std::string, 3>{solution.str(), energy.str(), errors.str()};
  };
  const auto a = render();
  const auto b = render();
  EXPECT_EQ(a, b);

  std::istringstream solution(a[0]);
  std::string header;
  std::getline(solution, header);
  EXPECT_EQ(header.rfind("x,0,0.05,", 0), 0u) << header;
  int rows = 0;
  for (std::string row; std::getline(solution, row);) ++rows;
  EXPECT_EQ(rows, 21);

  EXPECT_EQ(a[1].substr(0, a[1].find('\n')), "t,E,E1,E2,Gamma,kinetic,elastic,potential,memory");
  EXPECT_EQ(a[2].substr(0, a[2].find('\n')), "t,max_abs,l2");
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch_dir("cli");
  const std::string o = " --no-plots -o ";

  EXPECT_EQ(run_cli("validate-kernel " + config_path("kernel_exponential.cfg") + o +
                    (out / "kernel").string()),
            0);
  EXPECT_TRUE(fs::exists(out / "kernel" / "summary.txt"));
  EXPECT_EQ(run_cli("validate-kernel " + config_path("kernel_tabulated.cfg") + o +
                    (out / "tab").string()),
            0);

  // A short verify run that passes, then the same run with an impossible tolerance.
  const fs::path cfg_ok = out / "short_verify.cfg";
  {
    std::ofstream f(cfg_ok);
    f << "problem.forcing = manufactured\nsolver.n = 20\nsolver.dt = 0.005\n"
         "solver.t_final = 0.5\nsolver.snapshot_every = 10\n";
  }
  EXPECT_EQ(run_cli("verify " + cfg_ok.string() + o + (out / "verify").string()), 0);
  for (const char* name : {"solution.csv", "exact.csv", "errors.csv", "energy.csv", "picard.csv",
                           "config.used", "summary.txt"}) {
    EXPECT_TRUE(fs::exists(out / "verify" / name)) << name;
  }
  EXPECT_FALSE(fs::exists(out / "verify" / "plots.py"));
  const RunConfig used = load_config(out / "verify" / "config.used");
  EXPECT_EQ(used.solver.grid_n, 20);
  EXPECT_EQ(used.mode, RunMode::Verify);

  const fs::path cfg_strict = out / "strict_verify.cfg";
  {
    std::ofstream f(cfg_strict);
    f << read_file(cfg_ok) << "verify.tolerance = 1e-12\n";
  }
  EXPECT_EQ(run_cli("verify " + cfg_strict.string() + o + (out / "strict").string()), 4);

  // Config errors: missing file, unknown key, CFL guard, bad arguments.
  EXPECT_EQ(run_cli("simulate /nonexistent.cfg"), 2);
  const fs::path cfg_bad = out / "bad.cfg";
  {
    std::ofstream f(cfg_bad);
    f << "solver.nodes = 20\n";
  }
  EXPECT_EQ(run_cli("simulate " + cfg_bad.string()), 2);
  const fs::path cfg_cfl = out / "cfl.cfg";
  {
    std::ofstream f(cfg_cfl);
    f << "solver.n = 50\nsolver.dt = 10\nsolver.t_final = 10\n";
  }
  EXPECT_EQ(run_cli("simulate " + cfg_cfl.string() + o + (out / "cfl").string()), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);

  // Forcing dt past the CFL guard makes the Picard loop diverge.
  EXPECT_EQ(run_cli("simulate " + cfg_cfl.string() + " --allow-unstable-dt" + o +
                    (out / "unstable").string()),
            3);

  const fs::path cfg_sim = out / "sim.cfg";
  {
    std::ofstream f(cfg_sim);
    f << "solver.n = 10\nsolver.dt = 0.01\nsolver.t_final = 0.1\n";
  }
  EXPECT_EQ(run_cli("simulate " + cfg_sim.string() + " -o " + (out / "sim").string()), 0);
  EXPECT_TRUE(fs::exists(out / "sim" / "plots.py"));
  fs::remove_all(out);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const fs::path out = scratch_dir("repeat");
  const fs::path cfg = out / "run.cfg";
  {
    std::ofstream f(cfg);
    f << "problem.forcing = zero\nproblem.source_sign = -1\nsolver.n = 16\nsolver.dt = 0.01\n"
         "solver.t_final = 1\nsolver.snapshot_every = 5\n";
  }
  ASSERT_EQ(run_cli("simulate " + cfg.string() + " -o " + (out / "a").string()), 0);
  ASSERT_EQ(run_cli("simulate " + cfg.string() + " -o " + (out / "b").string()), 0);
  for (const char* name : {"solution.csv", "energy.csv", "picard.csv", "summary.txt"}) {
    EXPECT_EQ(read_file(out / "a" / name), read_file(out / "b" / name)) << name;
  }
  fs::remove_all(out);
}
