#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "svgph/experiment.hpp"

using namespace svgph;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("svgph_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST(ParseConfig, EmptyGivesDefaults) {
  const ExperimentConfig c = parse_config("");
  EXPECT_EQ(c, ExperimentConfig{});
  EXPECT_EQ(c.scenario, Scenario::custom);
  EXPECT_EQ(c.params, (SystemParams{1, 1, 1}));
  EXPECT_EQ(c.step.h, 0.01);
  EXPECT_EQ(c.T, 20.0);
  EXPECT_EQ(c.effective_initial(), (std::vector<double>{1, 1, 1, 1, 1}));
  EXPECT_EQ(c.iss, (IssParams{2.0, 0.125, 5.0}));
  EXPECT_EQ(c.disturbance.frequency, 2.0);
  EXPECT_EQ(c.pi_state(), PiState::with_default_gains());
}

TEST(ParseConfig, IssParameters) {
  const ExperimentConfig c = parse_config("alpha = 2\nepsilon = 0.125");
  EXPECT_EQ(c.iss.alpha, 2.0);
  EXPECT_EQ(c.iss.epsilon, 0.125);
}

TEST(ParseConfig, CommentsBlankLinesAndWhitespace) {
  const ExperimentConfig c = parse_config(
      "# comment\n\n   T=3.5   \r\nmodel = subsystem4\ninitial = 1, -2, 3e-1, 4\n"
      "disturbance = sinusoid\ndisturbance_phase = 0.1, 0.2\ndirect_stages = false\n");
  EXPECT_EQ(c.T, 3.5);
  EXPECT_EQ(c.model, ModelKind::subsystem4);
  EXPECT_EQ(c.initial, (std::vector<double>{1, -2, 0.3, 4}));
  EXPECT_EQ(c.disturbance.kind, SignalKind::sinusoid);
  EXPECT_EQ(c.disturbance.phase_q, 0.2);
  EXPECT_FALSE(c.step.direct_stages);
}

TEST(ParseConfig, ZeroStepRejected) {
  EXPECT_THROW(parse_config("h = 0"), ParseError);
  EXPECT_THROW(parse_config("h = 0.1\nT = 0.05"), ParseError);
}

TEST(ParseConfig, ErrorsCarryLineNumbers) {
  try {
    parse_config("T = 1\n\nbogus = 3\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  try {
    parse_config("h = 0.01\nalpha = two\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  try {
    parse_config("no equals sign here");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(ParseConfig, EmptyValueIsMissingField) {
  try {
    parse_config("seed = 4\nstepper =\n");
    FAIL();
  } catch (const MissingField& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ParseConfig, InconsistentFieldsRejected) {
  EXPECT_THROW(parse_config("model = subsystem4\ninitial = 1, 2, 3, 4, 5"), ParseError);
  EXPECT_THROW(parse_config("stepper = exact_reference\ndisturbance = bounded_noise"), ParseError);
  EXPECT_THROW(parse_config("convergence_steps = 0.01, 0.02"), ParseError);
  EXPECT_THROW(parse_config("kp = 1, 2, 3"), ParseError);
  EXPECT_THROW(parse_config("scenario = fig9"), ParseError);
  EXPECT_THROW(parse_config("seed = -1"), ParseError);
  EXPECT_THROW(parse_config("L = nan"), ParseError);
}

TEST(ParseConfig, RoundTripOfEcho) {
  EXPECT_EQ(parse_config(format_config(ExperimentConfig{})), ExperimentConfig{});

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> pos(0.01, 10.0);
  std::uniform_real_distribution<double> any(-5.0, 5.0);
  for (int trial = 0; trial < 300; ++trial) {
    ExperimentConfig c;
    c.scenario = static_cast<Scenario>(rng() % 5);
    c.params = {pos(rng), pos(rng), any(rng)};
    c.model = rng() % 2 ? ModelKind::svg5 : ModelKind::subsystem4;
    c.controller = static_cast<ControllerKind>(rng() % 3);
    c.iss = {pos(rng), pos(rng), pos(rng)};
    c.kp = {any(rng), any(rng), any(rng), any(rng)};
    c.stepper = static_cast<StepperKind>(rng() % 2);
    c.step.h = pos(rng) * 1e-3;
    c.T = c.step.h * (1 + pos(rng));
    c.step.stage_tol = pos(rng) * 1e-14;
    c.step.max_stage_iters = rng() % 1000 + 1;
    c.step.direct_stages = rng() % 2;
    if (rng() % 2) {
      c.initial.clear();
      for (std::size_t i = 0; i < c.dim(); ++i) c.initial.push_back(any(rng));
    }
    c.disturbance.kind = static_cast<SignalKind>(rng() % 3);
    c.disturbance.amplitude = pos(rng);
    c.disturbance.phase_d = any(rng);
    c.disturbance.value = {any(rng), any(rng)};
    c.input_error = SignalSpec::bounded_noise(pos(rng), 0, 0.01);
    c.input_error.frequency = pos(rng);
    c.tail_fraction = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
    c.convergence_steps = {0.1, 0.05 * pos(rng) / 10};
    c.out = "out dir/" + std::to_string(trial);
    c.seed = rng();
    ASSERT_NO_THROW(c.validate());
    EXPECT_EQ(parse_config(format_config(c)), c) << format_config(c);
  }
}

TEST(Csv, HeaderAndTwoRowsForSingleStep) {
  const fs::path dir = scratch_dir("single");
  ExperimentConfig c;
  c.controller = ControllerKind::none;
  c.initial = {0, 0, 0, 0, 0};
  c.T = c.step.h;
  c.out = dir.string();
  run(c);
  const auto rows = lines(slurp(dir / "trajectory_run.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "t,x1,x2,x3,x4,x5,u1,u2,d1,d2,H,H0");
  EXPECT_EQ(rows[1], "0,0,0,0,0,0,0,0,0,0,0,0");
  EXPECT_EQ(rows[2].substr(0, rows[2].find(',')), "0.01");
  EXPECT_TRUE(fs::exists(dir / "metrics.csv"));
  EXPECT_EQ(parse_config(slurp(dir / "effective_config.txt")), c);
}

TEST(Csv, SubsystemLeavesFifthColumnBlank) {
  const fs::path dir = scratch_dir("sub");
  ExperimentConfig c;
  c.model = ModelKind::subsystem4;
  c.T = 0.05;
  c.out = dir.string();
  run(c);
  const auto rows = lines(slurp(dir / "trajectory_run.csv"));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::vector<std::string> f;
    std::stringstream ss(rows[i]);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    ASSERT_EQ(f.size(), 12u);
    EXPECT_EQ(f[5], "");
    EXPECT_EQ(f[10], f[11]);
  }
}

TEST(Csv, SeventeenSignificantDigitsRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> g(-1e3, 1e3);
  for (int i = 0; i < 10000; ++i) {
    const double v = g(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(std::strtod(format_number(v).c_str(), nullptr), v);
  }
}

TEST(Run, AlgorithmCompare) {
  const fs::path dir = scratch_dir("algo");
  ExperimentConfig c;
  c.scenario = Scenario::algorithm_compare;
  c.out = dir.string();
  const RunOutput out = run(c);
  EXPECT_TRUE(fs::exists(dir / "trajectory_midpoint_dirac.csv"));
  EXPECT_TRUE(fs::exists(dir / "trajectory_rk2_twostage.csv"));
  ASSERT_EQ(out.metrics.size(), 2u);
  EXPECT_LE(out.metrics[0].report.energy_drift_max, 1e-10);
  EXPECT_GT(out.metrics[1].report.energy_drift_max, 0.0);
  EXPECT_EQ(lines(slurp(dir / "metrics.csv")).size(), 3u);
}

TEST(Run, ConvergenceStudy) {
  const fs::path dir = scratch_dir("conv");
  ExperimentConfig c;
  c.scenario = Scenario::convergence_study;
  c.T = 1.0;
  c.out = dir.string();
  const RunOutput out = run(c);
  EXPECT_EQ(out.convergence.size(), 8u);
  int with_order = 0;
  for (const auto& m : out.metrics) {
    if (m.report.observed_order) {
      ++with_order;
      EXPECT_NEAR(*m.report.observed_order, 2.0, 0.2) << m.label;
    }
  }
  EXPECT_EQ(with_order, 2);
  EXPECT_EQ(lines(slurp(dir / "convergence.csv")).size(), 9u);
}

TEST(Run, ControllerCompareProducesBothControllers) {
  const fs::path dir = scratch_dir("ctrl");
  ExperimentConfig c;
  c.scenario = Scenario::controller_compare_sinusoid;
  c.T = 2.0;
  c.out = dir.string();
  const RunOutput out = run(c);
  ASSERT_EQ(out.trajectories.size(), 2u);
  EXPECT_EQ(out.trajectories[0].second.controller, "iss");
  EXPECT_EQ(out.trajectories[1].second.controller, "pi");
  EXPECT_EQ(out.trajectories[0].second.dim, 4u);
  EXPECT_NEAR(out.trajectories[0].second.records[10].d.ig_q, std::sin(0.2), 1e-15);
}

TEST(Run, Deterministic) {
  ExperimentConfig c;
  c.controller = ControllerKind::iss;
  c.input_error = SignalSpec::bounded_noise(0.2, 0, 0.01);
  c.disturbance = SignalSpec::sinusoid(2.0);
  c.T = 2.0;
  c.seed = 99;
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
  c.out = a.string();
  run(c);
  c.out = b.string();
  run(c);
  EXPECT_EQ(slurp(a / "trajectory_run.csv"), slurp(b / "trajectory_run.csv"));
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));

  c.seed = 100;
  const fs::path d = scratch_dir("det_c");
  c.out = d.string();
  run(c);
  EXPECT_NE(slurp(a / "trajectory_run.csv"), slurp(d / "trajectory_run.csv"));
}

#ifdef SVGPH_CONFIG_DIR
TEST(ShippedConfigs, AllParse) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(SVGPH_CONFIG_DIR)) {
    if (entry.path().extension() != ".txt") continue;
    EXPECT_NO_THROW(parse_config(slurp(entry.path()))) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 5);
}
#endif

#ifdef SVGPH_CLI_PATH
TEST(Cli, RunWithOverrides) {
  const fs::path dir = scratch_dir("cli");
  {
    std::ofstream f(dir / "cfg.txt");
    f << "scenario = custom\nT = 5\n";
  }
  const std::string cmd = std::string(SVGPH_CLI_PATH) + " run " + (dir / "cfg.txt").string() +
                          " --T 0.1 --h 0.05 --seed 3 --scenario algorithm_compare --out " +
                          (dir / "o").string() + " > " + (dir / "log").string() + " 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0) << slurp(dir / "log");
  const ExperimentConfig echo = parse_config(slurp(dir / "o" / "effective_config.txt"));
  EXPECT_EQ(echo.T, 0.1);
  EXPECT_EQ(echo.step.h, 0.05);
  EXPECT_EQ(echo.seed, 3u);
  EXPECT_EQ(echo.scenario, Scenario::algorithm_compare);
  EXPECT_EQ(lines(slurp(dir / "o" / "trajectory_midpoint_dirac.csv")).size(), 4u);
}

TEST(Cli, BadConfigExitsNonZero) {
  const fs::path dir = scratch_dir("cli_bad");
  {
    std::ofstream f(dir / "cfg.txt");
    f << "h = 0\n";
  }
  const std::string cmd = std::string(SVGPH_CLI_PATH) + " run " + (dir / "cfg.txt").string() +
                          " > " + (dir / "log").string() + " 2>&1";
  EXPECT_NE(std::system(cmd.c_str()), 0);
  EXPECT_NE(slurp(dir / "log").find("h must be > 0"), std::string::npos) << slurp(dir / "log");

  const std::string missing = std::string(SVGPH_CLI_PATH) + " run " +
                              (dir / "nope.txt").string() + " > /dev/null 2>&1";
  EXPECT_NE(std::system(missing.c_str()), 0);
}
#endif
