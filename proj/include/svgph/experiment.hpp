#pragma once

// Experiment runner: flat `key = value` configuration, named scenarios, CSV
// trajectory and metrics output.

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "svgph/control.hpp"
#include "svgph/error.hpp"
#include "svgph/integrate.hpp"
#include "svgph/metrics.hpp"
#include "svgph/signals.hpp"

namespace svgph {

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class MissingField : public ParseError {
 public:
  using ParseError::ParseError;
};

enum class Scenario {
  custom,
  controller_compare_no_dist,
  controller_compare_sinusoid,
  algorithm_compare,
  convergence_study
};

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::custom: return "custom";
    case Scenario::controller_compare_no_dist: return "controller_compare_no_dist";
    case Scenario::controller_compare_sinusoid: return "controller_compare_sinusoid";
    case Scenario::algorithm_compare: return "algorithm_compare";
    case Scenario::convergence_study: return "convergence_study";
  }
  return "?";
}

inline Scenario scenario_from_string(const std::string& s) {
  for (Scenario c : {Scenario::custom, Scenario::controller_compare_no_dist,
                     Scenario::controller_compare_sinusoid, Scenario::algorithm_compare,
                     Scenario::convergence_study}) {
    if (s == to_string(c)) return c;
  }
  throw InvalidArgument("unknown scenario '" + s + "'");
}

enum class ModelKind { svg5, subsystem4 };

inline const char* to_string(ModelKind m) { return m == ModelKind::svg5 ? "svg5" : "subsystem4"; }

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "svg5") return ModelKind::svg5;
  if (s == "subsystem4") return ModelKind::subsystem4;
  throw InvalidArgument("unknown model '" + s + "'");
}

struct ExperimentConfig {
  Scenario scenario = Scenario::custom;
  SystemParams params{};
  ModelKind model = ModelKind::svg5;
  ControllerKind controller = ControllerKind::iss;
  IssParams iss{};
  std::vector<double> kp{2.1956, -0.8878, 0.8878, 2.1956};
  std::vector<double> ki{0.8364, 0.5481, -0.5481, 0.8364};
  StepperKind stepper = StepperKind::midpoint_dirac;
  StepConfig step{};
  double T = 20.0;
  /// Empty means all ones of the model's dimension.
  std::vector<double> initial;
  SignalSpec disturbance = SignalSpec::zero();
  SignalSpec input_error = SignalSpec::zero();
  double settling_fraction = 0.02;
  double tail_fraction = 0.25;
  std::vector<double> convergence_steps{0.04, 0.02, 0.01, 0.005};
  std::string out = "out";
  std::uint64_t seed = 0;

  std::size_t dim() const { return model == ModelKind::svg5 ? 5 : 4; }

  std::vector<double> effective_initial() const {
    return initial.empty() ? std::vector<double>(dim(), 1.0) : initial;
  }

  PiState pi_state() const {
    return PiState::with_gains(Mat(2, 2, kp), Mat(2, 2, ki));
  }

  void validate() const {
    params.validate();
    step.validate();
    iss.validate();
    disturbance.validate();
    input_error.validate();
    if (!(T >= step.h) || !std::isfinite(T)) throw InvalidArgument("T must be >= h");
    if (!initial.empty() && initial.size() != dim()) {
      throw InvalidArgument("initial has " + std::to_string(initial.size()) +
                            " entries but the model has " + std::to_string(dim()) + " states");
    }
    if (kp.size() != 4 || ki.size() != 4) throw InvalidArgument("kp and ki need 4 entries");
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
      throw InvalidArgument("tail_fraction must lie in (0, 1]");
    }
    if (!(settling_fraction > 0.0)) throw InvalidArgument("settling_fraction must be > 0");
    const bool needs_reference =
        stepper == StepperKind::exact_reference || scenario == Scenario::convergence_study;
    if (needs_reference && disturbance.kind == SignalKind::bounded_noise) {
      throw InvalidArgument("the exact reference stepper cannot follow a bounded_noise disturbance");
    }
    if (convergence_steps.size() < 2) throw InvalidArgument("convergence_steps needs >= 2 entries");
    for (std::size_t i = 0; i < convergence_steps.size(); ++i) {
      if (!(convergence_steps[i] > 0.0)) throw InvalidArgument("convergence_steps must be > 0");
      if (i > 0 && !(convergence_steps[i] < convergence_steps[i - 1])) {
        throw InvalidArgument("convergence_steps must be strictly decreasing");
      }
    }
  }

  bool operator==(const ExperimentConfig&) const = default;
};

// ---- text formatting -------------------------------------------------------

/// Shortest-safe round-trip representation (17 significant digits).
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline double parse_double(const std::string& s) {
  if (s.empty()) throw InvalidArgument("expected a number");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw InvalidArgument("'" + s + "' is not a finite number");
  }
  return v;
}

inline std::uint64_t parse_uint(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw InvalidArgument("'" + s + "' is not a non-negative integer");
  }
  errno = 0;
  const auto v = std::strtoull(s.c_str(), nullptr, 10);
  if (errno == ERANGE) throw InvalidArgument("'" + s + "' is out of range");
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw InvalidArgument("'" + s + "' is not true/false");
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
  if (out.empty()) throw InvalidArgument("expected a comma-separated list");
  return out;
}

inline std::pair<double, double> parse_pair(const std::string& s) {
  const auto v = parse_list(s);
  if (v.size() != 2) throw InvalidArgument("expected exactly two comma-separated values");
  return {v[0], v[1]};
}

inline std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_number(v[i]);
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

inline void add_signal_keys(std::map<std::string, Setter>& keys, const std::string& prefix,
                            SignalSpec ExperimentConfig::*member) {
  keys[prefix] = [member](ExperimentConfig& c, const std::string& v) {
    (c.*member).kind = signal_kind_from_string(v);
  };
  keys[prefix + "_amplitude"] = [member](ExperimentConfig& c, const std::string& v) {
    (c.*member).amplitude = parse_double(v);
  };
  keys[prefix + "_frequency"] = [member](ExperimentConfig& c, const std::string& v) {
    (c.*member).frequency = parse_double(v);
  };
  keys[prefix + "_phase"] = [member](ExperimentConfig& c, const std::string& v) {
    const auto [a, b] = parse_pair(v);
    (c.*member).phase_d = a;
    (c.*member).phase_q = b;
  };
  keys[prefix + "_value"] = [member](ExperimentConfig& c, const std::string& v) {
    const auto [a, b] = parse_pair(v);
    (c.*member).value = {a, b};
  };
}

inline const std::map<std::string, Setter>& config_keys() {
  static const std::map<std::string, Setter> keys = [] {
    std::map<std::string, Setter> k;
    k["scenario"] = [](auto& c, const auto& v) { c.scenario = scenario_from_string(v); };
    k["L"] = [](auto& c, const auto& v) { c.params.L = parse_double(v); };
    k["C"] = [](auto& c, const auto& v) { c.params.C = parse_double(v); };
    k["omega"] = [](auto& c, const auto& v) { c.params.omega = parse_double(v); };
    k["model"] = [](auto& c, const auto& v) { c.model = model_kind_from_string(v); };
    k["controller"] = [](auto& c, const auto& v) { c.controller = controller_kind_from_string(v); };
    k["alpha"] = [](auto& c, const auto& v) { c.iss.alpha = parse_double(v); };
    k["epsilon"] = [](auto& c, const auto& v) { c.iss.epsilon = parse_double(v); };
    k["ratio_cap"] = [](auto& c, const auto& v) { c.iss.ratio_cap = parse_double(v); };
    k["kp"] = [](auto& c, const auto& v) { c.kp = parse_list(v); };
    k["ki"] = [](auto& c, const auto& v) { c.ki = parse_list(v); };
    k["stepper"] = [](auto& c, const auto& v) { c.stepper = stepper_kind_from_string(v); };
    k["h"] = [](auto& c, const auto& v) { c.step.h = parse_double(v); };
    k["T"] = [](auto& c, const auto& v) { c.T = parse_double(v); };
    k["stage_tol"] = [](auto& c, const auto& v) { c.step.stage_tol = parse_double(v); };
    k["max_stage_iters"] = [](auto& c, const auto& v) {
      c.step.max_stage_iters = static_cast<std::size_t>(parse_uint(v));
    };
    k["direct_stages"] = [](auto& c, const auto& v) { c.step.direct_stages = parse_bool(v); };
    k["initial"] = [](auto& c, const auto& v) { c.initial = parse_list(v); };
    add_signal_keys(k, "disturbance", &ExperimentConfig::disturbance);
    add_signal_keys(k, "input_error", &ExperimentConfig::input_error);
    k["settling_fraction"] = [](auto& c, const auto& v) { c.settling_fraction = parse_double(v); };
    k["tail_fraction"] = [](auto& c, const auto& v) { c.tail_fraction = parse_double(v); };
    k["convergence_steps"] = [](auto& c, const auto& v) { c.convergence_steps = parse_list(v); };
    k["out"] = [](auto& c, const auto& v) { c.out = v; };
    k["seed"] = [](auto& c, const auto& v) { c.seed = parse_uint(v); };
    return k;
  }();
  return keys;
}

}  // namespace detail

/// Applies one `key = value` assignment; `line` is only used in diagnostics.
inline void set_config_value(ExperimentConfig& cfg, const std::string& key,
                             const std::string& value, std::size_t line = 0) {
  const auto& keys = detail::config_keys();
  const auto it = keys.find(key);
  if (it == keys.end()) throw ParseError(line, "unknown key '" + key + "'");
  if (value.empty()) throw MissingField(line, "no value given for '" + key + "'");
  try {
    it->second(cfg, value);
  } catch (const InvalidArgument& e) {
    throw ParseError(line, key + ": " + e.what());
  }
}

/// Parses flat `key = value` text. Blank lines and lines starting with '#'
/// are ignored; unknown keys are rejected. Defaults fill everything else.
inline ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "missing key before '='");
    set_config_value(cfg, key, value, line_no);
  }
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(0, e.what());
  }
  return cfg;
}

/// Every key with its effective value; parse_config(format_config(c)) == c.
inline std::string format_config(const ExperimentConfig& c) {
  std::ostringstream os;
  auto put = [&](const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; };
  auto signal = [&](const std::string& prefix, const SignalSpec& s) {
    put(prefix, to_string(s.kind));
    put(prefix + "_amplitude", format_number(s.amplitude));
    put(prefix + "_frequency", format_number(s.frequency));
    put(prefix + "_phase", detail::format_list({s.phase_d, s.phase_q}));
    put(prefix + "_value", detail::format_list({s.value.first, s.value.second}));
  };
  put("scenario", to_string(c.scenario));
  put("model", to_string(c.model));
  put("L", format_number(c.params.L));
  put("C", format_number(c.params.C));
  put("omega", format_number(c.params.omega));
  put("controller", to_string(c.controller));
  put("alpha", format_number(c.iss.alpha));
  put("epsilon", format_number(c.iss.epsilon));
  put("ratio_cap", format_number(c.iss.ratio_cap));
  put("kp", detail::format_list(c.kp));
  put("ki", detail::format_list(c.ki));
  put("stepper", to_string(c.stepper));
  put("h", format_number(c.step.h));
  put("T", format_number(c.T));
  put("stage_tol", format_number(c.step.stage_tol));
  put("max_stage_iters", std::to_string(c.step.max_stage_iters));
  put("direct_stages", c.step.direct_stages ? "true" : "false");
  if (!c.initial.empty()) put("initial", detail::format_list(c.initial));
  signal("disturbance", c.disturbance);
  signal("input_error", c.input_error);
  put("settling_fraction", format_number(c.settling_fraction));
  put("tail_fraction", format_number(c.tail_fraction));
  put("convergence_steps", detail::format_list(c.convergence_steps));
  put("out", c.out);
  put("seed", std::to_string(c.seed));
  return os.str();
}

// ---- CSV output ------------------------------------------------------------

inline constexpr std::string_view kTrajectoryHeader = "t,x1,x2,x3,x4,x5,u1,u2,d1,d2,H,H0";

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << kTrajectoryHeader << '\n';
  for (const auto& r : traj.records) {
    os << format_number(r.t);
    for (std::size_t i = 0; i < 5; ++i) {
      os << ',';
      if (i < traj.dim) os << format_number(r.x[i]);
    }
    os << ',' << format_number(r.u.u1) << ',' << format_number(r.u.u2) << ','
       << format_number(r.d.ig_d) << ',' << format_number(r.d.ig_q) << ',' << format_number(r.H)
       << ',' << format_number(r.H0) << '\n';
  }
}

inline constexpr std::string_view kMetricsHeader =
    "label,model,controller,stepper,h,T,settling_time,offset_amplitude,oscillation_amplitude,"
    "control_effort,energy_drift_max,iss_margin_min,observed_order";

struct MetricsRow {
  std::string label;
  std::string model;
  std::string controller;
  std::string stepper;
  double h = 0.0;
  double T = 0.0;
  MetricsReport report;
  std::optional<double> oscillation;
};

inline void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  os << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    os << r.label << ',' << r.model << ',' << r.controller << ',' << r.stepper << ','
       << format_number(r.h) << ',' << format_number(r.T) << ',' << opt(r.report.settling_time)
       << ',' << format_number(r.report.offset_amplitude) << ',' << opt(r.oscillation) << ','
       << format_number(r.report.control_effort) << ','
       << format_number(r.report.energy_drift_max) << ',' << opt(r.report.iss_margin_min) << ','
       << opt(r.report.observed_order) << '\n';
  }
}

// ---- scenario execution ------------------------------------------------------

struct RunOutput {
  std::vector<std::pair<std::string, Trajectory>> trajectories;
  std::vector<MetricsRow> metrics;
  /// (stepper, h, global error at T) for the convergence study.
  std::vector<std::tuple<std::string, double, double>> convergence;
};

namespace detail {

inline SignalSpec with_seed(SignalSpec s, std::uint64_t seed, double hold) {
  s.seed = seed;
  s.hold = hold;
  return s;
}

inline Trajectory run_single(const ExperimentConfig& c, ModelKind model, ControllerKind ctrl,
                             StepperKind stepper, const SignalSpec& dist, const StepConfig& step) {
  ControllerSpec spec;
  spec.kind = ctrl;
  spec.iss = c.iss;
  spec.pi = c.pi_state();
  SimulationOptions opts;
  opts.input_error = with_seed(c.input_error, c.seed ^ 0x5bd1e995ULL, step.h);
  const SignalSpec d = with_seed(dist, c.seed, step.h);
  const auto init = c.initial.empty() || c.initial.size() != (model == ModelKind::svg5 ? 5u : 4u)
                        ? std::vector<double>(model == ModelKind::svg5 ? 5 : 4, 1.0)
                        : c.initial;
  if (model == ModelKind::svg5) {
    State5 x0{{init[0], init[1], init[2], init[3], init[4]}};
    return simulate(x0, spec, stepper, d, c.T, step, c.params, opts);
  }
  State4 x0{{init[0], init[1], init[2], init[3]}};
  return simulate(x0, spec, stepper, d, c.T, step, c.params, opts);
}

inline MetricsRow summarize(const std::string& label, const ExperimentConfig& c,
                            const Trajectory& traj, bool settle_to_envelope) {
  MetricsSettings s;
  s.settling_fraction = c.settling_fraction;
  s.tail_fraction = c.tail_fraction;
  s.settle_to_envelope = settle_to_envelope;
  MetricsRow row;
  row.label = label;
  row.model = traj.dim == 5 ? "svg5" : "subsystem4";
  row.controller = traj.controller;
  row.stepper = traj.stepper;
  row.h = traj.h;
  row.T = traj.T;
  row.report = compute_report(traj, c.iss, s);
  row.oscillation = oscillation_amplitude(traj, c.tail_fraction);
  return row;
}

inline double final_state_error(const Trajectory& a, const Trajectory& b) {
  double err = 0.0;
  for (std::size_t i = 0; i < a.dim; ++i) {
    err = std::max(err, std::abs(a.records.back().x[i] - b.records.back().x[i]));
  }
  return err;
}

}  // namespace detail

/// Runs the configured scenario in memory.
inline RunOutput run_experiment(const ExperimentConfig& c) {
  c.validate();
  RunOutput out;
  const bool disturbed = c.disturbance.kind != SignalKind::zero;

  switch (c.scenario) {
    case Scenario::custom: {
      auto traj = detail::run_single(c, c.model, c.controller, c.stepper, c.disturbance, c.step);
      out.metrics.push_back(detail::summarize("run", c, traj, disturbed));
      out.trajectories.emplace_back("run", std::move(traj));
      break;
    }
    case Scenario::controller_compare_no_dist:
    case Scenario::controller_compare_sinusoid: {
      const bool sinus = c.scenario == Scenario::controller_compare_sinusoid;
      SignalSpec dist = c.disturbance;
      dist.kind = sinus ? SignalKind::sinusoid : SignalKind::zero;
      for (ControllerKind k : {ControllerKind::iss, ControllerKind::pi}) {
        auto traj = detail::run_single(c, ModelKind::subsystem4, k, c.stepper, dist, c.step);
        out.metrics.push_back(detail::summarize(to_string(k), c, traj, sinus));
        out.trajectories.emplace_back(to_string(k), std::move(traj));
      }
      break;
    }
    case Scenario::algorithm_compare: {
      for (StepperKind s : {StepperKind::midpoint_dirac, StepperKind::rk2_twostage}) {
        auto traj = detail::run_single(c, ModelKind::svg5, ControllerKind::iss, s,
                                       SignalSpec::zero(), c.step);
        out.metrics.push_back(detail::summarize(to_string(s), c, traj, false));
        out.trajectories.emplace_back(to_string(s), std::move(traj));
      }
      break;
    }
    case Scenario::convergence_study: {
      const std::vector<StepperKind> steppers{StepperKind::midpoint_dirac,
                                              StepperKind::rk2_twostage};
      // One worker per (h, stepper); results are gathered in h order.
      struct Job {
        StepperKind stepper;
        double h;
        std::future<std::pair<Trajectory, Trajectory>> result;
      };
      std::vector<Job> jobs;
      for (StepperKind s : steppers) {
        for (double h : c.convergence_steps) {
          StepConfig step = c.step;
          step.h = h;
          jobs.push_back({s, h, std::async(std::launch::async, [&c, s, step] {
                            return std::pair{
                                detail::run_single(c, c.model, c.controller, s, c.disturbance, step),
                                detail::run_single(c, c.model, c.controller,
                                                   StepperKind::exact_reference, c.disturbance,
                                                   step)};
                          })});
        }
      }
      std::map<StepperKind, std::vector<std::pair<double, double>>> errors;
      std::map<StepperKind, std::pair<Trajectory, Trajectory>> finest;
      for (auto& job : jobs) {
        auto pair = job.result.get();
        const double err = detail::final_state_error(pair.first, pair.second);
        errors[job.stepper].emplace_back(job.h, err);
        out.convergence.emplace_back(to_string(job.stepper), job.h, err);
        finest[job.stepper] = std::move(pair);
      }
      for (StepperKind s : steppers) {
        auto& [num, ref] = finest[s];
        MetricsRow row = detail::summarize(to_string(s), c, num, disturbed);
        row.report.observed_order = observed_order(errors[s]);
        out.metrics.push_back(std::move(row));
        out.trajectories.emplace_back(to_string(s), std::move(num));
        if (s == steppers.back()) {
          out.metrics.push_back(detail::summarize("exact_reference", c, ref, disturbed));
          out.trajectories.emplace_back("exact_reference", std::move(ref));
        }
      }
      break;
    }
  }
  return out;
}

/// Runs the scenario and writes trajectory_<label>.csv, metrics.csv,
/// effective_config.txt (and convergence.csv for the convergence study)
/// under c.out.
inline RunOutput run(const ExperimentConfig& c) {
  RunOutput result = run_experiment(c);
  const std::filesystem::path dir(c.out);
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error("cannot open " + (dir / name).string() + " for writing");
    return f;
  };
  for (const auto& [label, traj] : result.trajectories) {
    auto f = open("trajectory_" + label + ".csv");
    write_trajectory_csv(f, traj);
  }
  {
    auto f = open("metrics.csv");
    write_metrics_csv(f, result.metrics);
  }
  if (!result.convergence.empty()) {
    auto f = open("convergence.csv");
    f << "stepper,h,error\n";
    for (const auto& [s, h, e] : result.convergence) {
      f << s << ',' << format_number(h) << ',' << format_number(e) << '\n';
    }
  }
  {
    auto f = open("effective_config.txt");
    f << format_config(c);
  }
  return result;
}

}  // namespace svgph
