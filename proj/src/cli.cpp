#include "scenplan/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "scenplan/errors.hpp"
#include "scenplan/json_util.hpp"

namespace scenplan::cli {

using Eigen::VectorXd;
using json = nlohmann::json;

void write_size_table(std::ostream& out, const RiskParams& params, SizingMode mode) {
  params.validate();
  const Count standard = standard_sample_size(params, mode);
  const IncrementalSchedule schedule = incremental_schedule(params, mode);
  fmt::print(out, "kind,mode,epsilon,beta,d,j,M_j,beta_j,log_beta_j,N_j\n");
  fmt::print(out, "standard,{},{},{},{},,,,,{}\n", to_string(mode), params.epsilon, params.beta, params.d, standard);
  for (const auto& e : schedule.entries) {
    fmt::print(out, "incremental,{},{},{},{},{},{},{},{},{}\n", to_string(mode), params.epsilon, params.beta, params.d,
               e.j, e.M_j, e.beta_j, e.log_beta_j, e.N_j);
  }
}

void write_summary_header(std::ostream& out) {
  fmt::print(out,
             "method,scenarios_used,cost,theoretical_epsilon,empirical_risk,validation_violations,validation_size,"
             "rng_seed,support_count,dual_support_count\n");
}

void write_summary_row(std::ostream& out, const ExperimentReport& r) {
  const std::string eps = r.theoretical_epsilon ? fmt::format("{}", *r.theoretical_epsilon) : "NA";
  fmt::print(out, "{},{},{},{},{},{},{},{},{},{}\n", to_string(r.method), r.scenarios_used, r.cost, eps,
             r.empirical_risk, r.validation_violations, r.validation_size, r.rng_seed, r.support_count,
             r.dual_support_count);
}

namespace {

VectorXd trajectory(const LiftedDynamics& lifted, const VectorXd& U, const VectorXd& delta) {
  return simulate_trajectory(lifted, U, delta);
}

}  // namespace

void write_trajectories(std::ostream& out, const LiftedDynamics& lifted, const VectorXd& U,
                        std::span<const OccupancyScenario> scenarios) {
  fmt::print(out, "scenario,zone,step,temp_c\n");
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const VectorXd X = trajectory(lifted, U, scenarios[s].flux);
    for (Index z = 0; z < lifted.n_zones(); ++z) {
      for (int k = 0; k < lifted.horizon; ++k) {
        fmt::print(out, "{},{},{},{:.6f}\n", s, lifted.zone_names[static_cast<std::size_t>(z)], k + 1,
                   X(lifted.zone_row(z, k)));
      }
    }
  }
}

void write_envelope(std::ostream& out, const LiftedDynamics& lifted, const VectorXd& U,
                    std::span<const OccupancyScenario> scenarios, const VectorXd& nominal) {
  const Index rows = lifted.G.rows();
  VectorXd lo = VectorXd::Constant(rows, std::numeric_limits<double>::infinity());
  VectorXd hi = VectorXd::Constant(rows, -std::numeric_limits<double>::infinity());
  for (const auto& s : scenarios) {
    const VectorXd X = trajectory(lifted, U, s.flux);
    lo = lo.cwiseMin(X);
    hi = hi.cwiseMax(X);
  }
  const VectorXd Xn = trajectory(lifted, U, nominal);
  fmt::print(out, "zone,step,min_c,max_c,nominal_c\n");
  for (Index z = 0; z < lifted.n_zones(); ++z) {
    for (int k = 0; k < lifted.horizon; ++k) {
      const Index r = lifted.zone_row(z, k);
      fmt::print(out, "{},{},{:.6f},{:.6f},{:.6f}\n", lifted.zone_names[static_cast<std::size_t>(z)], k + 1, lo(r),
                 hi(r), Xn(r));
    }
  }
}

void write_inputs(std::ostream& out, const LiftedDynamics& lifted, const VectorXd& U) {
  fmt::print(out, "step,blind,heating_w_m2,cooling_w_m2\n");
  const Index m = lifted.n_inputs;
  for (int k = 0; k < lifted.horizon; ++k) {
    fmt::print(out, "{},{:.9f},{:.6f},{:.6f}\n", k, U(k * m), U(k * m + 1), U(k * m + 2));
  }
}

void write_histogram(std::ostream& out, const RiskHistogram& h) {
  fmt::print(out, "set,risk,violations,set_size\n");
  for (std::size_t s = 0; s < h.risks.size(); ++s) {
    fmt::print(out, "{},{},{},{}\n", s, h.risks[s], h.violations[s], h.set_size);
  }
  fmt::print(out, "min,{},,{}\nmax,{},,{}\nmean,{},,{}\n", h.min, h.set_size, h.max, h.set_size, h.mean, h.set_size);
}

VectorXd read_solution(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    return report_from_json(json::parse(text)).U;
  }
  std::vector<double> values;
  std::istringstream is(text);
  std::string token;
  while (is >> token) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ValidationError(fmt::format("{}: '{}' is not a number", path.string(), token));
    }
  }
  return Eigen::Map<const VectorXd>(values.data(), static_cast<Index>(values.size()));
}

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  int threads = 0;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void setup_logging() {
  static bool done = false;
  if (!done) {
    spdlog::set_default_logger(spdlog::stderr_color_st("scenplan"));
    done = true;
  }
  spdlog::set_level(spdlog::level::warn);
  if (const char* levels = std::getenv("SCENPLAN_LOG")) spdlog::cfg::helpers::load_levels(levels);
}

ExperimentConfig load_config(const Globals& g) {
  if (g.config.empty()) throw UsageError("--config is required");
  ExperimentConfig cfg = load_experiment_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  cfg.threads = g.threads;
  return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  f << text;
  if (!f) throw std::runtime_error(fmt::format("failed writing {}", path.string()));
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string join(const std::vector<std::string>& args) {
  std::string s;
  for (const auto& a : args) s += (s.empty() ? "" : " ") + a;
  return s;
}

int cmd_run(const Globals& g, Method method, bool header, const std::vector<std::string>& args, std::ostream& out) {
  const ExperimentConfig cfg = load_config(g);
  const Experiment experiment(cfg);
  const ExperimentReport report = experiment.run(method);

  const std::filesystem::path dir = g.out_dir;
  std::filesystem::create_directories(dir);
  const std::string tag(to_string(method));
  const auto validation = experiment.validation_set(0);
  std::vector<std::string> outputs;
  const auto emit = [&](const std::string& name, const std::string& text) {
    write_file(dir / name, text);
    outputs.push_back(name);
  };
  emit("report_" + tag + ".json", report_to_json(report).dump(2) + "\n");
  std::ostringstream buf;
  write_trajectories(buf, experiment.lifted(), report.U, validation);
  emit("trajectories_" + tag + ".csv", buf.str());
  buf.str("");
  write_envelope(buf, experiment.lifted(), report.U, validation, experiment.nominal_disturbance());
  emit("envelope_" + tag + ".csv", buf.str());
  buf.str("");
  write_inputs(buf, experiment.lifted(), report.U);
  emit("inputs_" + tag + ".csv", buf.str());

  const json manifest = {{"config", g.config},
                         {"seed", cfg.seed},
                         {"command", join(args)},
                         {"out_dir", g.out_dir},
                         {"version", kVersion},
                         {"timestamp", utc_timestamp()},
                         {"outputs", outputs},
                         {"timing", {{"seconds", report.seconds}}}};
  write_file(dir / ("manifest_" + tag + ".json"), manifest.dump(2) + "\n");

  if (header) write_summary_header(out);
  write_summary_row(out, report);
  return kOk;
}

int cmd_validate(const Globals& g, const std::string& solution, std::optional<int> sets, std::optional<int> set_size,
                 std::ostream& out) {
  const ExperimentConfig cfg = load_config(g);
  const Experiment experiment(cfg);
  const VectorXd U = read_solution(solution);
  if (U.size() != experiment.lifted().decision_dim()) {
    throw ValidationError(fmt::format("solution has {} entries but the config needs {}", U.size(),
                                      experiment.lifted().decision_dim()));
  }
  const int n_sets = sets.value_or(cfg.validation_sets);
  const int size = set_size.value_or(cfg.validation_set_size);
  if (n_sets < 1 || size < 1) throw UsageError("--sets and --set-size must be >= 1");
  const RiskHistogram h =
      experiment.risk_histogram(U, static_cast<std::size_t>(n_sets), static_cast<std::size_t>(size));
  write_histogram(out, h);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  setup_logging();
  CLI::App app{"Scenario-based energy planning for a stylized 3-zone building", "scenplan"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--out", g.out_dir, "Output directory for run artifacts");
  app.add_option("--threads", g.threads, "Worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);

  auto* size = app.add_subcommand("size", "Print standard N and the incremental schedule as CSV");
  std::optional<double> epsilon, beta;
  std::optional<Count> dims;
  std::string mode_text;
  size->add_option("--epsilon", epsilon, "Violation level in (0, 1)");
  size->add_option("--beta", beta, "Confidence parameter in (0, 1)");
  size->add_option("--dims", dims, "Decision dimension d");
  size->add_option("--mode", mode_text, "exact | explicit")->check(CLI::IsMember({"exact", "explicit"}));

  auto* run_cmd = app.add_subcommand("run", "Solve one method and write report, summary and plot data");
  std::string method_text;
  bool no_header = false;
  run_cmd->add_option("--method", method_text, "deterministic | standard | incremental")
      ->required()
      ->check(CLI::IsMember({"deterministic", "standard", "incremental"}));
  run_cmd->add_flag("--no-header", no_header, "Omit the CSV header line");

  auto* validate = app.add_subcommand("validate", "Empirical risk of a solution over fresh validation sets");
  std::string solution;
  std::optional<int> sets, set_size;
  validate->add_option("solution", solution, "Report JSON or whitespace-separated U vector")->required();
  validate->add_option("--sets", sets, "Number of validation sets");
  validate->add_option("--set-size", set_size, "Scenarios per set");

  std::vector<const char*> argv;
  argv.push_back("scenplan");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*size) {
      RiskParams params{0.1, 1e-4, 144};
      SizingMode mode = SizingMode::kExplicit;
      if (!g.config.empty()) {
        const ExperimentConfig cfg = load_config(g);
        params = {cfg.comfort.epsilon, cfg.beta, cfg.horizon_steps * static_cast<Count>(kNumInputs)};
        mode = cfg.mode;
      }
      if (epsilon) params.epsilon = *epsilon;
      if (beta) params.beta = *beta;
      if (dims) params.d = *dims;
      if (!mode_text.empty()) mode = parse_sizing_mode(mode_text);
      try {
        params.validate();
      } catch (const ValidationError& e) {
        throw UsageError(e.what());
      }
      write_size_table(out, params, mode);
      return kOk;
    }
    if (*run_cmd) return cmd_run(g, parse_method(method_text), !no_header, args, out);
    return cmd_validate(g, solution, sets, set_size, out);
  } catch (const UsageError& e) {
    fmt::print(err, "usage error: {}\n", e.what());
    return kUsage;
  } catch (const ConfigError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kConfigInvalid;
  } catch (const ValidationError& e) {
    fmt::print(err, "validation error: {}\n", e.what());
    return kConfigInvalid;
  } catch (const ModelStabilityError& e) {
    fmt::print(err, "model error: {}\n", e.what());
    return kConfigInvalid;
  } catch (const ConvergenceError& e) {
    fmt::print(err, "solver failure: {}\n", e.what());
    return kSolverFailure;
  } catch (const ScheduleDegeneracyError& e) {
    fmt::print(err, "solver failure: {}\n", e.what());
    return kSolverFailure;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kIoError;
  }
}

}  // namespace scenplan::cli
