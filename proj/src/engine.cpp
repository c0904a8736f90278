#include "scenplan/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "scenplan/errors.hpp"
#include "scenplan/json_util.hpp"
#include "scenplan/parallel.hpp"

namespace scenplan {

using json = nlohmann::json;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Season parse_season(std::string_view text) {
  if (text == "summer") return Season::kSummer;
  if (text == "winter") return Season::kWinter;
  throw ValidationError(fmt::format("unknown season '{}'", text));
}

std::string_view to_string(Season season) { return season == Season::kSummer ? "summer" : "winter"; }

Method parse_method(std::string_view text) {
  if (text == "deterministic") return Method::kDeterministic;
  if (text == "standard") return Method::kStandard;
  if (text == "incremental") return Method::kIncremental;
  throw ValidationError(fmt::format("unknown method '{}'", text));
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kDeterministic: return "deterministic";
    case Method::kStandard: return "standard";
    case Method::kIncremental: break;
  }
  return "incremental";
}

void ComfortSpec::validate() const {
  if (season == Season::kSummer && !t_max_c) throw ValidationError("summer comfort needs t_max_c");
  if (season == Season::kWinter && !t_min_c) throw ValidationError("winter comfort needs t_min_c");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError(fmt::format("epsilon must lie in (0, 1), got {}", epsilon));
}

void InputLimits::validate() const {
  if (!(blind_max >= 0.0 && blind_max <= 1.0)) throw ValidationError("blind_max must lie in [0, 1]");
  if (!(heating_max_w_m2 >= 0.0)) throw ValidationError("heating_max_w_m2 must be non-negative");
  if (!(cooling_max_w_m2 >= 0.0)) throw ValidationError("cooling_max_w_m2 must be non-negative");
}

namespace {

// Zone-temperature rows of X, in (step, zone) order.
std::vector<Index> zone_rows(const LiftedDynamics& lifted) {
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(lifted.n_zones() * lifted.horizon));
  for (int k = 0; k < lifted.horizon; ++k) {
    for (Index z = 0; z < lifted.n_zones(); ++z) rows.push_back(lifted.zone_row(z, k));
  }
  return rows;
}

MatrixXd select_rows(const MatrixXd& M, const std::vector<Index>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), M.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = M.row(rows[i]);
  return out;
}

VectorXd select_rows(const VectorXd& v, const std::vector<Index>& rows) {
  VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = v(rows[i]);
  return out;
}

bool same_coefficients(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

double sign_of(Season season) { return season == Season::kSummer ? 1.0 : -1.0; }

}  // namespace

ScenarioProgram assemble_scenario_program(const LiftedDynamics& lifted, std::span<const VectorXd> disturbances,
                                          const ComfortSpec& comfort, const InputLimits& limits,
                                          const Objective& objective) {
  comfort.validate();
  limits.validate();
  const Index d = lifted.decision_dim();
  const Index m = lifted.n_inputs;
  for (const auto& delta : disturbances) {
    if (delta.size() != lifted.disturbance_dim()) throw ValidationError("scenario disturbance has the wrong dimension");
  }

  MatrixXd R = objective.R.size() ? objective.R : MatrixXd::Identity(d, d);
  if (R.rows() != d || R.cols() != d) throw ValidationError("R must be square with one row per decision variable");
  ScenarioProgram program(R);
  if (objective.Q.size()) {
    const Index nx = lifted.G.rows();
    if (objective.Q.rows() != nx || objective.Q.cols() != nx) throw ValidationError("Q must match the stacked state");
    if (disturbances.empty()) throw ValidationError("a non-zero Q needs at least one scenario for the expectation");
    // Sample average of (c_i + G U)' Q (c_i + G U), c_i = free response + H delta_i.
    VectorXd mean_c = VectorXd::Zero(nx);
    double mean_quad = 0.0;
    for (const auto& delta : disturbances) {
      const VectorXd ci = lifted.free_response() + lifted.H * delta;
      mean_c += ci;
      mean_quad += ci.dot(objective.Q * ci);
    }
    const double inv_n = 1.0 / static_cast<double>(disturbances.size());
    mean_c *= inv_n;
    const MatrixXd QG = objective.Q * lifted.G;
    program.P = R + lifted.G.transpose() * QG;
    program.P = 0.5 * (program.P + program.P.transpose()).eval();
    program.c = 2.0 * QG.transpose() * mean_c;
    program.constant = mean_quad * inv_n;
  }

  // Input boxes: 0 <= u_{i,k} <= max.
  const std::array<double, 3> upper = {limits.blind_max, limits.heating_max_w_m2, limits.cooling_max_w_m2};
  for (int k = 0; k < lifted.horizon; ++k) {
    for (Index i = 0; i < m; ++i) {
      const Index col = k * m + i;
      Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(d);
      e(col) = 1.0;
      const double hi = i < static_cast<Index>(upper.size()) ? upper[static_cast<std::size_t>(i)] : 1e300;
      program.add_row(e, hi, RowTag::input_bound(static_cast<std::int32_t>(i), k, true));
      program.add_row(-e, 0.0, RowTag::input_bound(static_cast<std::int32_t>(i), k, false));
    }
  }

  // Comfort templates: sign * G_row U <= sign * (limit - free - H delta).
  const double sign = sign_of(comfort.season);
  const double limit = comfort.limit();
  const auto rows = zone_rows(lifted);
  const MatrixXd G_zone = select_rows(lifted.G, rows);
  const MatrixXd H_zone = select_rows(lifted.H, rows);
  const VectorXd free_zone = select_rows(lifted.free_response(), rows);
  const Index n_zones = lifted.n_zones();
  std::vector<Index> template_of(rows.size());
  for (int k = 0; k < lifted.horizon; ++k) {
    for (Index z = 0; z < n_zones; ++z) {
      const auto r = static_cast<std::size_t>(k * n_zones + z);
      const Eigen::RowVectorXd coeff = sign * G_zone.row(static_cast<Index>(r));
      Index t = -1;
      for (Index other = 0; other < z && t < 0; ++other) {
        const auto ro = static_cast<std::size_t>(k * n_zones + other);
        if (same_coefficients(coeff, program.templates.row(template_of[ro]))) t = template_of[ro];
      }
      template_of[r] = t >= 0 ? t : program.add_template(coeff);
    }
  }
  program.row_template.reserve(program.row_template.size() + disturbances.size() * rows.size());
  program.rhs.reserve(program.row_template.capacity());
  program.tags.reserve(program.row_template.capacity());
  for (std::size_t s = 0; s < disturbances.size(); ++s) {
    const VectorXd hz = H_zone * disturbances[s];
    for (int k = 0; k < lifted.horizon; ++k) {
      for (Index z = 0; z < n_zones; ++z) {
        const auto r = static_cast<std::size_t>(k * n_zones + z);
        const double b = sign * (limit - free_zone(static_cast<Index>(r)) - hz(static_cast<Index>(r)));
        program.add_row(template_of[r], b,
                        RowTag::comfort(static_cast<std::int32_t>(s), static_cast<std::int32_t>(z), k));
      }
    }
  }
  return program;
}

std::vector<std::int64_t> scenario_groups(const ScenarioProgram& program) {
  std::vector<std::int64_t> groups(program.tags.size(), -1);
  for (std::size_t i = 0; i < program.tags.size(); ++i) {
    if (program.tags[i].kind == RowTag::Kind::kComfort) groups[i] = program.tags[i].scenario;
  }
  return groups;
}

double max_comfort_violation(const LiftedDynamics& lifted, const ComfortSpec& comfort, const VectorXd& U,
                             const VectorXd& delta) {
  const VectorXd X = simulate_trajectory(lifted, U, delta);
  const double sign = sign_of(comfort.season);
  double worst = -std::numeric_limits<double>::infinity();
  for (Index z = 0; z < lifted.n_zones(); ++z) {
    for (int k = 0; k < lifted.horizon; ++k) worst = std::max(worst, sign * (X(lifted.zone_row(z, k)) - comfort.limit()));
  }
  return worst;
}

double empirical_risk(const VectorXd& U, const LiftedDynamics& lifted, const ComfortSpec& comfort,
                      std::span<const OccupancyScenario> validation, double tol) {
  comfort.validate();
  if (validation.empty()) throw ValidationError("empirical_risk: validation set is empty");
  if (U.size() != lifted.decision_dim()) {
    throw ValidationError(fmt::format("empirical_risk: U has {} entries, expected {}", U.size(), lifted.decision_dim()));
  }
  const auto rows = zone_rows(lifted);
  const MatrixXd H_zone = select_rows(lifted.H, rows);
  const VectorXd base = select_rows(VectorXd(lifted.free_response() + lifted.G * U), rows);
  const double sign = sign_of(comfort.season);
  const double limit = comfort.limit();
  std::size_t violated = 0;
  for (const auto& scenario : validation) {
    if (scenario.flux.size() != lifted.disturbance_dim()) throw ValidationError("validation scenario has the wrong dimension");
    const VectorXd temps = base + H_zone * scenario.flux;
    const double worst = (sign * (temps.array() - limit)).maxCoeff();
    if (worst > tol) ++violated;
  }
  return static_cast<double>(violated) / static_cast<double>(validation.size());
}

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (horizon_steps < 1) throw ValidationError("horizon_steps must be >= 1");
  comfort.validate();
  if (!(beta > 0.0 && beta < 1.0)) throw ValidationError(fmt::format("beta must lie in (0, 1), got {}", beta));
  occupancy.validate();
  limits.validate();
  if (validation_sets < 1 || validation_set_size < 1) throw ValidationError("validation sets and set_size must be >= 1");
  if (nominal_scenarios < 1) throw ValidationError("nominal_scenarios must be >= 1");
  if (!std::isfinite(initial_temp_c)) throw ValidationError("initial_temp_c must be finite");
}

ExperimentConfig experiment_config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc, "experiment",
             {"building", "horizon_steps", "initial_temp_c", "comfort", "risk", "occupancy", "validation",
              "deterministic", "input_limits", "seed"});
  ExperimentConfig cfg;
  const auto& building = require_field(doc, "building", "experiment");
  if (building.is_string()) {
    cfg.building_path = base_dir / building.get<std::string>();
    cfg.building = load_building_config(cfg.building_path);
  } else {
    cfg.building = building_config_from_json(building);
  }
  cfg.horizon_steps = get_as<int>(doc, "horizon_steps", "experiment");
  if (doc.contains("initial_temp_c")) cfg.initial_temp_c = get_as<double>(doc, "initial_temp_c", "experiment");

  const auto& comfort = require_field(doc, "comfort", "experiment");
  check_keys(comfort, "comfort", {"season", "t_max_c", "t_min_c", "epsilon"});
  cfg.comfort.season = parse_season(get_as<std::string>(comfort, "season", "comfort"));
  cfg.comfort.t_max_c = comfort.contains("t_max_c") ? std::optional(get_as<double>(comfort, "t_max_c", "comfort")) : std::nullopt;
  cfg.comfort.t_min_c = comfort.contains("t_min_c") ? std::optional(get_as<double>(comfort, "t_min_c", "comfort")) : std::nullopt;
  cfg.comfort.epsilon = get_as<double>(comfort, "epsilon", "comfort");

  const auto& risk = require_field(doc, "risk", "experiment");
  check_keys(risk, "risk", {"beta", "mode"});
  cfg.beta = get_as<double>(risk, "beta", "risk");
  if (risk.contains("mode")) cfg.mode = parse_sizing_mode(get_as<std::string>(risk, "mode", "risk"));

  if (doc.contains("occupancy")) {
    const auto& occ = doc.at("occupancy");
    check_keys(occ, "occupancy", {"lambda", "correlation", "watts_per_person"});
    if (occ.contains("lambda")) cfg.occupancy.lambda = get_as<double>(occ, "lambda", "occupancy");
    if (occ.contains("correlation")) {
      cfg.occupancy.correlation = parse_correlation(get_as<std::string>(occ, "correlation", "occupancy"));
    }
    if (occ.contains("watts_per_person")) {
      cfg.occupancy.watts_per_person = get_as<double>(occ, "watts_per_person", "occupancy");
    }
  }
  if (doc.contains("validation")) {
    const auto& val = doc.at("validation");
    check_keys(val, "validation", {"sets", "set_size"});
    if (val.contains("sets")) cfg.validation_sets = get_as<int>(val, "sets", "validation");
    if (val.contains("set_size")) cfg.validation_set_size = get_as<int>(val, "set_size", "validation");
  }
  if (doc.contains("deterministic")) {
    const auto& det = doc.at("deterministic");
    check_keys(det, "deterministic", {"nominal_scenarios"});
    cfg.nominal_scenarios = get_as<int>(det, "nominal_scenarios", "deterministic");
  }
  if (doc.contains("input_limits")) {
    const auto& lim = doc.at("input_limits");
    check_keys(lim, "input_limits", {"blind_max", "heating_max_w_m2", "cooling_max_w_m2"});
    if (lim.contains("blind_max")) cfg.limits.blind_max = get_as<double>(lim, "blind_max", "input_limits");
    if (lim.contains("heating_max_w_m2")) cfg.limits.heating_max_w_m2 = get_as<double>(lim, "heating_max_w_m2", "input_limits");
    if (lim.contains("cooling_max_w_m2")) cfg.limits.cooling_max_w_m2 = get_as<double>(lim, "cooling_max_w_m2", "input_limits");
  }
  cfg.seed = get_as<std::uint64_t>(doc, "seed", "experiment");
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(read_json_file(path), path.parent_path());
}

json experiment_config_to_json(const ExperimentConfig& c) {
  json comfort = {{"season", to_string(c.comfort.season)}, {"epsilon", c.comfort.epsilon}};
  if (c.comfort.t_max_c) comfort["t_max_c"] = *c.comfort.t_max_c;
  if (c.comfort.t_min_c) comfort["t_min_c"] = *c.comfort.t_min_c;
  return {{"building", building_config_to_json(c.building)},
          {"horizon_steps", c.horizon_steps},
          {"initial_temp_c", c.initial_temp_c},
          {"comfort", comfort},
          {"risk", {{"beta", c.beta}, {"mode", to_string(c.mode)}}},
          {"occupancy",
           {{"lambda", c.occupancy.lambda},
            {"correlation", to_string(c.occupancy.correlation)},
            {"watts_per_person", c.occupancy.watts_per_person}}},
          {"validation", {{"sets", c.validation_sets}, {"set_size", c.validation_set_size}}},
          {"deterministic", {{"nominal_scenarios", c.nominal_scenarios}}},
          {"input_limits",
           {{"blind_max", c.limits.blind_max},
            {"heating_max_w_m2", c.limits.heating_max_w_m2},
            {"cooling_max_w_m2", c.limits.cooling_max_w_m2}}},
          {"seed", c.seed}};
}

// ---------------------------------------------------------------------------
// Reports

json report_to_json(const ExperimentReport& r) {
  json trace = json::array();
  for (const auto& it : r.trace) {
    trace.push_back({{"j", it.j}, {"N_j", it.N_j}, {"support", it.support}, {"dual_support", it.dual_support},
                     {"cost", it.cost}});
  }
  return {{"method", to_string(r.method)},
          {"scenarios_used", r.scenarios_used},
          {"cost", r.cost},
          {"theoretical_epsilon", r.theoretical_epsilon ? json(*r.theoretical_epsilon) : json(nullptr)},
          {"empirical_risk", r.empirical_risk},
          {"validation_violations", r.validation_violations},
          {"validation_size", r.validation_size},
          {"rng_seed", r.rng_seed},
          {"support_count", r.support_count},
          {"dual_support_count", r.dual_support_count},
          {"trace", trace},
          {"U", std::vector<double>(r.U.data(), r.U.data() + r.U.size())}};
}

ExperimentReport report_from_json(const json& doc) {
  ExperimentReport r;
  r.method = parse_method(get_as<std::string>(doc, "method", "report"));
  r.scenarios_used = get_as<Count>(doc, "scenarios_used", "report");
  r.cost = get_as<double>(doc, "cost", "report");
  const auto& eps = require_field(doc, "theoretical_epsilon", "report");
  if (!eps.is_null()) r.theoretical_epsilon = eps.get<double>();
  r.empirical_risk = get_as<double>(doc, "empirical_risk", "report");
  r.validation_violations = get_as<std::size_t>(doc, "validation_violations", "report");
  r.validation_size = get_as<std::size_t>(doc, "validation_size", "report");
  r.rng_seed = get_as<std::uint64_t>(doc, "rng_seed", "report");
  r.support_count = get_as<std::size_t>(doc, "support_count", "report");
  r.dual_support_count = get_as<std::size_t>(doc, "dual_support_count", "report");
  for (const auto& it : require_field(doc, "trace", "report")) {
    r.trace.push_back({get_as<Count>(it, "j", "trace"), get_as<Count>(it, "N_j", "trace"),
                       get_as<std::size_t>(it, "support", "trace"), get_as<std::size_t>(it, "dual_support", "trace"),
                       get_as<double>(it, "cost", "trace")});
  }
  const auto U = get_as<std::vector<double>>(doc, "U", "report");
  r.U = Eigen::Map<const VectorXd>(U.data(), static_cast<Index>(U.size()));
  return r;
}

// ---------------------------------------------------------------------------
// Experiment

Experiment::Experiment(ExperimentConfig config)
    : config_(std::move(config)),
      model_(build_stylized_building(config_.building)),
      lifted_(lift_dynamics(model_, config_.horizon_steps, VectorXd::Constant(model_.state_dim(), config_.initial_temp_c))),
      sampler_(config_.seed, config_.horizon_steps, model_.zone_floor_areas_m2, config_.occupancy) {
  config_.validate();
}

RiskParams Experiment::risk_params() const {
  return {config_.comfort.epsilon, config_.beta, static_cast<Count>(lifted_.decision_dim())};
}

std::vector<VectorXd> Experiment::training_disturbances(std::size_t count) const {
  std::vector<VectorXd> out(count);
  parallel_for(count, config_.threads,
               [&](std::size_t i) { out[i] = sampler_.draw(Stream::kTraining, 0, i).flux; });
  return out;
}

std::vector<OccupancyScenario> Experiment::validation_set(std::size_t set) const {
  return sampler_.draw_many(Stream::kValidation, set, 0, static_cast<std::size_t>(config_.validation_set_size));
}

VectorXd Experiment::nominal_disturbance() const {
  VectorXd mean = VectorXd::Zero(lifted_.disturbance_dim());
  const auto n = static_cast<std::size_t>(config_.nominal_scenarios);
  for (std::size_t i = 0; i < n; ++i) mean += sampler_.draw(Stream::kNominal, 0, i).flux;
  return mean / static_cast<double>(n);
}

SolveResult Experiment::solve(const ScenarioProgram& program, std::span<const Index> warm) const {
  QpOptions options;
  options.threads = config_.threads;
  const SolveResult result = QpSolver(program, options).solve({}, warm);
  if (!result.optimal()) throw ConvergenceError("scenario program is infeasible", result.U);
  return result;
}

void Experiment::validate_into(ExperimentReport& report) const {
  const auto validation = validation_set(0);
  report.validation_size = validation.size();
  report.empirical_risk = empirical_risk(report.U, lifted_, config_.comfort, validation);
  report.validation_violations =
      static_cast<std::size_t>(std::llround(report.empirical_risk * static_cast<double>(validation.size())));
}

ExperimentReport Experiment::run(Method method) const {
  switch (method) {
    case Method::kDeterministic: return run_deterministic();
    case Method::kStandard: return run_standard();
    case Method::kIncremental: break;
  }
  return run_incremental();
}

namespace {

struct SupportCounts {
  std::size_t removal = 0;
  std::size_t dual = 0;
};

SupportCounts count_scenario_support(const ScenarioProgram& program, const SolveResult& result, int threads) {
  QpOptions options;
  options.threads = threads;
  const QpSolver solver(program, options);
  const auto groups = scenario_groups(program);
  return {count_support_groups(solver, result, groups).count, count_dual_support_groups(result, groups)};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

ExperimentReport Experiment::run_deterministic() const {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<VectorXd> nominal = {nominal_disturbance()};
  const auto program = assemble_scenario_program(lifted_, nominal, config_.comfort, config_.limits);
  const auto result = solve(program);
  const auto support = count_scenario_support(program, result, config_.threads);

  ExperimentReport report;
  report.method = Method::kDeterministic;
  report.scenarios_used = 1;
  report.cost = result.cost;
  report.rng_seed = config_.seed;
  report.support_count = support.removal;
  report.dual_support_count = support.dual;
  report.U = result.U;
  validate_into(report);
  report.seconds = seconds_since(start);
  return report;
}

ExperimentReport Experiment::run_standard() const {
  const auto start = std::chrono::steady_clock::now();
  const RiskParams params = risk_params();
  const Count N = standard_sample_size(params, config_.mode);
  spdlog::debug("standard: N = {} ({} mode, d = {})", N, to_string(config_.mode), params.d);
  const auto disturbances = training_disturbances(static_cast<std::size_t>(N));
  const auto program = assemble_scenario_program(lifted_, disturbances, config_.comfort, config_.limits);
  const auto result = solve(program);
  const auto support = count_scenario_support(program, result, config_.threads);

  ExperimentReport report;
  report.method = Method::kStandard;
  report.scenarios_used = N;
  report.cost = result.cost;
  report.theoretical_epsilon = config_.comfort.epsilon;
  report.rng_seed = config_.seed;
  report.support_count = support.removal;
  report.dual_support_count = support.dual;
  report.U = result.U;
  validate_into(report);
  report.seconds = seconds_since(start);
  return report;
}

ExperimentReport Experiment::run_incremental() const {
  const auto start = std::chrono::steady_clock::now();
  const RiskParams params = risk_params();
  const IncrementalSchedule schedule = incremental_schedule(params, config_.mode);

  ExperimentReport report;
  report.method = Method::kIncremental;
  report.theoretical_epsilon = config_.comfort.epsilon;
  report.rng_seed = config_.seed;

  // One training stream: iteration j uses its first N_j scenarios, so draws
  // made for earlier iterations are kept.
  std::vector<VectorXd> drawn;
  std::vector<Index> warm;
  for (const auto& entry : schedule.entries) {
    const auto N = static_cast<std::size_t>(entry.N_j);
    if (drawn.size() < N) {
      const std::size_t first = drawn.size();
      drawn.resize(N);
      parallel_for(N - first, config_.threads, [&](std::size_t i) {
        drawn[first + i] = sampler_.draw(Stream::kTraining, 0, first + i).flux;
      });
    }
    const std::span<const VectorXd> used(drawn.data(), N);
    const auto program = assemble_scenario_program(lifted_, used, config_.comfort, config_.limits);
    const auto result = solve(program, warm);
    warm = result.working_templates;
    const auto support = count_scenario_support(program, result, config_.threads);
    report.trace.push_back({entry.j, entry.N_j, support.removal, support.dual, result.cost});
    spdlog::debug("incremental: j = {}, N_j = {}, S*_j = {} (dual {}), cost = {}", entry.j, entry.N_j,
                  support.removal, support.dual, result.cost);
    report.U = result.U;
    report.cost = result.cost;
    report.scenarios_used = entry.N_j;
    report.support_count = support.removal;
    report.dual_support_count = support.dual;
    if (static_cast<Count>(support.removal) <= entry.j) break;
  }
  validate_into(report);
  report.seconds = seconds_since(start);
  return report;
}

RiskHistogram Experiment::risk_histogram(const VectorXd& U, std::size_t sets, std::size_t set_size) const {
  if (sets < 1 || set_size < 1) throw ValidationError("risk_histogram: sets and set_size must be >= 1");
  RiskHistogram h;
  h.set_size = set_size;
  h.risks.assign(sets, 0.0);
  h.violations.assign(sets, 0);
  parallel_for(sets, config_.threads, [&](std::size_t s) {
    const auto scenarios = sampler_.draw_many(Stream::kValidation, s, 0, set_size);
    h.risks[s] = empirical_risk(U, lifted_, config_.comfort, scenarios);
    h.violations[s] = static_cast<std::size_t>(std::llround(h.risks[s] * static_cast<double>(set_size)));
  });
  h.min = *std::min_element(h.risks.begin(), h.risks.end());
  h.max = *std::max_element(h.risks.begin(), h.risks.end());
  double sum = 0.0;
  for (double r : h.risks) sum += r;
  h.mean = sum / static_cast<double>(sets);
  return h;
}

}  // namespace scenplan
