#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "scenplan/occupancy.hpp"
#include "scenplan/qp.hpp"
#include "scenplan/sizing.hpp"
#include "scenplan/thermal_model.hpp"

namespace scenplan {

enum class Season { kSummer, kWinter };

Season parse_season(std::string_view text);
std::string_view to_string(Season season);

/// Chance-constrained comfort band: summer caps zone temperatures at t_max_c,
/// winter keeps them above t_min_c.
struct ComfortSpec {
  Season season = Season::kSummer;
  std::optional<double> t_max_c = 24.0;
  std::optional<double> t_min_c;
  double epsilon = 0.1;

  void validate() const;
  /// The bound the season constrains.
  double limit() const { return season == Season::kSummer ? *t_max_c : *t_min_c; }
};

struct InputLimits {
  double blind_max = 0.9;             // fraction of solar gain removed
  double heating_max_w_m2 = 1000.0;
  double cooling_max_w_m2 = 1000.0;

  void validate() const;
};

/// J(U) = E[X'QX] + U'RU. An empty Q means Q = 0, an empty R means R = I.
struct Objective {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
};

/// One comfort row per (scenario, zone, step) plus box rows on every input.
/// Comfort rows with identical coefficients share a template. Scenario i of
/// `disturbances` is tagged with scenario id i.
ScenarioProgram assemble_scenario_program(const LiftedDynamics& lifted, std::span<const Eigen::VectorXd> disturbances,
                                          const ComfortSpec& comfort, const InputLimits& limits,
                                          const Objective& objective = {});

/// Scenario id of every comfort row, -1 for input bounds.
std::vector<std::int64_t> scenario_groups(const ScenarioProgram& program);

/// Largest comfort-row violation of U under disturbance `delta` (negative when satisfied).
double max_comfort_violation(const LiftedDynamics& lifted, const ComfortSpec& comfort, const Eigen::VectorXd& U,
                             const Eigen::VectorXd& delta);

/// Fraction of scenarios under which some zone leaves the comfort band by more than `tol`.
double empirical_risk(const Eigen::VectorXd& U, const LiftedDynamics& lifted, const ComfortSpec& comfort,
                      std::span<const OccupancyScenario> validation, double tol = 1e-8);

struct ExperimentConfig {
  BuildingConfig building;
  std::filesystem::path building_path;
  int horizon_steps = 48;
  double initial_temp_c = 23.0;
  ComfortSpec comfort;
  double beta = 1e-4;
  SizingMode mode = SizingMode::kExplicit;
  OccupancyModel occupancy;
  int validation_sets = 1;
  int validation_set_size = 3000;
  int nominal_scenarios = 1000;
  InputLimits limits;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

/// Reads an experiment document; `building` is resolved relative to the file.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

enum class Method { kDeterministic, kStandard, kIncremental };

Method parse_method(std::string_view text);
std::string_view to_string(Method method);

struct IterationRecord {
  Count j = 0;
  Count N_j = 0;
  std::size_t support = 0;       // removal-based, per scenario
  std::size_t dual_support = 0;  // scenarios with a positive multiplier
  double cost = 0.0;
};

struct ExperimentReport {
  Method method = Method::kDeterministic;
  Count scenarios_used = 0;
  double cost = 0.0;
  std::optional<double> theoretical_epsilon;
  double empirical_risk = 0.0;
  std::size_t validation_violations = 0;
  std::size_t validation_size = 0;
  std::uint64_t rng_seed = 0;
  std::size_t support_count = 0;
  std::size_t dual_support_count = 0;
  std::vector<IterationRecord> trace;
  Eigen::VectorXd U;
  double seconds = 0.0;
};

nlohmann::json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& doc);

struct RiskHistogram {
  std::vector<double> risks;
  std::vector<std::size_t> violations;
  std::size_t set_size = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

/// Everything derived from an ExperimentConfig that the methods share.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  const BuildingModel& model() const { return model_; }
  const LiftedDynamics& lifted() const { return lifted_; }
  const OccupancySampler& sampler() const { return sampler_; }
  RiskParams risk_params() const;

  std::vector<Eigen::VectorXd> training_disturbances(std::size_t count) const;
  std::vector<OccupancyScenario> validation_set(std::size_t set) const;
  /// Mean occupancy flux over the nominal stream.
  Eigen::VectorXd nominal_disturbance() const;

  ExperimentReport run(Method method) const;
  ExperimentReport run_deterministic() const;
  ExperimentReport run_standard() const;
  ExperimentReport run_incremental() const;

  RiskHistogram risk_histogram(const Eigen::VectorXd& U, std::size_t sets, std::size_t set_size) const;

 private:
  SolveResult solve(const ScenarioProgram& program, std::span<const Index> warm = {}) const;
  void validate_into(ExperimentReport& report) const;

  ExperimentConfig config_;
  BuildingModel model_;
  LiftedDynamics lifted_;
  OccupancySampler sampler_;
};

}  // namespace scenplan
