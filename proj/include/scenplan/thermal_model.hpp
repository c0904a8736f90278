#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace scenplan {

/// Positions of the three building-wide inputs inside u_k.
enum InputChannel : Eigen::Index { kBlind = 0, kHeating = 1, kCooling = 2 };
inline constexpr Eigen::Index kNumInputs = 3;

/// Reserved node name for the outdoor air in link/wall definitions.
inline constexpr const char* kAmbientNode = "ambient";

struct ZoneSpec {
  std::string name;
  double floor_area_m2 = 0.0;
  double capacitance_j_per_k = 0.0;
  double window_area_m2 = 0.0;
};

/// Direct air-to-air conductance (open doors, glazing, infiltration).
struct AirLinkSpec {
  std::array<std::string, 2> between;
  double resistance_k_per_w = 0.0;
};

/// A wall with a single lumped layer. Half of its resistance sits on each side.
struct WallSpec {
  std::string name;
  std::array<std::string, 2> sides;
  double resistance_k_per_w = 0.0;
  double capacitance_j_per_k = 0.0;
};

struct BuildingConfig {
  std::vector<ZoneSpec> zones;
  std::vector<AirLinkSpec> air_links;
  std::vector<WallSpec> walls;
  double step_minutes = 15.0;
  double ambient_temp_c = 35.0;
  double solar_flux_w_m2 = 200.0;
  double solar_transmittance = 0.6;
};

/// Parses a building document. Unknown keys are rejected with ConfigError.
BuildingConfig building_config_from_json(const nlohmann::json& doc);
BuildingConfig load_building_config(const std::filesystem::path& path);
nlohmann::json building_config_to_json(const BuildingConfig& config);

/// The three-zone building shipped in configs/building_default.json.
BuildingConfig default_building_config();

/// Discrete-time LTI thermal model x+ = A x + B_u u + B_delta delta + w.
///
/// States are zone air temperatures (in zone order) followed by one layer
/// temperature per wall. `known_disturbance` (w) is the per-step contribution
/// of the constant ambient temperature and the unshaded solar gain; it is kept
/// apart from B_delta so that delta carries occupancy only.
struct BuildingModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B_u;
  Eigen::MatrixXd B_delta;
  Eigen::VectorXd known_disturbance;

  std::vector<std::string> state_names;
  std::vector<std::string> zone_names;
  std::vector<Eigen::Index> zone_state_indices;
  std::vector<double> zone_floor_areas_m2;

  double step_minutes = 0.0;
  double ambient_temp_c = 0.0;
  double solar_flux_w_m2 = 0.0;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index n_inputs() const { return B_u.cols(); }
  Eigen::Index n_disturbances() const { return B_delta.cols(); }
  Eigen::Index n_zones() const { return static_cast<Eigen::Index>(zone_state_indices.size()); }
};

/// Continuous-time RC network dx/dt = Ac x + Bc u + Ec delta + wc.
struct ContinuousNetwork {
  Eigen::MatrixXd Ac;
  Eigen::MatrixXd Bc;
  Eigen::MatrixXd Ec;
  Eigen::VectorXd wc;
  double step_seconds = 0.0;
};

ContinuousNetwork build_continuous_network(const BuildingConfig& config);

/// Exact zero-order-hold discretization of the RC network.
BuildingModel build_stylized_building(const BuildingConfig& config);

/// A x + B_u u + B_delta delta (the known disturbance is not added).
Eigen::VectorXd step_dynamics(const BuildingModel& model, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u, const Eigen::VectorXd& delta);

double spectral_radius(const Eigen::MatrixXd& A);

/// Horizon-stacked map X = F x0 + G U + H delta + offset, X = [x_1; ...; x_M],
/// U = [u_0; ...; u_{M-1}], delta = [delta_0; ...; delta_{M-1}].
struct LiftedDynamics {
  Eigen::MatrixXd F;
  Eigen::MatrixXd G;
  Eigen::MatrixXd H;
  Eigen::VectorXd offset;
  Eigen::VectorXd x0;
  int horizon = 0;
  double step_minutes = 0.0;

  Eigen::Index state_dim = 0;
  Eigen::Index n_inputs = 0;
  Eigen::Index n_disturbances = 0;
  std::vector<Eigen::Index> zone_state_indices;
  std::vector<std::string> zone_names;

  Eigen::Index n_zones() const { return static_cast<Eigen::Index>(zone_state_indices.size()); }
  Eigen::Index decision_dim() const { return n_inputs * horizon; }
  Eigen::Index disturbance_dim() const { return n_disturbances * horizon; }

  /// Row of X holding the temperature of `zone` after step `step` + 1.
  Eigen::Index zone_row(Eigen::Index zone, int step) const {
    return static_cast<Eigen::Index>(step) * state_dim + zone_state_indices[zone];
  }

  /// F x0 + offset.
  Eigen::VectorXd free_response() const { return F * x0 + offset; }
};

LiftedDynamics lift_dynamics(const BuildingModel& model, int horizon, const Eigen::VectorXd& x0);

Eigen::VectorXd simulate_trajectory(const LiftedDynamics& lifted, const Eigen::VectorXd& U,
                                    const Eigen::VectorXd& delta);

/// Zone air temperatures of a stacked trajectory, one row per zone, one column per step.
Eigen::MatrixXd zone_temperatures(const LiftedDynamics& lifted, const Eigen::VectorXd& X);

}  // namespace scenplan
