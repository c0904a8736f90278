#include "scenplan/thermal_model.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "scenplan/errors.hpp"
#include "scenplan/json_util.hpp"

namespace scenplan {

using json = nlohmann::json;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void require_positive(double value, const std::string& field) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ValidationError(fmt::format("{} must be positive, got {}", field, value));
  }
}

void require_nonnegative(double value, const std::string& field) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw ValidationError(fmt::format("{} must be non-negative, got {}", field, value));
  }
}

void validate(const BuildingConfig& config) {
  if (config.zones.empty()) throw ValidationError("building needs at least one zone");
  std::set<std::string> names;
  for (const auto& z : config.zones) {
    if (z.name.empty() || z.name == kAmbientNode) {
      throw ValidationError(fmt::format("invalid zone name '{}'", z.name));
    }
    if (!names.insert(z.name).second) {
      throw ValidationError(fmt::format("duplicate zone name '{}'", z.name));
    }
    require_positive(z.floor_area_m2, fmt::format("zones[{}].floor_area_m2", z.name));
    require_positive(z.capacitance_j_per_k, fmt::format("zones[{}].capacitance_j_per_k", z.name));
    require_nonnegative(z.window_area_m2, fmt::format("zones[{}].window_area_m2", z.name));
  }
  auto check_node = [&](const std::string& node, const std::string& where) {
    if (node != kAmbientNode && !names.contains(node)) {
      throw ValidationError(fmt::format("{} references unknown node '{}'", where, node));
    }
  };
  for (std::size_t i = 0; i < config.air_links.size(); ++i) {
    const auto& link = config.air_links[i];
    const auto where = fmt::format("air_links[{}]", i);
    check_node(link.between[0], where);
    check_node(link.between[1], where);
    if (link.between[0] == link.between[1]) {
      throw ValidationError(where + " connects a node to itself");
    }
    require_positive(link.resistance_k_per_w, where + ".resistance_k_per_w");
  }
  std::set<std::string> wall_names;
  for (const auto& wall : config.walls) {
    const auto where = fmt::format("walls[{}]", wall.name);
    if (wall.name.empty() || !wall_names.insert(wall.name).second) {
      throw ValidationError(fmt::format("wall names must be unique and non-empty ('{}')", wall.name));
    }
    check_node(wall.sides[0], where);
    check_node(wall.sides[1], where);
    require_positive(wall.resistance_k_per_w, where + ".resistance_k_per_w");
    require_positive(wall.capacitance_j_per_k, where + ".capacitance_j_per_k");
  }
  require_positive(config.step_minutes, "step_minutes");
  if (!std::isfinite(config.ambient_temp_c)) throw ValidationError("ambient_temp_c must be finite");
  require_nonnegative(config.solar_flux_w_m2, "solar_flux_w_m2");
  if (!(config.solar_transmittance >= 0.0 && config.solar_transmittance <= 1.0)) {
    throw ValidationError("solar_transmittance must lie in [0, 1]");
  }
}

}  // namespace

BuildingConfig building_config_from_json(const json& doc) {
  check_keys(doc, "building",
             {"zones", "resistances", "step_minutes", "ambient_temp_c", "solar_flux_w_m2",
              "solar_transmittance"});
  BuildingConfig config;
  for (const auto& z : require_field(doc, "zones", "building")) {
    check_keys(z, "zone", {"name", "floor_area_m2", "capacitance_j_per_k", "window_area_m2"});
    config.zones.push_back({get_as<std::string>(z, "name", "zone"), get_as<double>(z, "floor_area_m2", "zone"),
                            get_as<double>(z, "capacitance_j_per_k", "zone"),
                            get_as<double>(z, "window_area_m2", "zone")});
  }
  const auto& res = require_field(doc, "resistances", "building");
  check_keys(res, "resistances", {"air_links", "walls"});
  if (res.contains("air_links")) {
    for (const auto& l : res.at("air_links")) {
      check_keys(l, "air_link", {"between", "resistance_k_per_w"});
      const auto between = get_as<std::vector<std::string>>(l, "between", "air_link");
      if (between.size() != 2) throw ConfigError("air_link.between must name exactly two nodes");
      config.air_links.push_back({{between[0], between[1]}, get_as<double>(l, "resistance_k_per_w", "air_link")});
    }
  }
  if (res.contains("walls")) {
    for (const auto& w : res.at("walls")) {
      check_keys(w, "wall", {"name", "sides", "resistance_k_per_w", "capacitance_j_per_k"});
      const auto sides = get_as<std::vector<std::string>>(w, "sides", "wall");
      if (sides.size() != 2) throw ConfigError("wall.sides must name exactly two nodes");
      config.walls.push_back({get_as<std::string>(w, "name", "wall"), {sides[0], sides[1]},
                              get_as<double>(w, "resistance_k_per_w", "wall"),
                              get_as<double>(w, "capacitance_j_per_k", "wall")});
    }
  }
  config.step_minutes = get_as<double>(doc, "step_minutes", "building");
  config.ambient_temp_c = get_as<double>(doc, "ambient_temp_c", "building");
  config.solar_flux_w_m2 = get_as<double>(doc, "solar_flux_w_m2", "building");
  if (doc.contains("solar_transmittance")) {
    config.solar_transmittance = get_as<double>(doc, "solar_transmittance", "building");
  }
  return config;
}

BuildingConfig load_building_config(const std::filesystem::path& path) {
  return building_config_from_json(read_json_file(path));
}

json building_config_to_json(const BuildingConfig& config) {
  json zones = json::array();
  for (const auto& z : config.zones) {
    zones.push_back({{"name", z.name},
                     {"floor_area_m2", z.floor_area_m2},
                     {"capacitance_j_per_k", z.capacitance_j_per_k},
                     {"window_area_m2", z.window_area_m2}});
  }
  json links = json::array();
  for (const auto& l : config.air_links) {
    links.push_back({{"between", {l.between[0], l.between[1]}}, {"resistance_k_per_w", l.resistance_k_per_w}});
  }
  json walls = json::array();
  for (const auto& w : config.walls) {
    walls.push_back({{"name", w.name},
                     {"sides", {w.sides[0], w.sides[1]}},
                     {"resistance_k_per_w", w.resistance_k_per_w},
                     {"capacitance_j_per_k", w.capacitance_j_per_k}});
  }
  return {{"zones", zones},
          {"resistances", {{"air_links", links}, {"walls", walls}}},
          {"step_minutes", config.step_minutes},
          {"ambient_temp_c", config.ambient_temp_c},
          {"solar_flux_w_m2", config.solar_flux_w_m2},
          {"solar_transmittance", config.solar_transmittance}};
}

BuildingConfig default_building_config() {
  BuildingConfig c;
  // Two identical bedrooms either side of a living room.
  c.zones = {{"Z0001", 15.0, 4.0e5, 3.0}, {"Z0002", 15.0, 4.0e5, 3.0}, {"Z0003", 30.0, 8.0e5, 6.0}};
  c.air_links = {{{"Z0001", kAmbientNode}, 0.15},
                 {{"Z0002", kAmbientNode}, 0.15},
                 {{"Z0003", kAmbientNode}, 0.08},
                 {{"Z0001", "Z0003"}, 0.05},
                 {{"Z0002", "Z0003"}, 0.05}};
  c.walls = {{"W_ext_Z0001", {"Z0001", kAmbientNode}, 0.12, 3.0e6},
             {"W_ext_Z0002", {"Z0002", kAmbientNode}, 0.12, 3.0e6},
             {"W_ext_Z0003", {"Z0003", kAmbientNode}, 0.07, 6.0e6},
             {"W_int_Z0001_Z0003", {"Z0001", "Z0003"}, 0.04, 1.0e6},
             {"W_int_Z0002_Z0003", {"Z0002", "Z0003"}, 0.04, 1.0e6},
             {"W_int_Z0001_Z0002", {"Z0001", "Z0002"}, 0.05, 8.0e5}};
  c.step_minutes = 15.0;
  c.ambient_temp_c = 35.0;
  c.solar_flux_w_m2 = 200.0;
  c.solar_transmittance = 0.6;
  return c;
}

ContinuousNetwork build_continuous_network(const BuildingConfig& config) {
  validate(config);
  const Index n_zones = static_cast<Index>(config.zones.size());
  const Index n = n_zones + static_cast<Index>(config.walls.size());

  std::map<std::string, Index> node_index;
  for (Index i = 0; i < n_zones; ++i) node_index[config.zones[i].name] = i;

  // Conductance matrix K (W/K) and conductance to ambient (W/K) per state.
  MatrixXd K = MatrixXd::Zero(n, n);
  VectorXd to_ambient = VectorXd::Zero(n);
  auto connect = [&](const std::string& a, Index b, double conductance) {
    if (a == kAmbientNode) {
      to_ambient(b) += conductance;
      return;
    }
    const Index ia = node_index.at(a);
    K(ia, b) += conductance;
    K(b, ia) += conductance;
  };
  for (const auto& link : config.air_links) {
    const double g = 1.0 / link.resistance_k_per_w;
    if (link.between[0] == kAmbientNode) {
      to_ambient(node_index.at(link.between[1])) += g;
    } else {
      connect(link.between[1], node_index.at(link.between[0]), g);
    }
  }
  VectorXd capacitance(n);
  for (Index i = 0; i < n_zones; ++i) capacitance(i) = config.zones[i].capacitance_j_per_k;
  for (std::size_t w = 0; w < config.walls.size(); ++w) {
    const auto& wall = config.walls[w];
    const Index iw = n_zones + static_cast<Index>(w);
    capacitance(iw) = wall.capacitance_j_per_k;
    const double g_half = 2.0 / wall.resistance_k_per_w;
    connect(wall.sides[0], iw, g_half);
    connect(wall.sides[1], iw, g_half);
  }

  ContinuousNetwork net;
  net.step_seconds = config.step_minutes * 60.0;
  net.Ac = MatrixXd::Zero(n, n);
  net.Bc = MatrixXd::Zero(n, kNumInputs);
  net.Ec = MatrixXd::Zero(n, n_zones);
  net.wc = VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i) {
    const double inv_c = 1.0 / capacitance(i);
    for (Index j = 0; j < n; ++j) {
      if (j != i) net.Ac(i, j) = K(i, j) * inv_c;
    }
    net.Ac(i, i) = -(K.row(i).sum() + to_ambient(i)) * inv_c;
    net.wc(i) = to_ambient(i) * config.ambient_temp_c * inv_c;
  }
  for (Index i = 0; i < n_zones; ++i) {
    const auto& zone = config.zones[i];
    const double inv_c = 1.0 / zone.capacitance_j_per_k;
    const double solar_w = config.solar_flux_w_m2 * config.solar_transmittance * zone.window_area_m2;
    // Blinds remove a fraction u_1 of the (known) solar gain.
    net.wc(i) += solar_w * inv_c;
    net.Bc(i, kBlind) = -solar_w * inv_c;
    net.Bc(i, kHeating) = zone.floor_area_m2 * inv_c;
    net.Bc(i, kCooling) = -zone.floor_area_m2 * inv_c;
    net.Ec(i, i) = zone.floor_area_m2 * inv_c;
  }
  return net;
}

BuildingModel build_stylized_building(const BuildingConfig& config) {
  const ContinuousNetwork net = build_continuous_network(config);
  const Index n = net.Ac.rows();
  const Index m = net.Bc.cols();
  const Index p = net.Ec.cols();

  // exp([[Ac, Bc, Ec, wc], [0, 0, 0, 0]] * T) gives A and the held-input integrals in one shot.
  const Index total = n + m + p + 1;
  MatrixXd Z = MatrixXd::Zero(total, total);
  Z.topLeftCorner(n, n) = net.Ac;
  Z.block(0, n, n, m) = net.Bc;
  Z.block(0, n + m, n, p) = net.Ec;
  Z.block(0, n + m + p, n, 1) = net.wc;
  const MatrixXd E = (Z * net.step_seconds).exp();

  BuildingModel model;
  model.A = E.topLeftCorner(n, n);
  model.B_u = E.block(0, n, n, m);
  model.B_delta = E.block(0, n + m, n, p);
  model.known_disturbance = E.block(0, n + m + p, n, 1);
  model.step_minutes = config.step_minutes;
  model.ambient_temp_c = config.ambient_temp_c;
  model.solar_flux_w_m2 = config.solar_flux_w_m2;
  for (Index i = 0; i < p; ++i) {
    model.zone_names.push_back(config.zones[i].name);
    model.state_names.push_back(config.zones[i].name);
    model.zone_state_indices.push_back(i);
    model.zone_floor_areas_m2.push_back(config.zones[i].floor_area_m2);
  }
  for (const auto& wall : config.walls) model.state_names.push_back(wall.name);

  // A node without a path to ambient has a continuous eigenvalue of exactly 0,
  // which the exponential maps to 1 up to rounding.
  const double rho = spectral_radius(model.A);
  if (!(rho < 1.0 - 1e-12)) {
    throw ModelStabilityError(fmt::format("discrete state matrix has spectral radius {} (not below 1)", rho));
  }
  return model;
}

double spectral_radius(const MatrixXd& A) {
  Eigen::EigenSolver<MatrixXd> solver(A, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

VectorXd step_dynamics(const BuildingModel& model, const VectorXd& x, const VectorXd& u, const VectorXd& delta) {
  if (x.size() != model.state_dim() || u.size() != model.n_inputs() || delta.size() != model.n_disturbances()) {
    throw ValidationError(fmt::format("step_dynamics: expected sizes ({}, {}, {}), got ({}, {}, {})",
                                      model.state_dim(), model.n_inputs(), model.n_disturbances(), x.size(),
                                      u.size(), delta.size()));
  }
  return model.A * x + model.B_u * u + model.B_delta * delta;
}

LiftedDynamics lift_dynamics(const BuildingModel& model, int horizon, const VectorXd& x0) {
  if (horizon < 1) throw ValidationError(fmt::format("horizon must be >= 1, got {}", horizon));
  const Index n = model.state_dim();
  if (x0.size() != n) throw ValidationError("lift_dynamics: x0 has the wrong dimension");
  const Index m = model.n_inputs();
  const Index p = model.n_disturbances();
  const Index M = horizon;

  LiftedDynamics lifted;
  lifted.horizon = horizon;
  lifted.step_minutes = model.step_minutes;
  lifted.state_dim = n;
  lifted.n_inputs = m;
  lifted.n_disturbances = p;
  lifted.zone_state_indices = model.zone_state_indices;
  lifted.zone_names = model.zone_names;
  lifted.x0 = x0;
  lifted.F = MatrixXd::Zero(n * M, n);
  lifted.G = MatrixXd::Zero(n * M, m * M);
  lifted.H = MatrixXd::Zero(n * M, p * M);
  lifted.offset = VectorXd::Zero(n * M);

  // powers[k] = A^k
  std::vector<MatrixXd> powers(static_cast<std::size_t>(M) + 1);
  powers[0] = MatrixXd::Identity(n, n);
  for (Index k = 1; k <= M; ++k) powers[k] = model.A * powers[k - 1];

  VectorXd acc = VectorXd::Zero(n);
  for (Index k = 0; k < M; ++k) {
    lifted.F.block(k * n, 0, n, n) = powers[k + 1];
    for (Index i = 0; i <= k; ++i) {
      lifted.G.block(k * n, i * m, n, m) = powers[k - i] * model.B_u;
      lifted.H.block(k * n, i * p, n, p) = powers[k - i] * model.B_delta;
    }
    acc = model.A * acc + model.known_disturbance;
    lifted.offset.segment(k * n, n) = acc;
  }
  return lifted;
}

VectorXd simulate_trajectory(const LiftedDynamics& lifted, const VectorXd& U, const VectorXd& delta) {
  if (U.size() != lifted.G.cols() || delta.size() != lifted.H.cols()) {
    throw ValidationError(fmt::format("simulate_trajectory: expected U of size {} and delta of size {}, got {} and {}",
                                      lifted.G.cols(), lifted.H.cols(), U.size(), delta.size()));
  }
  return lifted.free_response() + lifted.G * U + lifted.H * delta;
}

MatrixXd zone_temperatures(const LiftedDynamics& lifted, const VectorXd& X) {
  if (X.size() != lifted.F.rows()) throw ValidationError("zone_temperatures: trajectory has the wrong dimension");
  MatrixXd out(lifted.n_zones(), lifted.horizon);
  for (Index z = 0; z < lifted.n_zones(); ++z) {
    for (int k = 0; k < lifted.horizon; ++k) out(z, k) = X(lifted.zone_row(z, k));
  }
  return out;
}

}  // namespace scenplan
