#include <random>

#include <doctest.h>

#include "scenplan/engine.hpp"
#include "scenplan/errors.hpp"

using namespace scenplan;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ExperimentConfig small_config(int horizon = 8) {
  ExperimentConfig cfg;
  cfg.building = default_building_config();
  cfg.horizon_steps = horizon;
  cfg.validation_set_size = 400;
  cfg.nominal_scenarios = 200;
  cfg.seed = 99;
  return cfg;
}

LiftedDynamics default_lift(int M, double x0 = 23.0) {
  return lift_dynamics(build_stylized_building(default_building_config()), M, VectorXd::Constant(9, x0));
}

std::vector<VectorXd> symmetric_disturbances(int M, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::poisson_distribution<int> poisson(3.0);
  std::vector<VectorXd> out;
  for (int s = 0; s < count; ++s) {
    VectorXd d(3 * M);
    for (int k = 0; k < M; ++k) {
      d(3 * k) = d(3 * k + 1) = poisson(rng) * 100.0 / 15.0;
      d(3 * k + 2) = poisson(rng) * 100.0 / 30.0;
    }
    out.push_back(d);
  }
  return out;
}

}  // namespace

TEST_CASE("assembly row counts and tags") {
  const int M = 6;
  const LiftedDynamics L = default_lift(M);
  const auto ds = symmetric_disturbances(M, 5, 1);
  const ScenarioProgram p = assemble_scenario_program(L, ds, {}, {});
  std::size_t comfort = 0, bounds = 0;
  for (const auto& t : p.tags) (t.kind == RowTag::Kind::kComfort ? comfort : bounds)++;
  CHECK(comfort == 5u * 3u * M);
  CHECK(bounds == 2u * 3u * M);
  CHECK(p.dim() == 3 * M);
  CHECK(p.P == MatrixXd::Identity(3 * M, 3 * M));
  CHECK(p.c.isZero(0.0));
  const auto groups = scenario_groups(p);
  CHECK(std::count(groups.begin(), groups.end(), -1) == static_cast<long>(bounds));
  CHECK(std::count(groups.begin(), groups.end(), 4) == 3 * M);
}

TEST_CASE("no scenarios: only input bounds and U* = 0") {
  const LiftedDynamics L = default_lift(4);
  const ScenarioProgram p = assemble_scenario_program(L, {}, {}, {});
  CHECK(p.n_rows() == 2 * 3 * 4);
  const SolveResult r = solve_qp(p);
  CHECK(r.U.isZero(0.0));
  CHECK(r.cost == 0.0);
  Objective q;
  q.Q = MatrixXd::Identity(L.G.rows(), L.G.rows());
  CHECK_THROWS_AS(assemble_scenario_program(L, {}, {}, {}, q), ValidationError);
}

TEST_CASE("comfort rows slack at U = 0 leave U* = 0") {
  BuildingConfig cfg = default_building_config();
  cfg.ambient_temp_c = 20.0;
  cfg.solar_flux_w_m2 = 0.0;
  const LiftedDynamics L = lift_dynamics(build_stylized_building(cfg), 10, VectorXd::Constant(9, 20.0));
  const std::vector<VectorXd> ds = {VectorXd::Zero(30)};
  const SolveResult r = solve_qp(assemble_scenario_program(L, ds, {}, {}));
  CHECK(r.U.isZero(0.0));
}

TEST_CASE("Q enters as a sample average") {
  const int M = 3;
  const LiftedDynamics L = default_lift(M);
  const auto ds = symmetric_disturbances(M, 4, 3);
  Objective obj;
  obj.Q = 0.01 * MatrixXd::Identity(L.G.rows(), L.G.rows());
  ComfortSpec comfort;
  comfort.t_max_c = 60.0;
  const ScenarioProgram p = assemble_scenario_program(L, ds, comfort, {}, obj);
  VectorXd U = VectorXd::LinSpaced(3 * M, 0.0, 0.5);
  double expected = U.squaredNorm();
  for (const auto& d : ds) {
    const VectorXd X = simulate_trajectory(L, U, d);
    expected += X.dot(obj.Q * X) / 4.0;
  }
  CHECK(p.objective(U) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("identical scenarios collapse to one") {
  const int M = 8;
  const LiftedDynamics L = default_lift(M);
  const auto one = symmetric_disturbances(M, 1, 5);
  const std::vector<VectorXd> many(7, one[0]);
  const SolveResult a = solve_qp(assemble_scenario_program(L, one, {}, {}));
  const SolveResult b = solve_qp(assemble_scenario_program(L, many, {}, {}));
  CHECK((a.U - b.U).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("zone-symmetric scenarios give coinciding bedroom trajectories") {
  const int M = 12;
  const LiftedDynamics L = default_lift(M);
  const auto ds = symmetric_disturbances(M, 30, 8);
  const SolveResult r = solve_qp(assemble_scenario_program(L, ds, {}, {}));
  REQUIRE(r.optimal());
  for (const auto& d : ds) {
    const MatrixXd T = zone_temperatures(L, simulate_trajectory(L, r.U, d));
    CHECK((T.row(0) - T.row(1)).cwiseAbs().maxCoeff() <= 1e-9 * T.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("winter rows keep zones above t_min") {
  BuildingConfig cfg = default_building_config();
  cfg.ambient_temp_c = 5.0;
  cfg.solar_flux_w_m2 = 0.0;
  const int M = 8;
  const LiftedDynamics L = lift_dynamics(build_stylized_building(cfg), M, VectorXd::Constant(9, 20.0));
  ComfortSpec winter;
  winter.season = Season::kWinter;
  winter.t_min_c = 20.0;
  const std::vector<VectorXd> ds = {VectorXd::Zero(3 * M)};
  const SolveResult r = solve_qp(assemble_scenario_program(L, ds, winter, {}));
  REQUIRE(r.optimal());
  CHECK(r.U(kHeating) > 0.0);
  CHECK(max_comfort_violation(L, winter, r.U, ds[0]) <= 1e-7);
  ComfortSpec bad;
  bad.season = Season::kWinter;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("empirical risk") {
  const int M = 16;
  const LiftedDynamics L = default_lift(M);
  const OccupancySampler sampler(4, M, {15.0, 15.0, 30.0}, {});
  const auto val = sampler.draw_many(Stream::kValidation, 0, 0, 300);
  const ComfortSpec comfort;

  VectorXd cool = VectorXd::Zero(3 * M);
  for (int k = 0; k < M; ++k) {
    cool(3 * k + kBlind) = 0.9;
    cool(3 * k + kCooling) = 1000.0;
  }
  CHECK(empirical_risk(cool, L, comfort, val) == 0.0);
  CHECK(empirical_risk(VectorXd::Zero(3 * M), L, comfort, val) >= 0.95);

  // Flag per scenario is (max residual > tol).
  VectorXd U = 0.3 * cool;
  std::size_t flagged = 0;
  for (const auto& s : val) flagged += max_comfort_violation(L, comfort, U, s.flux) > 1e-8;
  CHECK(empirical_risk(U, L, comfort, val) == static_cast<double>(flagged) / 300.0);

  CHECK_THROWS_AS(empirical_risk(U, L, comfort, {}), ValidationError);
  CHECK_THROWS_AS(empirical_risk(VectorXd::Zero(5), L, comfort, val), ValidationError);
}

TEST_CASE("experiment methods at small scale") {
  const Experiment ex(small_config(8));
  const ExperimentReport det = ex.run_deterministic();
  const ExperimentReport inc = ex.run_incremental();
  const ExperimentReport std_ = ex.run_standard();

  CHECK(det.scenarios_used == 1);
  CHECK_FALSE(det.theoretical_epsilon.has_value());
  CHECK(std_.scenarios_used == standard_sample_size_explicit(ex.risk_params()));
  CHECK(inc.scenarios_used <= std_.scenarios_used);
  CHECK(det.scenarios_used < inc.scenarios_used);

  // Incremental scenarios are a prefix of the standard ones: nested costs.
  CHECK(inc.cost <= std_.cost + 1e-9 * std::abs(std_.cost));
  REQUIRE_FALSE(inc.trace.empty());
  CHECK(inc.trace.size() <= static_cast<std::size_t>(ex.risk_params().d) + 1);
  const auto& last = inc.trace.back();
  CHECK(static_cast<Count>(last.support) <= last.j);
  for (std::size_t i = 0; i + 1 < inc.trace.size(); ++i) {
    CHECK(static_cast<Count>(inc.trace[i].support) > inc.trace[i].j);
    CHECK(inc.trace[i + 1].cost >= inc.trace[i].cost - 1e-9 * std::abs(inc.trace[i].cost));
  }
  for (const auto* r : {&det, &inc, &std_}) {
    CHECK(r->empirical_risk >= 0.0);
    CHECK(r->empirical_risk <= 1.0);
    CHECK(r->support_count <= static_cast<std::size_t>(ex.risk_params().d));
  }
  CHECK(det.empirical_risk > inc.empirical_risk);
}

TEST_CASE("incremental stops at j = 0 when comfort never binds") {
  ExperimentConfig cfg = small_config(6);
  cfg.comfort.t_max_c = 80.0;
  const ExperimentReport r = Experiment(cfg).run_incremental();
  REQUIRE(r.trace.size() == 1);
  CHECK(r.trace[0].j == 0);
  CHECK(r.trace[0].support == 0);
  CHECK(r.scenarios_used == incremental_N_j(Experiment(cfg).risk_params(), 0, cfg.mode));
  CHECK(r.U.isZero(0.0));
}

TEST_CASE("reports are reproducible and thread-count independent") {
  ExperimentConfig cfg = small_config(6);
  const auto a = report_to_json(Experiment(cfg).run_incremental());
  cfg.threads = 4;
  const auto b = report_to_json(Experiment(cfg).run_incremental());
  CHECK(a.dump() == b.dump());
  const ExperimentReport back = report_from_json(a);
  CHECK(report_to_json(back) == a);
}

TEST_CASE("risk histogram") {
  const Experiment ex(small_config(6));
  const ExperimentReport r = ex.run_deterministic();
  const RiskHistogram one = ex.risk_histogram(r.U, 1, ex.config().validation_set_size);
  REQUIRE(one.risks.size() == 1);
  CHECK(one.risks[0] == empirical_risk(r.U, ex.lifted(), ex.config().comfort, ex.validation_set(0)));
  const RiskHistogram h = ex.risk_histogram(r.U, 5, 200);
  CHECK(h.risks.size() == 5);
  CHECK(h.min <= h.mean);
  CHECK(h.mean <= h.max);
  CHECK_THROWS_AS(ex.risk_histogram(r.U, 0, 10), ValidationError);
}

TEST_CASE("experiment config files") {
  const ExperimentConfig desk = load_experiment_config(SCENPLAN_SOURCE_DIR "/configs/desk.json");
  CHECK(desk.horizon_steps == 16);
  CHECK(desk.building_path.filename() == "building_default.json");
  const ExperimentConfig study = load_experiment_config(SCENPLAN_SOURCE_DIR "/configs/case_study.json");
  CHECK(study.horizon_steps == 48);
  CHECK(study.comfort.epsilon == 0.1);
  CHECK(study.beta == 1e-4);
  CHECK(study.mode == SizingMode::kExplicit);

  auto doc = experiment_config_to_json(study);
  const ExperimentConfig again = experiment_config_from_json(doc, ".");
  CHECK(experiment_config_to_json(again) == doc);
  doc["comfort"]["humidity"] = 0.5;
  CHECK_THROWS_AS(experiment_config_from_json(doc, "."), ConfigError);
  doc = experiment_config_to_json(study);
  doc["comfort"]["epsilon"] = 1.5;
  CHECK_THROWS_AS(experiment_config_from_json(doc, "."), ConfigError);
  doc = experiment_config_to_json(study);
  doc.erase("seed");
  CHECK_THROWS_AS(experiment_config_from_json(doc, "."), ConfigError);
}
