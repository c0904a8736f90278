#include <random>
#include <sstream>

#include <doctest.h>

#include "oracles.hpp"
#include "scenplan/errors.hpp"
#include "scenplan/qp.hpp"

using namespace scenplan;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

namespace {

RowVectorXd rv(std::initializer_list<double> v) {
  RowVectorXd r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) r(i++) = x;
  return r;
}

// min u^2 with rows written as a u <= b.
ScenarioProgram scalar_program() { return ScenarioProgram(MatrixXd::Identity(1, 1)); }

void check_kkt(const ScenarioProgram& p, const SolveResult& r, double tol = 1e-8) {
  const double scale = std::max(1.0, r.duals.size() ? r.duals.cwiseAbs().maxCoeff() : 0.0);
  CHECK(r.kkt.stationarity <= tol * scale);
  CHECK(r.kkt.primal <= tol);
  CHECK(r.kkt.dual <= tol);
  CHECK(r.kkt.complementarity <= tol * scale);
  const KktResiduals again = kkt_residuals(p, r.U, r.duals);
  CHECK(again.stationarity == doctest::Approx(r.kkt.stationarity).epsilon(1e-6));
}

}  // namespace

TEST_CASE("min u^2 s.t. u >= 1") {
  ScenarioProgram p = scalar_program();
  p.add_row(rv({-1.0}), -1.0);
  const SolveResult r = solve_qp(p);
  REQUIRE(r.optimal());
  CHECK(r.U(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.cost == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.duals(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.active_set == std::vector<Index>{0});
  CHECK(active_constraints(r) == std::vector<Index>{0});
  check_kkt(p, r);
  CHECK(count_support_constraints(p, r).count == 1);
}

TEST_CASE("min u1^2 + u2^2 s.t. u1 + u2 >= 2") {
  ScenarioProgram p(MatrixXd::Identity(2, 2));
  p.add_row(rv({-1.0, -1.0}), -2.0);
  const SolveResult r = solve_qp(p);
  REQUIRE(r.optimal());
  CHECK(r.U(0) == doctest::Approx(1.0));
  CHECK(r.U(1) == doctest::Approx(1.0));
  CHECK(r.cost == doctest::Approx(2.0));
  check_kkt(p, r);
}

TEST_CASE("slack constraint carries no multiplier") {
  ScenarioProgram p = scalar_program();
  p.add_row(rv({-1.0}), -1.0);  // u >= 1
  p.add_row(rv({-1.0}), 0.0);   // u >= 0
  const SolveResult r = solve_qp(p);
  CHECK(active_constraints(r) == std::vector<Index>{0});
  CHECK(r.duals(1) == 0.0);
  CHECK(count_support_constraints(p, r).count == 1);
}

TEST_CASE("interior optimum has an empty active set") {
  ScenarioProgram p = scalar_program();
  p.add_row(rv({-1.0}), 1.0);  // u >= -1
  const SolveResult r = solve_qp(p);
  CHECK(r.U(0) == 0.0);
  CHECK(active_constraints(r).empty());
  CHECK(count_support_constraints(p, r).count == 0);
}

TEST_CASE("duplicated binding row is not of support") {
  ScenarioProgram p = scalar_program();
  p.add_row(rv({-1.0}), -1.0);
  p.add_row(rv({-1.0}), -1.0);
  const SolveResult r = solve_qp(p);
  CHECK(r.U(0) == doctest::Approx(1.0));
  CHECK(count_support_constraints(p, r).count == 0);

  // Shared template, same right-hand side: same conclusion.
  ScenarioProgram q = scalar_program();
  const Index t = q.add_template(rv({-1.0}));
  q.add_row(t, -1.0);
  q.add_row(t, -1.0);
  const SolveResult rq = solve_qp(q);
  CHECK(count_support_constraints(q, rq).count == 0);
  const std::vector<std::int64_t> groups = {0, 1};
  CHECK(count_support_groups(QpSolver(q), rq, groups).count == 0);
}

TEST_CASE("linear term and constant") {
  ScenarioProgram p(MatrixXd::Identity(2, 2));
  p.c << -4.0, 2.0;
  p.constant = 3.0;
  const SolveResult r = solve_qp(p);
  CHECK(r.U(0) == doctest::Approx(2.0));
  CHECK(r.U(1) == doctest::Approx(-1.0));
  CHECK(r.cost == doctest::Approx(3.0 - 5.0));
}

TEST_CASE("infeasible program reports status, not an exception") {
  ScenarioProgram p = scalar_program();
  p.add_row(rv({1.0}), -1.0);  // u <= -1
  p.add_row(rv({-1.0}), -1.0); // u >= 1
  const SolveResult r = solve_qp(p);
  CHECK(r.status == SolveStatus::kInfeasible);
  CHECK_THROWS_AS(active_constraints(r), ValidationError);
}

TEST_CASE("non positive definite cost is rejected") {
  MatrixXd P = MatrixXd::Identity(2, 2);
  P(1, 1) = 0.0;
  ScenarioProgram p(P);
  CHECK_THROWS_AS(solve_qp(p), ValidationError);
  MatrixXd A(2, 2);
  A << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(solve_qp(ScenarioProgram(A)), ValidationError);
}

TEST_CASE("random programs agree with active-set enumeration") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 1 + trial % 5;
    const int rows = 3 + trial % 10;
    const ScenarioProgram p = oracle::random_program(rng, dim, rows);
    const SolveResult r = solve_qp(p);
    REQUIRE(r.optimal());
    const auto ref = oracle::brute_force_qp(p);
    REQUIRE(ref.feasible);
    CHECK(std::abs(r.cost - ref.cost) <= 1e-7 * std::max(1.0, std::abs(ref.cost)));
    CHECK((r.U - ref.U).cwiseAbs().maxCoeff() <= 1e-6);
    check_kkt(p, r);
    const SupportResult s = count_support_constraints(p, r);
    CHECK(s.count <= static_cast<std::size_t>(dim));
    // Generic data: no degeneracy, so duals and removal agree.
    CHECK(s.count == active_constraints(r).size());
  }
}

TEST_CASE("warm start and exclusion give the cold-start answer") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const ScenarioProgram p = oracle::random_program(rng, 4, 15);
    const QpSolver solver(p);
    const SolveResult cold = solver.solve();
    const SolveResult warm = solver.solve({}, cold.working_templates);
    CHECK((cold.U - warm.U).cwiseAbs().maxCoeff() <= 1e-10);
    if (!cold.active_set.empty()) {
      const std::vector<Index> drop = {cold.active_set.front()};
      ScenarioProgram reduced(p.P);
      reduced.c = p.c;
      for (Index i = 0; i < p.n_rows(); ++i) {
        if (i != drop[0]) reduced.add_row(p.row(i), p.rhs[static_cast<std::size_t>(i)]);
      }
      const SolveResult a = solver.solve(drop, cold.working_templates);
      const SolveResult b = solve_qp(reduced);
      CHECK((a.U - b.U).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK(a.duals(drop[0]) == 0.0);
    }
  }
}

TEST_CASE("solves are deterministic") {
  std::mt19937_64 rng(5);
  const ScenarioProgram p = oracle::random_program(rng, 5, 12);
  const SolveResult a = solve_qp(p);
  const SolveResult b = solve_qp(p);
  CHECK(a.U == b.U);
  CHECK(a.duals == b.duals);
  CHECK(a.active_set == b.active_set);
}

TEST_CASE("program text format round trip") {
  std::mt19937_64 rng(8);
  ScenarioProgram p = oracle::random_program(rng, 3, 6);
  p.constant = 1.25;
  p.tags[2] = RowTag::comfort(4, 1, 7);
  p.tags[3] = RowTag::input_bound(2, 5, true);
  std::stringstream ss;
  write_program(ss, p);
  const ScenarioProgram q = read_program(ss);
  CHECK(q.P == p.P);
  CHECK(q.c == p.c);
  CHECK(q.constant == p.constant);
  CHECK(q.templates == p.templates);
  CHECK(q.row_template == p.row_template);
  CHECK(q.rhs == p.rhs);
  CHECK(q.tags == p.tags);
  std::stringstream bad("not a program");
  CHECK_THROWS(read_program(bad));
}

TEST_CASE("group support counting") {
  // min |u|^2 s.t. u1 >= 1 (group 0), u2 >= 1 (group 1), u1 + u2 >= 1 (group 1, slack).
  ScenarioProgram p(MatrixXd::Identity(2, 2));
  p.add_row(rv({-1.0, 0.0}), -1.0);
  p.add_row(rv({0.0, -1.0}), -1.0);
  p.add_row(rv({-1.0, -1.0}), -1.0);
  const SolveResult r = solve_qp(p);
  const std::vector<std::int64_t> groups = {0, 1, 1};
  const SupportResult s = count_support_groups(QpSolver(p), r, groups);
  CHECK(s.count == 2);
  CHECK(s.groups == std::vector<std::int64_t>{0, 1});
  CHECK(count_dual_support_groups(r, groups) == 2);
  const std::vector<std::int64_t> only_second = {-1, 1, 1};
  CHECK(count_support_groups(QpSolver(p), r, only_second).count == 1);
}
