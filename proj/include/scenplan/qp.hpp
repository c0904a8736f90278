#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scenplan {

using Eigen::Index;

/// Where a constraint row came from.
struct RowTag {
  enum class Kind : std::uint8_t { kGeneric, kInputLower, kInputUpper, kComfort };
  Kind kind = Kind::kGeneric;
  std::int32_t scenario = -1;
  std::int32_t zone = -1;
  std::int32_t step = -1;
  std::int32_t input = -1;

  static RowTag generic() { return {}; }
  static RowTag input_bound(std::int32_t input, std::int32_t step, bool upper) {
    return {upper ? Kind::kInputUpper : Kind::kInputLower, -1, -1, step, input};
  }
  static RowTag comfort(std::int32_t scenario, std::int32_t zone, std::int32_t step) {
    return {Kind::kComfort, scenario, zone, step, -1};
  }
  bool operator==(const RowTag&) const = default;
};

/// min U'PU + c'U + constant  s.t.  templates.row(row_template[i]) U <= rhs[i].
///
/// Constraint rows reference a coefficient template; scenario rows that differ
/// only in their right-hand side share one template.
struct ScenarioProgram {
  Eigen::MatrixXd P;
  Eigen::VectorXd c;
  double constant = 0.0;
  Eigen::MatrixXd templates;
  std::vector<Index> row_template;
  std::vector<double> rhs;
  std::vector<RowTag> tags;

  ScenarioProgram() = default;
  /// Zero linear term, no constraints.
  explicit ScenarioProgram(Eigen::MatrixXd quadratic);

  Index dim() const { return P.rows(); }
  Index n_rows() const { return static_cast<Index>(rhs.size()); }
  Index n_templates() const { return templates.rows(); }
  Eigen::RowVectorXd row(Index i) const { return templates.row(row_template[static_cast<std::size_t>(i)]); }

  Index add_template(const Eigen::RowVectorXd& coefficients);
  void add_row(Index template_index, double b, RowTag tag = RowTag::generic());
  /// Appends a new template and a row using it.
  void add_row(const Eigen::RowVectorXd& coefficients, double b, RowTag tag = RowTag::generic());

  double objective(const Eigen::VectorXd& U) const { return U.dot(P * U) + c.dot(U) + constant; }

  /// Dimension consistency, finite data, symmetric positive definite P. Throws ValidationError.
  void validate() const;
};

void write_program(std::ostream& out, const ScenarioProgram& program);
ScenarioProgram read_program(std::istream& in);

enum class SolveStatus { kOptimal, kInfeasible };

struct KktResiduals {
  double stationarity = 0.0;     // || 2PU + c + A'lambda ||_inf
  double primal = 0.0;           // max(0, max_i a_i U - b_i)
  double dual = 0.0;             // max(0, -min_i lambda_i)
  double complementarity = 0.0;  // max_i |lambda_i (b_i - a_i U)|
};

struct SolveResult {
  SolveStatus status = SolveStatus::kInfeasible;
  Eigen::VectorXd U;
  double cost = 0.0;
  Eigen::VectorXd duals;                // one per program row; excluded rows get 0
  std::vector<Index> active_set;        // rows with |slack| <= feasibility tolerance
  std::vector<Index> working_templates; // final working set, usable as a warm start
  KktResiduals kkt;
  int iterations = 0;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

struct QpOptions {
  double feasibility_tol = 1e-8;
  double dual_tol = 1e-6;            // relative to max(1, ||lambda||_inf)
  double support_change_tol = 1e-6;  // relative to max(1, ||U||_inf)
  int max_iterations = 0;            // 0: 20 (dim + templates) + 100
  int threads = 1;                   // removal re-solves
};

/// Goldfarb-Idnani dual active-set solver for strictly convex QPs.
///
/// The solver starts at the unconstrained minimizer and repeatedly adds the
/// most violated template, so rows far from binding are never factored. Per
/// template only the row with the smallest right-hand side can bind.
class QpSolver {
 public:
  explicit QpSolver(const ScenarioProgram& program, QpOptions options = {});

  const ScenarioProgram& program() const { return program_; }
  const QpOptions& options() const { return options_; }
  /// Rows using template `t`, ordered by (rhs, row index).
  const std::vector<Index>& rows_by_rhs(Index t) const { return sorted_rows_[static_cast<std::size_t>(t)]; }

  SolveResult solve() const { return solve({}, {}); }

  /// Solves with `excluded_rows` removed, optionally seeding the working set
  /// with `warm_templates` (e.g. a previous result's working_templates).
  SolveResult solve(std::span<const Index> excluded_rows, std::span<const Index> warm_templates) const;

 private:
  const ScenarioProgram& program_;
  QpOptions options_;
  Eigen::MatrixXd J0_;                         // L^{-T} with 2P = L L'
  Eigen::VectorXd x_unconstrained_;
  Eigen::VectorXd template_norms_;
  std::vector<std::vector<Index>> sorted_rows_;  // per template, rows by (rhs, index)
};

SolveResult solve_qp(const ScenarioProgram& program, const QpOptions& options = {});

/// KKT residuals of (U, duals) against every row of `program` not in `excluded_rows`.
KktResiduals kkt_residuals(const ScenarioProgram& program, const Eigen::VectorXd& U, const Eigen::VectorXd& duals,
                           std::span<const Index> excluded_rows = {});

/// Rows whose multiplier exceeds `tol` (negative: 1e-6 max(1, ||lambda||_inf)).
std::vector<Index> active_constraints(const SolveResult& result, double tol = -1.0);

struct SupportResult {
  std::size_t count = 0;
  std::vector<std::int64_t> groups;  // sorted support group ids (row indices for row-level counting)
  std::size_t resolves = 0;
};

/// Removal-based support count at row level: a row is of support iff
/// deleting it moves the optimizer by more than the change tolerance.
SupportResult count_support_constraints(const QpSolver& solver, const SolveResult& result);
SupportResult count_support_constraints(const ScenarioProgram& program, const SolveResult& result,
                                        const QpOptions& options = {});

/// Same test, deleting whole groups of rows at once. `group_of_row[i] < 0`
/// marks rows that are never candidates (e.g. deterministic input bounds).
SupportResult count_support_groups(const QpSolver& solver, const SolveResult& result,
                                   std::span<const std::int64_t> group_of_row);

/// Number of distinct groups holding a row with a multiplier above `tol`.
std::size_t count_dual_support_groups(const SolveResult& result, std::span<const std::int64_t> group_of_row,
                                      double tol = -1.0);

}  // namespace scenplan
