#include "scenplan/qp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "scenplan/errors.hpp"
#include "scenplan/parallel.hpp"

namespace scenplan {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// ScenarioProgram

ScenarioProgram::ScenarioProgram(MatrixXd quadratic)
    : P(std::move(quadratic)), c(VectorXd::Zero(P.rows())), templates(0, P.cols()) {}

Index ScenarioProgram::add_template(const Eigen::RowVectorXd& coefficients) {
  if (coefficients.size() != dim()) {
    throw ValidationError(fmt::format("constraint has {} coefficients, program has {} variables", coefficients.size(), dim()));
  }
  if (templates.cols() != dim()) templates.resize(0, dim());
  const Index t = templates.rows();
  templates.conservativeResize(t + 1, Eigen::NoChange);
  templates.row(t) = coefficients;
  return t;
}

void ScenarioProgram::add_row(Index template_index, double b, RowTag tag) {
  if (template_index < 0 || template_index >= n_templates()) {
    throw ValidationError(fmt::format("template index {} out of range", template_index));
  }
  row_template.push_back(template_index);
  rhs.push_back(b);
  tags.push_back(tag);
}

void ScenarioProgram::add_row(const Eigen::RowVectorXd& coefficients, double b, RowTag tag) {
  add_row(add_template(coefficients), b, tag);
}

void ScenarioProgram::validate() const {
  const Index n = dim();
  if (n < 1 || P.cols() != n) throw ValidationError("cost matrix must be square and non-empty");
  if (c.size() != n) throw ValidationError("linear cost has the wrong dimension");
  if (templates.rows() > 0 && templates.cols() != n) throw ValidationError("constraint templates have the wrong width");
  if (row_template.size() != rhs.size() || tags.size() != rhs.size()) {
    throw ValidationError("row_template, rhs and tags must have one entry per row");
  }
  for (Index t : row_template) {
    if (t < 0 || t >= n_templates()) throw ValidationError("row references a missing template");
  }
  if (!P.allFinite() || !c.allFinite() || !templates.allFinite() || !std::isfinite(constant) ||
      !std::all_of(rhs.begin(), rhs.end(), [](double b) { return std::isfinite(b); })) {
    throw ValidationError("program data must be finite");
  }
  const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError("cost matrix is not symmetric");
  }
  Eigen::LLT<MatrixXd> llt(P);
  if (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0) {
    throw ValidationError("cost matrix is not positive definite");
  }
}

namespace {

const char* kind_name(RowTag::Kind kind) {
  switch (kind) {
    case RowTag::Kind::kInputLower: return "input_lower";
    case RowTag::Kind::kInputUpper: return "input_upper";
    case RowTag::Kind::kComfort: return "comfort";
    case RowTag::Kind::kGeneric: break;
  }
  return "generic";
}

RowTag::Kind parse_kind(const std::string& s) {
  if (s == "generic") return RowTag::Kind::kGeneric;
  if (s == "input_lower") return RowTag::Kind::kInputLower;
  if (s == "input_upper") return RowTag::Kind::kInputUpper;
  if (s == "comfort") return RowTag::Kind::kComfort;
  throw ValidationError(fmt::format("unknown row kind '{}'", s));
}

void expect_token(std::istream& in, const std::string& expected) {
  std::string token;
  if (!(in >> token) || token != expected) {
    throw ValidationError(fmt::format("program file: expected '{}', got '{}'", expected, token));
  }
}

template <typename T>
T read_value(std::istream& in, const char* what) {
  T value{};
  if (!(in >> value)) throw ValidationError(fmt::format("program file: could not read {}", what));
  return value;
}

}  // namespace

void write_program(std::ostream& out, const ScenarioProgram& program) {
  const Index n = program.dim();
  out << "scenplan-program 1\n";
  out << fmt::format("dim {} templates {} rows {}\n", n, program.n_templates(), program.n_rows());
  out << fmt::format("constant {:.17g}\n", program.constant);
  out << "P\n";
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) out << fmt::format("{}{:.17g}", j ? " " : "", program.P(i, j));
    out << '\n';
  }
  out << "c\n";
  for (Index j = 0; j < n; ++j) out << fmt::format("{}{:.17g}", j ? " " : "", program.c(j));
  out << '\n';
  out << "templates\n";
  for (Index t = 0; t < program.n_templates(); ++t) {
    for (Index j = 0; j < n; ++j) out << fmt::format("{}{:.17g}", j ? " " : "", program.templates(t, j));
    out << '\n';
  }
  out << "rows\n";
  for (Index i = 0; i < program.n_rows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const RowTag& tag = program.tags[k];
    out << fmt::format("{} {:.17g} {} {} {} {} {}\n", program.row_template[k], program.rhs[k], kind_name(tag.kind),
                       tag.scenario, tag.zone, tag.step, tag.input);
  }
}

ScenarioProgram read_program(std::istream& in) {
  expect_token(in, "scenplan-program");
  if (read_value<int>(in, "version") != 1) throw ValidationError("program file: unsupported version");
  expect_token(in, "dim");
  const auto n = read_value<Index>(in, "dim");
  expect_token(in, "templates");
  const auto n_templates = read_value<Index>(in, "template count");
  expect_token(in, "rows");
  const auto n_rows = read_value<Index>(in, "row count");
  if (n < 1 || n_templates < 0 || n_rows < 0) throw ValidationError("program file: bad header");
  ScenarioProgram program(MatrixXd::Zero(n, n));
  expect_token(in, "constant");
  program.constant = read_value<double>(in, "constant");
  expect_token(in, "P");
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) program.P(i, j) = read_value<double>(in, "P entry");
  expect_token(in, "c");
  for (Index j = 0; j < n; ++j) program.c(j) = read_value<double>(in, "c entry");
  expect_token(in, "templates");
  program.templates.resize(n_templates, n);
  for (Index t = 0; t < n_templates; ++t)
    for (Index j = 0; j < n; ++j) program.templates(t, j) = read_value<double>(in, "template entry");
  expect_token(in, "rows");
  for (Index i = 0; i < n_rows; ++i) {
    const auto t = read_value<Index>(in, "row template");
    const auto b = read_value<double>(in, "row rhs");
    RowTag tag;
    tag.kind = parse_kind(read_value<std::string>(in, "row kind"));
    tag.scenario = read_value<std::int32_t>(in, "row scenario");
    tag.zone = read_value<std::int32_t>(in, "row zone");
    tag.step = read_value<std::int32_t>(in, "row step");
    tag.input = read_value<std::int32_t>(in, "row input");
    program.add_row(t, b, tag);
  }
  program.validate();
  return program;
}

// ---------------------------------------------------------------------------
// Goldfarb-Idnani

namespace {

// Constraints are a_t x <= b, i.e. n_t x + b >= 0 with n_t = -a_t. J holds
// L^{-T} Q, where Q R is the QR factorization of L^{-1} N for the working set.
struct WorkingSet {
  MatrixXd J;
  MatrixXd R;
  Index q = 0;
  std::vector<Index> templates;
  std::vector<double> u;
  double r_norm = 1.0;
};

void apply_rotation(MatrixXd& M, Index col_a, Index col_b, double c, double s) {
  for (Index k = 0; k < M.rows(); ++k) {
    const double t1 = M(k, col_a);
    const double t2 = M(k, col_b);
    M(k, col_a) = c * t1 + s * t2;
    M(k, col_b) = -s * t1 + c * t2;
  }
}

// d = J' n_p on entry. Returns false if the new normal is (numerically) dependent.
bool add_to_working_set(WorkingSet& ws, VectorXd d, Index template_index, double multiplier) {
  const Index n = ws.J.rows();
  for (Index j = n - 1; j > ws.q; --j) {
    const double h = std::hypot(d(j - 1), d(j));
    if (h == 0.0) continue;
    const double c = d(j - 1) / h;
    const double s = d(j) / h;
    d(j - 1) = h;
    d(j) = 0.0;
    apply_rotation(ws.J, j - 1, j, c, s);
  }
  if (std::abs(d(ws.q)) <= std::numeric_limits<double>::epsilon() * ws.r_norm) return false;
  ws.R.col(ws.q).head(ws.q + 1) = d.head(ws.q + 1);
  ws.r_norm = std::max(ws.r_norm, std::abs(d(ws.q)));
  ++ws.q;
  ws.templates.push_back(template_index);
  ws.u.push_back(multiplier);
  return true;
}

void drop_from_working_set(WorkingSet& ws, Index position) {
  const auto pos = static_cast<std::size_t>(position);
  ws.templates.erase(ws.templates.begin() + static_cast<std::ptrdiff_t>(pos));
  ws.u.erase(ws.u.begin() + static_cast<std::ptrdiff_t>(pos));
  for (Index i = position; i < ws.q - 1; ++i) ws.R.col(i) = ws.R.col(i + 1);
  ws.R.col(ws.q - 1).setZero();
  --ws.q;
  // Columns position..q-1 are now upper Hessenberg; restore triangularity.
  for (Index j = position; j < ws.q; ++j) {
    const double a = ws.R(j, j);
    const double b = ws.R(j + 1, j);
    const double h = std::hypot(a, b);
    if (h == 0.0) continue;
    const double c = a / h;
    const double s = b / h;
    ws.R(j, j) = h;
    ws.R(j + 1, j) = 0.0;
    for (Index k = j + 1; k < ws.q; ++k) {
      const double t1 = ws.R(j, k);
      const double t2 = ws.R(j + 1, k);
      ws.R(j, k) = c * t1 + s * t2;
      ws.R(j + 1, k) = -s * t1 + c * t2;
    }
    apply_rotation(ws.J, j, j + 1, c, s);
  }
}

bool is_dependent(const VectorXd& d, Index q) {
  const double tail = d.tail(d.size() - q).norm();
  return tail <= 1e-11 * std::max(d.norm(), std::numeric_limits<double>::min());
}

}  // namespace

QpSolver::QpSolver(const ScenarioProgram& program, QpOptions options)
    : program_(program), options_(options) {
  program_.validate();
  const Index n = program_.dim();
  Eigen::LLT<MatrixXd> llt(2.0 * program_.P);
  const MatrixXd L = llt.matrixL();
  J0_ = L.transpose().triangularView<Eigen::Upper>().solve(MatrixXd::Identity(n, n));
  x_unconstrained_ = -(J0_ * (J0_.transpose() * program_.c));

  const Index T = program_.n_templates();
  template_norms_ = T > 0 ? VectorXd(program_.templates.rowwise().norm()) : VectorXd();
  sorted_rows_.assign(static_cast<std::size_t>(T), {});
  for (Index i = 0; i < program_.n_rows(); ++i) {
    sorted_rows_[static_cast<std::size_t>(program_.row_template[static_cast<std::size_t>(i)])].push_back(i);
  }
  for (auto& rows : sorted_rows_) {
    std::stable_sort(rows.begin(), rows.end(), [&](Index a, Index b) {
      return program_.rhs[static_cast<std::size_t>(a)] < program_.rhs[static_cast<std::size_t>(b)];
    });
  }
}

SolveResult QpSolver::solve(std::span<const Index> excluded_rows, std::span<const Index> warm_templates) const {
  const Index n = program_.dim();
  const Index T = program_.n_templates();
  const auto& A = program_.templates;

  std::vector<char> excluded(static_cast<std::size_t>(program_.n_rows()), 0);
  for (Index r : excluded_rows) {
    if (r < 0 || r >= program_.n_rows()) throw ValidationError(fmt::format("excluded row {} out of range", r));
    excluded[static_cast<std::size_t>(r)] = 1;
  }
  // Binding row per template: smallest rhs among the remaining rows.
  std::vector<Index> binding(static_cast<std::size_t>(T), -1);
  VectorXd b(T);
  for (Index t = 0; t < T; ++t) {
    for (Index r : sorted_rows_[static_cast<std::size_t>(t)]) {
      if (!excluded[static_cast<std::size_t>(r)]) {
        binding[static_cast<std::size_t>(t)] = r;
        b(t) = program_.rhs[static_cast<std::size_t>(r)];
        break;
      }
    }
  }

  WorkingSet ws;
  ws.J = J0_;
  ws.R = MatrixXd::Zero(n, n);

  // x = x_unc + J1 y1 with y1 = R^{-T}(b_W - A_W x_unc); multipliers u = R^{-1} y1.
  auto equality_solution = [&](VectorXd& x, VectorXd& u) {
    VectorXd rhs(ws.q);
    for (Index k = 0; k < ws.q; ++k) {
      const Index t = ws.templates[static_cast<std::size_t>(k)];
      rhs(k) = A.row(t).dot(x_unconstrained_) - b(t);
    }
    const auto Rq = ws.R.topLeftCorner(ws.q, ws.q).triangularView<Eigen::Upper>();
    const VectorXd y1 = Rq.transpose().solve(rhs);
    u = Rq.solve(y1);
    x = x_unconstrained_ + ws.J.leftCols(ws.q) * y1;
  };

  VectorXd x = x_unconstrained_;
  if (!warm_templates.empty()) {
    std::set<Index> seen;
    for (Index t : warm_templates) {
      if (t < 0 || t >= T || binding[static_cast<std::size_t>(t)] < 0 || !seen.insert(t).second) continue;
      if (ws.q == n) break;
      const VectorXd d = ws.J.transpose() * (-A.row(t).transpose());
      if (is_dependent(d, ws.q)) continue;
      add_to_working_set(ws, d, t, 0.0);
    }
    // Shrink until the equality-constrained point is dual feasible.
    while (ws.q > 0) {
      VectorXd u;
      equality_solution(x, u);
      Index worst = -1;
      for (Index k = 0; k < ws.q; ++k) {
        if (u(k) < 0.0 && (worst < 0 || u(k) < u(worst))) worst = k;
      }
      if (worst < 0) {
        for (Index k = 0; k < ws.q; ++k) ws.u[static_cast<std::size_t>(k)] = u(k);
        break;
      }
      drop_from_working_set(ws, worst);
    }
    if (ws.q == 0) x = x_unconstrained_;
  }

  const int max_iterations = options_.max_iterations > 0 ? options_.max_iterations
                                                         : static_cast<int>(20 * (n + T) + 100);
  SolveResult result;
  VectorXd Ax(T);
  int iterations = 0;
  bool infeasible = false;

  while (true) {
    // Most violated template, by distance to its hyperplane.
    Ax.noalias() = A * x;
    Index p = -1;
    double worst = 0.0;
    for (Index t = 0; t < T; ++t) {
      if (binding[static_cast<std::size_t>(t)] < 0) continue;
      const double violation = Ax(t) - b(t);
      const double threshold = 1e-11 * std::max({1.0, std::abs(b(t)), std::abs(Ax(t))});
      if (violation <= threshold) continue;
      const double norm = template_norms_(t);
      if (norm == 0.0) {
        infeasible = true;
        break;
      }
      const double scaled = violation / norm;
      if (scaled > worst) {
        worst = scaled;
        p = t;
      }
    }
    if (infeasible || p < 0) break;

    const VectorXd np = -A.row(p).transpose();
    double slack_p = b(p) - Ax(p);  // negative
    double u_p = 0.0;
    bool added = false;
    while (!added) {
      if (++iterations > max_iterations) {
        throw ConvergenceError(fmt::format("QP solver exceeded {} iterations", max_iterations), x);
      }
      const VectorXd d = ws.J.transpose() * np;
      const bool dependent = is_dependent(d, ws.q);
      VectorXd z = VectorXd::Zero(n);
      if (!dependent) z.noalias() = ws.J.rightCols(n - ws.q) * d.tail(n - ws.q);
      VectorXd r(ws.q);
      if (ws.q > 0) r = ws.R.topLeftCorner(ws.q, ws.q).triangularView<Eigen::Upper>().solve(d.head(ws.q));

      // Largest dual step keeping the working multipliers non-negative.
      double t1 = std::numeric_limits<double>::infinity();
      Index leave = -1;
      for (Index k = 0; k < ws.q; ++k) {
        if (r(k) > 0.0) {
          const double ratio = ws.u[static_cast<std::size_t>(k)] / r(k);
          if (ratio < t1) {
            t1 = ratio;
            leave = k;
          }
        }
      }
      // Full step making constraint p active.
      const double t2 = dependent ? std::numeric_limits<double>::infinity() : -slack_p / z.dot(np);
      const double step = std::min(t1, t2);
      if (!std::isfinite(step)) {
        infeasible = true;
        break;
      }
      for (Index k = 0; k < ws.q; ++k) ws.u[static_cast<std::size_t>(k)] -= step * r(k);
      u_p += step;
      if (dependent) {
        drop_from_working_set(ws, leave);
        continue;
      }
      x += step * z;
      slack_p = b(p) - A.row(p).dot(x);
      if (t2 <= t1) {
        if (!add_to_working_set(ws, d, p, u_p)) {
          throw ConvergenceError("QP solver lost rank while adding a constraint", x);
        }
        added = true;
      } else {
        drop_from_working_set(ws, leave);
      }
    }
    if (infeasible) break;
  }

  result.iterations = iterations;
  result.duals = VectorXd::Zero(program_.n_rows());
  if (infeasible) {
    result.status = SolveStatus::kInfeasible;
    result.U = x;
    result.cost = program_.objective(x);
    return result;
  }

  // Recompute x and the multipliers from the factors to shed accumulated drift.
  if (ws.q > 0) {
    VectorXd u;
    equality_solution(x, u);
    for (Index k = 0; k < ws.q; ++k) ws.u[static_cast<std::size_t>(k)] = u(k);
  }
  result.status = SolveStatus::kOptimal;
  result.U = x;
  result.cost = program_.objective(x);
  result.working_templates = ws.templates;
  for (Index k = 0; k < ws.q; ++k) {
    const Index row = binding[static_cast<std::size_t>(ws.templates[static_cast<std::size_t>(k)])];
    result.duals(row) = ws.u[static_cast<std::size_t>(k)];
  }
  Ax.noalias() = A * x;
  for (Index i = 0; i < program_.n_rows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (excluded[k]) continue;
    const double bi = program_.rhs[k];
    if (std::abs(bi - Ax(program_.row_template[k])) <= options_.feasibility_tol * std::max(1.0, std::abs(bi))) {
      result.active_set.push_back(i);
    }
  }
  result.kkt = kkt_residuals(program_, x, result.duals, excluded_rows);
  return result;
}

SolveResult solve_qp(const ScenarioProgram& program, const QpOptions& options) {
  return QpSolver(program, options).solve();
}

KktResiduals kkt_residuals(const ScenarioProgram& program, const VectorXd& U, const VectorXd& duals,
                           std::span<const Index> excluded_rows) {
  if (U.size() != program.dim() || duals.size() != program.n_rows()) {
    throw ValidationError("kkt_residuals: dimension mismatch");
  }
  std::vector<char> excluded(static_cast<std::size_t>(program.n_rows()), 0);
  for (Index r : excluded_rows) excluded[static_cast<std::size_t>(r)] = 1;
  const VectorXd Ax = program.templates * U;
  VectorXd lambda_per_template = VectorXd::Zero(program.n_templates());
  KktResiduals res;
  for (Index i = 0; i < program.n_rows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (excluded[k]) continue;
    const Index t = program.row_template[k];
    const double slack = program.rhs[k] - Ax(t);
    res.primal = std::max(res.primal, -slack);
    res.dual = std::max(res.dual, -duals(i));
    res.complementarity = std::max(res.complementarity, std::abs(duals(i) * slack));
    lambda_per_template(t) += duals(i);
  }
  const VectorXd grad = 2.0 * program.P * U + program.c + program.templates.transpose() * lambda_per_template;
  res.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  return res;
}

std::vector<Index> active_constraints(const SolveResult& result, double tol) {
  if (!result.optimal()) throw ValidationError("active_constraints: result is not optimal");
  if (tol < 0.0) {
    const double scale = result.duals.size() ? result.duals.cwiseAbs().maxCoeff() : 0.0;
    tol = 1e-6 * std::max(1.0, scale);
  }
  std::vector<Index> rows;
  for (Index i = 0; i < result.duals.size(); ++i) {
    if (result.duals(i) > tol) rows.push_back(i);
  }
  return rows;
}

SupportResult count_support_groups(const QpSolver& solver, const SolveResult& result,
                                   std::span<const std::int64_t> group_of_row) {
  if (!result.optimal()) throw ValidationError("count_support_groups: result is not optimal");
  const ScenarioProgram& program = solver.program();
  if (static_cast<Index>(group_of_row.size()) != program.n_rows()) {
    throw ValidationError("count_support_groups: need one group id per row");
  }

  // Deleting a group can only move the optimizer if it holds the unique
  // binding row of a working template with a positive multiplier; any other
  // deletion leaves the current KKT pair valid for the relaxed program.
  std::set<std::int64_t> candidates;
  for (Index t : result.working_templates) {
    const auto& rows = solver.rows_by_rhs(t);
    if (rows.empty()) continue;
    const double b_min = program.rhs[static_cast<std::size_t>(rows.front())];
    double multiplier = 0.0;
    std::set<std::int64_t> tied_groups;
    bool tied_with_fixed_row = false;
    for (Index r : rows) {
      if (program.rhs[static_cast<std::size_t>(r)] != b_min) break;
      multiplier += result.duals(r);
      const std::int64_t g = group_of_row[static_cast<std::size_t>(r)];
      if (g < 0) {
        tied_with_fixed_row = true;
      } else {
        tied_groups.insert(g);
      }
    }
    if (multiplier > 0.0 && !tied_with_fixed_row && tied_groups.size() == 1) candidates.insert(*tied_groups.begin());
  }

  std::map<std::int64_t, std::vector<Index>> rows_of_group;
  for (Index i = 0; i < program.n_rows(); ++i) {
    const std::int64_t g = group_of_row[static_cast<std::size_t>(i)];
    if (candidates.contains(g)) rows_of_group[g].push_back(i);
  }
  const std::vector<std::int64_t> ordered(candidates.begin(), candidates.end());
  std::vector<char> is_support(ordered.size(), 0);
  const double change_tol = solver.options().support_change_tol * std::max(1.0, result.U.cwiseAbs().maxCoeff());
  parallel_for(ordered.size(), solver.options().threads, [&](std::size_t k) {
    const auto& rows = rows_of_group.at(ordered[k]);
    SolveResult reduced;
    try {
      reduced = solver.solve(rows, result.working_templates);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(fmt::format("re-solve without group {} failed: {}", ordered[k], e.what()),
                             e.best_iterate());
    }
    if (!reduced.optimal()) {
      throw ConvergenceError(fmt::format("re-solve without group {} reported infeasible", ordered[k]), reduced.U);
    }
    is_support[k] = (reduced.U - result.U).cwiseAbs().maxCoeff() > change_tol;
  });

  SupportResult out;
  out.resolves = ordered.size();
  for (std::size_t k = 0; k < ordered.size(); ++k) {
    if (is_support[k]) out.groups.push_back(ordered[k]);
  }
  out.count = out.groups.size();
  return out;
}

SupportResult count_support_constraints(const QpSolver& solver, const SolveResult& result) {
  std::vector<std::int64_t> groups(static_cast<std::size_t>(solver.program().n_rows()));
  std::iota(groups.begin(), groups.end(), std::int64_t{0});
  return count_support_groups(solver, result, groups);
}

SupportResult count_support_constraints(const ScenarioProgram& program, const SolveResult& result,
                                        const QpOptions& options) {
  return count_support_constraints(QpSolver(program, options), result);
}

std::size_t count_dual_support_groups(const SolveResult& result, std::span<const std::int64_t> group_of_row,
                                      double tol) {
  std::set<std::int64_t> groups;
  for (Index r : active_constraints(result, tol)) {
    const std::int64_t g = group_of_row[static_cast<std::size_t>(r)];
    if (g >= 0) groups.insert(g);
  }
  return groups.size();
}

}  // namespace scenplan
