#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_dec_float.hpp>

#include "scenplan/qp.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Real = boost::multiprecision::cpp_dec_float_50;

/// (I + Z h)^(2^k) with h = T / 2^k, i.e. 2^k explicit Euler steps, by repeated
/// squaring of D = (I + Z h) - I so the tiny step is never added to 1.
inline MatrixXd euler_flow(const MatrixXd& Z, double T, int k = 50) {
  MatrixXd D = Z * std::ldexp(T, -k);
  for (int i = 0; i < k; ++i) D = (2.0 * D + D * D).eval();
  return MatrixXd::Identity(Z.rows(), Z.cols()) + D;
}

/// C(N, k) computed exactly as a product of ratios in 50-digit arithmetic.
inline Real choose(std::int64_t n, std::int64_t k) {
  Real r = 1;
  for (std::int64_t i = 1; i <= k; ++i) r = r * Real(n - k + i) / Real(i);
  return r;
}

/// sum_{i=0}^{k_max} C(N, i) eps^i (1 - eps)^(N - i).
inline Real binomial_tail(std::int64_t N, std::int64_t k_max, double epsilon) {
  const Real e(epsilon);
  const Real q = Real(1) - e;
  Real term = boost::multiprecision::pow(q, Real(N));  // i = 0
  Real sum = term;
  for (std::int64_t i = 1; i <= k_max; ++i) {
    term = term * Real(N - i + 1) / Real(i) * e / q;
    sum += term;
  }
  return sum;
}

/// beta / ((d + 1)(M + 1)) * sum_{m=j}^{M} C(m, j) (1 - eps)^(m - j).
inline Real beta_j(double beta, std::int64_t d, std::int64_t j, std::int64_t M, double epsilon) {
  const Real q = Real(1) - Real(epsilon);
  Real sum = 0;
  Real c = 1;       // C(m, j) at m = j
  Real qpow = 1;    // q^(m - j)
  for (std::int64_t m = j; m <= M; ++m) {
    if (m > j) {
      c = c * Real(m) / Real(m - j);
      qpow *= q;
    }
    sum += c * qpow;
  }
  return Real(beta) / Real((d + 1) * (M + 1)) * sum;
}

struct BruteForceQp {
  bool feasible = false;
  VectorXd U;
  double cost = std::numeric_limits<double>::infinity();
};

/// Exhaustive active-set enumeration: for every linearly independent subset
/// S of at most dim rows, minimize the objective on {A_S x = b_S}; keep the
/// cheapest primal-feasible candidate. The optimum is one of the candidates.
inline BruteForceQp brute_force_qp(const scenplan::ScenarioProgram& p, double feas_tol = 1e-9) {
  const Eigen::Index n = p.dim();
  const Eigen::Index m = p.n_rows();
  // Equality-constrained minimizer: x = x0 - Hinv A' mu, (A Hinv A') mu = A x0 - b.
  const Eigen::LLT<MatrixXd> llt(2.0 * p.P);
  const VectorXd x0 = llt.solve(-p.c);
  MatrixXd A(m, n);
  VectorXd b(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    A.row(r) = p.row(r);
    b(r) = p.rhs[static_cast<std::size_t>(r)];
  }
  const MatrixXd HinvAt = llt.solve(A.transpose());
  const MatrixXd S = A * HinvAt;
  const VectorXd slack0 = A * x0 - b;
  BruteForceQp best;
  std::vector<Eigen::Index> subset;
  auto consider = [&]() {
    const auto k = static_cast<Eigen::Index>(subset.size());
    VectorXd x = x0;
    if (k > 0) {
      MatrixXd Sk(k, k);
      VectorXd rk(k);
      for (Eigen::Index i = 0; i < k; ++i) {
        rk(i) = slack0(subset[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < k; ++j) {
          Sk(i, j) = S(subset[static_cast<std::size_t>(i)], subset[static_cast<std::size_t>(j)]);
        }
      }
      Eigen::FullPivLU<MatrixXd> lu(Sk);
      lu.setThreshold(1e-10);
      if (lu.rank() < k) return;
      const VectorXd mu = lu.solve(rk);
      for (Eigen::Index i = 0; i < k; ++i) x -= HinvAt.col(subset[static_cast<std::size_t>(i)]) * mu(i);
    }
    const VectorXd viol = A * x - b;
    for (Eigen::Index r = 0; r < m; ++r) {
      if (viol(r) > feas_tol * std::max(1.0, std::abs(b(r)))) return;
    }
    const double cost = p.objective(x);
    if (cost < best.cost) best = {true, x, cost};
  };
  auto recurse = [&](auto&& self, Eigen::Index start) -> void {
    consider();
    if (static_cast<Eigen::Index>(subset.size()) == n) return;
    for (Eigen::Index r = start; r < m; ++r) {
      subset.push_back(r);
      self(self, r + 1);
      subset.pop_back();
    }
  };
  recurse(recurse, 0);
  return best;
}

/// Smallest objective over the feasible points of a uniform grid with
/// `per_axis` points on each axis of the box center +- half_width. Infinity
/// when no grid point is feasible.
inline double grid_min(const scenplan::ScenarioProgram& p, const VectorXd& center, double half_width, int per_axis) {
  const Eigen::Index n = p.dim();
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  double best = std::numeric_limits<double>::infinity();
  VectorXd x(n);
  for (;;) {
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i) = center(i) - half_width + 2.0 * half_width * idx[static_cast<std::size_t>(i)] / (per_axis - 1);
    }
    bool feasible = true;
    for (Eigen::Index r = 0; r < p.n_rows() && feasible; ++r) {
      feasible = p.row(r).dot(x) <= p.rhs[static_cast<std::size_t>(r)];
    }
    if (feasible) best = std::min(best, p.objective(x));
    Eigen::Index i = 0;
    while (i < n && ++idx[static_cast<std::size_t>(i)] == per_axis) idx[static_cast<std::size_t>(i++)] = 0;
    if (i == n) break;
  }
  return best;
}

/// A random strictly convex program with `rows` generic inequality rows, all
/// satisfied by a random interior point (so it is feasible).
inline scenplan::ScenarioProgram random_program(std::mt19937_64& rng, int dim, int rows) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MatrixXd L(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) L(i, j) = normal(rng);
  MatrixXd P = L * L.transpose() / dim + 0.2 * MatrixXd::Identity(dim, dim);
  scenplan::ScenarioProgram p(P);
  for (int i = 0; i < dim; ++i) p.c(i) = 3.0 * normal(rng);
  VectorXd interior(dim);
  for (int i = 0; i < dim; ++i) interior(i) = normal(rng);
  for (int r = 0; r < rows; ++r) {
    Eigen::RowVectorXd a(dim);
    for (int i = 0; i < dim; ++i) a(i) = normal(rng);
    p.add_row(a, a.dot(interior) + 0.5 * unit(rng));
  }
  return p;
}

}  // namespace oracle
