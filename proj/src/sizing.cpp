#include "scenplan/sizing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "scenplan/errors.hpp"

namespace scenplan {

namespace {

constexpr Count kSearchCap = Count{1} << 52;

template <typename Term>
double log_sum_exp(Count first, Count last, Term&& term) {
  double peak = -std::numeric_limits<double>::infinity();
  for (Count i = first; i <= last; ++i) peak = std::max(peak, term(i));
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (Count i = first; i <= last; ++i) sum += std::exp(term(i) - peak);
  return peak + std::log(sum);
}

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ValidationError(fmt::format("epsilon must lie in (0, 1), got {}", epsilon));
  }
}

// Smallest N in [lo, inf) with pred(N), for pred monotone false -> true on that range.
template <typename Pred>
Count first_true(Count lo, Pred&& pred) {
  if (pred(lo)) return lo;
  Count bad = lo;
  Count step = 1;
  Count good = lo + step;
  while (!pred(good)) {
    bad = good;
    step *= 2;
    if (good > kSearchCap) throw ValidationError("sample-size search did not terminate");
    good = lo + step;
  }
  while (good - bad > 1) {
    const Count mid = bad + (good - bad) / 2;
    (pred(mid) ? good : bad) = mid;
  }
  return good;
}

}  // namespace

SizingMode parse_sizing_mode(std::string_view text) {
  if (text == "exact") return SizingMode::kExact;
  if (text == "explicit") return SizingMode::kExplicit;
  throw ValidationError(fmt::format("unknown sizing mode '{}' (expected exact|explicit)", text));
}

std::string_view to_string(SizingMode mode) { return mode == SizingMode::kExact ? "exact" : "explicit"; }

void RiskParams::validate() const {
  check_epsilon(epsilon);
  if (!(beta > 0.0 && beta < 1.0)) throw ValidationError(fmt::format("beta must lie in (0, 1), got {}", beta));
  if (d < 1) throw ValidationError(fmt::format("d must be >= 1, got {}", d));
}

double log_choose(Count n, Count k) {
  if (k < 0 || k > n) throw ValidationError(fmt::format("log_choose: need 0 <= k <= n, got n={}, k={}", n, k));
  if (k == 0 || k == n) return 0.0;
  const auto dn = static_cast<double>(n);
  const auto dk = static_cast<double>(k);
  return std::lgamma(dn + 1.0) - std::lgamma(dk + 1.0) - std::lgamma(dn - dk + 1.0);
}

double log_binomial_tail(Count N, Count k_max, double epsilon) {
  check_epsilon(epsilon);
  if (k_max < 0 || k_max > N) {
    throw ValidationError(fmt::format("log_binomial_tail: need 0 <= k_max <= N, got N={}, k_max={}", N, k_max));
  }
  if (k_max == N) return 0.0;
  const double log_eps = std::log(epsilon);
  const double log_1m = std::log1p(-epsilon);
  return log_sum_exp(0, k_max, [&](Count i) {
    return log_choose(N, i) + static_cast<double>(i) * log_eps + static_cast<double>(N - i) * log_1m;
  });
}

Count standard_sample_size_exact(const RiskParams& params) {
  params.validate();
  const double log_beta = std::log(params.beta);
  return first_true(params.d, [&](Count N) { return log_binomial_tail(N, params.d - 1, params.epsilon) <= log_beta; });
}

Count standard_sample_size_explicit(const RiskParams& params) {
  params.validate();
  const double n = 2.0 / params.epsilon * (std::log(1.0 / params.beta) + static_cast<double>(params.d));
  return static_cast<Count>(std::ceil(n));
}

Count standard_sample_size(const RiskParams& params, SizingMode mode) {
  return mode == SizingMode::kExact ? standard_sample_size_exact(params) : standard_sample_size_explicit(params);
}

Count incremental_M_j(const RiskParams& params, Count j, SizingMode mode) {
  params.validate();
  if (j < 0 || j > params.d) throw ValidationError(fmt::format("iteration j={} outside [0, {}]", j, params.d));
  if (mode == SizingMode::kExplicit) {
    const double m = 2.0 / params.epsilon * (std::log(1.0 / params.beta) + static_cast<double>(j) - 1.0);
    return std::max<Count>(0, static_cast<Count>(std::ceil(m)));
  }
  if (j == 0) return 0;  // empty tail sum is 0 <= beta for every N
  const double log_beta = std::log(params.beta);
  return first_true(j, [&](Count N) { return log_binomial_tail(N, j - 1, params.epsilon) <= log_beta; });
}

double incremental_log_beta_j(const RiskParams& params, Count j, Count M_j) {
  params.validate();
  if (j < 0) throw ValidationError("incremental_log_beta_j: j must be non-negative");
  if (M_j < j) {
    throw ScheduleDegeneracyError(
        fmt::format("beta_j sum is empty for j={} and M_j={}; N_j would be unbounded", j, M_j));
  }
  const double log_1m = std::log1p(-params.epsilon);
  const double log_sum = log_sum_exp(j, M_j, [&](Count m) {
    return log_choose(m, j) + static_cast<double>(m - j) * log_1m;
  });
  return std::log(params.beta) - std::log(static_cast<double>(params.d) + 1.0) -
         std::log(static_cast<double>(M_j) + 1.0) + log_sum;
}

double incremental_beta_j(const RiskParams& params, Count j, Count M_j) {
  return std::exp(incremental_log_beta_j(params, j, M_j));
}

Count exact_N_for_beta(double epsilon, Count j, Count M_j, double log_beta_j) {
  check_epsilon(epsilon);
  const double log_1m = std::log1p(-epsilon);
  auto holds = [&](Count N) { return log_choose(N, j) + static_cast<double>(N - j) * log_1m <= log_beta_j; };
  const Count start = std::max(M_j, j);
  if (holds(start)) return start;
  // C(N, j)(1 - eps)^(N - j) rises until N + 1 >= j / eps and falls afterwards, so
  // nothing between start and the peak can satisfy the bound.
  const Count peak = static_cast<Count>(std::ceil(static_cast<double>(j) / epsilon)) - 1;
  return first_true(std::max(start, peak), holds);
}

Count explicit_N_for_beta(double epsilon, Count j, Count M_j, double log_beta_j) {
  check_epsilon(epsilon);
  const double dj = static_cast<double>(j);
  const double n = 2.0 / epsilon * (-log_beta_j) + 2.0 * dj + 2.0 * dj / epsilon * std::log(2.0 / epsilon);
  const double floor_value = static_cast<double>(std::max(M_j, j));
  if (!(n > floor_value)) return std::max(M_j, j);
  return static_cast<Count>(std::ceil(n));
}

Count incremental_N_j(const RiskParams& params, Count j, SizingMode mode) {
  const Count M_j = incremental_M_j(params, j, mode);
  const double log_beta_j = incremental_log_beta_j(params, j, M_j);
  return mode == SizingMode::kExact ? exact_N_for_beta(params.epsilon, j, M_j, log_beta_j)
                                    : explicit_N_for_beta(params.epsilon, j, M_j, log_beta_j);
}

IncrementalSchedule incremental_schedule(const RiskParams& params, SizingMode mode) {
  params.validate();
  IncrementalSchedule schedule;
  schedule.mode = mode;
  schedule.entries.reserve(static_cast<std::size_t>(params.d) + 1);
  for (Count j = 0; j <= params.d; ++j) {
    ScheduleEntry e;
    e.j = j;
    e.M_j = incremental_M_j(params, j, mode);
    e.log_beta_j = incremental_log_beta_j(params, j, e.M_j);
    e.beta_j = std::exp(e.log_beta_j);
    e.N_j = mode == SizingMode::kExact ? exact_N_for_beta(params.epsilon, j, e.M_j, e.log_beta_j)
                                       : explicit_N_for_beta(params.epsilon, j, e.M_j, e.log_beta_j);
    schedule.entries.push_back(e);
  }
  return schedule;
}

}  // namespace scenplan
