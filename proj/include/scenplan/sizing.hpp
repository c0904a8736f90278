#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace scenplan {

using Count = std::int64_t;

enum class SizingMode { kExact, kExplicit };

SizingMode parse_sizing_mode(std::string_view text);
std::string_view to_string(SizingMode mode);

/// Violation level epsilon, confidence parameter beta and number of decision variables d.
struct RiskParams {
  double epsilon = 0.1;
  double beta = 1e-4;
  Count d = 1;

  /// Throws ValidationError unless 0 < epsilon < 1, 0 < beta < 1 and d >= 1.
  void validate() const;
};

/// log C(n, k) via log-gamma.
double log_choose(Count n, Count k);

/// log of sum_{i=0}^{k_max} C(N, i) eps^i (1 - eps)^(N - i), accumulated with log-sum-exp.
double log_binomial_tail(Count N, Count k_max, double epsilon);

/// Smallest N >= d whose binomial tail up to d - 1 is <= beta.
Count standard_sample_size_exact(const RiskParams& params);

/// ceil((2 / eps) (ln(1 / beta) + d)).
Count standard_sample_size_explicit(const RiskParams& params);

Count incremental_M_j(const RiskParams& params, Count j, SizingMode mode);

/// log beta_j, beta_j = beta / ((d + 1)(M_j + 1)) * sum_{m=j}^{M_j} C(m, j) (1 - eps)^(m - j).
/// Throws ScheduleDegeneracyError when M_j < j (empty sum).
double incremental_log_beta_j(const RiskParams& params, Count j, Count M_j);
double incremental_beta_j(const RiskParams& params, Count j, Count M_j);

/// Smallest N >= max(M_j, j) with C(N, j) (1 - eps)^(N - j) <= beta_j.
Count exact_N_for_beta(double epsilon, Count j, Count M_j, double log_beta_j);

/// Closed-form sufficient N for C(N, j) (1 - eps)^(N - j) <= beta_j, raised to at least max(M_j, j).
Count explicit_N_for_beta(double epsilon, Count j, Count M_j, double log_beta_j);

Count incremental_N_j(const RiskParams& params, Count j, SizingMode mode);

struct ScheduleEntry {
  Count j = 0;
  Count M_j = 0;
  double log_beta_j = 0.0;
  double beta_j = 0.0;
  Count N_j = 0;
};

struct IncrementalSchedule {
  SizingMode mode = SizingMode::kExplicit;
  std::vector<ScheduleEntry> entries;  // j = 0 ... d
};

IncrementalSchedule incremental_schedule(const RiskParams& params, SizingMode mode);

Count standard_sample_size(const RiskParams& params, SizingMode mode);

}  // namespace scenplan
