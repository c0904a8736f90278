#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scenplan/engine.hpp"
#include "scenplan/sizing.hpp"

namespace scenplan::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kIoError = 1, kUsage = 2, kConfigInvalid = 3, kSolverFailure = 4 };

/// Standard N followed by the incremental schedule, one CSV table.
void write_size_table(std::ostream& out, const RiskParams& params, SizingMode mode);

/// Header + one row; every value is also in report_to_json.
void write_summary_header(std::ostream& out);
void write_summary_row(std::ostream& out, const ExperimentReport& report);

/// Zone temperatures of U under every scenario: scenario,zone,step,temp_c.
void write_trajectories(std::ostream& out, const LiftedDynamics& lifted, const Eigen::VectorXd& U,
                        std::span<const OccupancyScenario> scenarios);
/// Per zone and step: min/max over scenarios and the nominal trajectory.
void write_envelope(std::ostream& out, const LiftedDynamics& lifted, const Eigen::VectorXd& U,
                    std::span<const OccupancyScenario> scenarios, const Eigen::VectorXd& nominal);
void write_inputs(std::ostream& out, const LiftedDynamics& lifted, const Eigen::VectorXd& U);
void write_histogram(std::ostream& out, const RiskHistogram& histogram);

/// A report JSON (its "U" field) or a whitespace-separated list of numbers.
Eigen::VectorXd read_solution(const std::filesystem::path& path);

/// Parses argv and dispatches to size | run | validate. Returns an ExitCode.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scenplan::cli
