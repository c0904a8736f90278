#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace scenplan {

enum class OccupancyCorrelation { kPerStepIid, kConstantOverHorizon };

OccupancyCorrelation parse_correlation(std::string_view text);
std::string_view to_string(OccupancyCorrelation correlation);

struct OccupancyModel {
  double lambda = 3.0;
  OccupancyCorrelation correlation = OccupancyCorrelation::kPerStepIid;
  double watts_per_person = 100.0;

  void validate() const;
};

/// Occupant counts and the induced heat flux, both stacked step-major:
/// entry k * zones + z belongs to zone z during step k.
struct OccupancyScenario {
  std::vector<int> counts;
  Eigen::VectorXd flux;  // W/m2
};

/// Independent random streams derived from one experiment seed.
enum class Stream : std::uint64_t { kTraining = 1, kValidation = 2, kNominal = 3 };

/// Seed of the generator owning scenario `index` of `stream` (set `set` for validation).
/// Each scenario has its own generator, so any subset can be drawn in any order.
std::uint64_t scenario_seed(std::uint64_t seed, Stream stream, std::uint64_t set, std::uint64_t index);

class OccupancySampler {
 public:
  OccupancySampler(std::uint64_t seed, int horizon, std::vector<double> zone_floor_areas_m2, OccupancyModel model);

  OccupancyScenario draw(Stream stream, std::uint64_t set, std::uint64_t index) const;
  std::vector<OccupancyScenario> draw_many(Stream stream, std::uint64_t set, std::uint64_t first,
                                           std::size_t count) const;

  /// counts * watts_per_person / floor area.
  Eigen::VectorXd flux_of(const std::vector<int>& counts) const;

  int horizon() const { return horizon_; }
  std::size_t zones() const { return areas_.size(); }
  const OccupancyModel& model() const { return model_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  int horizon_;
  std::vector<double> areas_;
  OccupancyModel model_;
};

/// Training-stream scenarios 0 .. count - 1.
std::vector<OccupancyScenario> sample_occupancy(std::uint64_t seed, std::size_t count, int horizon,
                                                const std::vector<double>& zone_floor_areas_m2,
                                                const OccupancyModel& model);

}  // namespace scenplan
