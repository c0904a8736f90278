#include "scenplan/occupancy.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "scenplan/errors.hpp"

namespace scenplan {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

OccupancyCorrelation parse_correlation(std::string_view text) {
  if (text == "per-step-iid") return OccupancyCorrelation::kPerStepIid;
  if (text == "constant-over-horizon") return OccupancyCorrelation::kConstantOverHorizon;
  throw ValidationError(fmt::format("unknown occupancy correlation '{}'", text));
}

std::string_view to_string(OccupancyCorrelation correlation) {
  return correlation == OccupancyCorrelation::kPerStepIid ? "per-step-iid" : "constant-over-horizon";
}

void OccupancyModel::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ValidationError(fmt::format("occupancy lambda must be positive, got {}", lambda));
  }
  if (!(watts_per_person >= 0.0) || !std::isfinite(watts_per_person)) {
    throw ValidationError(fmt::format("watts_per_person must be non-negative, got {}", watts_per_person));
  }
}

std::uint64_t scenario_seed(std::uint64_t seed, Stream stream, std::uint64_t set, std::uint64_t index) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  h = splitmix64(h ^ set);
  return splitmix64(h ^ index);
}

OccupancySampler::OccupancySampler(std::uint64_t seed, int horizon, std::vector<double> zone_floor_areas_m2,
                                   OccupancyModel model)
    : seed_(seed), horizon_(horizon), areas_(std::move(zone_floor_areas_m2)), model_(model) {
  model_.validate();
  if (horizon_ < 1) throw ValidationError("occupancy horizon must be >= 1");
  if (areas_.empty()) throw ValidationError("occupancy needs at least one zone");
  for (double a : areas_) {
    if (!(a > 0.0)) throw ValidationError("zone floor areas must be positive");
  }
}

Eigen::VectorXd OccupancySampler::flux_of(const std::vector<int>& counts) const {
  const std::size_t zones = areas_.size();
  if (counts.size() != zones * static_cast<std::size_t>(horizon_)) {
    throw ValidationError("occupancy counts have the wrong length");
  }
  Eigen::VectorXd flux(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    flux(static_cast<Eigen::Index>(i)) = counts[i] * model_.watts_per_person / areas_[i % zones];
  }
  return flux;
}

OccupancyScenario OccupancySampler::draw(Stream stream, std::uint64_t set, std::uint64_t index) const {
  std::mt19937_64 rng(scenario_seed(seed_, stream, set, index));
  std::poisson_distribution<int> poisson(model_.lambda);
  const std::size_t zones = areas_.size();
  const auto steps = static_cast<std::size_t>(horizon_);
  OccupancyScenario s;
  s.counts.resize(zones * steps);
  if (model_.correlation == OccupancyCorrelation::kPerStepIid) {
    for (auto& c : s.counts) c = poisson(rng);
  } else {
    for (std::size_t z = 0; z < zones; ++z) {
      const int c = poisson(rng);
      for (std::size_t k = 0; k < steps; ++k) s.counts[k * zones + z] = c;
    }
  }
  s.flux = flux_of(s.counts);
  return s;
}

std::vector<OccupancyScenario> OccupancySampler::draw_many(Stream stream, std::uint64_t set, std::uint64_t first,
                                                           std::size_t count) const {
  std::vector<OccupancyScenario> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(draw(stream, set, first + i));
  return out;
}

std::vector<OccupancyScenario> sample_occupancy(std::uint64_t seed, std::size_t count, int horizon,
                                                const std::vector<double>& zone_floor_areas_m2,
                                                const OccupancyModel& model) {
  if (count < 1) throw ValidationError("sample_occupancy: count must be >= 1");
  return OccupancySampler(seed, horizon, zone_floor_areas_m2, model).draw_many(Stream::kTraining, 0, 0, count);
}

}  // namespace scenplan
