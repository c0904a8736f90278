#include <doctest.h>

#include "scenplan/errors.hpp"
#include "scenplan/occupancy.hpp"

using namespace scenplan;

TEST_CASE("Poisson(3) counts have mean and variance 3") {
  const std::vector<double> areas = {15.0, 15.0, 30.0};
  const auto scenarios = sample_occupancy(42, 5000, 20, areas, {});
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto& s : scenarios) {
    for (int c : s.counts) {
      CHECK(c >= 0);
      sum += c;
      sq += static_cast<double>(c) * c;
      ++n;
    }
  }
  REQUIRE(n == 300000);
  const double mean = sum / static_cast<double>(n);
  const double var = sq / static_cast<double>(n) - mean * mean;
  CHECK(std::abs(mean - 3.0) <= 0.05);
  CHECK(std::abs(var - 3.0) <= 0.1);
}

TEST_CASE("flux is counts times watts per person over floor area") {
  OccupancyModel model;
  model.watts_per_person = 80.0;
  const std::vector<double> areas = {10.0, 40.0};
  const OccupancySampler sampler(1, 6, areas, model);
  const auto s = sampler.draw(Stream::kTraining, 0, 3);
  REQUIRE(s.flux.size() == 12);
  for (std::size_t i = 0; i < s.counts.size(); ++i) {
    CHECK(s.flux(static_cast<Eigen::Index>(i)) == s.counts[i] * 80.0 / areas[i % 2]);
  }
}

TEST_CASE("constant-over-horizon holds each zone's count") {
  OccupancyModel model;
  model.correlation = OccupancyCorrelation::kConstantOverHorizon;
  const OccupancySampler sampler(9, 8, {15.0, 15.0, 30.0}, model);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto s = sampler.draw(Stream::kTraining, 0, i);
    for (std::size_t k = 1; k < 8; ++k) {
      for (std::size_t z = 0; z < 3; ++z) CHECK(s.counts[k * 3 + z] == s.counts[z]);
    }
  }
}

TEST_CASE("streams are reproducible and independent of draw order") {
  const std::vector<double> areas = {15.0, 15.0, 30.0};
  const auto a = sample_occupancy(7, 50, 12, areas, {});
  const auto b = sample_occupancy(7, 50, 12, areas, {});
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].counts == b[i].counts);
    CHECK(a[i].flux == b[i].flux);
  }
  const OccupancySampler sampler(7, 12, areas, {});
  CHECK(sampler.draw(Stream::kTraining, 0, 31).counts == a[31].counts);
  CHECK(sampler.draw(Stream::kValidation, 0, 31).counts != a[31].counts);
  CHECK(sampler.draw(Stream::kValidation, 1, 0).counts != sampler.draw(Stream::kValidation, 2, 0).counts);
  CHECK(sample_occupancy(8, 1, 12, areas, {})[0].counts != a[0].counts);
}

TEST_CASE("invalid occupancy parameters") {
  OccupancyModel model;
  model.lambda = 0.0;
  CHECK_THROWS_AS(sample_occupancy(1, 3, 4, {10.0}, model), ValidationError);
  CHECK_THROWS_AS(sample_occupancy(1, 0, 4, {10.0}, {}), ValidationError);
  CHECK_THROWS_AS(parse_correlation("weekly"), ValidationError);
  CHECK(parse_correlation("constant-over-horizon") == OccupancyCorrelation::kConstantOverHorizon);
}
