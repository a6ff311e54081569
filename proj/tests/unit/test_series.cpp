#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "lsainfer/errors.hpp"
#include "lsainfer/rng.hpp"
#include "lsainfer/series.hpp"

using namespace lsa;

TEST_CASE("exact power law") {
  DistanceSeries s;
  for (std::uint64_t n : {256, 512, 1024, 2048, 4096}) s.points.push_back({n, 3.0 * std::pow(n, -0.35), 0.0});
  const auto f = rate_fit(s);
  CHECK(f.slope == doctest::Approx(-0.35).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK(f.slope_stderr < 1e-10);
  CHECK(f.points == 5);
}

TEST_CASE("noisy power law") {
  Rng rng(11);
  std::vector<double> x, y;
  for (int i = 0; i < 12; ++i) {
    const double n = std::pow(2.0, 6 + i);
    x.push_back(n);
    y.push_back(std::pow(n, -0.5) * (1.0 + 0.01 * rng.normal()));
  }
  const auto f = rate_fit(x, y);
  CHECK(std::abs(f.slope + 0.5) < 0.01);
  CHECK(std::abs(f.slope + 0.5) < 5.0 * f.slope_stderr + 1e-3);
  CHECK(f.r_squared > 0.99);
}

TEST_CASE("degenerate designs are rejected") {
  CHECK_THROWS_AS(rate_fit({1.0, 2.0}, {1.0, 0.5}), ConfigError);
  CHECK_THROWS_AS(rate_fit({4.0, 4.0, 4.0}, {1.0, 0.5, 0.2}), ConfigError);
  CHECK_THROWS_AS(rate_fit({2.0, 2.0, 4.0, 4.0}, {1.0, 1.0, 0.5, 0.5}), ConfigError);
  CHECK_THROWS_AS(rate_fit({2.0, 4.0, 8.0}, {1.0, 0.0, 0.5}), ConfigError);
  CHECK_THROWS_AS(rate_fit({2.0, 4.0}, {1.0, 0.5, 0.2}), DimensionError);
}

TEST_CASE("csv layout") {
  DistanceSeries s;
  s.points.push_back({8, 0.25, 0.01});
  const auto csv = s.to_csv();
  CHECK(csv.rfind("n,distance,stderr\n", 0) == 0);
  CHECK(csv.find("8,") != std::string::npos);
  CHECK(s.ns() == std::vector<double>{8.0});
}
