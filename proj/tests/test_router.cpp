#include "doctest.h"

#include <random>

#include "cag/error.hpp"
#include "cag/router.hpp"
#include "oracles.hpp"

using namespace cag;

TEST_CASE("smoothed_diff matches the naive oracle") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5);
  for (std::size_t n : {2u, 3u, 8u, 57u}) {
    std::vector<double> x(n);
    for (auto& v : x) v = u(rng);
    for (std::size_t w : {1u, 3u, 7u}) {
      const auto got = smoothed_diff(x, w);
      const auto want = oracle::smoothed_diff(x, w);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(smoothed_diff(std::vector<double>{1.0, 2.0}, 4), Error);
  CHECK_THROWS_AS(smoothed_diff(std::vector<double>{1.0}, 3), Error);
}

TEST_CASE("routing statistics") {
  std::vector<double> x(300, 0.0);
  for (std::size_t i = 150; i < 300; ++i) x[i] = 10.0;
  auto s = routing_stats(x);
  CHECK(s.r0);
  CHECK(s.p_nz == doctest::Approx(0.5));
  CHECK(classify(s) == DeviceClass::Continuous);

  x[0] = 1.0;
  s = routing_stats(x);
  CHECK_FALSE(s.r0);
  CHECK(classify(s) == DeviceClass::Intermittent);

  RoutingConfig unbiased;
  unbiased.population_variance = false;
  const auto d = oracle::smoothed_diff(x, 7);
  CHECK(routing_stats(x, unbiased).var_smoothed_diff ==
        doctest::Approx(oracle::var_with_divisor(d, static_cast<double>(d.size() - 1))));
}

TEST_CASE("steady high-occupancy traces are continuous") {
  std::vector<double> x(500);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 80.0 + 0.001 * static_cast<double>(i);
  const auto s = routing_stats(x);
  CHECK(s.p_nz == 1.0);
  CHECK(classify(s) == DeviceClass::Continuous);
  CHECK(to_string(DeviceClass::Continuous) == "continuous");
}

TEST_CASE("invalid routing configs are rejected") {
  RoutingConfig c;
  c.smoothing_window = 4;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.occupancy_threshold = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
}
