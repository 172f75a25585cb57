#include "doctest.h"

#include <cmath>
#include <numbers>
#include <set>

#include "cag/error.hpp"
#include "cag/features.hpp"
#include "oracles.hpp"

using namespace cag;

TEST_CASE("segment drops the trailing remainder") {
  std::vector<double> x(105);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  const auto segs = segment(x, 25, "dev");
  REQUIRE(segs.size() == 4);
  CHECK(segs[3].index == 3);
  CHECK(segs[3].values.front() == 75.0);
  CHECK(segs[0].parent_device == "dev");
}

TEST_CASE("normalize_segment") {
  const std::vector<double> v{1, 2, 3, 4, 10};
  const auto n = normalize_segment(v);
  CHECK(oracle::mean(n.values) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(oracle::pop_std(n.values) == doctest::Approx(1.0));
  CHECK(n.mean == doctest::Approx(4.0));

  const auto flat = normalize_segment(std::vector<double>(8, 3.0));
  CHECK(flat.std == 0.0);
  for (double x : flat.values) CHECK(x == 0.0);
}

TEST_CASE("dominant frequency bin agrees with a textbook DFT") {
  for (std::size_t n : {16u, 64u, 100u}) {
    for (std::size_t k : {1u, 3u, 7u}) {
      std::vector<double> x(n);
      for (std::size_t t = 0; t < n; ++t)
        x[t] = std::sin(2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n)) +
               0.3 * std::cos(2.0 * std::numbers::pi * static_cast<double>(2 * t) / static_cast<double>(n));
      CHECK(dominant_frequency_bin(x) == k);
      CHECK(static_cast<double>(n) / static_cast<double>(k) == doctest::Approx(oracle::period(x)));
    }
  }
  CHECK(dominant_frequency_bin(std::vector<double>(32, 0.0)) == 0);
}

TEST_CASE("feature vectors are finite with stable names") {
  const auto& names = feature_names();
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == kFeatureDim);
  std::vector<double> x(64);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (i > 20 && i < 30) ? 1000.0 : 3.0;
  const auto f = segment_features(x);
  for (double v : f) CHECK(std::isfinite(v));
  CHECK(f[kMean] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(f[kStd] == doctest::Approx(1.0));
  CHECK_THROWS_AS(extract_features(std::vector<double>{1, 2, 3}), Error);
}

TEST_CASE("scaler standardizes and flags degenerate components") {
  std::vector<FeatureVector> fs(3);
  for (std::size_t i = 0; i < 3; ++i) {
    fs[i].fill(1.0);
    fs[i][0] = static_cast<double>(i);
  }
  const auto sc = fit_scaler(fs);
  CHECK_FALSE(sc.degenerate[0]);
  CHECK(sc.degenerate[1]);
  const auto z = sc.apply(fs[2]);
  CHECK(z[0] == doctest::Approx(std::sqrt(1.5)));
  CHECK(z[1] == 0.0);
}
