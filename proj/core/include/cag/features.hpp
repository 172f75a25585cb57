#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cag {

/// One fixed-length window of a device trace, in watts.
struct Segment {
  std::vector<double> values;
  std::string parent_device;
  std::size_t index = 0;
};

/// Zero-mean, unit-variance copy of a segment with the removed statistics.
/// A segment whose population std is below 1e-12 normalizes to zeros with
/// std recorded as 0.
struct NormSegment {
  std::vector<double> values;
  double mean = 0.0;
  double std = 0.0;
};

inline constexpr std::size_t kShapeSamples = 20;
inline constexpr std::size_t kFeatureDim = 30;

using FeatureVector = std::array<double, kFeatureDim>;

/// Component order of a FeatureVector. Frozen: serialized feature matrices
/// depend on it.
enum FeatureIndex : std::size_t {
  kMean = 0,
  kStd,
  kSkewness,
  kKurtosis,
  kTrend,
  kDominantFreq,
  kPeakCount,
  kValleyCount,
  kRoughness,
  kEnergy,
  kShapeBegin,  // kShapeBegin .. kShapeBegin + 19
};

const std::array<std::string, kFeatureDim>& feature_names();

/// Non-overlapping windows; the trailing remainder shorter than L is dropped.
std::vector<Segment> segment(std::span<const double> x, std::size_t length,
                             std::string_view device = {});

NormSegment normalize_segment(std::span<const double> values);

/// DFT bin with the largest magnitude among 1..floor(n/2), lowest bin on
/// ties; 0 when every magnitude is below 1e-9.
std::size_t dominant_frequency_bin(std::span<const double> x);

/// Shape features of a normalized segment. Requires at least 4 samples.
FeatureVector extract_features(std::span<const double> normalized);
inline FeatureVector extract_features(const NormSegment& s) { return extract_features(s.values); }

/// normalize_segment followed by extract_features.
FeatureVector segment_features(std::span<const double> raw);

struct FeatureScaler {
  FeatureVector mean{};
  FeatureVector std{};
  std::array<bool, kFeatureDim> degenerate{};  // std < 1e-12; component maps to 0

  FeatureVector apply(const FeatureVector& fv) const;
};

FeatureScaler fit_scaler(std::span<const FeatureVector> features);

}  // namespace cag
