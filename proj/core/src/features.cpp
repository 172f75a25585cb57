#include "cag/features.hpp"

#include <cmath>
#include <numbers>

#include "cag/error.hpp"

namespace cag {

namespace {

constexpr double kFlatStd = 1e-12;
constexpr double kSilentMagnitude = 1e-9;

}  // namespace

const std::array<std::string, kFeatureDim>& feature_names() {
  static const std::array<std::string, kFeatureDim> names = [] {
    std::array<std::string, kFeatureDim> n{"mean",       "std",         "skewness",     "kurtosis",
                                           "trend",      "dominant_freq", "peak_count", "valley_count",
                                           "roughness",  "energy"};
    for (std::size_t k = 0; k < kShapeSamples; ++k) n[kShapeBegin + k] = "shape_" + std::to_string(k + 1);
    return n;
  }();
  return names;
}

std::vector<Segment> segment(std::span<const double> x, std::size_t length, std::string_view device) {
  if (length < 2) throw Error(ErrorKind::InvalidConfig, "segment length must be >= 2");
  std::vector<Segment> out;
  const std::size_t count = x.size() / length;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    const auto window = x.subspan(j * length, length);
    out.push_back({std::vector<double>(window.begin(), window.end()), std::string(device), j});
  }
  return out;
}

NormSegment normalize_segment(std::span<const double> values) {
  NormSegment out;
  out.values.assign(values.size(), 0.0);
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  out.mean = mean;
  if (sd < kFlatStd) return out;
  out.std = sd;
  for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = (values[i] - mean) / sd;
  return out;
}

std::size_t dominant_frequency_bin(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return 0;
  // Twiddle table indexed by (k*t) mod n keeps every phase exact.
  std::vector<double> cos_table(n), sin_table(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    cos_table[i] = std::cos(phase);
    sin_table[i] = std::sin(phase);
  }
  std::size_t best = 0;
  double best_mag = kSilentMagnitude;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    double re = 0.0;
    double im = 0.0;
    std::size_t idx = 0;
    for (std::size_t t = 0; t < n; ++t) {
      re += x[t] * cos_table[idx];
      im -= x[t] * sin_table[idx];
      idx += k;
      if (idx >= n) idx -= n;
    }
    const double mag = std::hypot(re, im);
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }
  return best;
}

FeatureVector extract_features(std::span<const double> s) {
  const std::size_t n = s.size();
  if (n < 4) throw Error(ErrorKind::InsufficientData, "feature extraction needs at least 4 samples");
  const double nd = static_cast<double>(n);
  FeatureVector f{};

  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= nd;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : s) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= nd;
  m3 /= nd;
  m4 /= nd;
  f[kMean] = mean;
  f[kStd] = std::sqrt(m2);
  if (m2 > 1e-24) {
    f[kSkewness] = m3 / std::pow(m2, 1.5);
    f[kKurtosis] = m4 / (m2 * m2);
  }

  // Least-squares slope against t = 0..n-1.
  const double t_mean = (nd - 1.0) / 2.0;
  double cov = 0.0, var_t = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double dt = static_cast<double>(t) - t_mean;
    cov += dt * (s[t] - mean);
    var_t += dt * dt;
  }
  f[kTrend] = cov / var_t;

  f[kDominantFreq] = static_cast<double>(dominant_frequency_bin(s));

  std::size_t peaks = 0, valleys = 0;
  for (std::size_t t = 1; t + 1 < n; ++t) {
    if (s[t] > s[t - 1] && s[t] > s[t + 1]) ++peaks;
    if (s[t] < s[t - 1] && s[t] < s[t + 1]) ++valleys;
  }
  f[kPeakCount] = static_cast<double>(peaks);
  f[kValleyCount] = static_cast<double>(valleys);

  double d_mean = 0.0;
  for (std::size_t t = 1; t < n; ++t) d_mean += s[t] - s[t - 1];
  d_mean /= nd - 1.0;
  double d_var = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    const double d = s[t] - s[t - 1] - d_mean;
    d_var += d * d;
  }
  f[kRoughness] = d_var / (nd - 1.0);

  double energy = 0.0;
  for (double v : s) energy += v * v;
  f[kEnergy] = energy;

  for (std::size_t k = 0; k < kShapeSamples; ++k) {
    const auto idx = static_cast<std::size_t>(
        std::llround(static_cast<double>(k) * (nd - 1.0) / static_cast<double>(kShapeSamples - 1)));
    f[kShapeBegin + k] = s[idx];
  }
  return f;
}

FeatureVector segment_features(std::span<const double> raw) {
  return extract_features(normalize_segment(raw).values);
}

FeatureVector FeatureScaler::apply(const FeatureVector& fv) const {
  FeatureVector out{};
  for (std::size_t i = 0; i < kFeatureDim; ++i) out[i] = degenerate[i] ? 0.0 : (fv[i] - mean[i]) / std[i];
  return out;
}

FeatureScaler fit_scaler(std::span<const FeatureVector> features) {
  if (features.size() < 2)
    throw Error(ErrorKind::InsufficientData, "scaler fit needs at least 2 feature vectors");
  FeatureScaler sc;
  const double n = static_cast<double>(features.size());
  for (const auto& fv : features)
    for (std::size_t i = 0; i < kFeatureDim; ++i) sc.mean[i] += fv[i];
  for (auto& m : sc.mean) m /= n;
  for (const auto& fv : features)
    for (std::size_t i = 0; i < kFeatureDim; ++i) sc.std[i] += (fv[i] - sc.mean[i]) * (fv[i] - sc.mean[i]);
  for (std::size_t i = 0; i < kFeatureDim; ++i) {
    sc.std[i] = std::sqrt(sc.std[i] / n);
    sc.degenerate[i] = sc.std[i] < kFlatStd;
  }
  return sc;
}

}  // namespace cag
