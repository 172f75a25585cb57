#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cag/gan.hpp"

namespace cag {

struct HybridConfig {
  double gamma = 1.0;            // center separation, in units of std(x), that makes a square wave
  double spike_quantile = 0.9;   // quantile of the positive samples used as spike threshold
  std::size_t spike_window = 64;
  std::size_t square_downsample = 10;

  void validate() const;
};

struct SquareWaveResult {
  bool is_square = false;
  double low_center = 0.0;
  double high_center = 0.0;
  /// Full period in original samples: twice the mean length of the interior
  /// runs above/below the midpoint of the two centers. T when the series
  /// never crosses the midpoint.
  double cycle_length = 0.0;
};

/// 2-means on the block-averaged series; square when the centers are more
/// than gamma population standard deviations of x apart. Requires T >= 4.
/// A wave whose period is not longer than the block size averages to a
/// constant and is not detected.
SquareWaveResult detect_square_wave(std::span<const double> x, const HybridConfig& cfg = {});

/// Linear-interpolation q-quantile of the strictly positive samples.
double spike_threshold(std::span<const double> x, double q);

struct SpikeExtraction {
  std::vector<std::size_t> peaks;  // ascending
  SeriesSet windows;               // centered on peaks, zero-padded at the edges
  double gap_mean = 0.0;
  double gap_std = 0.0;            // population std of consecutive spacings
};

/// Local maxima at or above `threshold`, picked greedily by height with at
/// least `window` samples between accepted peaks. A single peak reports the
/// gap statistics (T, 0).
SpikeExtraction extract_spikes(std::span<const double> x, double threshold, std::size_t window);

struct SpikeModel {
  GanModel gan;
  double gap_mean = 0.0;
  double gap_std = 0.0;
  double threshold = 0.0;
  std::size_t window = 0;
};

SpikeModel train_spike_model(std::span<const double> x, const HybridConfig& hcfg, const TrainConfig& cfg,
                             const ConvArch& arch = {});

/// Peak positions for a generated trace: the first at half a gap, the rest
/// spaced by draws from N(gap_mean, gap_std) rounded and clipped to >= 1.
std::vector<std::size_t> spike_positions(double gap_mean, double gap_std, std::size_t length,
                                         std::uint64_t seed);

/// Zero baseline with each window centered on its position; overlaps take
/// the elementwise maximum. Output length is exactly `length`.
std::vector<double> place_spikes(const SeriesSet& windows, std::span<const std::size_t> positions,
                                 std::size_t length);

std::vector<double> interleave_spikes(const SpikeModel& model, std::size_t length, std::uint64_t seed);

struct SquareModel {
  GanModel gan;
  std::size_t segment_len = 0;
};

/// Convolutional GAN on cycle-length segments of a square-wave trace. The
/// segment length is the rounded cycle clamped to [4, max_len].
SquareModel train_square_model(std::span<const double> x, const SquareWaveResult& detection,
                               std::size_t max_len, const TrainConfig& cfg, const ConvArch& arch = {});

/// Concatenated generated cycles cropped to `length`.
std::vector<double> generate_square(const SquareModel& model, std::size_t length, std::uint64_t seed);

}  // namespace cag
