#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cag {

struct ContinuousConfig {
  std::size_t max_surrogate_len = 1000;  // U
  std::size_t window_len = 2000;         // W, used once the surrogate exceeds U
  std::size_t factor = 0;                // 0 derives F from T and U

  void validate() const;
};

struct Surrogate {
  std::vector<double> values;
  std::size_t factor = 1;
  std::size_t original_len = 0;
};

/// Block means of length F; the trailing partial block is discarded.
Surrogate downsample(std::span<const double> x, std::size_t factor);

/// Smallest F >= 1 with floor(T / F) <= U.
std::size_t choose_factor(std::size_t length, std::size_t max_len);

/// Start offsets of the windows covering [0, len): a single window when
/// len <= max_len or len <= window; otherwise steps of `stride` with the last
/// window right-aligned.
std::vector<std::size_t> window_starts(std::size_t len, std::size_t max_len, std::size_t window,
                                       std::size_t stride);

std::vector<std::vector<double>> make_windows(std::span<const double> x, std::size_t max_len, std::size_t window,
                                              std::size_t stride);

/// Averages overlapping windows back into one series of length `len`.
std::vector<double> stitch_windows(const std::vector<std::vector<double>>& windows,
                                   std::span<const std::size_t> starts, std::size_t len);

/// Each value repeated F times, then cropped to T or padded with the last
/// value.
std::vector<double> reconstruct(std::span<const double> y, std::size_t factor, std::size_t length);

}  // namespace cag
