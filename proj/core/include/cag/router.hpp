#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace cag {

struct RoutingConfig {
  std::size_t prefix_len = 100;               // leading samples tested for exact zero
  double occupancy_threshold = 0.7;           // nonzero fraction above which a trace may be continuous
  double derivative_variance_threshold = 0.1;  // smoothed-derivative variance below which it may be
  std::size_t smoothing_window = 7;           // odd moving-average width
  /// true: divide by the number of differences (T-1); false: unbiased (T-2).
  bool population_variance = true;

  void validate() const;
};

struct RoutingStats {
  bool r0 = false;
  double p_nz = 0.0;
  double var_smoothed_diff = 0.0;
};

enum class DeviceClass { Continuous, Intermittent };

std::string_view to_string(DeviceClass c) noexcept;

/// Centered moving average (window shrinks symmetrically at the ends)
/// followed by first differences. Output has x.size() - 1 entries.
std::vector<double> smoothed_diff(std::span<const double> x, std::size_t window);

RoutingStats routing_stats(std::span<const double> x, const RoutingConfig& cfg = {});

/// Continuous iff r0, or occupancy above threshold with smoothed-derivative
/// variance below threshold.
DeviceClass classify(const RoutingStats& stats, const RoutingConfig& cfg = {});

}  // namespace cag
