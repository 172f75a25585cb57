#include "cag/router.hpp"

#include <algorithm>
#include <string>

#include "cag/error.hpp"

namespace cag {

void RoutingConfig::validate() const {
  if (prefix_len < 1) throw Error(ErrorKind::InvalidConfig, "prefix_len must be >= 1");
  if (!(occupancy_threshold > 0.0 && occupancy_threshold < 1.0))
    throw Error(ErrorKind::InvalidConfig, "occupancy_threshold must lie in (0,1)");
  if (!(derivative_variance_threshold > 0.0))
    throw Error(ErrorKind::InvalidConfig, "derivative_variance_threshold must be > 0");
  if (smoothing_window < 1 || smoothing_window % 2 == 0)
    throw Error(ErrorKind::InvalidConfig, "smoothing_window must be odd and >= 1");
}

std::string_view to_string(DeviceClass c) noexcept {
  return c == DeviceClass::Continuous ? "continuous" : "intermittent";
}

std::vector<double> smoothed_diff(std::span<const double> x, std::size_t window) {
  if (x.size() < 2)
    throw Error(ErrorKind::InsufficientData, "smoothed_diff needs at least 2 samples");
  if (window < 1 || window % 2 == 0)
    throw Error(ErrorKind::InvalidConfig, "smoothing window must be odd and >= 1");

  const std::size_t n = x.size();
  const std::size_t half = window / 2;
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];

  std::vector<double> smooth(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t reach = std::min({half, i, n - 1 - i});
    const std::size_t lo = i - reach;
    const std::size_t hi = i + reach + 1;
    smooth[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }

  std::vector<double> diff(n - 1);
  for (std::size_t i = 1; i < n; ++i) diff[i - 1] = smooth[i] - smooth[i - 1];
  return diff;
}

RoutingStats routing_stats(std::span<const double> x, const RoutingConfig& cfg) {
  cfg.validate();
  if (x.size() < 2)
    throw Error(ErrorKind::InsufficientData, "routing needs at least 2 samples");

  RoutingStats stats;
  const std::size_t prefix = std::min(cfg.prefix_len, x.size());
  stats.r0 = std::all_of(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(prefix),
                         [](double v) { return v == 0.0; });
  const auto nonzero = std::count_if(x.begin(), x.end(), [](double v) { return v != 0.0; });
  stats.p_nz = static_cast<double>(nonzero) / static_cast<double>(x.size());

  const auto d = smoothed_diff(x, cfg.smoothing_window);
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(d.size());
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const std::size_t divisor = cfg.population_variance ? d.size() : d.size() - 1;
  stats.var_smoothed_diff = divisor > 0 ? ss / static_cast<double>(divisor) : 0.0;
  return stats;
}

DeviceClass classify(const RoutingStats& stats, const RoutingConfig& cfg) {
  const bool steady = stats.p_nz > cfg.occupancy_threshold &&
                      stats.var_smoothed_diff < cfg.derivative_variance_threshold;
  return (stats.r0 || steady) ? DeviceClass::Continuous : DeviceClass::Intermittent;
}

}  // namespace cag
