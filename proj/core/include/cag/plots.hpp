#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cag/gan.hpp"

namespace cag {

struct SvgSeries {
  std::string label;
  std::vector<double> values;
  std::string color;
};

/// Line chart with one polyline per series over a shared index axis. Series
/// longer than `max_points` are thinned by striding. Output depends only on
/// the inputs.
std::string line_chart_svg(std::string_view title, std::span<const SvgSeries> series, std::size_t max_points = 2000);

std::string loss_curve_svg(std::string_view title, const std::vector<EpochLoss>& history);
std::string comparison_svg(std::string_view title, std::span<const double> real, std::span<const double> gen);

/// Parses a loss CSV written by loss_history_csv.
std::vector<EpochLoss> parse_loss_csv(std::string_view text);

struct PlotOutcome {
  std::vector<std::filesystem::path> written;  // relative to the device directory
  std::vector<std::string> warnings;
};

/// Loss curves for every losses/*.csv and a real-vs-generated overlay when
/// real.csv and generated.csv exist, all under <device_dir>/plots.
PlotOutcome emit_device_plots(const std::filesystem::path& device_dir);

/// emit_device_plots over every <run_dir>/devices/* directory.
PlotOutcome emit_plots(const std::filesystem::path& run_dir);

}  // namespace cag
