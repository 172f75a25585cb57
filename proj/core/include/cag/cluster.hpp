#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cag/features.hpp"
#include "cag/router.hpp"
#include "cag/trace.hpp"

namespace cag {

using Point = std::vector<double>;
using PointSet = std::vector<Point>;

struct ClusterConfig {
  std::vector<std::size_t> candidate_ks{2, 3, 4, 5, 6, 8, 10};
  std::size_t max_k = 10;
  std::size_t max_iter = 300;
  double tol = 1e-4;  // max centroid displacement that counts as converged
  std::size_t n_init = 10;  // seeded restarts; the lowest inertia wins
  std::uint64_t seed = 0;

  void validate() const;
};

/// Result of one k-means run. Cluster indices are 0-based.
struct Clustering {
  std::size_t k = 0;
  PointSet centroids;
  std::vector<std::size_t> assignments;
  double inertia = 0.0;
  /// Objective after every assignment step, in order. Non-increasing.
  std::vector<double> inertia_history;
  std::size_t iterations = 0;

  // Set when the clustering was fitted on segment features.
  std::optional<FeatureScaler> scaler;
  std::size_t segment_len = 0;
  std::optional<double> silhouette;

  std::vector<std::size_t> sizes() const;
  /// Nearest centroid; ties go to the lowest index.
  std::size_t nearest(std::span<const double> point) const;
};

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

/// Sum of squared distances from each point to its assigned centroid.
double kmeans_objective(const PointSet& points, const PointSet& centroids,
                        std::span<const std::size_t> assignments);

/// k-means++ seeding (index order, seeded RNG) then Lloyd iterations, repeated
/// n_init times; the run with the lowest inertia is kept. Empty clusters are
/// re-seeded with the point farthest from its centroid.
Clustering kmeans(const PointSet& points, std::size_t k, const ClusterConfig& cfg);

struct SilhouetteResult {
  double mean = 0.0;
  std::vector<double> per_point;
};

/// Mean silhouette with s=0 for singletons and for a=b=0. Needs at least two
/// non-empty clusters.
SilhouetteResult silhouette(const PointSet& points, std::span<const std::size_t> assignments);

struct KSelection {
  std::size_t best_k = 1;
  /// (K, mean silhouette) for every candidate that survived filtering; the
  /// score is empty when the silhouette was undefined for that run.
  std::vector<std::pair<std::size_t, std::optional<double>>> curve;
  Clustering clustering;
};

/// Runs k-means for every candidate K with |points| >= 2K and K <= max_k and
/// keeps the best mean silhouette (ties to the smaller K). Falls back to a
/// single cluster when no candidate survives.
KSelection select_k(const PointSet& points, const ClusterConfig& cfg);

/// Label 0 for all-zero segments, 1 for the rest.
std::vector<std::size_t> continuous_split(std::span<const Segment> segments);

/// Segments, raw features, fitted scaler and standardized points for a trace.
struct SegmentFeatures {
  std::vector<Segment> segments;
  std::vector<FeatureVector> raw;
  FeatureScaler scaler;
  PointSet standardized;
};

SegmentFeatures featurize(std::span<const double> trace, std::size_t segment_len,
                          std::string_view device = {});

enum class Strategy { KMeans, ContinuousSplit };

std::string_view to_string(Strategy s) noexcept;

struct SweepRow {
  std::string device;
  DeviceClass detected = DeviceClass::Intermittent;
  Strategy strategy = Strategy::KMeans;
  std::size_t k = 1;
  std::optional<double> silhouette;
  std::optional<double> split_silhouette;
};

struct SweepReport {
  std::vector<SweepRow> rows;

  /// device,detected_type,K,silhouette,strategy
  std::string to_csv() const;
};

struct DeviceSweep {
  SweepRow row;
  KSelection kmeans;
  SegmentFeatures features;
};

/// Routes one device, featurizes its segments and compares the continuous
/// split against every k-means candidate by silhouette.
DeviceSweep sweep_device(const DeviceTrace& trace, const RoutingConfig& routing,
                         const ClusterConfig& cfg, std::size_t segment_len);

SweepReport strategy_sweep(const DeviceTraceSet& traces, const RoutingConfig& routing,
                           const ClusterConfig& cfg, std::size_t segment_len);

}  // namespace cag
