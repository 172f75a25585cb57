#pragma once

// Run directory layout:
//
//   <run>/config.txt                 key=value snapshot of the RunConfig
//   <run>/manifest.json              per-device status and artifact paths
//   <run>/aggregate_metrics.csv      one row per device plus an average row
//   <run>/sweep.csv                  device,detected_type,K,silhouette,strategy
//   <run>/devices/<id>/routing.json
//   <run>/devices/<id>/clustering.json
//   <run>/devices/<id>/real.csv
//   <run>/devices/<id>/generated.csv
//   <run>/devices/<id>/metrics.json
//   <run>/devices/<id>/models/<branch>_<k>.json
//   <run>/devices/<id>/losses/<branch>_<k>.csv
//   <run>/devices/<id>/plots/*.svg

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cag/cluster.hpp"
#include "cag/metrics.hpp"
#include "cag/run_config.hpp"

namespace cag {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kManifestSchemaVersion = 1;
/// Environment variable that, when set, is prepended to relative run
/// directories.
inline constexpr const char* kRunRootEnv = "CAG_RUN_ROOT";

/// Salts for derive_seed(global, device, stage, index).
enum class SeedStage : std::uint64_t {
  Sweep = 1,
  Train = 2,
  Sample = 3,
  Evaluate = 4,
  Shared = 5,
};

std::uint64_t stage_seed(std::uint64_t global, std::string_view device, SeedStage stage, std::uint64_t index = 0);

struct DeviceRecord {
  std::string device;
  std::string directory;  // relative to the run directory
  bool ok = false;
  std::string error;

  std::optional<DeviceClass> device_class;
  RoutingStats routing;
  /// How the synthetic trace was produced: clustered, pooled, continuous,
  /// square or spike.
  std::string strategy;
  std::size_t k = 0;
  std::optional<double> silhouette;

  std::vector<std::string> files;  // every artifact, relative to the run directory
  std::vector<std::string> checkpoints;
  std::optional<MetricsReport> metrics;
};

struct RunManifest {
  std::filesystem::path run_dir;
  std::string config_text;
  std::vector<DeviceRecord> devices;

  bool all_ok() const noexcept;
  std::string to_json() const;
};

/// Applies the run-root environment override to a relative directory.
std::filesystem::path resolve_run_dir(const std::filesystem::path& out_dir);

using LogFn = std::function<void(std::string_view)>;

/// Routes, clusters, trains, generates and evaluates every device of
/// cfg.input. Device failures are recorded and do not stop the others. The
/// input is parsed before anything is written, so an unreadable or empty
/// input leaves the run directory untouched.
RunManifest run_pipeline(const RunConfig& cfg, const LogFn& log = {});

/// Same as run_pipeline on traces that are already loaded.
RunManifest run_pipeline(const RunConfig& cfg, const DeviceTraceSet& traces, const LogFn& log = {});

std::string clustering_to_json(const Clustering& c);
Clustering clustering_from_json(std::string_view text);
/// Accepts either a clustering.json file or a directory containing one.
Clustering load_clustering(const std::filesystem::path& path);

/// Generation budget split across clusters proportionally to `sizes` by the
/// largest-remainder rule, with at least one sample per non-empty cluster
/// when the budget allows.
std::vector<std::size_t> allocate_counts(std::span<const std::size_t> sizes, std::size_t total);

/// Smooth weighted round-robin order of cluster indices: cluster k appears
/// counts[k] times and the picks are spread evenly.
std::vector<std::size_t> interleave_order(std::span<const std::size_t> counts);

}  // namespace cag
