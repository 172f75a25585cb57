#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cag/cluster.hpp"
#include "cag/gan.hpp"
#include "cag/hybrid.hpp"
#include "cag/resample.hpp"
#include "cag/router.hpp"

namespace cag {

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;

  RoutingConfig routing;
  ClusterConfig cluster;
  TrainConfig train;
  ConvArch conv;
  RecurrentArch recurrent;
  ContinuousConfig continuous;
  HybridConfig hybrid;

  std::size_t segment_len = 436;
  std::size_t samples_per_cluster = 64;
  std::size_t diversity_cap = 200;
  /// Epochs of the joint discriminator phase when shared_discriminator is set.
  std::size_t shared_epochs = 50;
  std::size_t jobs = 1;

  bool no_clusters = false;
  bool shared_discriminator = false;
  bool hybrid_continuous = false;

  void validate() const;

  /// Sets one `key=value` entry. Unknown keys and malformed values throw
  /// ErrorKind::InvalidConfig.
  void set(std::string_view key, std::string_view value);

  /// Every key in a fixed order, one `key=value` per line.
  std::string to_text() const;
};

/// Known keys, in the order to_text() writes them.
const std::vector<std::string>& run_config_keys();

/// Parses `key=value` lines onto `cfg`. Blank lines and lines starting with
/// '#' are ignored.
void apply_config_text(RunConfig& cfg, std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace cag
