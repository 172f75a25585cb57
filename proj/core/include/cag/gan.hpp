#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cag/nn.hpp"

namespace cag {

using Series = std::vector<double>;
using SeriesSet = std::vector<Series>;

struct TrainConfig {
  std::size_t epochs = 1500;
  std::size_t batch_size = 32;
  std::size_t latent_dim = 100;
  OptimConfig optim{};
  std::uint64_t seed = 0;
  std::size_t d_steps_per_g = 1;

  void validate() const;
};

/// Convolutional generator/discriminator widths. Defaults are the full-size
/// configuration; desk-scale runs shrink the channel counts.
struct ConvArch {
  std::size_t bridge_channels = 64;  // latent -> (bridge_channels x L) projection
  std::vector<std::size_t> gen_channels{64, 128, 256};
  std::vector<std::size_t> gen_kernels{3, 5, 5};
  std::vector<std::size_t> disc_channels{128, 64};
  std::vector<std::size_t> disc_kernels{5, 3};

  void validate() const;
};

struct RecurrentArch {
  std::size_t hidden = 64;
  std::size_t layers = 2;
};

enum class Branch { Cluster, Continuous, Square, Spike };

std::string_view to_string(Branch b) noexcept;
Branch branch_from_string(std::string_view s);

/// Min-max range used to map training data onto [-1, 1].
struct DataRange {
  double min = 0.0;
  double max = 0.0;

  static DataRange of(const SeriesSet& data);
  double normalize(double x) const noexcept;
  double denormalize(double y) const noexcept;
};

struct EpochLoss {
  double discriminator = 0.0;
  double generator = 0.0;
};

struct GanModel {
  Branch branch = Branch::Cluster;
  Network generator;
  Network discriminator;
  AdamState generator_state;
  AdamState discriminator_state;
  DataRange range;
  std::size_t latent_dim = 0;
  std::size_t output_len = 0;
  std::uint64_t seed = 0;
  std::vector<EpochLoss> history;
};

std::vector<LayerSpec> conv_generator_specs(std::size_t latent_dim, std::size_t length, const ConvArch& arch);
std::vector<LayerSpec> conv_discriminator_specs(std::size_t length, const ConvArch& arch);
std::vector<LayerSpec> recurrent_generator_specs(std::size_t latent_dim, std::size_t length,
                                                 const RecurrentArch& arch);
std::vector<LayerSpec> recurrent_discriminator_specs(std::size_t length, const RecurrentArch& arch);

/// Alternating adversarial training of an already-built generator and
/// discriminator on series normalized to [-1, 1]. Appends to model.history.
void train_adversarial(GanModel& model, const SeriesSet& normalized, const TrainConfig& cfg);

/// Convolutional GAN on one cluster's segments (all the same length, at
/// least 2 of them).
GanModel train_cluster_gan(const SeriesSet& segments, const TrainConfig& cfg, const ConvArch& arch = {},
                           Branch branch = Branch::Cluster);

/// Recurrent GAN on equal-length surrogate windows (at least 1).
GanModel train_continuous_gan(const SeriesSet& windows, const TrainConfig& cfg,
                              const RecurrentArch& arch = {});

/// All of a device's segments pooled into one convolutional GAN.
GanModel ablation_no_clusters(const SeriesSet& segments, const TrainConfig& cfg, const ConvArch& arch = {});

/// Joint phase over several already-trained generators of the same output
/// length: one fresh discriminator sees every model's real data and fakes,
/// and each generator takes a step against it. Appends to every history.
void finetune_shared_discriminator(std::vector<GanModel*> models, const std::vector<SeriesSet>& data,
                                   const TrainConfig& cfg, const ConvArch& arch);

/// Generator outputs in [-1, 1], before denormalization.
SeriesSet sample_normalized(const GanModel& model, std::size_t n, std::uint64_t seed);
/// Denormalized samples in watts. Deterministic for a fixed seed.
SeriesSet sample(const GanModel& model, std::size_t n, std::uint64_t seed);

/// Versioned JSON checkpoint with layer specs, parameters, Adam state, data
/// range, seed and loss history.
void save_checkpoint(const std::filesystem::path& path, const GanModel& model);
GanModel load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_to_string(const GanModel& model);
GanModel checkpoint_from_string(std::string_view text);

/// epoch,discriminator_loss,generator_loss
std::string loss_history_csv(const std::vector<EpochLoss>& history);

}  // namespace cag
