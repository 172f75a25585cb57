#include "cag/gan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "cag/error.hpp"
#include "cag/seed.hpp"
#include "cag/trace.hpp"

namespace cag {

namespace {

enum Salt : std::uint64_t { kGeneratorInit = 1, kDiscriminatorInit = 2, kTrainingStream = 3 };

void check_equal_lengths(const SeriesSet& data, std::string_view what) {
  const auto len = data.front().size();
  for (const auto& s : data) {
    if (s.size() != len) throw Error(ErrorKind::Shape, std::string(what) + " have ragged lengths");
  }
  if (len == 0) throw Error(ErrorKind::Shape, std::string(what) + " are empty");
}

SeriesSet normalize_all(const SeriesSet& data, const DataRange& range) {
  SeriesSet out = data;
  for (auto& s : out)
    for (auto& v : s) v = range.normalize(v);
  return out;
}

Tensor latent_batch(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor z({n, dim});
  for (auto& v : z.data) v = normal(rng);
  return z;
}

void check_finite_loss(double loss, std::size_t epoch, std::string_view who) {
  if (!std::isfinite(loss)) {
    throw Error(ErrorKind::Divergence,
                std::string(who) + " loss became non-finite at epoch " + std::to_string(epoch + 1));
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorKind::InvalidConfig, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::InvalidConfig, "batch size must be >= 1");
  if (latent_dim < 1) throw Error(ErrorKind::InvalidConfig, "latent dimension must be >= 1");
  if (d_steps_per_g < 1) throw Error(ErrorKind::InvalidConfig, "d_steps_per_g must be >= 1");
  optim.validate();
}

void ConvArch::validate() const {
  if (bridge_channels < 1) throw Error(ErrorKind::InvalidConfig, "bridge channels must be >= 1");
  if (gen_channels.empty() || gen_channels.size() != gen_kernels.size())
    throw Error(ErrorKind::InvalidConfig, "generator channels and kernels must pair up");
  if (disc_channels.empty() || disc_channels.size() != disc_kernels.size())
    throw Error(ErrorKind::InvalidConfig, "discriminator channels and kernels must pair up");
}

std::string_view to_string(Branch b) noexcept {
  switch (b) {
    case Branch::Cluster: return "cluster";
    case Branch::Continuous: return "continuous";
    case Branch::Square: return "square";
    case Branch::Spike: return "spike";
  }
  return "cluster";
}

Branch branch_from_string(std::string_view s) {
  for (auto b : {Branch::Cluster, Branch::Continuous, Branch::Square, Branch::Spike}) {
    if (to_string(b) == s) return b;
  }
  throw Error(ErrorKind::Format, "unknown branch '" + std::string(s) + "'");
}

DataRange DataRange::of(const SeriesSet& data) {
  DataRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& s : data) {
    for (double v : s) {
      r.min = std::min(r.min, v);
      r.max = std::max(r.max, v);
    }
  }
  if (!std::isfinite(r.min)) r = {0.0, 0.0};
  return r;
}

double DataRange::normalize(double x) const noexcept {
  const double span = max - min;
  return span > 0.0 ? 2.0 * (x - min) / span - 1.0 : 0.0;
}

double DataRange::denormalize(double y) const noexcept { return min + (y + 1.0) * 0.5 * (max - min); }

std::vector<LayerSpec> conv_generator_specs(std::size_t latent_dim, std::size_t length, const ConvArch& arch) {
  arch.validate();
  std::vector<LayerSpec> s;
  s.push_back(LayerSpec::dense(latent_dim, arch.bridge_channels * length));
  s.push_back(LayerSpec::act(ActivationKind::Relu));
  s.push_back(LayerSpec::reshape({arch.bridge_channels, length}));
  std::size_t channels = arch.bridge_channels;
  for (std::size_t i = 0; i < arch.gen_channels.size(); ++i) {
    s.push_back(LayerSpec::conv1d(channels, arch.gen_channels[i], arch.gen_kernels[i]));
    s.push_back(LayerSpec::act(ActivationKind::Relu));
    channels = arch.gen_channels[i];
  }
  s.push_back(LayerSpec::flatten());
  s.push_back(LayerSpec::dense(channels * length, length));
  s.push_back(LayerSpec::act(ActivationKind::Tanh));
  return s;
}

std::vector<LayerSpec> conv_discriminator_specs(std::size_t length, const ConvArch& arch) {
  arch.validate();
  std::vector<LayerSpec> s;
  s.push_back(LayerSpec::reshape({1, length}));
  std::size_t channels = 1;
  for (std::size_t i = 0; i < arch.disc_channels.size(); ++i) {
    s.push_back(LayerSpec::conv1d(channels, arch.disc_channels[i], arch.disc_kernels[i]));
    s.push_back(LayerSpec::act(ActivationKind::LeakyRelu));
    channels = arch.disc_channels[i];
  }
  s.push_back(LayerSpec::flatten());
  s.push_back(LayerSpec::dense(channels * length, 1));
  s.push_back(LayerSpec::act(ActivationKind::LeakyRelu));
  s.push_back(LayerSpec::act(ActivationKind::Sigmoid));
  return s;
}

std::vector<LayerSpec> recurrent_generator_specs(std::size_t latent_dim, std::size_t length,
                                                 const RecurrentArch& arch) {
  return {
      LayerSpec::dense(latent_dim, arch.hidden),
      LayerSpec::act(ActivationKind::Tanh),
      LayerSpec::repeat(length),
      LayerSpec::lstm(arch.hidden, arch.hidden, arch.layers, true),
      LayerSpec::dense(arch.hidden, 1),
      LayerSpec::act(ActivationKind::Tanh),
      LayerSpec::flatten(),
  };
}

std::vector<LayerSpec> recurrent_discriminator_specs(std::size_t length, const RecurrentArch& arch) {
  return {
      LayerSpec::reshape({length, 1}),
      LayerSpec::lstm(1, arch.hidden, arch.layers, false),
      LayerSpec::dense(arch.hidden, 1),
      LayerSpec::act(ActivationKind::Sigmoid),
  };
}

void train_adversarial(GanModel& model, const SeriesSet& normalized, const TrainConfig& cfg) {
  cfg.validate();
  if (normalized.empty()) throw Error(ErrorKind::InsufficientData, "no training series");
  const std::size_t len = normalized.front().size();
  const std::size_t n = normalized.size();
  std::mt19937_64 rng(derive_seed(cfg.seed, kTrainingStream));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto& G = model.generator;
  auto& D = model.discriminator;
  G.zero_grad();
  D.zero_grad();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double d_sum = 0.0, g_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t bs = std::min(cfg.batch_size, n - start);
      Tensor real({bs, len});
      for (std::size_t i = 0; i < bs; ++i)
        std::copy(normalized[order[start + i]].begin(), normalized[order[start + i]].end(),
                  real.data.begin() + static_cast<std::ptrdiff_t>(i * len));

      double d_loss = 0.0;
      for (std::size_t k = 0; k < cfg.d_steps_per_g; ++k) {
        const Tensor fake = G.forward(latent_batch(bs, model.latent_dim, rng));
        auto real_term = bce_real(D.forward(real));
        for (auto& g : real_term.grad.data) g *= 0.5;
        D.backward(real_term.grad);
        auto fake_term = bce_fake(D.forward(fake));
        for (auto& g : fake_term.grad.data) g *= 0.5;
        D.backward(fake_term.grad);
        d_loss = 0.5 * real_term.loss + 0.5 * fake_term.loss;
        check_finite_loss(d_loss, epoch, "discriminator");
        adam_step(D, model.discriminator_state, cfg.optim);
      }

      const Tensor fake = G.forward(latent_batch(bs, model.latent_dim, rng));
      const auto g_term = gen_loss(D.forward(fake));
      check_finite_loss(g_term.loss, epoch, "generator");
      G.backward(D.backward(g_term.grad));
      D.zero_grad();
      adam_step(G, model.generator_state, cfg.optim);

      d_sum += d_loss;
      g_sum += g_term.loss;
      ++steps;
    }
    model.history.push_back({d_sum / static_cast<double>(steps), g_sum / static_cast<double>(steps)});
  }
}

namespace {

GanModel build_and_train(const SeriesSet& data, const TrainConfig& cfg, Branch branch,
                         std::vector<LayerSpec> gen_specs, std::vector<LayerSpec> disc_specs) {
  GanModel model;
  model.branch = branch;
  model.seed = cfg.seed;
  model.latent_dim = cfg.latent_dim;
  model.output_len = data.front().size();
  model.range = DataRange::of(data);
  model.generator = Network(std::move(gen_specs), derive_seed(cfg.seed, kGeneratorInit));
  model.discriminator = Network(std::move(disc_specs), derive_seed(cfg.seed, kDiscriminatorInit));
  model.generator_state = make_adam_state(model.generator);
  model.discriminator_state = make_adam_state(model.discriminator);
  train_adversarial(model, normalize_all(data, model.range), cfg);
  return model;
}

}  // namespace

GanModel train_cluster_gan(const SeriesSet& segments, const TrainConfig& cfg, const ConvArch& arch,
                           Branch branch) {
  cfg.validate();
  if (segments.size() < 2)
    throw Error(ErrorKind::InsufficientData, "cluster GAN needs at least 2 segments, got " +
                                                 std::to_string(segments.size()));
  check_equal_lengths(segments, "segments");
  const std::size_t len = segments.front().size();
  return build_and_train(segments, cfg, branch, conv_generator_specs(cfg.latent_dim, len, arch),
                         conv_discriminator_specs(len, arch));
}

GanModel train_continuous_gan(const SeriesSet& windows, const TrainConfig& cfg, const RecurrentArch& arch) {
  cfg.validate();
  if (windows.empty()) throw Error(ErrorKind::InsufficientData, "continuous GAN needs at least 1 window");
  check_equal_lengths(windows, "windows");
  const std::size_t len = windows.front().size();
  return build_and_train(windows, cfg, Branch::Continuous, recurrent_generator_specs(cfg.latent_dim, len, arch),
                         recurrent_discriminator_specs(len, arch));
}

GanModel ablation_no_clusters(const SeriesSet& segments, const TrainConfig& cfg, const ConvArch& arch) {
  return train_cluster_gan(segments, cfg, arch, Branch::Cluster);
}

void finetune_shared_discriminator(std::vector<GanModel*> models, const std::vector<SeriesSet>& data,
                                   const TrainConfig& cfg, const ConvArch& arch) {
  cfg.validate();
  if (models.empty()) return;
  if (models.size() != data.size()) throw Error(ErrorKind::Shape, "one training set per model is required");
  const std::size_t len = models.front()->output_len;
  std::vector<SeriesSet> normalized;
  for (std::size_t m = 0; m < models.size(); ++m) {
    if (models[m]->output_len != len) throw Error(ErrorKind::Shape, "shared discriminator needs equal output lengths");
    if (data[m].empty()) throw Error(ErrorKind::InsufficientData, "empty training set for a shared phase");
    check_equal_lengths(data[m], "segments");
    normalized.push_back(normalize_all(data[m], models[m]->range));
  }
  Network D(conv_discriminator_specs(len, arch), derive_seed(cfg.seed, kDiscriminatorInit));
  AdamState d_state = make_adam_state(D);
  std::mt19937_64 rng(derive_seed(cfg.seed, kTrainingStream));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t m = 0; m < models.size(); ++m) {
      auto& model = *models[m];
      const auto& set = normalized[m];
      const std::size_t bs = std::min(cfg.batch_size, set.size());
      std::uniform_int_distribution<std::size_t> pick(0, set.size() - 1);
      Tensor real({bs, len});
      for (std::size_t i = 0; i < bs; ++i) {
        const auto& s = set[pick(rng)];
        std::copy(s.begin(), s.end(), real.data.begin() + static_cast<std::ptrdiff_t>(i * len));
      }
      const Tensor fake = model.generator.forward(latent_batch(bs, model.latent_dim, rng));
      auto real_term = bce_real(D.forward(real));
      for (auto& g : real_term.grad.data) g *= 0.5;
      D.backward(real_term.grad);
      auto fake_term = bce_fake(D.forward(fake));
      for (auto& g : fake_term.grad.data) g *= 0.5;
      D.backward(fake_term.grad);
      const double d_loss = 0.5 * real_term.loss + 0.5 * fake_term.loss;
      check_finite_loss(d_loss, epoch, "shared discriminator");
      adam_step(D, d_state, cfg.optim);

      const Tensor fake2 = model.generator.forward(latent_batch(bs, model.latent_dim, rng));
      const auto g_term = gen_loss(D.forward(fake2));
      check_finite_loss(g_term.loss, epoch, "generator");
      model.generator.backward(D.backward(g_term.grad));
      D.zero_grad();
      adam_step(model.generator, model.generator_state, cfg.optim);
      model.history.push_back({d_loss, g_term.loss});
    }
  }
}

SeriesSet sample_normalized(const GanModel& model, std::size_t n, std::uint64_t seed) {
  SeriesSet out;
  if (n == 0) return out;
  if (model.generator.empty()) throw Error(ErrorKind::State, "sampling from an untrained model");
  Network g = model.generator;
  std::mt19937_64 rng(seed);
  constexpr std::size_t kChunk = 64;
  out.reserve(n);
  for (std::size_t done = 0; done < n; done += kChunk) {
    const std::size_t bs = std::min(kChunk, n - done);
    const Tensor y = g.forward(latent_batch(bs, model.latent_dim, rng));
    const std::size_t len = y.size() / bs;
    for (std::size_t i = 0; i < bs; ++i) {
      Series s(y.data.begin() + static_cast<std::ptrdiff_t>(i * len),
               y.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * len));
      for (double v : s) {
        if (!(v >= -1.0 && v <= 1.0)) throw Error(ErrorKind::State, "generator output left [-1, 1]");
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

SeriesSet sample(const GanModel& model, std::size_t n, std::uint64_t seed) {
  auto out = sample_normalized(model, n, seed);
  for (auto& s : out)
    for (auto& v : s) v = model.range.denormalize(v);
  return out;
}

std::string loss_history_csv(const std::vector<EpochLoss>& history) {
  std::string out = "epoch,discriminator_loss,generator_loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    out += std::to_string(i + 1) + ',' + format_value(history[i].discriminator) + ',' +
           format_value(history[i].generator) + '\n';
  }
  return out;
}

}  // namespace cag
