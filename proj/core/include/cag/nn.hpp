#pragma once

// Small neural-network kit: the handful of layer kinds the generators and
// discriminators need, each with an explicit backward pass.
//
// Tensor layouts (row-major, batch first):
//   dense       (..., in)        -> (..., out)       applied over the last axis
//   conv1d      (B, C_in, L)     -> (B, C_out, L)    stride 1, same padding
//   lstm        (B, T, in)       -> (B, T, H) or (B, H)
//   reshape     (B, ...)         -> (B, dims...)
//   repeat      (B, F)           -> (B, steps, F)

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cag {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);

  std::size_t size() const noexcept { return data.size(); }
  std::size_t rank() const noexcept { return shape.size(); }
};

std::size_t shape_size(std::span<const std::size_t> shape) noexcept;
std::string shape_string(std::span<const std::size_t> shape);

struct ParamTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::vector<double> grad;
};

enum class LayerKind { Dense, Conv1d, Lstm, Activation, Flatten, Reshape, Repeat };
enum class ActivationKind { Tanh, Relu, LeakyRelu, Sigmoid };

inline constexpr double kLeakySlope = 0.2;

std::string_view to_string(LayerKind k) noexcept;
std::string_view to_string(ActivationKind k) noexcept;
LayerKind layer_kind_from_string(std::string_view s);
ActivationKind activation_from_string(std::string_view s);

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  std::size_t in = 0;   // dense in-features / conv in-channels / lstm input size
  std::size_t out = 0;  // dense out-features / conv out-channels / lstm hidden size
  std::size_t kernel = 0;
  std::size_t layers = 1;
  bool return_sequences = true;
  ActivationKind activation = ActivationKind::Tanh;
  std::vector<std::size_t> dims;  // reshape target, batch axis excluded
  std::size_t steps = 0;          // repeat count

  static LayerSpec dense(std::size_t in, std::size_t out);
  static LayerSpec conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel);
  static LayerSpec lstm(std::size_t in, std::size_t hidden, std::size_t layers, bool return_sequences);
  static LayerSpec act(ActivationKind kind);
  static LayerSpec flatten();
  static LayerSpec reshape(std::vector<std::size_t> dims);
  static LayerSpec repeat(std::size_t steps);

  void validate() const;
  bool operator==(const LayerSpec&) const = default;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& input) = 0;
  /// Accumulates parameter gradients and returns the input gradient.
  virtual Tensor backward(const Tensor& grad_output) = 0;
  virtual std::vector<ParamTensor*> params() { return {}; }
  virtual std::unique_ptr<Layer> clone() const = 0;
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, std::uint64_t seed);

/// Sequential stack of layers. Copies carry parameters and gradients but no
/// forward cache.
class Network {
 public:
  Network() = default;
  Network(std::vector<LayerSpec> specs, std::uint64_t init_seed);

  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  Tensor forward(const Tensor& input);
  /// Requires a preceding forward(); consumes its cache.
  Tensor backward(const Tensor& grad_output);

  std::vector<ParamTensor*> params();
  std::vector<const ParamTensor*> params() const;
  void zero_grad();
  std::size_t parameter_count() const;

  const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
  bool empty() const noexcept { return layers_.empty(); }

 private:
  std::vector<LayerSpec> specs_;
  std::vector<std::unique_ptr<Layer>> layers_;
  bool cached_ = false;
};

// Logistic losses on sigmoid outputs. Inputs are clamped to [1e-7, 1-1e-7];
// the returned gradient is d(loss)/d(output) for the clamped values.
struct LossGrad {
  double loss = 0.0;
  Tensor grad;
};

LossGrad bce_real(const Tensor& d_out);  // mean(-log D(x))
LossGrad bce_fake(const Tensor& d_out);  // mean(-log(1 - D(G(z))))
LossGrad gen_loss(const Tensor& d_out_on_fake);  // mean(-log D(G(z)))
/// ½ bce_real + ½ bce_fake.
double discriminator_loss(const Tensor& real_out, const Tensor& fake_out);

struct OptimConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;
};

AdamState make_adam_state(const Network& net);

/// Bias-corrected Adam update; zeroes gradients afterwards. Throws
/// ErrorKind::Divergence naming the tensor when any gradient is non-finite.
void adam_step(Network& net, AdamState& state, const OptimConfig& cfg);

}  // namespace cag
