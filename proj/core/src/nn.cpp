#include "cag/nn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cag/error.hpp"
#include "cag/seed.hpp"

namespace cag {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;

Tensor::Tensor(std::vector<std::size_t> s, double fill)
    : shape(std::move(s)), data(shape_size(shape), fill) {}

std::size_t shape_size(std::span<const std::size_t> shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(std::span<const std::size_t> shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

std::string_view to_string(LayerKind k) noexcept {
  switch (k) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::Lstm: return "lstm";
    case LayerKind::Activation: return "activation";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Reshape: return "reshape";
    case LayerKind::Repeat: return "repeat";
  }
  return "dense";
}

std::string_view to_string(ActivationKind k) noexcept {
  switch (k) {
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Relu: return "relu";
    case ActivationKind::LeakyRelu: return "leaky_relu";
    case ActivationKind::Sigmoid: return "sigmoid";
  }
  return "tanh";
}

LayerKind layer_kind_from_string(std::string_view s) {
  for (auto k : {LayerKind::Dense, LayerKind::Conv1d, LayerKind::Lstm, LayerKind::Activation,
                 LayerKind::Flatten, LayerKind::Reshape, LayerKind::Repeat}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorKind::Format, "unknown layer kind '" + std::string(s) + "'");
}

ActivationKind activation_from_string(std::string_view s) {
  for (auto k : {ActivationKind::Tanh, ActivationKind::Relu, ActivationKind::LeakyRelu, ActivationKind::Sigmoid}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorKind::Format, "unknown activation '" + std::string(s) + "'");
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.in = in;
  s.out = out;
  return s;
}

LayerSpec LayerSpec::conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel) {
  LayerSpec s;
  s.kind = LayerKind::Conv1d;
  s.in = in_channels;
  s.out = out_channels;
  s.kernel = kernel;
  return s;
}

LayerSpec LayerSpec::lstm(std::size_t in, std::size_t hidden, std::size_t layers, bool return_sequences) {
  LayerSpec s;
  s.kind = LayerKind::Lstm;
  s.in = in;
  s.out = hidden;
  s.layers = layers;
  s.return_sequences = return_sequences;
  return s;
}

LayerSpec LayerSpec::act(ActivationKind kind) {
  LayerSpec s;
  s.kind = LayerKind::Activation;
  s.activation = kind;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::Flatten;
  return s;
}

LayerSpec LayerSpec::reshape(std::vector<std::size_t> dims) {
  LayerSpec s;
  s.kind = LayerKind::Reshape;
  s.dims = std::move(dims);
  return s;
}

LayerSpec LayerSpec::repeat(std::size_t steps) {
  LayerSpec s;
  s.kind = LayerKind::Repeat;
  s.steps = steps;
  return s;
}

void LayerSpec::validate() const {
  switch (kind) {
    case LayerKind::Dense:
      if (in < 1 || out < 1) throw Error(ErrorKind::InvalidConfig, "dense needs in, out >= 1");
      break;
    case LayerKind::Conv1d:
      if (in < 1 || out < 1) throw Error(ErrorKind::InvalidConfig, "conv1d needs channels >= 1");
      if (kernel < 1 || kernel % 2 == 0) throw Error(ErrorKind::InvalidConfig, "conv1d kernel must be odd");
      break;
    case LayerKind::Lstm:
      if (in < 1 || out < 1 || layers < 1)
        throw Error(ErrorKind::InvalidConfig, "lstm needs input, hidden and layers >= 1");
      break;
    case LayerKind::Reshape:
      if (dims.empty() || shape_size(dims) == 0) throw Error(ErrorKind::InvalidConfig, "reshape needs dims");
      break;
    case LayerKind::Repeat:
      if (steps < 1) throw Error(ErrorKind::InvalidConfig, "repeat needs steps >= 1");
      break;
    case LayerKind::Activation:
    case LayerKind::Flatten:
      break;
  }
}

namespace {

void require_cache(bool cached, std::string_view layer) {
  if (!cached)
    throw Error(ErrorKind::State, "backward through " + std::string(layer) + " without a forward cache");
}

void check_grad_shape(const Tensor& grad, const std::vector<std::size_t>& expected, std::string_view layer) {
  if (grad.shape != expected) {
    throw Error(ErrorKind::Dimension, std::string(layer) + " backward expects gradient " +
                                         shape_string(expected) + ", got " + shape_string(grad.shape));
  }
}

ParamTensor make_param(std::string name, std::vector<std::size_t> shape) {
  ParamTensor p;
  p.name = std::move(name);
  p.shape = std::move(shape);
  p.values.assign(shape_size(p.shape), 0.0);
  p.grad.assign(p.values.size(), 0.0);
  return p;
}

void uniform_fill(std::vector<double>& v, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& x : v) x = dist(rng);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

class DenseLayer final : public Layer {
 public:
  DenseLayer(const LayerSpec& spec, std::mt19937_64& rng)
      : in_(spec.in), out_(spec.out),
        weight_(make_param("weight", {spec.out, spec.in})),
        bias_(make_param("bias", {spec.out})) {
    uniform_fill(weight_.values, std::sqrt(6.0 / static_cast<double>(in_ + out_)), rng);
  }

  Tensor forward(const Tensor& x) override {
    if (x.rank() < 2 || x.shape.back() != in_) {
      throw Error(ErrorKind::Dimension, "dense expects (..., " + std::to_string(in_) + "), got " +
                                            shape_string(x.shape));
    }
    input_ = x;
    cached_ = true;
    const auto rows = static_cast<Eigen::Index>(x.size() / in_);
    auto out_shape = x.shape;
    out_shape.back() = out_;
    Tensor y(out_shape);
    ConstMatMap X(x.data.data(), rows, static_cast<Eigen::Index>(in_));
    ConstMatMap W(weight_.values.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
    ConstVecMap b(bias_.values.data(), static_cast<Eigen::Index>(out_));
    MatMap Y(y.data.data(), rows, static_cast<Eigen::Index>(out_));
    Y.noalias() = X * W.transpose();
    Y.rowwise() += b;
    return y;
  }

  Tensor backward(const Tensor& g) override {
    require_cache(cached_, "dense");
    auto out_shape = input_.shape;
    out_shape.back() = out_;
    check_grad_shape(g, out_shape, "dense");
    cached_ = false;
    const auto rows = static_cast<Eigen::Index>(input_.size() / in_);
    const auto in = static_cast<Eigen::Index>(in_);
    const auto out = static_cast<Eigen::Index>(out_);
    ConstMatMap X(input_.data.data(), rows, in);
    ConstMatMap G(g.data.data(), rows, out);
    ConstMatMap W(weight_.values.data(), out, in);
    MatMap dW(weight_.grad.data(), out, in);
    VecMap db(bias_.grad.data(), out);
    dW.noalias() += G.transpose() * X;
    db += G.colwise().sum();
    Tensor dx(input_.shape);
    MatMap dX(dx.data.data(), rows, in);
    dX.noalias() = G * W;
    return dx;
  }

  std::vector<ParamTensor*> params() override { return {&weight_, &bias_}; }
  std::unique_ptr<Layer> clone() const override {
    auto c = std::make_unique<DenseLayer>(*this);
    c->cached_ = false;
    c->input_ = {};
    return c;
  }

 private:
  std::size_t in_, out_;
  ParamTensor weight_, bias_;
  Tensor input_;
  bool cached_ = false;
};

// Cross-correlation with zero "same" padding:
//   y[b, o, t] = bias[o] + sum_{c, j} w[o, c, j] * x[b, c, t + j - pad]
class Conv1dLayer final : public Layer {
 public:
  Conv1dLayer(const LayerSpec& spec, std::mt19937_64& rng)
      : in_(spec.in), out_(spec.out), kernel_(spec.kernel),
        weight_(make_param("weight", {spec.out, spec.in, spec.kernel})),
        bias_(make_param("bias", {spec.out})) {
    const double fan = static_cast<double>((in_ + out_) * kernel_);
    uniform_fill(weight_.values, std::sqrt(6.0 / fan), rng);
  }

  Tensor forward(const Tensor& x) override {
    if (x.rank() != 3 || x.shape[1] != in_) {
      throw Error(ErrorKind::Dimension, "conv1d expects (B, " + std::to_string(in_) + ", L), got " +
                                            shape_string(x.shape));
    }
    batch_ = x.shape[0];
    len_ = x.shape[2];
    input_shape_ = x.shape;
    const std::size_t rows = in_ * kernel_;
    cols_.assign(batch_ * rows * len_, 0.0);
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(kernel_ / 2);
    for (std::size_t b = 0; b < batch_; ++b) {
      double* cols = cols_.data() + b * rows * len_;
      const double* xb = x.data.data() + b * in_ * len_;
      for (std::size_t c = 0; c < in_; ++c) {
        for (std::size_t j = 0; j < kernel_; ++j) {
          double* row = cols + (c * kernel_ + j) * len_;
          const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - pad;
          for (std::size_t t = 0; t < len_; ++t) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + shift;
            if (src >= 0 && src < static_cast<std::ptrdiff_t>(len_)) row[t] = xb[c * len_ + static_cast<std::size_t>(src)];
          }
        }
      }
    }
    cached_ = true;

    Tensor y({batch_, out_, len_});
    ConstMatMap W(weight_.values.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(rows));
    Eigen::Map<const Eigen::VectorXd> bias(bias_.values.data(), static_cast<Eigen::Index>(out_));
    for (std::size_t b = 0; b < batch_; ++b) {
      ConstMatMap C(cols_.data() + b * rows * len_, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(len_));
      MatMap Y(y.data.data() + b * out_ * len_, static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(len_));
      Y.noalias() = W * C;
      Y.colwise() += bias;
    }
    return y;
  }

  Tensor backward(const Tensor& g) override {
    require_cache(cached_, "conv1d");
    check_grad_shape(g, {batch_, out_, len_}, "conv1d");
    cached_ = false;
    const std::size_t rows = in_ * kernel_;
    const auto R = static_cast<Eigen::Index>(rows);
    const auto O = static_cast<Eigen::Index>(out_);
    const auto T = static_cast<Eigen::Index>(len_);
    ConstMatMap W(weight_.values.data(), O, R);
    MatMap dW(weight_.grad.data(), O, R);
    Eigen::Map<Eigen::VectorXd> db(bias_.grad.data(), O);
    Tensor dx(input_shape_);
    RowMat dcols(R, T);
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(kernel_ / 2);
    for (std::size_t b = 0; b < batch_; ++b) {
      ConstMatMap C(cols_.data() + b * rows * len_, R, T);
      ConstMatMap G(g.data.data() + b * out_ * len_, O, T);
      dW.noalias() += G * C.transpose();
      db += G.rowwise().sum();
      dcols.noalias() = W.transpose() * G;
      double* dxb = dx.data.data() + b * in_ * len_;
      for (std::size_t c = 0; c < in_; ++c) {
        for (std::size_t j = 0; j < kernel_; ++j) {
          const double* row = dcols.data() + (c * kernel_ + j) * len_;
          const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - pad;
          for (std::size_t t = 0; t < len_; ++t) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + shift;
            if (src >= 0 && src < static_cast<std::ptrdiff_t>(len_)) dxb[c * len_ + static_cast<std::size_t>(src)] += row[t];
          }
        }
      }
    }
    return dx;
  }

  std::vector<ParamTensor*> params() override { return {&weight_, &bias_}; }
  std::unique_ptr<Layer> clone() const override {
    auto c = std::make_unique<Conv1dLayer>(*this);
    c->cached_ = false;
    c->cols_.clear();
    return c;
  }

 private:
  std::size_t in_, out_, kernel_;
  ParamTensor weight_, bias_;
  std::vector<double> cols_;
  std::vector<std::size_t> input_shape_;
  std::size_t batch_ = 0, len_ = 0;
  bool cached_ = false;
};

// One recurrent layer; gate order in the stacked weights is i, f, g, o.
class LstmCell {
 public:
  LstmCell(std::size_t in, std::size_t hidden, std::size_t index, std::mt19937_64& rng)
      : in_(in), hidden_(hidden),
        wx_(make_param("l" + std::to_string(index) + ".weight_ih", {4 * hidden, in})),
        wh_(make_param("l" + std::to_string(index) + ".weight_hh", {4 * hidden, hidden})),
        bias_(make_param("l" + std::to_string(index) + ".bias", {4 * hidden})) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    uniform_fill(wx_.values, bound, rng);
    uniform_fill(wh_.values, bound, rng);
    uniform_fill(bias_.values, bound, rng);
    for (std::size_t h = hidden; h < 2 * hidden; ++h) bias_.values[h] += 1.0;
  }

  // x: B*T rows of `in` features, row index b*T + t. Returns B*T rows of H.
  std::vector<double> forward(const std::vector<double>& x, std::size_t batch, std::size_t steps) {
    batch_ = batch;
    steps_ = steps;
    input_ = x;
    const auto B = static_cast<Eigen::Index>(batch);
    const auto H = static_cast<Eigen::Index>(hidden_);
    const auto I = static_cast<Eigen::Index>(in_);
    const auto BT = static_cast<Eigen::Index>(batch * steps);

    ConstMatMap X(input_.data(), BT, I);
    ConstMatMap Wx(wx_.values.data(), 4 * H, I);
    ConstMatMap Wh(wh_.values.data(), 4 * H, H);
    ConstVecMap bias(bias_.values.data(), 4 * H);
    RowMat zx = X * Wx.transpose();

    gates_.assign(steps, RowMat::Zero(B, 4 * H));
    cells_.assign(steps + 1, RowMat::Zero(B, H));
    hiddens_.assign(steps + 1, RowMat::Zero(B, H));
    std::vector<double> out(batch * steps * hidden_);

    for (std::size_t t = 0; t < steps; ++t) {
      RowMat& z = gates_[t];
      for (Eigen::Index b = 0; b < B; ++b) z.row(b) = zx.row(b * static_cast<Eigen::Index>(steps) + static_cast<Eigen::Index>(t));
      z.noalias() += hiddens_[t] * Wh.transpose();
      z.rowwise() += bias;
      for (Eigen::Index b = 0; b < B; ++b) {
        for (Eigen::Index h = 0; h < H; ++h) {
          z(b, h) = sigmoid(z(b, h));
          z(b, H + h) = sigmoid(z(b, H + h));
          z(b, 2 * H + h) = std::tanh(z(b, 2 * H + h));
          z(b, 3 * H + h) = sigmoid(z(b, 3 * H + h));
          const double c = z(b, H + h) * cells_[t](b, h) + z(b, h) * z(b, 2 * H + h);
          cells_[t + 1](b, h) = c;
          const double hv = z(b, 3 * H + h) * std::tanh(c);
          hiddens_[t + 1](b, h) = hv;
          out[(static_cast<std::size_t>(b) * steps + t) * hidden_ + static_cast<std::size_t>(h)] = hv;
        }
      }
    }
    return out;
  }

  std::vector<double> backward(const std::vector<double>& grad_out) {
    const auto B = static_cast<Eigen::Index>(batch_);
    const auto H = static_cast<Eigen::Index>(hidden_);
    const auto I = static_cast<Eigen::Index>(in_);
    const auto BT = static_cast<Eigen::Index>(batch_ * steps_);
    ConstMatMap Wx(wx_.values.data(), 4 * H, I);
    ConstMatMap Wh(wh_.values.data(), 4 * H, H);
    MatMap dWx(wx_.grad.data(), 4 * H, I);
    MatMap dWh(wh_.grad.data(), 4 * H, H);
    VecMap db(bias_.grad.data(), 4 * H);

    RowMat dz_all(BT, 4 * H);
    RowMat dh_next = RowMat::Zero(B, H);
    RowMat dc_next = RowMat::Zero(B, H);
    RowMat dz(B, 4 * H);
    for (std::size_t t = steps_; t-- > 0;) {
      const RowMat& z = gates_[t];
      for (Eigen::Index b = 0; b < B; ++b) {
        for (Eigen::Index h = 0; h < H; ++h) {
          const double dh = grad_out[(static_cast<std::size_t>(b) * steps_ + t) * hidden_ + static_cast<std::size_t>(h)] +
                            dh_next(b, h);
          const double i = z(b, h), f = z(b, H + h), g = z(b, 2 * H + h), o = z(b, 3 * H + h);
          const double tc = std::tanh(cells_[t + 1](b, h));
          const double dc = dh * o * (1.0 - tc * tc) + dc_next(b, h);
          dz(b, h) = dc * g * i * (1.0 - i);
          dz(b, H + h) = dc * cells_[t](b, h) * f * (1.0 - f);
          dz(b, 2 * H + h) = dc * i * (1.0 - g * g);
          dz(b, 3 * H + h) = dh * tc * o * (1.0 - o);
          dc_next(b, h) = dc * f;
        }
      }
      dWh.noalias() += dz.transpose() * hiddens_[t];
      db += dz.colwise().sum();
      dh_next.noalias() = dz * Wh;
      for (Eigen::Index b = 0; b < B; ++b) dz_all.row(b * static_cast<Eigen::Index>(steps_) + static_cast<Eigen::Index>(t)) = dz.row(b);
    }
    ConstMatMap X(input_.data(), BT, I);
    dWx.noalias() += dz_all.transpose() * X;
    std::vector<double> dx(batch_ * steps_ * in_);
    MatMap dX(dx.data(), BT, I);
    dX.noalias() = dz_all * Wx;
    return dx;
  }

  std::vector<ParamTensor*> params() { return {&wx_, &wh_, &bias_}; }
  void clear() {
    gates_.clear();
    cells_.clear();
    hiddens_.clear();
    input_.clear();
  }

 private:
  std::size_t in_, hidden_;
  ParamTensor wx_, wh_, bias_;
  std::size_t batch_ = 0, steps_ = 0;
  std::vector<double> input_;
  std::vector<RowMat> gates_;  // post-activation i, f, g, o per step
  std::vector<RowMat> cells_;  // c_0 .. c_T
  std::vector<RowMat> hiddens_;
};

class LstmLayer final : public Layer {
 public:
  LstmLayer(const LayerSpec& spec, std::mt19937_64& rng)
      : in_(spec.in), hidden_(spec.out), return_sequences_(spec.return_sequences) {
    for (std::size_t l = 0; l < spec.layers; ++l) cells_.emplace_back(l == 0 ? in_ : hidden_, hidden_, l, rng);
  }

  Tensor forward(const Tensor& x) override {
    if (x.rank() != 3 || x.shape[2] != in_) {
      throw Error(ErrorKind::Dimension, "lstm expects (B, T, " + std::to_string(in_) + "), got " +
                                            shape_string(x.shape));
    }
    batch_ = x.shape[0];
    steps_ = x.shape[1];
    std::vector<double> h = x.data;
    for (auto& cell : cells_) h = cell.forward(h, batch_, steps_);
    cached_ = true;
    if (return_sequences_) {
      Tensor y({batch_, steps_, hidden_});
      y.data = std::move(h);
      return y;
    }
    Tensor y({batch_, hidden_});
    for (std::size_t b = 0; b < batch_; ++b)
      std::copy_n(h.begin() + static_cast<std::ptrdiff_t>(((b * steps_) + steps_ - 1) * hidden_), hidden_,
                  y.data.begin() + static_cast<std::ptrdiff_t>(b * hidden_));
    return y;
  }

  Tensor backward(const Tensor& g) override {
    require_cache(cached_, "lstm");
    cached_ = false;
    std::vector<double> grad(batch_ * steps_ * hidden_, 0.0);
    if (return_sequences_) {
      check_grad_shape(g, {batch_, steps_, hidden_}, "lstm");
      grad = g.data;
    } else {
      check_grad_shape(g, {batch_, hidden_}, "lstm");
      for (std::size_t b = 0; b < batch_; ++b)
        std::copy_n(g.data.begin() + static_cast<std::ptrdiff_t>(b * hidden_), hidden_,
                    grad.begin() + static_cast<std::ptrdiff_t>(((b * steps_) + steps_ - 1) * hidden_));
    }
    for (auto it = cells_.rbegin(); it != cells_.rend(); ++it) grad = it->backward(grad);
    Tensor dx({batch_, steps_, in_});
    dx.data = std::move(grad);
    return dx;
  }

  std::vector<ParamTensor*> params() override {
    std::vector<ParamTensor*> out;
    for (auto& c : cells_)
      for (auto* p : c.params()) out.push_back(p);
    return out;
  }

  std::unique_ptr<Layer> clone() const override {
    auto c = std::make_unique<LstmLayer>(*this);
    c->cached_ = false;
    for (auto& cell : c->cells_) cell.clear();
    return c;
  }

 private:
  std::size_t in_, hidden_;
  bool return_sequences_;
  std::vector<LstmCell> cells_;
  std::size_t batch_ = 0, steps_ = 0;
  bool cached_ = false;
};

class ActivationLayer final : public Layer {
 public:
  explicit ActivationLayer(ActivationKind kind) : kind_(kind) {}

  Tensor forward(const Tensor& x) override {
    input_ = x;
    Tensor y(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double v = x.data[i];
      switch (kind_) {
        case ActivationKind::Tanh: y.data[i] = std::tanh(v); break;
        case ActivationKind::Relu: y.data[i] = v > 0.0 ? v : 0.0; break;
        case ActivationKind::LeakyRelu: y.data[i] = v > 0.0 ? v : kLeakySlope * v; break;
        case ActivationKind::Sigmoid: y.data[i] = sigmoid(v); break;
      }
    }
    output_ = y;
    cached_ = true;
    return y;
  }

  Tensor backward(const Tensor& g) override {
    require_cache(cached_, "activation");
    check_grad_shape(g, input_.shape, "activation");
    cached_ = false;
    Tensor dx(input_.shape);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = output_.data[i];
      double d = 0.0;
      switch (kind_) {
        case ActivationKind::Tanh: d = 1.0 - y * y; break;
        case ActivationKind::Relu: d = input_.data[i] > 0.0 ? 1.0 : 0.0; break;
        case ActivationKind::LeakyRelu: d = input_.data[i] > 0.0 ? 1.0 : kLeakySlope; break;
        case ActivationKind::Sigmoid: d = y * (1.0 - y); break;
      }
      dx.data[i] = g.data[i] * d;
    }
    return dx;
  }

  std::unique_ptr<Layer> clone() const override { return std::make_unique<ActivationLayer>(kind_); }

 private:
  ActivationKind kind_;
  Tensor input_, output_;
  bool cached_ = false;
};

// Flatten and reshape only relabel the shape.
class ReshapeLayer final : public Layer {
 public:
  explicit ReshapeLayer(std::vector<std::size_t> dims) : dims_(std::move(dims)) {}

  Tensor forward(const Tensor& x) override {
    if (x.rank() < 1) throw Error(ErrorKind::Dimension, "reshape needs a batch axis");
    const std::size_t batch = x.shape[0];
    std::vector<std::size_t> shape{batch};
    if (dims_.empty()) {
      shape.push_back(batch ? x.size() / batch : 0);
    } else {
      if (shape_size(dims_) * batch != x.size()) {
        throw Error(ErrorKind::Dimension, "cannot reshape " + shape_string(x.shape) + " to (B, " +
                                              shape_string(dims_).substr(1));
      }
      shape.insert(shape.end(), dims_.begin(), dims_.end());
    }
    input_shape_ = x.shape;
    output_shape_ = shape;
    cached_ = true;
    Tensor y;
    y.shape = std::move(shape);
    y.data = x.data;
    return y;
  }

  Tensor backward(const Tensor& g) override {
    require_cache(cached_, "reshape");
    check_grad_shape(g, output_shape_, "reshape");
    cached_ = false;
    Tensor dx;
    dx.shape = input_shape_;
    dx.data = g.data;
    return dx;
  }

  std::unique_ptr<Layer> clone() const override { return std::make_unique<ReshapeLayer>(dims_); }

 private:
  std::vector<std::size_t> dims_;  // empty: flatten
  std::vector<std::size_t> input_shape_, output_shape_;
  bool cached_ = false;
};

class RepeatLayer final : public Layer {
 public:
  explicit RepeatLayer(std::size_t steps) : steps_(steps) {}

  Tensor forward(const Tensor& x) override {
    if (x.rank() != 2) throw Error(ErrorKind::Dimension, "repeat expects (B, F), got " + shape_string(x.shape));
    batch_ = x.shape[0];
    features_ = x.shape[1];
    cached_ = true;
    Tensor y({batch_, steps_, features_});
    for (std::size_t b = 0; b < batch_; ++b)
      for (std::size_t t = 0; t < steps_; ++t)
        std::copy_n(x.data.begin() + static_cast<std::ptrdiff_t>(b * features_), features_,
                    y.data.begin() + static_cast<std::ptrdiff_t>((b * steps_ + t) * features_));
    return y;
  }

  Tensor backward(const Tensor& g) override {
    require_cache(cached_, "repeat");
    check_grad_shape(g, {batch_, steps_, features_}, "repeat");
    cached_ = false;
    Tensor dx({batch_, features_});
    for (std::size_t b = 0; b < batch_; ++b)
      for (std::size_t t = 0; t < steps_; ++t)
        for (std::size_t f = 0; f < features_; ++f) dx.data[b * features_ + f] += g.data[(b * steps_ + t) * features_ + f];
    return dx;
  }

  std::unique_ptr<Layer> clone() const override { return std::make_unique<RepeatLayer>(steps_); }

 private:
  std::size_t steps_;
  std::size_t batch_ = 0, features_ = 0;
  bool cached_ = false;
};

}  // namespace

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  switch (spec.kind) {
    case LayerKind::Dense: return std::make_unique<DenseLayer>(spec, rng);
    case LayerKind::Conv1d: return std::make_unique<Conv1dLayer>(spec, rng);
    case LayerKind::Lstm: return std::make_unique<LstmLayer>(spec, rng);
    case LayerKind::Activation: return std::make_unique<ActivationLayer>(spec.activation);
    case LayerKind::Flatten: return std::make_unique<ReshapeLayer>(std::vector<std::size_t>{});
    case LayerKind::Reshape: return std::make_unique<ReshapeLayer>(spec.dims);
    case LayerKind::Repeat: return std::make_unique<RepeatLayer>(spec.steps);
  }
  throw Error(ErrorKind::InvalidConfig, "unknown layer kind");
}

Network::Network(std::vector<LayerSpec> specs, std::uint64_t init_seed) : specs_(std::move(specs)) {
  for (std::size_t i = 0; i < specs_.size(); ++i) layers_.push_back(make_layer(specs_[i], derive_seed(init_seed, i)));
}

Network::Network(const Network& other) : specs_(other.specs_) {
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Tensor Network::forward(const Tensor& input) {
  Tensor x = input;
  for (auto& l : layers_) x = l->forward(x);
  cached_ = true;
  return x;
}

Tensor Network::backward(const Tensor& grad_output) {
  require_cache(cached_, "network");
  cached_ = false;
  Tensor g = grad_output;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<ParamTensor*> Network::params() {
  std::vector<ParamTensor*> out;
  for (auto& l : layers_)
    for (auto* p : l->params()) out.push_back(p);
  return out;
}

std::vector<const ParamTensor*> Network::params() const {
  std::vector<const ParamTensor*> out;
  for (const auto& l : layers_)
    for (auto* p : l->params()) out.push_back(p);
  return out;
}

void Network::zero_grad() {
  for (auto* p : params()) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : params()) n += p->values.size();
  return n;
}

namespace {

constexpr double kClampLo = 1e-7;
constexpr double kClampHi = 1.0 - 1e-7;

LossGrad logistic(const Tensor& d_out, bool target_real) {
  if (d_out.size() == 0) throw Error(ErrorKind::Dimension, "loss on an empty batch");
  LossGrad r;
  r.grad = Tensor(d_out.shape);
  const double n = static_cast<double>(d_out.size());
  for (std::size_t i = 0; i < d_out.size(); ++i) {
    const double d = std::clamp(d_out.data[i], kClampLo, kClampHi);
    if (target_real) {
      r.loss -= std::log(d);
      r.grad.data[i] = -1.0 / (d * n);
    } else {
      r.loss -= std::log(1.0 - d);
      r.grad.data[i] = 1.0 / ((1.0 - d) * n);
    }
  }
  r.loss /= n;
  return r;
}

}  // namespace

LossGrad bce_real(const Tensor& d_out) { return logistic(d_out, true); }
LossGrad bce_fake(const Tensor& d_out) { return logistic(d_out, false); }
LossGrad gen_loss(const Tensor& d_out_on_fake) { return logistic(d_out_on_fake, true); }

double discriminator_loss(const Tensor& real_out, const Tensor& fake_out) {
  return 0.5 * bce_real(real_out).loss + 0.5 * bce_fake(fake_out).loss;
}

void OptimConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidConfig, "learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw Error(ErrorKind::InvalidConfig, "Adam betas must lie in [0,1)");
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidConfig, "Adam epsilon must be > 0");
}

AdamState make_adam_state(const Network& net) {
  AdamState s;
  for (const auto* p : net.params()) {
    s.m.emplace_back(p->values.size(), 0.0);
    s.v.emplace_back(p->values.size(), 0.0);
  }
  return s;
}

void adam_step(Network& net, AdamState& state, const OptimConfig& cfg) {
  auto params = net.params();
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw Error(ErrorKind::State, "Adam state does not match the network parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i]->values.size())
      throw Error(ErrorKind::State, "Adam moment shape mismatch for '" + params[i]->name + "'");
    for (double g : params[i]->grad) {
      if (!std::isfinite(g))
        throw Error(ErrorKind::Divergence, "non-finite gradient in tensor '" + params[i]->name + "' (#" +
                                               std::to_string(i) + ")");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < p.values.size(); ++j) {
      const double g = p.grad[j];
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p.values[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
      p.grad[j] = 0.0;
    }
  }
}

}  // namespace cag
