// Copyright 2026 The Vulnspace Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal dense feed-forward networks: forward pass, analytic backprop and
// Adam. Layers compute act(X * W + b) with observations in rows. The scalar
// type is a template parameter; production models use float, gradient checks
// use double.

#ifndef VULNSPACE_NN_HPP
#define VULNSPACE_NN_HPP

#include "vulnspace/binio.hpp"
#include "vulnspace/error.hpp"
#include "vulnspace/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vulnspace::nn {

enum class Activation : std::uint8_t { relu = 0, linear = 1, sigmoid = 2, softmax = 3 };
enum class Loss : std::uint8_t { mse = 0, cross_entropy = 1, binary_cross_entropy = 2 };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::linear: return "linear";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

inline std::string_view to_string(Loss l) {
  switch (l) {
    case Loss::mse: return "mse";
    case Loss::cross_entropy: return "cross_entropy";
    case Loss::binary_cross_entropy: return "binary_cross_entropy";
  }
  return "?";
}

inline Loss loss_from_string(std::string_view name) {
  if (name == "mse") return Loss::mse;
  if (name == "cross_entropy") return Loss::cross_entropy;
  if (name == "binary_cross_entropy") return Loss::binary_cross_entropy;
  throw InvalidArgument("unknown loss \"" + std::string(name) + "\"");
}

struct LayerSpec {
  Index units = 0;
  Activation activation = Activation::linear;
  double dropout = 0.0;  ///< Applied to this layer's output while training; ignored on the last layer.
};

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weight;  // inputs x outputs
  RowVector<Scalar> bias;
  Activation activation = Activation::linear;
  double dropout = 0.0;

  Index inputs() const { return weight.rows(); }
  Index outputs() const { return weight.cols(); }
};

template <typename Scalar>
class DenseNet {
 public:
  using ScalarType = Scalar;

  DenseNet() = default;

  explicit DenseNet(std::vector<DenseLayer<Scalar>> layers) : layers_(std::move(layers)) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      if (layer.bias.size() != layer.outputs())
        throw DimensionError("layer " + std::to_string(l) + ": bias width " +
                             std::to_string(layer.bias.size()) + " != outputs " +
                             std::to_string(layer.outputs()));
      if (l > 0 && layers_[l - 1].outputs() != layer.inputs())
        throw DimensionError("layer " + std::to_string(l) + " expects " +
                             std::to_string(layer.inputs()) + " inputs but layer " +
                             std::to_string(l - 1) + " produces " +
                             std::to_string(layers_[l - 1].outputs()));
      if (!(layer.dropout >= 0.0 && layer.dropout < 1.0))
        throw InvalidArgument("dropout rate must lie in [0, 1)");
    }
  }

  /// He-uniform initialization for relu layers, Xavier-uniform otherwise; zero biases.
  static DenseNet build(Index input_dim, std::span<const LayerSpec> specs, std::uint64_t seed) {
    if (input_dim <= 0) throw InvalidArgument("network input width must be positive");
    std::mt19937_64 rng(seed);
    std::vector<DenseLayer<Scalar>> layers;
    Index fan_in = input_dim;
    for (const auto& spec : specs) {
      if (spec.units <= 0) throw InvalidArgument("layer width must be positive");
      const double limit = spec.activation == Activation::relu
                               ? std::sqrt(6.0 / static_cast<double>(fan_in))
                               : std::sqrt(6.0 / static_cast<double>(fan_in + spec.units));
      std::uniform_real_distribution<double> uniform(-limit, limit);
      DenseLayer<Scalar> layer;
      layer.weight.resize(fan_in, spec.units);
      for (Index r = 0; r < fan_in; ++r)
        for (Index c = 0; c < spec.units; ++c) layer.weight(r, c) = static_cast<Scalar>(uniform(rng));
      layer.bias = RowVector<Scalar>::Zero(spec.units);
      layer.activation = spec.activation;
      layer.dropout = spec.dropout;
      layers.push_back(std::move(layer));
      fan_in = spec.units;
    }
    return DenseNet(std::move(layers));
  }

  std::size_t depth() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }
  Index input_dim() const { return layers_.empty() ? 0 : layers_.front().inputs(); }
  Index output_dim() const { return layers_.empty() ? 0 : layers_.back().outputs(); }

  const DenseLayer<Scalar>& layer(std::size_t l) const { return layers_.at(l); }
  DenseLayer<Scalar>& layer(std::size_t l) { return layers_.at(l); }
  const std::vector<DenseLayer<Scalar>>& layers() const { return layers_; }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

  bool all_finite() const {
    return std::all_of(layers_.begin(), layers_.end(), [](const auto& l) {
      return l.weight.allFinite() && l.bias.allFinite();
    });
  }

  /// Layers [first, last) as a standalone network.
  DenseNet slice(std::size_t first, std::size_t last) const {
    if (first > last || last > layers_.size()) throw InvalidArgument("bad layer slice");
    return DenseNet(std::vector<DenseLayer<Scalar>>(layers_.begin() + static_cast<std::ptrdiff_t>(first),
                                                    layers_.begin() + static_cast<std::ptrdiff_t>(last)));
  }

  template <typename To>
  DenseNet<To> cast() const {
    std::vector<DenseLayer<To>> out;
    for (const auto& l : layers_)
      out.push_back({l.weight.template cast<To>(), l.bias.template cast<To>(), l.activation, l.dropout});
    return DenseNet<To>(std::move(out));
  }

 private:
  std::vector<DenseLayer<Scalar>> layers_;
};

// ---------------------------------------------------------------------------
// Elementwise pieces.

template <typename Scalar>
Matrix<Scalar> apply_activation(Activation a, const Matrix<Scalar>& z) {
  switch (a) {
    case Activation::relu: return z.cwiseMax(Scalar(0));
    case Activation::linear: return z;
    case Activation::sigmoid:
      return z.unaryExpr([](Scalar v) {
        // Branches keep exp() from overflowing for large |v|.
        if (v >= 0) return Scalar(1) / (Scalar(1) + std::exp(-v));
        const Scalar e = std::exp(v);
        return e / (Scalar(1) + e);
      });
    case Activation::softmax: {
      Matrix<Scalar> out = (z.colwise() - z.rowwise().maxCoeff()).array().exp().matrix();
      const Vector<Scalar> sums = out.rowwise().sum();
      for (Index r = 0; r < out.rows(); ++r) out.row(r) /= sums(r);
      return out;
    }
  }
  return z;
}

/// dL/dz from dL/da for activation a = act(z).
template <typename Scalar>
Matrix<Scalar> activation_backward(Activation a, const Matrix<Scalar>& z, const Matrix<Scalar>& grad_out) {
  switch (a) {
    case Activation::relu:
      return (z.array() > Scalar(0)).select(grad_out, Matrix<Scalar>::Zero(z.rows(), z.cols()));
    case Activation::linear: return grad_out;
    case Activation::sigmoid: {
      const Matrix<Scalar> s = apply_activation(a, z);
      return (grad_out.array() * s.array() * (Scalar(1) - s.array())).matrix();
    }
    case Activation::softmax: {
      const Matrix<Scalar> p = apply_activation(a, z);
      const Vector<Scalar> dots = (grad_out.array() * p.array()).rowwise().sum();
      Matrix<Scalar> out = grad_out;
      out.colwise() -= dots;
      return (out.array() * p.array()).matrix();
    }
  }
  return grad_out;
}

// ---------------------------------------------------------------------------
// Forward pass.

template <typename Scalar>
struct ForwardTrace {
  std::vector<Matrix<Scalar>> pre;    // z of each layer
  std::vector<Matrix<Scalar>> post;   // post[0] is the input; post[l + 1] the output of layer l
  std::vector<Matrix<Scalar>> masks;  // inverted-dropout scale per layer (empty when inactive)

  const Matrix<Scalar>& output() const { return post.back(); }
};

/// Evaluation mode when `dropout_rng` is null; training mode (inverted dropout
/// on hidden layers) otherwise.
template <typename Scalar, typename Derived>
ForwardTrace<Scalar> forward(const DenseNet<Scalar>& net, const Eigen::MatrixBase<Derived>& input,
                             std::mt19937_64* dropout_rng = nullptr) {
  if (net.empty()) throw InvalidArgument("forward: empty network");
  if (input.cols() != net.input_dim())
    throw DimensionError("forward: input width " + std::to_string(input.cols()) +
                         " != network input " + std::to_string(net.input_dim()));
  ForwardTrace<Scalar> trace;
  trace.post.reserve(net.depth() + 1);
  trace.post.emplace_back(input.template cast<Scalar>());
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto& layer = net.layer(l);
    Matrix<Scalar> z = trace.post.back() * layer.weight;
    z.rowwise() += layer.bias;
    Matrix<Scalar> a = apply_activation(layer.activation, z);
    Matrix<Scalar> mask;
    const bool hidden = l + 1 < net.depth();
    if (dropout_rng != nullptr && hidden && layer.dropout > 0.0) {
      std::bernoulli_distribution keep(1.0 - layer.dropout);
      const Scalar scale = Scalar(1.0 / (1.0 - layer.dropout));
      mask.resize(a.rows(), a.cols());
      for (Index r = 0; r < mask.rows(); ++r)
        for (Index c = 0; c < mask.cols(); ++c) mask(r, c) = keep(*dropout_rng) ? scale : Scalar(0);
      a.array() *= mask.array();
    }
    trace.pre.push_back(std::move(z));
    trace.post.push_back(std::move(a));
    trace.masks.push_back(std::move(mask));
  }
  return trace;
}

template <typename Scalar, typename Derived>
Matrix<Scalar> predict(const DenseNet<Scalar>& net, const Eigen::MatrixBase<Derived>& input) {
  return forward(net, input).output();
}

// ---------------------------------------------------------------------------
// Losses and backprop.

template <typename Scalar>
Matrix<Scalar> one_hot(std::span<const int> labels, Index classes) {
  Matrix<Scalar> out = Matrix<Scalar>::Zero(static_cast<Index>(labels.size()), classes);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0 || labels[r] >= classes) throw InvalidArgument("one_hot: label out of range");
    out(static_cast<Index>(r), labels[r]) = Scalar(1);
  }
  return out;
}

inline void check_loss_compatible(Loss loss, Activation last) {
  if (loss == Loss::cross_entropy && last != Activation::softmax)
    throw InvalidArgument("cross_entropy loss requires a softmax output layer");
  if (loss == Loss::binary_cross_entropy && last != Activation::sigmoid)
    throw InvalidArgument("binary_cross_entropy loss requires a sigmoid output layer");
}

/// Mean over rows. MSE also averages over output columns; the two
/// cross-entropies sum over columns. Accumulates in double.
template <typename DO, typename DT>
double loss_value(Loss loss, const Eigen::MatrixBase<DO>& output, const Eigen::MatrixBase<DT>& target) {
  if (output.rows() != target.rows() || output.cols() != target.cols())
    throw DimensionError("loss: output and target shapes differ");
  const double n = static_cast<double>(output.rows());
  constexpr double tiny = 1e-12;
  double acc = 0;
  for (Index r = 0; r < output.rows(); ++r) {
    for (Index c = 0; c < output.cols(); ++c) {
      const double a = static_cast<double>(output(r, c));
      const double y = static_cast<double>(target(r, c));
      switch (loss) {
        case Loss::mse: acc += (a - y) * (a - y); break;
        case Loss::cross_entropy:
          if (y != 0) acc -= y * std::log(std::max(a, tiny));
          break;
        case Loss::binary_cross_entropy:
          acc -= y * std::log(std::max(a, tiny)) + (1 - y) * std::log(std::max(1 - a, tiny));
          break;
      }
    }
  }
  return loss == Loss::mse ? acc / (n * static_cast<double>(output.cols())) : acc / n;
}

/// dL/dz of the last layer. Softmax/cross-entropy and sigmoid/binary
/// cross-entropy use the fused (a - y) / n form.
template <typename Scalar, typename DT>
Matrix<Scalar> output_delta(Loss loss, const DenseNet<Scalar>& net, const ForwardTrace<Scalar>& trace,
                            const Eigen::MatrixBase<DT>& target) {
  const auto& out = trace.output();
  if (out.rows() != target.rows() || out.cols() != target.cols())
    throw DimensionError("backward: target shape does not match network output");
  const Activation last = net.layer(net.depth() - 1).activation;
  check_loss_compatible(loss, last);
  const Scalar n = static_cast<Scalar>(out.rows());
  const Matrix<Scalar> diff = out - target.template cast<Scalar>();
  if (loss != Loss::mse) return diff / n;
  const Matrix<Scalar> grad_a = diff * (Scalar(2) / (n * static_cast<Scalar>(out.cols())));
  return activation_backward(last, trace.pre.back(), grad_a);
}

template <typename Scalar>
struct Gradients {
  std::vector<Matrix<Scalar>> weight;
  std::vector<RowVector<Scalar>> bias;
  Matrix<Scalar> input;  // dL/d(input batch)

  static Gradients zeros_like(const DenseNet<Scalar>& net) {
    Gradients g;
    for (const auto& l : net.layers()) {
      g.weight.push_back(Matrix<Scalar>::Zero(l.weight.rows(), l.weight.cols()));
      g.bias.push_back(RowVector<Scalar>::Zero(l.bias.size()));
    }
    return g;
  }

  bool all_finite() const {
    for (std::size_t l = 0; l < weight.size(); ++l)
      if (!weight[l].allFinite() || !bias[l].allFinite()) return false;
    return true;
  }
};

/// Chain rule from dL/dz of the last layer down to the input.
template <typename Scalar>
Gradients<Scalar> backprop(const DenseNet<Scalar>& net, const ForwardTrace<Scalar>& trace,
                           Matrix<Scalar> delta) {
  Gradients<Scalar> g;
  const std::size_t depth = net.depth();
  g.weight.resize(depth);
  g.bias.resize(depth);
  for (std::size_t l = depth; l-- > 0;) {
    g.weight[l] = trace.post[l].transpose() * delta;
    g.bias[l] = delta.colwise().sum();
    Matrix<Scalar> grad_in = delta * net.layer(l).weight.transpose();
    if (l == 0) {
      g.input = std::move(grad_in);
      break;
    }
    if (trace.masks[l - 1].size() > 0) grad_in.array() *= trace.masks[l - 1].array();
    delta = activation_backward(net.layer(l - 1).activation, trace.pre[l - 1], grad_in);
  }
  return g;
}

/// Analytic gradient of `loss` over one batch.
template <typename Scalar, typename DX, typename DY>
Gradients<Scalar> backward(const DenseNet<Scalar>& net, const Eigen::MatrixBase<DX>& input,
                           const Eigen::MatrixBase<DY>& target, Loss loss,
                           std::mt19937_64* dropout_rng = nullptr) {
  const auto trace = forward(net, input, dropout_rng);
  return backprop(net, trace, output_delta(loss, net, trace, target));
}

// ---------------------------------------------------------------------------
// Optimization.

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moments for one parameter block.
template <typename Scalar>
class AdamSlot {
 public:
  template <typename DP, typename DG>
  void update(Eigen::MatrixBase<DP>& param, const Eigen::MatrixBase<DG>& grad, const AdamParams& p,
              long step) {
    if (m_.size() == 0) {
      m_ = Matrix<Scalar>::Zero(param.rows(), param.cols());
      v_ = Matrix<Scalar>::Zero(param.rows(), param.cols());
    }
    const Scalar b1 = static_cast<Scalar>(p.beta1);
    const Scalar b2 = static_cast<Scalar>(p.beta2);
    m_ = b1 * m_ + (Scalar(1) - b1) * grad.template cast<Scalar>();
    v_ = b2 * v_ + (Scalar(1) - b2) * grad.template cast<Scalar>().cwiseAbs2();
    const Scalar c1 = static_cast<Scalar>(1.0 - std::pow(p.beta1, static_cast<double>(step)));
    const Scalar c2 = static_cast<Scalar>(1.0 - std::pow(p.beta2, static_cast<double>(step)));
    const Scalar lr = static_cast<Scalar>(p.learning_rate);
    const Scalar eps = static_cast<Scalar>(p.epsilon);
    param.derived().array() -=
        lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps);
  }

 private:
  Matrix<Scalar> m_;
  Matrix<Scalar> v_;
};

template <typename Scalar>
class Adam {
 public:
  Adam(const DenseNet<Scalar>& net, AdamParams params)
      : params_(params), weight_(net.depth()), bias_(net.depth()) {}

  void step(DenseNet<Scalar>& net, const Gradients<Scalar>& g) {
    ++t_;
    for (std::size_t l = 0; l < net.depth(); ++l) {
      weight_[l].update(net.layer(l).weight, g.weight[l], params_, t_);
      bias_[l].update(net.layer(l).bias, g.bias[l], params_, t_);
    }
  }

  long steps() const { return t_; }

 private:
  AdamParams params_;
  std::vector<AdamSlot<Scalar>> weight_;
  std::vector<AdamSlot<Scalar>> bias_;
  long t_ = 0;
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Loss loss = Loss::mse;
  std::uint64_t seed = 0;
  double l2 = 0.0;  ///< Penalty l2 * sum ||W||^2 over weight matrices (biases excluded).

  AdamParams adam() const { return {learning_rate, beta1, beta2, epsilon}; }

  void validate() const {
    if (epochs < 0) throw InvalidArgument("epochs must be non-negative");
    if (batch_size < 1) throw InvalidArgument("batch_size must be at least 1");
    if (!(learning_rate >= 0)) throw InvalidArgument("learning_rate must be non-negative");
    if (!(l2 >= 0)) throw InvalidArgument("l2 must be non-negative");
  }
};

struct TrainTrace {
  std::vector<double> loss;  ///< Mean training loss per epoch, measured before each update.
};

template <typename Scalar>
double l2_penalty(const DenseNet<Scalar>& net) {
  double s = 0;
  for (const auto& l : net.layers()) s += l.weight.template cast<double>().squaredNorm();
  return s;
}

/// Mini-batch Adam with seeded shuffling and dropout masks. Throws
/// TrainingError when the loss stops being finite.
template <typename Scalar, typename DX, typename DY>
TrainTrace train(DenseNet<Scalar>& net, const Eigen::MatrixBase<DX>& input,
                 const Eigen::MatrixBase<DY>& target, const TrainConfig& cfg) {
  cfg.validate();
  if (input.rows() != target.rows())
    throw DimensionError("train: " + std::to_string(input.rows()) + " inputs but " +
                         std::to_string(target.rows()) + " targets");
  if (input.rows() == 0) throw InvalidArgument("train: empty data");
  check_loss_compatible(cfg.loss, net.layer(net.depth() - 1).activation);

  const Matrix<Scalar> x = input.template cast<Scalar>();
  const Matrix<Scalar> y = target.template cast<Scalar>();
  const Index n = x.rows();
  const Index batch = std::min<Index>(cfg.batch_size, n);

  std::mt19937_64 rng(cfg.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Adam<Scalar> adam(net, cfg.adam());
  TrainTrace trace;
  trace.loss.reserve(static_cast<std::size_t>(cfg.epochs));

  Matrix<Scalar> xb;
  Matrix<Scalar> yb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    for (Index start = 0; start < n; start += batch) {
      const Index m = std::min(batch, n - start);
      const bool whole = (m == n && batch >= n);
      if (!whole) {
        xb.resize(m, x.cols());
        yb.resize(m, y.cols());
        for (Index i = 0; i < m; ++i) {
          xb.row(i) = x.row(order[static_cast<std::size_t>(start + i)]);
          yb.row(i) = y.row(order[static_cast<std::size_t>(start + i)]);
        }
      }
      const Matrix<Scalar>& xs = whole ? x : xb;
      const Matrix<Scalar>& ys = whole ? y : yb;
      const auto fwd = forward(net, xs, &rng);
      double batch_loss = loss_value(cfg.loss, fwd.output(), ys);
      if (cfg.l2 > 0) batch_loss += cfg.l2 * l2_penalty(net);
      if (!std::isfinite(batch_loss))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at row " +
                            std::to_string(start));
      auto grads = backprop(net, fwd, output_delta(cfg.loss, net, fwd, ys));
      if (cfg.l2 > 0)
        for (std::size_t l = 0; l < net.depth(); ++l)
          grads.weight[l] += static_cast<Scalar>(2 * cfg.l2) * net.layer(l).weight;
      if (!grads.all_finite())
        throw TrainingError("non-finite gradient at epoch " + std::to_string(epoch));
      adam.step(net, grads);
      epoch_loss += batch_loss * static_cast<double>(m);
    }
    trace.loss.push_back(epoch_loss / static_cast<double>(n));
  }
  if (!net.all_finite()) throw TrainingError("parameters became non-finite during training");
  return trace;
}

// ---------------------------------------------------------------------------
// "VNET" model files: magic, u32 version, u32 layer count, per layer
// (u32 inputs, u32 outputs, u8 activation, f64 dropout), then per layer the
// row-major float32 weight followed by the float32 bias.

inline constexpr std::uint32_t kNetFormatVersion = 1;

template <typename Scalar>
void write_net(binio::Writer& w, const DenseNet<Scalar>& net) {
  w.u32(static_cast<std::uint32_t>(net.depth()));
  for (const auto& l : net.layers()) {
    w.u32(static_cast<std::uint32_t>(l.inputs()));
    w.u32(static_cast<std::uint32_t>(l.outputs()));
    w.u8(static_cast<std::uint8_t>(l.activation));
    w.f64(l.dropout);
  }
  for (const auto& l : net.layers()) {
    for (Index r = 0; r < l.weight.rows(); ++r)
      for (Index c = 0; c < l.weight.cols(); ++c) w.f32(static_cast<float>(l.weight(r, c)));
    for (Index c = 0; c < l.bias.size(); ++c) w.f32(static_cast<float>(l.bias(c)));
  }
}

template <typename Scalar>
DenseNet<Scalar> read_net(binio::Reader& r) {
  const std::uint32_t depth = r.u32();
  if (depth > r.remaining() / 17) throw CorruptionError(r.context() + ": layer count exceeds data");
  std::vector<DenseLayer<Scalar>> layers(depth);
  for (auto& l : layers) {
    const std::uint32_t in = r.u32();
    const std::uint32_t out = r.u32();
    const std::uint8_t act = r.u8();
    if (act > static_cast<std::uint8_t>(Activation::softmax))
      throw FormatError(r.context() + ": unknown activation code " + std::to_string(act));
    l.activation = static_cast<Activation>(act);
    l.dropout = r.f64();
    if (static_cast<std::uint64_t>(in) * out > r.remaining() / 4)
      throw CorruptionError(r.context() + ": layer parameters exceed data");
    l.weight.resize(in, out);
    l.bias.resize(out);
  }
  for (auto& l : layers) {
    for (Index i = 0; i < l.weight.rows(); ++i)
      for (Index c = 0; c < l.weight.cols(); ++c) l.weight(i, c) = static_cast<Scalar>(r.f32());
    for (Index c = 0; c < l.bias.size(); ++c) l.bias(c) = static_cast<Scalar>(r.f32());
  }
  return DenseNet<Scalar>(std::move(layers));
}

template <typename Scalar>
void save_net(const std::filesystem::path& path, const DenseNet<Scalar>& net) {
  binio::Writer w;
  w.magic("VNET", kNetFormatVersion);
  write_net(w, net);
  binio::write_file_atomic(path, w.buffer());
}

template <typename Scalar>
DenseNet<Scalar> load_net(const std::filesystem::path& path) {
  const std::string data = binio::read_file(path);
  binio::Reader r(data, path.string());
  r.expect_magic("VNET", kNetFormatVersion);
  return read_net<Scalar>(r);
}

}  // namespace vulnspace::nn

#endif  // VULNSPACE_NN_HPP
