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

// Dimensionality reduction of document embeddings: PCA, an unsupervised
// autoencoder and a supervised multi-head bottleneck network.

#ifndef VULNSPACE_REDUCE_HPP
#define VULNSPACE_REDUCE_HPP

#include "vulnspace/error.hpp"
#include "vulnspace/nn.hpp"
#include "vulnspace/types.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace vulnspace::reduce {

inline constexpr Index kDefaultDim = 20;

template <typename Scalar>
struct PcaModel {
  RowVector<Scalar> mean;
  Matrix<Scalar> components;  // dim x input_dim, orthonormal rows
  Vector<Scalar> explained_variance;

  Index dim() const { return components.rows(); }
  Index input_dim() const { return components.cols(); }
};

/// Numerical rank of the centered data, as used by pca_fit.
template <typename Derived>
Index centered_rank(const Eigen::MatrixBase<Derived>& x) {
  const Eigen::MatrixXd centered = (x.template cast<double>().rowwise() -
                                    x.template cast<double>().colwise().mean());
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0) return 0;
  const double tol = static_cast<double>(std::max(centered.rows(), centered.cols())) *
                     std::numeric_limits<double>::epsilon() * s(0) * 16;
  return static_cast<Index>((s.array() > tol).count());
}

/// Top-`d` right singular vectors of the mean-centered data, each sign-fixed
/// so that its largest-magnitude entry is positive. The decomposition runs in
/// double regardless of Scalar.
template <typename Derived>
PcaModel<typename Derived::Scalar> pca_fit(const Eigen::MatrixBase<Derived>& x, Index d) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.rows();
  if (d < 1) throw InvalidArgument("pca_fit: target dimension must be at least 1");
  if (n <= d)
    throw InvalidArgument("pca_fit: need more rows (" + std::to_string(n) + ") than components (" +
                          std::to_string(d) + ")");
  const Eigen::RowVectorXd mean = x.template cast<double>().colwise().mean();
  const Eigen::MatrixXd centered = x.template cast<double>().rowwise() - mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double tol = static_cast<double>(std::max(centered.rows(), centered.cols())) *
                     std::numeric_limits<double>::epsilon() * (s.size() ? s(0) : 0.0) * 16;
  const Index rank = s.size() == 0 || s(0) == 0 ? 0 : static_cast<Index>((s.array() > tol).count());
  if (d > rank)
    throw InvalidArgument("pca_fit: requested " + std::to_string(d) +
                          " components but the centered data has rank " + std::to_string(rank));

  PcaModel<Scalar> model;
  model.mean = mean.template cast<Scalar>();
  Eigen::MatrixXd comps = svd.matrixV().leftCols(d).transpose();
  for (Index r = 0; r < d; ++r) {
    Index arg = 0;
    comps.row(r).cwiseAbs().maxCoeff(&arg);
    if (comps(r, arg) < 0) comps.row(r) *= -1.0;
  }
  model.components = comps.template cast<Scalar>();
  model.explained_variance =
      (s.head(d).array().square() / static_cast<double>(n - 1)).matrix().template cast<Scalar>();
  return model;
}

template <typename Scalar, typename Derived>
Matrix<Scalar> pca_transform(const PcaModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  if (x.cols() != model.input_dim())
    throw DimensionError("pca_transform: input width " + std::to_string(x.cols()) + " != model width " +
                         std::to_string(model.input_dim()));
  return (x.template cast<Scalar>().rowwise() - model.mean) * model.components.transpose();
}

template <typename Scalar, typename Derived>
Matrix<Scalar> pca_inverse(const PcaModel<Scalar>& model, const Eigen::MatrixBase<Derived>& y) {
  if (y.cols() != model.dim())
    throw DimensionError("pca_inverse: input width " + std::to_string(y.cols()) + " != model dim " +
                         std::to_string(model.dim()));
  Matrix<Scalar> out = y.template cast<Scalar>() * model.components;
  out.rowwise() += model.mean;
  return out;
}

// ---------------------------------------------------------------------------
// Autoencoder: input -> h1 -> h2 -> d -> h2 -> h1 -> input. Hidden layers use
// relu and dropout, the code and output layers are linear.

struct AutoencoderConfig {
  std::vector<Index> hidden = {500, 2000};
  double width_scale = 1.0;  ///< Multiplies every hidden width (desk-scale runs shrink it).
  double dropout = 0.1;
  nn::TrainConfig train{.epochs = 10000, .batch_size = 1000, .learning_rate = 1e-3};

  std::vector<Index> scaled_hidden() const {
    std::vector<Index> out;
    for (Index h : hidden)
      out.push_back(std::max<Index>(1, static_cast<Index>(std::lround(static_cast<double>(h) * width_scale))));
    return out;
  }
};

template <typename Scalar>
struct Autoencoder {
  nn::DenseNet<Scalar> encoder;
  nn::DenseNet<Scalar> decoder;
  nn::TrainTrace trace;

  template <typename Derived>
  Matrix<Scalar> encode(const Eigen::MatrixBase<Derived>& x) const {
    return nn::predict(encoder, x);
  }

  template <typename Derived>
  Matrix<Scalar> reconstruct(const Eigen::MatrixBase<Derived>& x) const {
    return nn::predict(decoder, nn::predict(encoder, x));
  }
};

template <typename Scalar>
nn::DenseNet<Scalar> autoencoder_network(Index input_dim, Index d, const AutoencoderConfig& cfg) {
  std::vector<nn::LayerSpec> specs;
  const auto hidden = cfg.scaled_hidden();
  for (Index h : hidden) specs.push_back({h, nn::Activation::relu, cfg.dropout});
  specs.push_back({d, nn::Activation::linear, 0.0});
  for (auto it = hidden.rbegin(); it != hidden.rend(); ++it)
    specs.push_back({*it, nn::Activation::relu, cfg.dropout});
  specs.push_back({input_dim, nn::Activation::linear, 0.0});
  return nn::DenseNet<Scalar>::build(input_dim, specs, cfg.train.seed);
}

template <typename Scalar = float, typename Derived>
Autoencoder<Scalar> ae_fit(const Eigen::MatrixBase<Derived>& x, Index d, AutoencoderConfig cfg) {
  if (d < 1 || d >= x.cols())
    throw InvalidArgument("ae_fit: code dimension must lie in [1, " + std::to_string(x.cols()) + ")");
  cfg.train.loss = nn::Loss::mse;
  auto net = autoencoder_network<Scalar>(x.cols(), d, cfg);
  const Matrix<Scalar> data = x.template cast<Scalar>();
  Autoencoder<Scalar> ae;
  ae.trace = nn::train(net, data, data, cfg.train);
  const std::size_t code_layer = cfg.hidden.size() + 1;
  ae.encoder = net.slice(0, code_layer);
  ae.decoder = net.slice(code_layer, net.depth());
  return ae;
}

template <typename Scalar, typename Derived>
double reconstruction_mse(const Autoencoder<Scalar>& ae, const Eigen::MatrixBase<Derived>& x) {
  return nn::loss_value(nn::Loss::mse, ae.reconstruct(x), x.template cast<Scalar>());
}

template <typename Scalar, typename Derived>
double reconstruction_mse(const PcaModel<Scalar>& pca, const Eigen::MatrixBase<Derived>& x) {
  return nn::loss_value(nn::Loss::mse, pca_inverse(pca, pca_transform(pca, x)), x.template cast<Scalar>());
}

// ---------------------------------------------------------------------------
// Supervised bottleneck: a shared trunk input -> hidden... -> d (linear code)
// with one softmax head per categorical target, trained jointly on the sum of
// per-head cross-entropies.

struct HeadTarget {
  std::string name;
  std::vector<int> targets;  // per row; kMissing excludes the row from fitting
  int classes = 0;
};

struct BottleneckConfig {
  std::vector<Index> hidden = {256};
  double dropout = 0.0;
  nn::TrainConfig train{.epochs = 200, .batch_size = 128, .learning_rate = 1e-3};
};

template <typename Scalar>
struct Bottleneck {
  nn::DenseNet<Scalar> encoder;
  std::vector<nn::DenseNet<Scalar>> heads;
  std::vector<std::size_t> head_target;  // index into the HeadTarget list used for fitting
  std::vector<std::string> head_names;
  std::vector<std::string> warnings;
  nn::TrainTrace trace;

  template <typename Derived>
  Matrix<Scalar> encode(const Eigen::MatrixBase<Derived>& x) const {
    return nn::predict(encoder, x);
  }

  template <typename Derived>
  std::vector<int> predict(std::size_t head, const Eigen::MatrixBase<Derived>& x) const {
    const Matrix<Scalar> p = nn::predict(heads.at(head), encode(x));
    std::vector<int> out(static_cast<std::size_t>(p.rows()));
    for (Index r = 0; r < p.rows(); ++r) {
      Index arg = 0;
      p.row(r).maxCoeff(&arg);
      out[static_cast<std::size_t>(r)] = static_cast<int>(arg);
    }
    return out;
  }
};

struct MultiHeadLoss {
  double total = 0;
  std::vector<double> per_head;
};

/// Loss of a fitted bottleneck over rows labeled for every active head.
template <typename Scalar, typename Derived>
MultiHeadLoss bottleneck_loss(const Bottleneck<Scalar>& model, const Eigen::MatrixBase<Derived>& x,
                              const std::vector<HeadTarget>& targets) {
  std::vector<Index> rows;
  for (Index r = 0; r < x.rows(); ++r) {
    bool ok = true;
    for (std::size_t idx : model.head_target)
      ok = ok && targets.at(idx).targets.at(static_cast<std::size_t>(r)) != kMissing;
    if (ok) rows.push_back(r);
  }
  Matrix<Scalar> xs(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) xs.row(static_cast<Index>(i)) = x.row(rows[i]).template cast<Scalar>();
  const Matrix<Scalar> code = model.encode(xs);
  MultiHeadLoss out;
  for (std::size_t h = 0; h < model.heads.size(); ++h) {
    const auto& t = targets.at(model.head_target[h]);
    std::vector<int> y;
    for (Index r : rows) y.push_back(t.targets[static_cast<std::size_t>(r)]);
    const double l = nn::loss_value(nn::Loss::cross_entropy, nn::predict(model.heads[h], code),
                                    nn::one_hot<Scalar>(y, t.classes));
    out.per_head.push_back(l);
    out.total += l;
  }
  return out;
}

template <typename Scalar = float, typename Derived>
Bottleneck<Scalar> bottleneck_fit(const Eigen::MatrixBase<Derived>& x, const std::vector<HeadTarget>& targets,
                                  Index d, BottleneckConfig cfg) {
  if (d < 1) throw InvalidArgument("bottleneck_fit: code dimension must be at least 1");
  if (targets.empty()) throw InvalidArgument("bottleneck_fit: no supervising targets");
  cfg.train.validate();
  for (const auto& t : targets)
    if (t.targets.size() != static_cast<std::size_t>(x.rows()))
      throw DimensionError("bottleneck_fit: target \"" + t.name + "\" has " + std::to_string(t.targets.size()) +
                           " rows, data has " + std::to_string(x.rows()));

  std::vector<Index> rows;
  for (Index r = 0; r < x.rows(); ++r) {
    bool labeled = true;
    for (const auto& t : targets) labeled = labeled && t.targets[static_cast<std::size_t>(r)] != kMissing;
    if (labeled) rows.push_back(r);
  }
  if (rows.empty()) throw InvalidArgument("bottleneck_fit: no row carries the full label set");

  Bottleneck<Scalar> model;
  std::vector<Matrix<Scalar>> onehots;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& t = targets[i];
    std::vector<int> y;
    std::vector<int> seen(static_cast<std::size_t>(std::max(t.classes, 0)), 0);
    for (Index r : rows) {
      const int v = t.targets[static_cast<std::size_t>(r)];
      if (v < 0 || v >= t.classes) throw InvalidArgument("bottleneck_fit: label out of range in " + t.name);
      y.push_back(v);
      seen[static_cast<std::size_t>(v)] = 1;
    }
    if (std::accumulate(seen.begin(), seen.end(), 0) < 2) {
      model.warnings.push_back("head \"" + t.name + "\" skipped: a single class observed");
      continue;
    }
    model.head_target.push_back(i);
    model.head_names.push_back(t.name);
    onehots.push_back(nn::one_hot<Scalar>(y, t.classes));
  }
  if (model.head_target.empty()) throw InvalidArgument("bottleneck_fit: every head was skipped");

  std::vector<nn::LayerSpec> trunk_specs;
  for (Index h : cfg.hidden) trunk_specs.push_back({h, nn::Activation::relu, cfg.dropout});
  trunk_specs.push_back({d, nn::Activation::linear, 0.0});
  model.encoder = nn::DenseNet<Scalar>::build(x.cols(), trunk_specs, cfg.train.seed);
  for (std::size_t h = 0; h < model.head_target.size(); ++h) {
    const nn::LayerSpec head_spec{targets[model.head_target[h]].classes, nn::Activation::softmax, 0.0};
    model.heads.push_back(nn::DenseNet<Scalar>::build(d, std::span(&head_spec, 1), cfg.train.seed + 1 + h));
  }

  const Index n = static_cast<Index>(rows.size());
  Matrix<Scalar> data(n, x.cols());
  for (Index i = 0; i < n; ++i) data.row(i) = x.row(rows[static_cast<std::size_t>(i)]).template cast<Scalar>();

  const auto adam_params = cfg.train.adam();
  nn::Adam<Scalar> trunk_opt(model.encoder, adam_params);
  std::vector<nn::Adam<Scalar>> head_opts;
  for (const auto& h : model.heads) head_opts.emplace_back(h, adam_params);

  std::mt19937_64 rng(cfg.train.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  const Index batch = std::min<Index>(cfg.train.batch_size, n);
  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    for (Index start = 0; start < n; start += batch) {
      const Index m = std::min(batch, n - start);
      Matrix<Scalar> xb(m, data.cols());
      std::vector<Matrix<Scalar>> yb(onehots.size());
      for (std::size_t h = 0; h < onehots.size(); ++h) yb[h].resize(m, onehots[h].cols());
      for (Index i = 0; i < m; ++i) {
        const Index src = order[static_cast<std::size_t>(start + i)];
        xb.row(i) = data.row(src);
        for (std::size_t h = 0; h < onehots.size(); ++h) yb[h].row(i) = onehots[h].row(src);
      }
      const auto trunk = nn::forward(model.encoder, xb, &rng);
      Matrix<Scalar> code_grad = Matrix<Scalar>::Zero(m, d);
      double batch_loss = 0;
      std::vector<nn::Gradients<Scalar>> head_grads;
      for (std::size_t h = 0; h < model.heads.size(); ++h) {
        const auto head = nn::forward(model.heads[h], trunk.output());
        batch_loss += nn::loss_value(nn::Loss::cross_entropy, head.output(), yb[h]);
        auto g = nn::backprop(model.heads[h], head, nn::output_delta(nn::Loss::cross_entropy, model.heads[h], head, yb[h]));
        code_grad += g.input;
        head_grads.push_back(std::move(g));
      }
      if (!std::isfinite(batch_loss))
        throw TrainingError("bottleneck_fit: non-finite loss at epoch " + std::to_string(epoch));
      const auto trunk_grads = nn::backprop(model.encoder, trunk, code_grad);
      trunk_opt.step(model.encoder, trunk_grads);
      for (std::size_t h = 0; h < model.heads.size(); ++h) head_opts[h].step(model.heads[h], head_grads[h]);
      epoch_loss += batch_loss * static_cast<double>(m);
    }
    model.trace.loss.push_back(epoch_loss / static_cast<double>(n));
  }
  return model;
}

}  // namespace vulnspace::reduce

#endif  // VULNSPACE_REDUCE_HPP
