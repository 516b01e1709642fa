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


#include "vulnspace/nn.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <limits>
#include <random>

namespace nn = vulnspace::nn;
using vulnspace::Index;
using vulnspace::MatrixXr;

namespace {

MatrixXr gaussian(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  MatrixXr m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

}  // namespace

TEST(DenseNet, BuildShapes) {
  const std::vector<nn::LayerSpec> specs{{8, nn::Activation::relu}, {3, nn::Activation::softmax}};
  const auto net = nn::DenseNet<float>::build(5, specs, 1);
  EXPECT_EQ(net.depth(), 2u);
  EXPECT_EQ(net.input_dim(), 5);
  EXPECT_EQ(net.output_dim(), 3);
  EXPECT_EQ(net.parameter_count(), 5 * 8 + 8 + 8 * 3 + 3);
  const auto out = nn::predict(net, gaussian(4, 5, 2));
  EXPECT_EQ(out.rows(), 4);
  EXPECT_TRUE(out.rowwise().sum().isApproxToConstant(1.0f, 1e-5f));
  EXPECT_THROW(nn::DenseNet<float>::build(0, specs, 1), vulnspace::InvalidArgument);
}

TEST(DenseNet, RejectsMismatchedLayers) {
  nn::DenseLayer<double> a{MatrixXr::Zero(3, 4), vulnspace::RowVector<double>::Zero(4), nn::Activation::relu, 0};
  nn::DenseLayer<double> b{MatrixXr::Zero(5, 2), vulnspace::RowVector<double>::Zero(2), nn::Activation::linear, 0};
  EXPECT_THROW(nn::DenseNet<double>({a, b}), vulnspace::DimensionError);
}

TEST(Backward, MatchesFiniteDifferences) {
  struct Case {
    nn::Activation hidden, last;
    nn::Loss loss;
  };
  for (const auto& c : {Case{nn::Activation::relu, nn::Activation::linear, nn::Loss::mse},
                        Case{nn::Activation::sigmoid, nn::Activation::softmax, nn::Loss::cross_entropy},
                        Case{nn::Activation::linear, nn::Activation::sigmoid, nn::Loss::binary_cross_entropy},
                        Case{nn::Activation::relu, nn::Activation::sigmoid, nn::Loss::mse}}) {
    const std::vector<nn::LayerSpec> specs{{6, c.hidden}, {3, c.last}};
    const auto net = nn::DenseNet<double>::build(4, specs, 5);
    const MatrixXr x = gaussian(7, 4, 6);
    MatrixXr y = (gaussian(7, 3, 7).array() > 0).cast<double>();
    if (c.loss == nn::Loss::cross_entropy) y = nn::one_hot<double>(std::vector<int>{0, 1, 2, 0, 1, 2, 2}, 3);
    const auto g = nn::backward(net, x, y, c.loss);
    EXPECT_LT(vulnspace::testing::max_gradient_error(net, x, y, c.loss, g), 1e-5)
        << nn::to_string(c.hidden) << "/" << nn::to_string(c.last);
  }
}

TEST(Backward, IncompatibleLossRejected) {
  const std::vector<nn::LayerSpec> specs{{2, nn::Activation::linear}};
  const auto net = nn::DenseNet<double>::build(2, specs, 1);
  EXPECT_THROW(nn::backward(net, MatrixXr::Zero(1, 2), MatrixXr::Zero(1, 2), nn::Loss::cross_entropy),
               vulnspace::InvalidArgument);
}

TEST(LossValue, HandValues) {
  MatrixXr out(1, 2), target(1, 2);
  out << 0.25, 0.75;
  target << 0, 1;
  EXPECT_NEAR(nn::loss_value(nn::Loss::mse, out, target), (0.0625 + 0.0625) / 2, 1e-12);
  EXPECT_NEAR(nn::loss_value(nn::Loss::cross_entropy, out, target), -std::log(0.75), 1e-12);
}

TEST(Train, ReducesLossAndIsDeterministic) {
  const MatrixXr x = gaussian(200, 3, 9);
  MatrixXr y(200, 1);
  y.col(0) = x.col(0) * 2.0 - x.col(2) + MatrixXr::Constant(200, 1, 0.5).col(0);
  const std::vector<nn::LayerSpec> specs{{16, nn::Activation::relu}, {1, nn::Activation::linear}};
  nn::TrainConfig cfg;
  cfg.epochs = 60;
  cfg.learning_rate = 1e-2;
  cfg.seed = 3;
  auto a = nn::DenseNet<double>::build(3, specs, 4);
  auto b = a;
  const auto ta = nn::train(a, x, y, cfg);
  const auto tb = nn::train(b, x, y, cfg);
  ASSERT_EQ(ta.loss.size(), 60u);
  EXPECT_LT(ta.loss.back(), 0.05 * ta.loss.front());
  EXPECT_EQ(ta.loss, tb.loss);
  EXPECT_EQ(a.layer(0).weight, b.layer(0).weight);
}

TEST(Train, ZeroEpochsIsNoop) {
  const std::vector<nn::LayerSpec> specs{{2, nn::Activation::linear}};
  auto net = nn::DenseNet<double>::build(2, specs, 1);
  const auto before = net.layer(0).weight;
  nn::TrainConfig cfg;
  cfg.epochs = 0;
  nn::train(net, gaussian(5, 2, 1), gaussian(5, 2, 2), cfg);
  EXPECT_EQ(net.layer(0).weight, before);
  cfg.batch_size = 0;
  EXPECT_THROW(nn::train(net, gaussian(5, 2, 1), gaussian(5, 2, 2), cfg), vulnspace::InvalidArgument);
}

TEST(Train, NonFiniteLossThrows) {
  const std::vector<nn::LayerSpec> specs{{1, nn::Activation::linear}};
  auto net = nn::DenseNet<double>::build(1, specs, 1);
  MatrixXr x(2, 1), y(2, 1);
  x << 1, std::numeric_limits<double>::infinity();
  y << 0, 0;
  nn::TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(nn::train(net, x, y, cfg), vulnspace::TrainingError);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr * sign(g) up to epsilon.
  nn::DenseLayer<double> l{MatrixXr::Zero(1, 2), vulnspace::RowVector<double>::Zero(2), nn::Activation::linear, 0};
  nn::DenseNet<double> net({l});
  nn::Gradients<double> g;
  g.weight.push_back((MatrixXr(1, 2) << 3.0, -0.01).finished());
  g.bias.push_back((vulnspace::RowVector<double>(2) << 0.0, 5.0).finished());
  nn::Adam<double> adam(net, {0.1, 0.9, 0.999, 1e-12});
  adam.step(net, g);
  EXPECT_NEAR(net.layer(0).weight(0, 0), -0.1, 1e-9);
  EXPECT_NEAR(net.layer(0).weight(0, 1), 0.1, 1e-9);
  EXPECT_NEAR(net.layer(0).bias(0), 0.0, 1e-12);
  EXPECT_NEAR(net.layer(0).bias(1), -0.1, 1e-9);
}

TEST(Dropout, OnlyWithRng) {
  std::vector<nn::LayerSpec> specs{{50, nn::Activation::relu}, {1, nn::Activation::linear}};
  specs[0].dropout = 0.5;
  const auto net = nn::DenseNet<double>::build(3, specs, 2);
  const MatrixXr x = gaussian(4, 3, 3);
  EXPECT_EQ(nn::predict(net, x), nn::predict(net, x));
  std::mt19937_64 r1(1), r2(1);
  EXPECT_EQ(nn::forward(net, x, &r1).output(), nn::forward(net, x, &r2).output());
  std::mt19937_64 r3(1);
  EXPECT_NE(nn::forward(net, x, &r3).output(), nn::predict(net, x));
}

TEST(NetFile, RoundTrip) {
  const std::vector<nn::LayerSpec> specs{{4, nn::Activation::relu}, {2, nn::Activation::softmax}};
  const auto net = nn::DenseNet<float>::build(3, specs, 8);
  const auto path = std::filesystem::temp_directory_path() / "vulnspace_net_test.vnet";
  nn::save_net(path, net);
  const auto back = nn::load_net<float>(path);
  ASSERT_EQ(back.depth(), 2u);
  EXPECT_EQ(back.layer(0).weight, net.layer(0).weight);
  EXPECT_EQ(back.layer(1).activation, nn::Activation::softmax);
  std::filesystem::remove(path);
}
