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


#include "vulnspace/project.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace pj = vulnspace::project;
using vulnspace::Index;
using vulnspace::kNoise;
using vulnspace::Labels;
using vulnspace::MatrixXr;
using vulnspace::VectorXr;

TEST(Calibrate, HitsTargetEntropy) {
  VectorXr d(6);
  d << 0.5, 1.0, 2.0, 4.0, 8.0, 16.0;
  const auto c = pj::perplexity_calibrate(d, 3.0);
  EXPECT_TRUE(c.converged);
  EXPECT_NEAR(c.entropy, std::log2(3.0), 1e-4);
  EXPECT_NEAR(c.p.sum(), 1.0, 1e-12);
  for (Index i = 1; i < d.size(); ++i) EXPECT_GE(c.p(i - 1), c.p(i));
}

TEST(JointProbabilities, SymmetricNormalized) {
  const auto b = vulnspace::testing::make_blobs(2, 15, 3, 0.5, 4.0, 0, 2);
  const MatrixXr p = pj::joint_probabilities(b.x, 5.0);
  EXPECT_NEAR(p.sum(), 1.0, 1e-9);
  EXPECT_TRUE(p.isApprox(p.transpose(), 1e-12));
  EXPECT_EQ(p.diagonal().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GE(p.minCoeff(), 0.0);
}

TEST(Tsne, SeparatesBlobsDeterministically) {
  const auto b = vulnspace::testing::make_blobs(3, 25, 10, 0.5, 6.0, 0, 9);
  pj::TsneParams params;
  params.perplexity = 10;
  params.seed = 4;
  const auto a = pj::tsne(b.x, params);
  const auto again = pj::tsne(b.x, params);
  ASSERT_EQ(a.coords.rows(), 75);
  ASSERT_EQ(a.coords.cols(), 2);
  EXPECT_EQ(a.coords, again.coords);
  EXPECT_GT(pj::silhouette(a.coords, b.labels), 0.7);
  ASSERT_FALSE(a.kl_trace.empty());
  EXPECT_LT(a.kl_trace.back().kl, a.kl_trace.front().kl);
}

TEST(Silhouette, HandValue) {
  MatrixXr x(4, 1);
  x << 0, 1, 10, 11;
  const double expected = ((1 - 1 / 10.5) + (1 - 1 / 9.5)) / 2;
  EXPECT_NEAR(pj::silhouette(x, Labels{0, 0, 1, 1}), expected, 1e-12);
  MatrixXr y(5, 1);
  y << 0, 1, 10, 11, 500;
  EXPECT_NEAR(pj::silhouette(y, Labels{0, 0, 1, 1, kNoise}), expected, 1e-12);
}

TEST(SampleRows, SortedSubset) {
  const auto all = pj::sample_rows(10, 20, 1);
  EXPECT_EQ(all.size(), 10u);
  const auto s = pj::sample_rows(1000, 50, 3);
  ASSERT_EQ(s.size(), 50u);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
  EXPECT_EQ(s, pj::sample_rows(1000, 50, 3));
  EXPECT_NE(s, pj::sample_rows(1000, 50, 4));
}
