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


#include "vulnspace/classify.hpp"

#include "vulnspace/corpus.hpp"
#include "vulnspace/error.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace cf = vulnspace::classify;
using vulnspace::Index;
using vulnspace::kMissing;
using vulnspace::Labels;
using vulnspace::MatrixXr;

namespace {

// Sort by (distance, row), count votes, lowest class wins ties.
Labels knn_oracle(const MatrixXr& tx, const Labels& ty, const MatrixXr& q, int k, int classes) {
  Labels out;
  for (Index i = 0; i < q.rows(); ++i) {
    std::vector<std::pair<double, Index>> d;
    for (Index j = 0; j < tx.rows(); ++j) d.emplace_back((tx.row(j) - q.row(i)).norm(), j);
    std::sort(d.begin(), d.end());
    std::vector<int> votes(static_cast<std::size_t>(classes), 0);
    for (int m = 0; m < k; ++m) ++votes[static_cast<std::size_t>(ty[static_cast<std::size_t>(d[static_cast<std::size_t>(m)].second)])];
    out.push_back(static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin()));
  }
  return out;
}

}  // namespace

TEST(Evaluate, HandFixture) {
  const std::vector<int> pred{0, 1, 1, 0, 1};
  const std::vector<int> truth{0, 1, 0, 0, kMissing};
  const auto r = cf::evaluate(pred, truth, 2);
  EXPECT_EQ(r.evaluated, 4u);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
  EXPECT_NEAR(r.balanced_accuracy, 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(r.precision, 0.75, 1e-12);
  EXPECT_NEAR(r.recall, 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(r.f1, (0.8 + 2.0 / 3.0) / 2, 1e-12);
  EXPECT_EQ(r.confusion(0, 1), 1);
  EXPECT_EQ(r.support, (std::vector<long>{3, 1}));
  EXPECT_THROW(cf::evaluate(std::vector<int>{0}, std::vector<int>{kMissing}, 2), vulnspace::InvalidArgument);
}

TEST(Evaluate, BalancedAccuracyIgnoresAbsentClasses) {
  // Class 2 never occurs in the truth.
  const auto r = cf::evaluate(std::vector<int>{0, 2, 1}, std::vector<int>{0, 0, 1}, 3);
  EXPECT_NEAR(r.balanced_accuracy, (0.5 + 1.0) / 2, 1e-12);
}

TEST(GaussianNB, HandMoments) {
  MatrixXr x(4, 1);
  x << 0, 2, 10, 14;
  const std::vector<int> y{0, 0, 1, 1};
  cf::GaussianNaiveBayes nb;
  nb.fit(x, y, 2);
  EXPECT_DOUBLE_EQ(nb.means()(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(nb.means()(1, 0), 12.0);
  EXPECT_NEAR(nb.variances()(0, 0), 1.0, 1e-8);
  EXPECT_NEAR(nb.variances()(1, 0), 4.0, 1e-8);
  EXPECT_NEAR(nb.log_priors()(0), std::log(0.5), 1e-12);
  MatrixXr q(3, 1);
  q << 1.5, 11, 5;
  // At 5 the wider class wins: -0.5 log(8 pi) - 49/8 > -0.5 log(2 pi) - 8.
  EXPECT_EQ(nb.predict(q), (Labels{0, 1, 1}));
  const MatrixXr jll = nb.joint_log_likelihood(q);
  EXPECT_NEAR(jll(2, 0), std::log(0.5) - 0.5 * std::log(2 * M_PI) - 8.0, 1e-6);
  EXPECT_NEAR(jll(2, 1), std::log(0.5) - 0.5 * std::log(8 * M_PI) - 49.0 / 8.0, 1e-6);
}

TEST(Knn, MatchesOracle) {
  const auto b = vulnspace::testing::make_blobs(3, 20, 3, 1.5, 3.0, 0, 4);
  const MatrixXr q = MatrixXr::Random(25, 3) * 4;
  for (const int k : {1, 4, 7})
    EXPECT_EQ(cf::knn_predict(b.x, b.labels, q, k, 3), knn_oracle(b.x, b.labels, q, k, 3)) << k;
}

TEST(Knn, TiesGoToLowerClass) {
  MatrixXr tx(2, 1), q(1, 1);
  tx << -1, 1;
  q << 0;
  EXPECT_EQ(cf::knn_predict(tx, std::vector<int>{1, 0}, q, 2, 2), Labels{0});
}

TEST(LogisticRegression, SeparatesBlobs) {
  const auto b = vulnspace::testing::make_blobs(3, 30, 4, 0.5, 5.0, 0, 6);
  cf::LogisticRegression lr;
  lr.fit(b.x, b.labels, 3);
  const auto r = cf::evaluate(lr.predict(b.x), b.labels, 3);
  EXPECT_GT(r.accuracy, 0.95);
  const MatrixXr p = lr.probabilities(b.x);
  EXPECT_TRUE(p.rowwise().sum().isApproxToConstant(1.0, 1e-5));
  EXPECT_EQ(lr.weights().rows(), 4);
}

TEST(Mlp, FamilyPicksBestAndIsDeterministic) {
  const auto b = vulnspace::testing::make_blobs(2, 40, 3, 0.8, 3.0, 0, 12);
  std::vector<std::size_t> train, valid;
  for (std::size_t i = 0; i < b.labels.size(); ++i) (i % 4 == 0 ? valid : train).push_back(i);
  const MatrixXr tx = cf::subset_rows(b.x, train), vx = cf::subset_rows(b.x, valid);
  const Labels ty = cf::subset(b.labels, train), vy = cf::subset(b.labels, valid);
  cf::MlpConfig cfg;
  cfg.hidden_width = 16;
  cfg.train.epochs = 40;
  const auto fam = cf::mlp_family_fit(tx, ty, vx, vy, 2, {1, 2}, cfg);
  ASSERT_EQ(fam.models.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_LE(fam.reports[i].balanced_accuracy, fam.reports[fam.best].balanced_accuracy);
  EXPECT_EQ(fam.models[1].hidden_layers(), 2);
  const auto again = cf::mlp_family_fit(tx, ty, vx, vy, 2, {1, 2}, cfg);
  EXPECT_EQ(again.models[0].predict(vx), fam.models[0].predict(vx));
  EXPECT_GT(fam.reports[fam.best].accuracy, 0.8);
}

TEST(Tasks, FromFixtureSnapshot) {
  namespace cp = vulnspace::corpus;
  const auto parsed = cp::parse_feed(cp::read_feed_file(VULNSPACE_TEST_DATA "/nvdcve-1.1-fixture.json"));
  const auto snap = cp::build_snapshot(parsed.records, {2015, 2020});
  const auto av = cf::make_task(snap, "cvss_v3.AV");
  ASSERT_EQ(av.targets.size(), snap.size());
  EXPECT_EQ(av.class_count(), 4);
  EXPECT_LT(av.labeled(), snap.size());
  const auto cwe = cf::make_task(snap, "cwe");
  EXPECT_EQ(cwe.class_count(), 5);
  EXPECT_EQ(cwe.labeled(), snap.size());
  const auto year = cf::make_task(snap, "year");
  EXPECT_EQ(year.class_count(), 6);
  EXPECT_THROW(cf::make_task(snap, "cvss_v3.ZZ"), vulnspace::InvalidArgument);
  const auto names = cf::all_task_names();
  EXPECT_NE(std::find(names.begin(), names.end(), "cvss_v2.AV"), names.end());
}
