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


#include "vulnspace/cluster.hpp"

#include "vulnspace/eval.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <random>
#include <sstream>

namespace cl = vulnspace::cluster;
namespace vt = vulnspace::testing;
using vulnspace::Index;
using vulnspace::kNoise;
using vulnspace::Labels;
using vulnspace::MatrixXr;

TEST(KMeans, ReachesExhaustiveOptimum) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n;
  for (int t = 0; t < 15; ++t) {
    MatrixXr x(8, 2);
    for (Index i = 0; i < x.size(); ++i) x(i) = n(rng);
    for (const int k : {2, 3}) {
      const auto res = cl::kmeans(x, k, static_cast<std::uint64_t>(t));
      EXPECT_LE(res.inertia, vt::exhaustive_kmeans_inertia(x, k) + 1e-9) << "set " << t << " k " << k;
      EXPECT_EQ(res.assignment.k, k);
    }
  }
}

TEST(KMeans, DeterministicAndFirstAppearanceIds) {
  const auto b = vt::make_blobs(3, 20, 4, 0.3, 8.0, 0, 5);
  const auto a1 = cl::kmeans(b.x, 3, 9);
  const auto a2 = cl::kmeans(b.x, 3, 9);
  EXPECT_EQ(a1.assignment.labels, a2.assignment.labels);
  EXPECT_EQ(a1.assignment.labels.front(), 0);
  EXPECT_NEAR(vulnspace::eval::score(b.labels, a1.assignment.labels).nmi, 1.0, 1e-9);
  EXPECT_EQ(a1.centroids.rows(), 3);

  // Inertia reported equals the inertia of the returned labels and centroids.
  double inertia = 0;
  for (Index i = 0; i < b.x.rows(); ++i)
    inertia += (b.x.row(i) - a1.centroids.row(a1.assignment.labels[static_cast<std::size_t>(i)])).squaredNorm();
  EXPECT_NEAR(a1.inertia, inertia, 1e-9);
}

TEST(KMeans, BadK) {
  const MatrixXr x = MatrixXr::Random(5, 2);
  EXPECT_THROW(cl::kmeans(x, 0, 1), vulnspace::InvalidArgument);
  EXPECT_THROW(cl::kmeans(x, 6, 1), vulnspace::InvalidArgument);
}

TEST(Ward, HandDendrogram) {
  MatrixXr x(3, 1);
  x << 0, 1, 10;
  const auto d = cl::ward_dendrogram(x);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].a, 0);
  EXPECT_EQ(d[0].b, 1);
  EXPECT_NEAR(d[0].cost, 0.5, 1e-12);
  EXPECT_EQ(d[0].size, 2);
  // {0,1} has centroid 0.5: 2*1/3 * 9.5^2.
  EXPECT_NEAR(d[1].cost, 2.0 / 3.0 * 90.25, 1e-9);
  EXPECT_EQ(d[1].size, 3);

  const auto r = cl::ward(x, {2, std::nullopt});
  EXPECT_EQ(r.assignment.labels, (Labels{0, 0, 1}));
  const auto c = cl::ward(x, {std::nullopt, 1.0});
  EXPECT_EQ(c.assignment.k, 2);
}

TEST(Ward, CostsMonotoneAndCostsSumToSse) {
  const auto b = vt::make_blobs(4, 10, 3, 0.5, 5.0, 0, 13);
  const auto d = cl::ward_dendrogram(b.x);
  ASSERT_EQ(d.size(), static_cast<std::size_t>(b.x.rows() - 1));
  double total = 0;
  for (std::size_t s = 0; s < d.size(); ++s) {
    if (s > 0) {
      EXPECT_GE(d[s].cost, d[s - 1].cost - 1e-9);
    }
    total += d[s].cost;
  }
  const double sse = (b.x.rowwise() - b.x.colwise().mean()).squaredNorm();
  EXPECT_NEAR(total, sse, 1e-6 * sse);
  EXPECT_NEAR(vulnspace::eval::score(b.labels, cl::ward(b.x, {4, std::nullopt}).assignment.labels).nmi, 1.0, 1e-9);
}

TEST(Optics, EpsExtractionMatchesDbscan) {
  for (int t = 0; t < 5; ++t) {
    const auto b = vt::make_blobs(3, 15, 2, 0.4, 4.0, 6, static_cast<std::uint64_t>(100 + t));
    for (const double eps : {0.3, 0.6, 1.0}) {
      const auto res = cl::optics(b.x, 4, {eps, std::nullopt, 0});
      EXPECT_TRUE(vt::same_partition(res.assignment.labels, vt::dbscan(b.x, eps, 4))) << t << " " << eps;
    }
  }
}

TEST(Optics, ProfileShape) {
  const auto b = vt::make_blobs(2, 10, 2, 0.2, 5.0, 0, 3);
  const auto p = cl::optics_profile(b.x, 3);
  ASSERT_EQ(p.order.size(), 20u);
  EXPECT_EQ(p.reachability.front(), cl::kUndefined);
  std::vector<Index> sorted(p.order);
  std::sort(sorted.begin(), sorted.end());
  for (Index i = 0; i < 20; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
  // min_pts = 2 core distance is the nearest-neighbor distance.
  const auto p2 = cl::optics_profile(b.x, 2);
  double nn = std::numeric_limits<double>::infinity();
  for (Index j = 1; j < 20; ++j) nn = std::min(nn, (b.x.row(0) - b.x.row(j)).norm());
  EXPECT_NEAR(p2.core_distance[0], nn, 1e-12);
}

TEST(Optics, XiFindsBlobsAndNoise) {
  const auto b = vt::make_blobs(3, 30, 5, 0.3, 10.0, 10, 8);
  const auto res = cl::optics(b.x, 8, {std::nullopt, 0.05, 0});
  EXPECT_GE(res.assignment.k, 3);
  EXPECT_GT(res.assignment.noise_count(), 0u);
  // Uniform noise climbing out of a cluster ends its steep-up area, so some of
  // it joins that cluster; the blobs themselves must come back exactly.
  Labels truth, found;
  for (std::size_t i = 0; i < b.labels.size(); ++i)
    if (b.labels[i] < 3) {
      truth.push_back(b.labels[i]);
      found.push_back(res.assignment.labels[i]);
    }
  EXPECT_TRUE(vt::same_partition(truth, found));
}

TEST(AssignmentCsv, RoundTrip) {
  cl::ClusterAssignment a;
  a.labels = {0, 1, kNoise, 1};
  a.k = 2;
  a.method = "optics";
  std::ostringstream out;
  cl::write_assignment_csv(out, a);
  std::istringstream in(out.str());
  const auto back = cl::read_assignment_csv(in, "optics");
  EXPECT_EQ(back.labels, a.labels);
  EXPECT_EQ(back.k, 2);
}

TEST(Prereduce, HalvesWidth) {
  const MatrixXr x = MatrixXr::Random(30, 10);
  EXPECT_EQ(cl::prereduce_for_density(x).cols(), 5);
}

TEST(Relabel, FirstAppearance) {
  Labels l{7, 3, kNoise, 7, 9};
  EXPECT_EQ(cl::relabel_by_first_appearance(l), 3);
  EXPECT_EQ(l, (Labels{0, 1, kNoise, 0, 2}));
}
