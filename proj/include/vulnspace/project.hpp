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

// Exact t-SNE for 2-D views of an embedding, plus the row sampler used to keep
// the O(N^2) cost bounded.

#ifndef VULNSPACE_PROJECT_HPP
#define VULNSPACE_PROJECT_HPP

#include "vulnspace/error.hpp"
#include "vulnspace/types.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace vulnspace::project {

inline constexpr int kMaxBisectionSteps = 64;
inline constexpr double kEntropyTolerance = 1e-5;

struct Calibration {
  VectorXr p;           // conditional probabilities, same order as the input distances
  double beta = 0;      // precision 1 / (2 sigma^2) in the units of the input
  double entropy = 0;   // bits
  int steps = 0;
  bool converged = false;
};

/// Gaussian kernel over squared distances to the other points, with the
/// bandwidth bisected until the entropy is log2(perplexity).
template <typename Derived>
Calibration perplexity_calibrate(const Eigen::MatrixBase<Derived>& squared_distances, double perplexity) {
  const VectorXr d0 = squared_distances.template cast<double>();
  const Index m = d0.size();
  if (!(perplexity > 0) || perplexity >= static_cast<double>(m))
    throw InvalidArgument("perplexity must lie in (0, " + std::to_string(m) + ")");
  if ((d0.array() < 0).any() || !d0.allFinite()) throw InvalidArgument("squared distances must be finite and >= 0");

  // Shift and scale: neither changes the normalized kernel, both keep exp() in range.
  const double lo = d0.minCoeff();
  VectorXr d = d0.array() - lo;
  const double scale = d.mean() > 0 ? d.mean() : 1.0;
  d /= scale;

  const double target = std::log2(perplexity);
  Calibration c;
  double beta = 1.0;
  double beta_min = -std::numeric_limits<double>::infinity();
  double beta_max = std::numeric_limits<double>::infinity();
  double best_gap = std::numeric_limits<double>::infinity();
  VectorXr p(m);
  for (int step = 0; step < kMaxBisectionSteps; ++step) {
    p = (-beta * d.array()).exp();
    const double sum = p.sum();
    p /= sum;
    // H = -sum p log2 p, with 0 log 0 = 0.
    double h = 0;
    for (Index j = 0; j < m; ++j)
      if (p(j) > 0) h -= p(j) * std::log2(p(j));
    const double gap = h - target;
    c.steps = step + 1;
    if (std::abs(gap) < best_gap) {
      best_gap = std::abs(gap);
      c.p = p;
      c.entropy = h;
      c.beta = beta / scale;
    }
    if (std::abs(gap) <= kEntropyTolerance) {
      c.converged = true;
      break;
    }
    if (gap > 0) {
      beta_min = beta;
      beta = std::isinf(beta_max) ? beta * 2 : 0.5 * (beta + beta_max);
    } else {
      beta_max = beta;
      beta = std::isinf(beta_min) ? beta / 2 : 0.5 * (beta + beta_min);
    }
  }
  return c;
}

struct TsneParams {
  double perplexity = 30;
  int iterations = 1000;
  double learning_rate = 200;
  double early_exaggeration = 12;
  int exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  double min_gain = 0.01;
  int kl_every = 50;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    return {{"perplexity", perplexity},
            {"iterations", iterations},
            {"learning_rate", learning_rate},
            {"early_exaggeration", early_exaggeration},
            {"exaggeration_iterations", exaggeration_iterations},
            {"seed", seed}};
  }
};

struct KlPoint {
  int iteration = 0;
  double kl = 0;
};

struct Projection {
  MatrixXr coords;  // N x 2
  TsneParams params;
  std::vector<KlPoint> kl_trace;
  std::vector<std::string> warnings;
};

/// Symmetrized joint probabilities (sum 1, zero diagonal).
template <typename Derived>
MatrixXr joint_probabilities(const Eigen::MatrixBase<Derived>& x, double perplexity,
                             std::vector<std::string>* warnings = nullptr) {
  const MatrixXr xd = x.template cast<double>();
  const Index n = xd.rows();
  const VectorXr sq = xd.rowwise().squaredNorm();
  MatrixXr d = (-2.0 * xd * xd.transpose()).colwise() + sq;
  d.rowwise() += sq.transpose();
  d = d.cwiseMax(0.0);
  MatrixXr p = MatrixXr::Zero(n, n);
  VectorXr row(n - 1);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0, k = 0; j < n; ++j)
      if (j != i) row(k++) = d(i, j);
    const auto c = perplexity_calibrate(row, perplexity);
    if (!c.converged && warnings)
      warnings->push_back("perplexity search for row " + std::to_string(i) + " stopped at entropy " +
                          std::to_string(c.entropy));
    for (Index j = 0, k = 0; j < n; ++j)
      if (j != i) p(i, j) = c.p(k++);
  }
  MatrixXr joint = p + p.transpose();
  joint /= joint.sum();
  return joint;
}

namespace detail {

// KL(P || Q) with Q from the current layout.
inline double kl_divergence(const MatrixXr& p, const MatrixXr& num, double num_sum) {
  double kl = 0;
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.cols(); ++j) {
      if (i == j || p(i, j) <= 0) continue;
      const double q = std::max(num(i, j) / num_sum, std::numeric_limits<double>::min());
      kl += p(i, j) * std::log(p(i, j) / q);
    }
  return std::max(kl, 0.0);
}

}  // namespace detail

/// Exact t-SNE: seeded N(0, 1e-4) start, momentum with per-coordinate gains,
/// early exaggeration. KL (against the unexaggerated P) is recorded every
/// kl_every iterations, at the end of exaggeration and at the end.
template <typename Derived>
Projection tsne(const Eigen::MatrixBase<Derived>& x, const TsneParams& params = {}) {
  const Index n = x.rows();
  if (n < 5) throw InvalidArgument("t-SNE needs at least 5 rows");
  if (params.iterations < 0 || params.exaggeration_iterations < 0 || !(params.learning_rate > 0))
    throw InvalidArgument("t-SNE: iterations must be >= 0 and learning_rate > 0");
  Projection out;
  out.params = params;
  const MatrixXr p = joint_probabilities(x, params.perplexity, &out.warnings);

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1e-4);
  MatrixXr y(n, 2);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < 2; ++c) y(i, c) = normal(rng);

  MatrixXr update = MatrixXr::Zero(n, 2);
  MatrixXr gains = MatrixXr::Ones(n, 2);
  MatrixXr num(n, n);
  MatrixXr grad(n, 2);
  const auto layout_kernel = [&]() {
    for (Index i = 0; i < n; ++i) {
      num(i, i) = 0;
      for (Index j = i + 1; j < n; ++j) {
        const double dx = y(i, 0) - y(j, 0);
        const double dy = y(i, 1) - y(j, 1);
        const double v = 1.0 / (1.0 + dx * dx + dy * dy);
        num(i, j) = v;
        num(j, i) = v;
      }
    }
    return num.sum();
  };
  const auto record = [&](int it) {
    const double s = layout_kernel();
    out.kl_trace.push_back({it, detail::kl_divergence(p, num, s)});
  };

  for (int it = 0; it < params.iterations; ++it) {
    const bool early = it < params.exaggeration_iterations;
    const double exaggeration = early ? params.early_exaggeration : 1.0;
    const double momentum = early ? params.initial_momentum : params.final_momentum;
    const double s = layout_kernel();
    // dC/dy_i = 4 sum_j (e p_ij - q_ij) num_ij (y_i - y_j)
    MatrixXr w = (exaggeration * p - num / s).cwiseProduct(num);
    grad = 4.0 * (w.rowwise().sum().asDiagonal() * y - w * y);
    if (!grad.allFinite())
      throw TrainingError("t-SNE gradient became non-finite at iteration " + std::to_string(it));
    for (Index i = 0; i < n; ++i)
      for (Index c = 0; c < 2; ++c) {
        const bool flip = (grad(i, c) > 0) != (update(i, c) > 0);
        gains(i, c) = std::max(flip ? gains(i, c) + 0.2 : gains(i, c) * 0.8, params.min_gain);
      }
    update = momentum * update - params.learning_rate * gains.cwiseProduct(grad);
    y += update;
    const int done = it + 1;
    if ((params.kl_every > 0 && done % params.kl_every == 0) || done == params.exaggeration_iterations ||
        done == params.iterations) {
      if (out.kl_trace.empty() || out.kl_trace.back().iteration != done) record(done);
    }
  }
  if (params.iterations == 0) record(0);
  out.coords = y;
  return out;
}

/// Seeded uniform sample without replacement (ascending) when rows > max_n,
/// otherwise every row.
std::vector<std::size_t> sample_rows(std::size_t rows, std::size_t max_n, std::uint64_t seed);

/// Mean silhouette with Euclidean distances; singleton clusters score 0.
/// Rows labelled kNoise are ignored.
template <typename Derived>
double silhouette(const Eigen::MatrixBase<Derived>& x, const Labels& labels) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) throw DimensionError("silhouette: length mismatch");
  std::vector<Index> rows;
  int k = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != kNoise) {
      rows.push_back(static_cast<Index>(i));
      k = std::max(k, labels[i] + 1);
    }
  if (rows.empty()) throw InvalidArgument("silhouette: no labelled rows");
  double total = 0;
  std::vector<double> sum(static_cast<std::size_t>(k));
  std::vector<long> count(static_cast<std::size_t>(k));
  for (const Index i : rows) {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (const Index j : rows) {
      if (j == i) continue;
      const auto lj = static_cast<std::size_t>(labels[static_cast<std::size_t>(j)]);
      sum[lj] += (x.row(i) - x.row(j)).template cast<double>().norm();
      ++count[lj];
    }
    const auto li = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
    if (count[li] == 0) continue;
    const double a = sum[li] / static_cast<double>(count[li]);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sum.size(); ++c)
      if (c != li && count[c] > 0) b = std::min(b, sum[c] / static_cast<double>(count[c]));
    if (std::isinf(b)) continue;
    if (std::max(a, b) > 0) total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(rows.size());
}

void write_projection_csv(std::ostream& out, const MatrixXr& coords, const std::vector<std::string>& row_ids);

}  // namespace vulnspace::project

#endif  // VULNSPACE_PROJECT_HPP
