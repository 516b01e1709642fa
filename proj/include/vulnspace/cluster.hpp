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

// Clustering of embedding rows: k-means (k-means++ seeding, Lloyd updates),
// agglomerative Ward linkage and OPTICS with DBSCAN-style or xi extraction.
// Distances are Euclidean; arithmetic runs in double.

#ifndef VULNSPACE_CLUSTER_HPP
#define VULNSPACE_CLUSTER_HPP

#include "vulnspace/error.hpp"
#include "vulnspace/reduce.hpp"
#include "vulnspace/types.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace vulnspace::cluster {

/// Per-row cluster ids. Non-noise ids are contiguous 0..k-1, numbered by first
/// appearance in row order; kNoise only comes from density methods.
struct ClusterAssignment {
  Labels labels;
  int k = 0;
  std::string method;
  nlohmann::json params = nlohmann::json::object();

  std::size_t noise_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
  }
};

/// Renumbers non-noise ids by first appearance; returns the number of clusters.
inline int relabel_by_first_appearance(Labels& labels) {
  std::map<int, int> remap;
  for (int& l : labels) {
    if (l == kNoise) continue;
    auto [it, inserted] = remap.emplace(l, static_cast<int>(remap.size()));
    l = it->second;
  }
  return static_cast<int>(remap.size());
}

namespace detail {

template <typename Derived>
void distances_from(const Eigen::MatrixBase<Derived>& x, Index row, Eigen::VectorXd& out) {
  out.resize(x.rows());
  const Eigen::RowVectorXd p = x.row(row).template cast<double>();
  for (Index j = 0; j < x.rows(); ++j) out(j) = (x.row(j).template cast<double>() - p).norm();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// k-means

struct KMeansResult {
  ClusterAssignment assignment;
  MatrixXr centroids;                 // row c is the centroid of cluster c
  double inertia = 0;                 // sum of squared distances to assigned centroids
  std::vector<double> inertia_trace;  // after every assignment step of the selected run
  int iterations = 0;
  int reseeds = 0;  // empty clusters re-seeded at the farthest point
};

namespace detail {

inline MatrixXr kmeans_pp_init(const MatrixXr& x, int k, std::mt19937_64& rng) {
  const Index n = x.rows();
  MatrixXr centers(k, x.cols());
  std::uniform_int_distribution<Index> first(0, n - 1);
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  Index pick = first(rng);
  centers.row(0) = x.row(pick);
  chosen[static_cast<std::size_t>(pick)] = 1;
  Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    if (total > 0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        target -= d2(i);
        if (target < 0 && d2(i) > 0) {
          pick = i;
          break;
        }
      }
      while (d2(pick) == 0 && pick > 0) --pick;
    } else {
      // Every remaining point coincides with a center: take the first unused row.
      pick = 0;
      while (pick < n - 1 && chosen[static_cast<std::size_t>(pick)]) ++pick;
    }
    centers.row(c) = x.row(pick);
    chosen[static_cast<std::size_t>(pick)] = 1;
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

// Single-point moves (Hartigan). Moving row i from a to b lowers the total
// squared error when n_b/(n_b+1) d(i,b)^2 < n_a/(n_a-1) d(i,a)^2, which also
// catches partitions Lloyd iterations cannot leave.
inline int hartigan_refine(const MatrixXr& x, MatrixXr& centers, Labels& labels, int k) {
  const Index n = x.rows();
  std::vector<double> size(static_cast<std::size_t>(k), 0.0);
  for (int l : labels) size[static_cast<std::size_t>(l)] += 1;
  int moves = 0;
  for (bool moved = true; moved && moves < 100 * n;) {
    moved = false;
    for (Index i = 0; i < n; ++i) {
      const int a = labels[static_cast<std::size_t>(i)];
      const double na = size[static_cast<std::size_t>(a)];
      if (na <= 1) continue;
      const double remove = na / (na - 1) * (x.row(i) - centers.row(a)).squaredNorm();
      int best = -1;
      double add = remove;
      for (int b = 0; b < k; ++b) {
        if (b == a) continue;
        const double nb = size[static_cast<std::size_t>(b)];
        const double cost = nb / (nb + 1) * (x.row(i) - centers.row(b)).squaredNorm();
        if (cost < add) {
          add = cost;
          best = b;
        }
      }
      if (best < 0 || !(add < remove * (1 - 1e-12))) continue;
      const double nb = size[static_cast<std::size_t>(best)];
      centers.row(a) = (centers.row(a) * na - x.row(i)) / (na - 1);
      centers.row(best) = (centers.row(best) * nb + x.row(i)) / (nb + 1);
      size[static_cast<std::size_t>(a)] -= 1;
      size[static_cast<std::size_t>(best)] += 1;
      labels[static_cast<std::size_t>(i)] = best;
      moved = true;
      ++moves;
    }
  }
  if (moves > 0) {
    centers.setZero();
    for (Index i = 0; i < n; ++i) centers.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
    for (int c = 0; c < k; ++c) centers.row(c) /= size[static_cast<std::size_t>(c)];
  }
  return moves;
}

inline double assign_nearest(const MatrixXr& x, const MatrixXr& centers, Labels& labels) {
  double inertia = 0;
  for (Index i = 0; i < x.rows(); ++i) {
    Index best = 0;
    const double d = (centers.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    inertia += d;
  }
  return inertia;
}

}  // namespace detail

/// Best of `n_init` seeded k-means++ / Lloyd runs by inertia. Lloyd stops at an
/// assignment fixpoint or after `max_iter` assignment steps.
template <typename Derived>
KMeansResult kmeans(const Eigen::MatrixBase<Derived>& data, int k, std::uint64_t seed, int max_iter = 300,
                    int n_init = 10) {
  const MatrixXr x = data.template cast<double>();
  const Index n = x.rows();
  if (k < 1 || k > n)
    throw InvalidArgument("kmeans: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  if (max_iter < 1 || n_init < 1) throw InvalidArgument("kmeans: max_iter and n_init must be positive");

  std::mt19937_64 rng(seed);
  std::optional<KMeansResult> best;
  for (int run = 0; run < n_init; ++run) {
    KMeansResult res;
    MatrixXr centers = detail::kmeans_pp_init(x, k, rng);
    Labels labels(static_cast<std::size_t>(n), -1);
    Labels previous;
    for (int it = 0; it < max_iter; ++it) {
      double inertia = detail::assign_nearest(x, centers, labels);
      // Empty clusters move to the point farthest from its assigned centroid.
      std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
      for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
      for (int c = 0; c < k; ++c) {
        if (sizes[static_cast<std::size_t>(c)] > 0) continue;
        Index far = 0;
        double far_d = -1;
        for (Index i = 0; i < n; ++i) {
          const int own = labels[static_cast<std::size_t>(i)];
          if (sizes[static_cast<std::size_t>(own)] <= 1) continue;
          const double d = (x.row(i) - centers.row(own)).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        if (far_d < 0) break;
        --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
        labels[static_cast<std::size_t>(far)] = c;
        sizes[static_cast<std::size_t>(c)] = 1;
        centers.row(c) = x.row(far);
        ++res.reseeds;
      }
      if (res.reseeds > 0) inertia = 0;
      for (Index i = 0; i < n && res.reseeds > 0; ++i)
        inertia += (x.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
      res.inertia_trace.push_back(inertia);
      res.iterations = it + 1;
      if (labels == previous) break;
      previous = labels;
      MatrixXr sums = MatrixXr::Zero(k, x.cols());
      for (Index i = 0; i < n; ++i) sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
      for (int c = 0; c < k; ++c)
        if (sizes[static_cast<std::size_t>(c)] > 0)
          centers.row(c) = sums.row(c) / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
    }
    detail::hartigan_refine(x, centers, labels, k);
    res.inertia = detail::assign_nearest(x, centers, labels);
    res.assignment.labels = labels;
    res.centroids = centers;
    if (!best || res.inertia < best->inertia) best = std::move(res);
  }

  // Canonical numbering: clusters by first appearance in row order.
  KMeansResult out = std::move(*best);
  Labels old = out.assignment.labels;
  out.assignment.k = relabel_by_first_appearance(out.assignment.labels);
  MatrixXr reordered(out.assignment.k, x.cols());
  std::vector<char> done(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < old.size(); ++i) {
    if (done[static_cast<std::size_t>(old[i])]) continue;
    done[static_cast<std::size_t>(old[i])] = 1;
    reordered.row(out.assignment.labels[i]) = out.centroids.row(old[i]);
  }
  out.centroids = reordered;
  out.assignment.method = "kmeans";
  out.assignment.params = {{"k", k}, {"seed", seed}, {"max_iter", max_iter}, {"n_init", n_init}};
  return out;
}

// ---------------------------------------------------------------------------
// Ward

struct Merge {
  int a = 0;  // cluster ids: 0..n-1 are rows, n + s is the cluster formed at step s
  int b = 0;
  double cost = 0;  // increase of the within-cluster sum of squares
  int size = 0;
};

using Dendrogram = std::vector<Merge>;

struct WardCut {
  std::optional<int> target_k;
  std::optional<double> cost_cutoff;  // apply merges with cost <= cutoff
};

struct WardResult {
  ClusterAssignment assignment;
  Dendrogram dendrogram;
};

/// Lance-Williams agglomeration on a condensed distance matrix holding the
/// Ward merge cost n_i n_j / (n_i + n_j) * ||c_i - c_j||^2 of every active
/// pair. Ties resolve to the lexicographically smallest (i, j). Memory O(n^2).
template <typename Derived>
Dendrogram ward_dendrogram(const Eigen::MatrixBase<Derived>& data) {
  const MatrixXr x = data.template cast<double>();
  const Index n = x.rows();
  if (n < 2) throw InvalidArgument("ward: need at least two rows");
  const auto idx = [n](Index i, Index j) {
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(i * n - i * (i + 1) / 2 + (j - i - 1));
  };
  std::vector<double> dist(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) dist[idx(i, j)] = 0.5 * (x.row(i) - x.row(j)).squaredNorm();

  std::vector<int> size(static_cast<std::size_t>(n), 1);
  std::vector<int> id(static_cast<std::size_t>(n));
  std::iota(id.begin(), id.end(), 0);
  std::vector<char> active(static_cast<std::size_t>(n), 1);
  std::vector<Index> nn(static_cast<std::size_t>(n), -1);
  std::vector<double> nn_d(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());

  const auto rescan = [&](Index i) {
    nn[static_cast<std::size_t>(i)] = -1;
    nn_d[static_cast<std::size_t>(i)] = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      if (j == i || !active[static_cast<std::size_t>(j)]) continue;
      const double d = dist[idx(i, j)];
      if (d < nn_d[static_cast<std::size_t>(i)]) {
        nn_d[static_cast<std::size_t>(i)] = d;
        nn[static_cast<std::size_t>(i)] = j;
      }
    }
  };
  for (Index i = 0; i < n; ++i) rescan(i);

  Dendrogram merges;
  merges.reserve(static_cast<std::size_t>(n - 1));
  for (Index step = 0; step < n - 1; ++step) {
    Index i = -1;
    for (Index c = 0; c < n; ++c)
      if (active[static_cast<std::size_t>(c)] && (i < 0 || nn_d[static_cast<std::size_t>(c)] < nn_d[static_cast<std::size_t>(i)]))
        i = c;
    const Index j = nn[static_cast<std::size_t>(i)];
    const double cost = nn_d[static_cast<std::size_t>(i)];
    const double ni = size[static_cast<std::size_t>(i)];
    const double nj = size[static_cast<std::size_t>(j)];
    for (Index k = 0; k < n; ++k) {
      if (!active[static_cast<std::size_t>(k)] || k == i || k == j) continue;
      const double nk = size[static_cast<std::size_t>(k)];
      dist[idx(i, k)] = ((ni + nk) * dist[idx(i, k)] + (nj + nk) * dist[idx(j, k)] - nk * cost) / (ni + nj + nk);
    }
    merges.push_back({std::min(id[static_cast<std::size_t>(i)], id[static_cast<std::size_t>(j)]),
                      std::max(id[static_cast<std::size_t>(i)], id[static_cast<std::size_t>(j)]), cost,
                      static_cast<int>(ni + nj)});
    active[static_cast<std::size_t>(j)] = 0;
    size[static_cast<std::size_t>(i)] = static_cast<int>(ni + nj);
    id[static_cast<std::size_t>(i)] = static_cast<int>(n + step);
    rescan(i);
    for (Index k = 0; k < n; ++k) {
      if (!active[static_cast<std::size_t>(k)] || k == i) continue;
      const Index kn = nn[static_cast<std::size_t>(k)];
      if (kn == i || kn == j) {
        rescan(k);
      } else {
        const double d = dist[idx(i, k)];
        if (d < nn_d[static_cast<std::size_t>(k)] || (d == nn_d[static_cast<std::size_t>(k)] && i < kn)) {
          nn_d[static_cast<std::size_t>(k)] = d;
          nn[static_cast<std::size_t>(k)] = i;
        }
      }
    }
  }
  return merges;
}

ClusterAssignment cut_dendrogram(const Dendrogram& dendrogram, Index rows, const WardCut& cut);

template <typename Derived>
WardResult ward(const Eigen::MatrixBase<Derived>& data, const WardCut& cut) {
  WardResult out;
  out.dendrogram = ward_dendrogram(data);
  out.assignment = cut_dendrogram(out.dendrogram, data.rows(), cut);
  return out;
}

// ---------------------------------------------------------------------------
// OPTICS

inline constexpr double kUndefined = std::numeric_limits<double>::infinity();

struct ReachabilityProfile {
  std::vector<Index> order;           // visit order (a permutation of rows)
  std::vector<double> reachability;   // aligned with `order`; the first entry is kUndefined
  std::vector<double> core_distance;  // per row
  std::vector<Index> predecessor;     // aligned with `order`; -1 where undefined
  int min_pts = 0;
};

struct OpticsExtraction {
  std::optional<double> eps_cut;
  std::optional<double> xi;
  int min_cluster_size = 0;  // xi only; 0 means min_pts
};

struct OpticsResult {
  ReachabilityProfile profile;
  ClusterAssignment assignment;
};

/// Core distance = distance to the min_pts-th nearest row counting the row
/// itself, so min_pts = 2 gives the nearest-neighbor distance. Expansion uses
/// an unbounded generating distance; ties pick the lowest row index.
template <typename Derived>
ReachabilityProfile optics_profile(const Eigen::MatrixBase<Derived>& x, int min_pts) {
  if (min_pts < 2) throw InvalidArgument("optics: min_pts must be at least 2");
  const Index n = x.rows();
  ReachabilityProfile p;
  p.min_pts = min_pts;
  p.core_distance.assign(static_cast<std::size_t>(n), kUndefined);
  Eigen::VectorXd row;
  std::vector<double> scratch;
  if (n >= min_pts) {
    for (Index i = 0; i < n; ++i) {
      detail::distances_from(x, i, row);
      scratch.assign(row.data(), row.data() + n);
      std::nth_element(scratch.begin(), scratch.begin() + (min_pts - 1), scratch.end());
      p.core_distance[static_cast<std::size_t>(i)] = scratch[static_cast<std::size_t>(min_pts - 1)];
    }
  }
  std::vector<double> reach(static_cast<std::size_t>(n), kUndefined);
  std::vector<Index> pred(static_cast<std::size_t>(n), -1);
  std::vector<char> done(static_cast<std::size_t>(n), 0);
  for (Index step = 0; step < n; ++step) {
    Index next = -1;
    for (Index i = 0; i < n; ++i) {
      if (done[static_cast<std::size_t>(i)]) continue;
      if (next < 0 || reach[static_cast<std::size_t>(i)] < reach[static_cast<std::size_t>(next)]) next = i;
    }
    done[static_cast<std::size_t>(next)] = 1;
    p.order.push_back(next);
    p.reachability.push_back(reach[static_cast<std::size_t>(next)]);
    p.predecessor.push_back(pred[static_cast<std::size_t>(next)]);
    const double core = p.core_distance[static_cast<std::size_t>(next)];
    if (core == kUndefined) continue;
    detail::distances_from(x, next, row);
    for (Index q = 0; q < n; ++q) {
      if (done[static_cast<std::size_t>(q)]) continue;
      const double r = std::max(core, row(q));
      if (r < reach[static_cast<std::size_t>(q)]) {
        reach[static_cast<std::size_t>(q)] = r;
        pred[static_cast<std::size_t>(q)] = next;
      }
    }
  }
  return p;
}

/// DBSCAN-equivalent labeling at radius `eps`. Core rows (core distance <= eps)
/// take their cluster from the ordering; every other row joins the cluster of
/// its nearest core row within eps (lowest index on ties) or becomes kNoise.
template <typename Derived>
ClusterAssignment extract_eps(const ReachabilityProfile& profile, const Eigen::MatrixBase<Derived>& x, double eps) {
  const Index n = x.rows();
  Labels labels(static_cast<std::size_t>(n), kNoise);
  int current = -1;
  for (std::size_t pos = 0; pos < profile.order.size(); ++pos) {
    const Index p = profile.order[pos];
    const bool core = profile.core_distance[static_cast<std::size_t>(p)] <= eps;
    if (profile.reachability[pos] > eps) {
      if (core) labels[static_cast<std::size_t>(p)] = ++current;
    } else if (core) {
      labels[static_cast<std::size_t>(p)] = current;
    }
  }
  Eigen::VectorXd row;
  for (Index i = 0; i < n; ++i) {
    if (profile.core_distance[static_cast<std::size_t>(i)] <= eps) continue;
    detail::distances_from(x, i, row);
    Index best = -1;
    for (Index j = 0; j < n; ++j) {
      if (j == i || profile.core_distance[static_cast<std::size_t>(j)] > eps || row(j) > eps) continue;
      if (best < 0 || row(j) < row(best)) best = j;
    }
    if (best >= 0) labels[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(best)];
  }
  ClusterAssignment out;
  out.labels = std::move(labels);
  out.k = relabel_by_first_appearance(out.labels);
  out.method = "optics";
  out.params = {{"min_pts", profile.min_pts}, {"eps_cut", eps}};
  return out;
}

/// Steep-area cluster extraction on the reachability plot (no predecessor
/// correction). Nested clusters resolve to the innermost one.
ClusterAssignment extract_xi(const ReachabilityProfile& profile, double xi, int min_cluster_size = 0);

template <typename Derived>
OpticsResult optics(const Eigen::MatrixBase<Derived>& x, int min_pts, const OpticsExtraction& how) {
  if (how.eps_cut.has_value() == how.xi.has_value())
    throw InvalidArgument("optics: give exactly one of eps_cut or xi");
  OpticsResult out;
  out.profile = optics_profile(x, min_pts);
  out.assignment = how.eps_cut ? extract_eps(out.profile, x, *how.eps_cut)
                               : extract_xi(out.profile, *how.xi, how.min_cluster_size);
  return out;
}

/// PCA to ceil(d / 2) columns ahead of density clustering.
template <typename Derived>
MatrixXr prereduce_for_density(const Eigen::MatrixBase<Derived>& x) {
  if (x.cols() < 2) throw InvalidArgument("prereduce_for_density: need at least two columns");
  const Index target = (x.cols() + 1) / 2;
  const auto model = reduce::pca_fit(x.template cast<double>().eval(), target);
  return reduce::pca_transform(model, x.template cast<double>());
}

// ---------------------------------------------------------------------------
// CSV exports.

/// "row,cluster" with optional row identifiers in place of indices.
void write_assignment_csv(std::ostream& out, const ClusterAssignment& a,
                          const std::vector<std::string>& row_ids = {});
ClusterAssignment read_assignment_csv(std::istream& in, const std::string& method = "");
void write_dendrogram_csv(std::ostream& out, const Dendrogram& d);
void write_reachability_csv(std::ostream& out, const ReachabilityProfile& p,
                            const std::vector<std::string>& row_ids = {});

}  // namespace vulnspace::cluster

#endif  // VULNSPACE_CLUSTER_HPP
