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

#include "vulnspace/eval.hpp"

#include "vulnspace/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace vulnspace::eval {

NoisePolicy noise_policy_from_string(std::string_view name) {
  if (name == "exclude") return NoisePolicy::exclude;
  if (name == "as_cluster") return NoisePolicy::as_cluster;
  throw InvalidArgument("unknown noise policy \"" + std::string(name) + "\"");
}

std::string_view to_string(NoisePolicy policy) {
  return policy == NoisePolicy::exclude ? "exclude" : "as_cluster";
}

namespace {

void fill_marginals(ContingencyTable& t) {
  t.class_totals = t.counts.rowwise().sum();
  t.cluster_totals = t.counts.colwise().sum().transpose();
  t.n = t.counts.sum();
}

// -sum over nonzero cells of (n_ij / n) log2(n_ij / n_j), with n_j the
// marginal of the conditioning axis.
double conditional(const Eigen::MatrixXd& joint, const Eigen::VectorXd& given, double n) {
  double h = 0;
  for (Index j = 0; j < joint.cols(); ++j) {
    if (given(j) <= 0) continue;
    for (Index i = 0; i < joint.rows(); ++i) {
      const double c = joint(i, j);
      if (c > 0) h -= (c / n) * std::log2(c / given(j));
    }
  }
  return std::max(h, 0.0);
}

}  // namespace

ContingencyTable contingency(std::span<const int> truth, std::span<const int> clusters,
                             NoisePolicy policy) {
  if (truth.size() != clusters.size())
    throw InvalidArgument("contingency: truth has " + std::to_string(truth.size()) +
                          " rows but clusters has " + std::to_string(clusters.size()));

  std::map<int, Index> class_index;
  std::map<int, Index> cluster_index;
  std::size_t labeled = 0;
  std::size_t scored = 0;
  for (std::size_t r = 0; r < truth.size(); ++r) {
    if (truth[r] == kMissing) continue;
    ++labeled;
    if (clusters[r] == kNoise && policy == NoisePolicy::exclude) continue;
    ++scored;
    class_index.emplace(truth[r], 0);
    cluster_index.emplace(clusters[r], 0);
  }
  if (scored == 0) throw InvalidArgument("contingency: no scorable rows");

  ContingencyTable t;
  for (auto& [id, idx] : class_index) {
    idx = static_cast<Index>(t.class_ids.size());
    t.class_ids.push_back(id);
  }
  for (auto& [id, idx] : cluster_index) {
    idx = static_cast<Index>(t.cluster_ids.size());
    t.cluster_ids.push_back(id);
  }
  t.counts = Eigen::MatrixXd::Zero(static_cast<Index>(t.class_ids.size()),
                                   static_cast<Index>(t.cluster_ids.size()));
  for (std::size_t r = 0; r < truth.size(); ++r) {
    if (truth[r] == kMissing) continue;
    if (clusters[r] == kNoise && policy == NoisePolicy::exclude) continue;
    t.counts(class_index[truth[r]], cluster_index[clusters[r]]) += 1.0;
  }
  fill_marginals(t);
  t.coverage = static_cast<double>(scored) / static_cast<double>(labeled);
  return t;
}

ContingencyTable contingency_from_counts(const Eigen::MatrixXd& counts) {
  if ((counts.array() < 0).any()) throw InvalidArgument("contingency: negative count");
  ContingencyTable t;
  t.counts = counts;
  fill_marginals(t);
  if (t.n <= 0) throw InvalidArgument("contingency: empty table");
  for (Index i = 0; i < counts.rows(); ++i) t.class_ids.push_back(static_cast<int>(i));
  for (Index j = 0; j < counts.cols(); ++j) t.cluster_ids.push_back(static_cast<int>(j));
  return t;
}

double entropy(const Eigen::Ref<const Eigen::VectorXd>& counts) {
  if ((counts.array() < 0).any()) throw InvalidArgument("entropy: negative count");
  const double total = counts.sum();
  if (!(total > 0)) throw InvalidArgument("entropy: zero total");
  double h = 0;
  for (Index i = 0; i < counts.size(); ++i) {
    if (counts(i) > 0) {
      const double p = counts(i) / total;
      h -= p * std::log2(p);
    }
  }
  return std::max(h, 0.0);
}

double conditional_entropy_classes_given_clusters(const ContingencyTable& t) {
  return conditional(t.counts, t.cluster_totals, t.n);
}

double conditional_entropy_clusters_given_classes(const ContingencyTable& t) {
  const Eigen::MatrixXd transposed = t.counts.transpose();
  return conditional(transposed, t.class_totals, t.n);
}

double mutual_information(const ContingencyTable& t) {
  const double hc = entropy(t.class_totals);
  const double mi = hc - conditional_entropy_classes_given_clusters(t);
  return std::max(mi, 0.0);
}

HomogeneityCompleteness homogeneity_completeness(const ContingencyTable& t) {
  const double hc = entropy(t.class_totals);
  const double hk = entropy(t.cluster_totals);
  HomogeneityCompleteness out;
  out.homogeneity = hc == 0 ? 1.0 : 1.0 - conditional_entropy_classes_given_clusters(t) / hc;
  out.completeness = hk == 0 ? 1.0 : 1.0 - conditional_entropy_clusters_given_classes(t) / hk;
  return out;
}

double nmi_arithmetic(const ContingencyTable& t) {
  const double hc = entropy(t.class_totals);
  const double hk = entropy(t.cluster_totals);
  if (hc == 0 && hk == 0) return 1.0;
  if (hc == 0 || hk == 0) return 0.0;
  return mutual_information(t) / (0.5 * (hc + hk));
}

double v_measure(const ContingencyTable& t) {
  const auto [hom, com] = homogeneity_completeness(t);
  if (hom + com == 0) return 0.0;
  return 2.0 * hom * com / (hom + com);
}

ClusterScore score(const ContingencyTable& t) {
  ClusterScore s;
  const auto hc = homogeneity_completeness(t);
  s.homogeneity = hc.homogeneity;
  s.completeness = hc.completeness;
  s.v_measure = v_measure(t);
  s.nmi = nmi_arithmetic(t);
  s.coverage = t.coverage;
  s.class_entropy = entropy(t.class_totals);
  s.cluster_entropy = entropy(t.cluster_totals);
  s.mutual_information = mutual_information(t);
  return s;
}

ClusterScore score(std::span<const int> truth, std::span<const int> clusters, NoisePolicy policy) {
  return score(contingency(truth, clusters, policy));
}

nlohmann::json to_json(const ClusterScore& s) {
  return {{"nmi", s.nmi},
          {"homogeneity", s.homogeneity},
          {"completeness", s.completeness},
          {"v_measure", s.v_measure},
          {"coverage", s.coverage},
          {"class_entropy_bits", s.class_entropy},
          {"cluster_entropy_bits", s.cluster_entropy},
          {"mutual_information_bits", s.mutual_information}};
}

}  // namespace vulnspace::eval
