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

// Information-theoretic validation of a clustering against reference labels.
// Entropies are in bits. Classes are the reference labels (C), clusters the
// predicted groups (K).

#ifndef VULNSPACE_EVAL_HPP
#define VULNSPACE_EVAL_HPP

#include "vulnspace/types.hpp"

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include <span>
#include <string>
#include <string_view>

namespace vulnspace::eval {

enum class NoisePolicy {
  exclude,     ///< NOISE rows are dropped; coverage reports the scored fraction.
  as_cluster,  ///< NOISE rows form one extra cluster.
};

NoisePolicy noise_policy_from_string(std::string_view name);
std::string_view to_string(NoisePolicy policy);

struct ContingencyTable {
  Eigen::MatrixXd counts;  // classes x clusters
  Eigen::VectorXd class_totals;
  Eigen::VectorXd cluster_totals;
  double n = 0;
  std::vector<int> class_ids;    // original label of each row of `counts`
  std::vector<int> cluster_ids;  // original cluster id of each column
  double coverage = 1.0;         // scored rows / rows with a reference label
};

/// Rows with a kMissing reference label are always dropped. Throws
/// InvalidArgument on length mismatch or when nothing is left to score.
ContingencyTable contingency(std::span<const int> truth, std::span<const int> clusters,
                             NoisePolicy policy = NoisePolicy::exclude);

/// Table from raw counts (classes x clusters); marginals are recomputed.
ContingencyTable contingency_from_counts(const Eigen::MatrixXd& counts);

/// H = -sum p log2 p over a vector of non-negative counts.
double entropy(const Eigen::Ref<const Eigen::VectorXd>& counts);

double conditional_entropy_classes_given_clusters(const ContingencyTable& table);
double conditional_entropy_clusters_given_classes(const ContingencyTable& table);
double mutual_information(const ContingencyTable& table);

struct HomogeneityCompleteness {
  double homogeneity = 0;
  double completeness = 0;
};

HomogeneityCompleteness homogeneity_completeness(const ContingencyTable& table);

/// I(C;K) / ((H(C) + H(K)) / 2); 1 when both entropies vanish, 0 when one does.
double nmi_arithmetic(const ContingencyTable& table);
double v_measure(const ContingencyTable& table);

struct ClusterScore {
  double nmi = 0;
  double homogeneity = 0;
  double completeness = 0;
  double v_measure = 0;
  double coverage = 0;
  double class_entropy = 0;
  double cluster_entropy = 0;
  double mutual_information = 0;
};

ClusterScore score(const ContingencyTable& table);
ClusterScore score(std::span<const int> truth, std::span<const int> clusters,
                   NoisePolicy policy = NoisePolicy::exclude);

nlohmann::json to_json(const ClusterScore& s);

}  // namespace vulnspace::eval

#endif  // VULNSPACE_EVAL_HPP
