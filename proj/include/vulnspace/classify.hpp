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

// Label tasks derived from a snapshot and the classifiers run over embeddings:
// Gaussian naive Bayes, kNN, softmax regression and a small MLP family.
// Rows whose target is kMissing are ignored by every fit and score.

#ifndef VULNSPACE_CLASSIFY_HPP
#define VULNSPACE_CLASSIFY_HPP

#include "vulnspace/corpus.hpp"
#include "vulnspace/nn.hpp"
#include "vulnspace/types.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vulnspace::classify {

struct LabelTask {
  std::string name;                  // e.g. "cvss_v3.AV", "cwe", "year"
  std::vector<std::string> classes;  // index -> value
  Labels targets;                    // per row; kMissing when unlabeled

  int class_count() const { return static_cast<int>(classes.size()); }
  std::size_t labeled() const;
};

/// Task names: cvss_v2.<C>, cvss_v3.<C> for every component, cwe (first listed
/// weakness), year and day (of year).
std::vector<std::string> all_task_names();
LabelTask make_task(const corpus::Snapshot& snapshot, const std::string& name);
std::vector<LabelTask> label_tasks(const corpus::Snapshot& snapshot, const std::vector<std::string>& names = {});

/// Rows of `task` at `rows`.
Labels subset(const Labels& labels, std::span<const std::size_t> rows);
MatrixXr subset_rows(const MatrixXr& x, std::span<const std::size_t> rows);

struct ClassifierReport {
  double accuracy = 0;
  double balanced_accuracy = 0;
  double precision = 0;  // macro
  double recall = 0;     // macro
  double f1 = 0;         // macro
  Eigen::MatrixXi confusion;  // truth x prediction
  std::vector<long> support;  // per class, over scored rows
  std::size_t evaluated = 0;

  nlohmann::json to_json() const;
};

/// Balanced accuracy averages recall over classes present in the truth; macro
/// P/R/F1 average over classes present in truth or predictions, with 0 for
/// empty denominators. Throws InvalidArgument when nothing is labeled.
ClassifierReport evaluate(std::span<const int> predictions, std::span<const int> truth, int n_classes = -1);

class GaussianNaiveBayes {
 public:
  static constexpr double kVarianceFloor = 1e-9;

  void fit(const MatrixXr& x, std::span<const int> y, int n_classes);
  Labels predict(const MatrixXr& x) const;
  /// Unnormalized log posteriors, rows x classes.
  MatrixXr joint_log_likelihood(const MatrixXr& x) const;

  const MatrixXr& means() const { return means_; }
  const MatrixXr& variances() const { return vars_; }
  const VectorXr& log_priors() const { return log_prior_; }

 private:
  MatrixXr means_;
  MatrixXr vars_;
  VectorXr log_prior_;
};

/// Majority vote among the k nearest training rows (Euclidean); distance ties
/// go to the earlier training row, vote ties to the lower class.
Labels knn_predict(const MatrixXr& train_x, std::span<const int> train_y, const MatrixXr& query, int k,
                   int n_classes = -1);

struct LogRegConfig {
  double l2 = 1e-4;
  nn::TrainConfig train{.epochs = 200, .batch_size = 256, .learning_rate = 0.01,
                        .loss = nn::Loss::cross_entropy, .seed = 0};
};

/// Multinomial softmax regression: one linear layer, zero-initialized.
class LogisticRegression {
 public:
  void fit(const MatrixXr& x, std::span<const int> y, int n_classes, const LogRegConfig& cfg = {});
  Labels predict(const MatrixXr& x) const;
  MatrixXr probabilities(const MatrixXr& x) const;
  /// features x classes
  Matrix<float> weights() const { return net_.layer(0).weight; }
  const nn::DenseNet<float>& net() const { return net_; }

 private:
  nn::DenseNet<float> net_;
};

struct MlpConfig {
  Index hidden_width = 128;
  double dropout = 0.0;
  nn::TrainConfig train{.epochs = 200, .batch_size = 128, .learning_rate = 1e-3,
                        .loss = nn::Loss::cross_entropy, .seed = 0};
};

class MlpClassifier {
 public:
  void fit(const MatrixXr& x, std::span<const int> y, int n_classes, int hidden_layers, const MlpConfig& cfg = {});
  Labels predict(const MatrixXr& x) const;
  int hidden_layers() const { return hidden_layers_; }
  const nn::DenseNet<float>& net() const { return net_; }
  const nn::TrainTrace& trace() const { return trace_; }

 private:
  nn::DenseNet<float> net_;
  nn::TrainTrace trace_;
  int hidden_layers_ = 0;
};

struct MlpFamily {
  std::vector<int> depths;
  std::vector<MlpClassifier> models;
  std::vector<ClassifierReport> reports;  // on the validation rows
  std::size_t best = 0;                   // index with the highest balanced accuracy
};

/// One MLP per depth, trained concurrently; ties in balanced accuracy go to
/// the shallower model.
MlpFamily mlp_family_fit(const MatrixXr& train_x, std::span<const int> train_y, const MatrixXr& valid_x,
                         std::span<const int> valid_y, int n_classes, const std::vector<int>& depths = {1, 2, 3},
                         const MlpConfig& cfg = {});

/// One row of the exported report table.
struct ReportRecord {
  std::string representation;
  std::string reducer;
  std::string task;
  std::string model;
  std::optional<int> depth;
  std::optional<int> k;
  ClassifierReport report;
  nlohmann::json metadata = nlohmann::json::object();

  nlohmann::json to_json() const;
};

}  // namespace vulnspace::classify

#endif  // VULNSPACE_CLASSIFY_HPP
