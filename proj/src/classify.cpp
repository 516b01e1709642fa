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

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <numbers>
#include <numeric>
#include <set>

namespace vulnspace::classify {

namespace {

// Rows with a label, and the labels themselves.
struct Labeled {
  std::vector<std::size_t> rows;
  Labels y;
};

Labeled labeled_rows(std::span<const int> y, int n_classes, const char* who) {
  Labeled out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == kMissing) continue;
    if (y[i] < 0 || y[i] >= n_classes)
      throw InvalidArgument(std::string(who) + ": label " + std::to_string(y[i]) + " outside [0, " +
                            std::to_string(n_classes) + ")");
    out.rows.push_back(i);
    out.y.push_back(y[i]);
  }
  return out;
}

int distinct(const Labels& y) { return static_cast<int>(std::set<int>(y.begin(), y.end()).size()); }

void check_rows(const MatrixXr& x, std::span<const int> y, const char* who) {
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw DimensionError(std::string(who) + ": " + std::to_string(x.rows()) + " rows but " +
                         std::to_string(y.size()) + " labels");
}

Labels argmax_rows(const MatrixXr& scores) {
  Labels out(static_cast<std::size_t>(scores.rows()));
  for (Index r = 0; r < scores.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < scores.cols(); ++c)
      if (scores(r, c) > scores(r, best)) best = c;
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

template <typename Scalar>
Labels argmax_rows(const Matrix<Scalar>& scores) {
  return argmax_rows(MatrixXr(scores.template cast<double>()));
}

std::string join_cwes(const std::vector<std::string>& v) { return v.empty() ? std::string() : v.front(); }

}  // namespace

std::size_t LabelTask::labeled() const {
  return static_cast<std::size_t>(std::count_if(targets.begin(), targets.end(), [](int t) { return t != kMissing; }));
}

std::vector<std::string> all_task_names() {
  std::vector<std::string> out;
  for (const auto& c : corpus::v3_components()) out.push_back("cvss_v3." + std::string(c.name));
  for (const auto& c : corpus::v2_components()) out.push_back("cvss_v2." + std::string(c.name));
  out.insert(out.end(), {"cwe", "year", "day"});
  return out;
}

LabelTask make_task(const corpus::Snapshot& s, const std::string& name) {
  LabelTask task;
  task.name = name;
  task.targets.assign(s.size(), kMissing);
  const auto component_task = [&](std::span<const corpus::CvssComponent> table, const std::string& comp, auto get) {
    for (std::size_t c = 0; c < table.size(); ++c) {
      if (table[c].name != comp) continue;
      for (const auto v : table[c].values) task.classes.emplace_back(v);
      for (std::size_t r = 0; r < s.size(); ++r)
        if (const auto v = get(s.records[r], c)) task.targets[r] = *v;
      return true;
    }
    return false;
  };
  if (name.starts_with("cvss_v3.")) {
    if (component_task(corpus::v3_components(), name.substr(8), [](const corpus::CveRecord& r, std::size_t c) {
          return r.cvss_v3 ? std::optional<int>(corpus::component_value(*r.cvss_v3, c)) : std::nullopt;
        }))
      return task;
  } else if (name.starts_with("cvss_v2.")) {
    if (component_task(corpus::v2_components(), name.substr(8), [](const corpus::CveRecord& r, std::size_t c) {
          return r.cvss_v2 ? std::optional<int>(corpus::component_value(*r.cvss_v2, c)) : std::nullopt;
        }))
      return task;
  } else if (name == "cwe" || name == "year" || name == "day") {
    const auto value = [&](const corpus::CveRecord& r) -> std::string {
      if (name == "cwe") return join_cwes(r.cwes);
      if (name == "year") return std::to_string(r.year);
      return std::to_string(r.day_of_year);
    };
    // Numeric tasks order their classes numerically, CWE lexically.
    std::vector<std::string> seen;
    for (const auto& r : s.records)
      if (auto v = value(r); !v.empty()) seen.push_back(std::move(v));
    std::sort(seen.begin(), seen.end(), [&](const std::string& a, const std::string& b) {
      if (name != "cwe") return std::stoi(a) < std::stoi(b);
      return a < b;
    });
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    task.classes = seen;
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < seen.size(); ++i) index[seen[i]] = static_cast<int>(i);
    for (std::size_t r = 0; r < s.size(); ++r)
      if (const auto v = value(s.records[r]); !v.empty()) task.targets[r] = index.at(v);
    return task;
  }
  throw InvalidArgument("unknown label task \"" + name + "\"");
}

std::vector<LabelTask> label_tasks(const corpus::Snapshot& s, const std::vector<std::string>& names) {
  std::vector<LabelTask> out;
  for (const auto& n : names.empty() ? all_task_names() : names) out.push_back(make_task(s, n));
  return out;
}

Labels subset(const Labels& labels, std::span<const std::size_t> rows) {
  Labels out;
  out.reserve(rows.size());
  for (const auto r : rows) out.push_back(labels.at(r));
  return out;
}

MatrixXr subset_rows(const MatrixXr& x, std::span<const std::size_t> rows) {
  MatrixXr out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= static_cast<std::size_t>(x.rows())) throw InvalidArgument("row index out of range");
    out.row(static_cast<Index>(i)) = x.row(static_cast<Index>(rows[i]));
  }
  return out;
}

ClassifierReport evaluate(std::span<const int> predictions, std::span<const int> truth, int n_classes) {
  if (predictions.size() != truth.size())
    throw InvalidArgument("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                          std::to_string(truth.size()) + " labels");
  if (n_classes < 0) {
    n_classes = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] == kMissing) continue;
      n_classes = std::max({n_classes, truth[i] + 1, predictions[i] + 1});
    }
  }
  ClassifierReport rep;
  rep.confusion = Eigen::MatrixXi::Zero(n_classes, n_classes);
  rep.support.assign(static_cast<std::size_t>(n_classes), 0);
  long correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == kMissing) continue;
    const int t = truth[i];
    const int p = predictions[i];
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
      throw InvalidArgument("evaluate: class index outside [0, " + std::to_string(n_classes) + ")");
    ++rep.confusion(t, p);
    ++rep.support[static_cast<std::size_t>(t)];
    correct += t == p;
    ++rep.evaluated;
  }
  if (rep.evaluated == 0) throw InvalidArgument("evaluate: no labeled rows");
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(rep.evaluated);

  double bal = 0, prec = 0, rec = 0, f1 = 0;
  int truth_classes = 0, macro_classes = 0;
  for (int c = 0; c < n_classes; ++c) {
    const long tp = rep.confusion(c, c);
    const long actual = rep.confusion.row(c).sum();
    const long predicted = rep.confusion.col(c).sum();
    const double r = actual > 0 ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    const double p = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    if (actual > 0) {
      bal += r;
      ++truth_classes;
    }
    if (actual > 0 || predicted > 0) {
      prec += p;
      rec += r;
      f1 += (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
      ++macro_classes;
    }
  }
  rep.balanced_accuracy = bal / truth_classes;
  rep.precision = prec / macro_classes;
  rep.recall = rec / macro_classes;
  rep.f1 = f1 / macro_classes;
  return rep;
}

nlohmann::json ClassifierReport::to_json() const {
  nlohmann::json conf = nlohmann::json::array();
  for (Index r = 0; r < confusion.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < confusion.cols(); ++c) row.push_back(confusion(r, c));
    conf.push_back(std::move(row));
  }
  return {{"accuracy", accuracy},   {"balanced_accuracy", balanced_accuracy},
          {"precision", precision}, {"recall", recall},
          {"f1", f1},               {"confusion", conf},
          {"support", support},     {"evaluated", evaluated}};
}

void GaussianNaiveBayes::fit(const MatrixXr& x, std::span<const int> y, int n_classes) {
  check_rows(x, y, "naive bayes");
  const auto data = labeled_rows(y, n_classes, "naive bayes");
  if (distinct(data.y) < 2) throw InvalidArgument("naive bayes: need at least two classes with samples");
  const Index d = x.cols();
  means_ = MatrixXr::Zero(n_classes, d);
  vars_ = MatrixXr::Zero(n_classes, d);
  VectorXr counts = VectorXr::Zero(n_classes);
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    means_.row(data.y[i]) += x.row(static_cast<Index>(data.rows[i]));
    counts(data.y[i]) += 1;
  }
  for (int c = 0; c < n_classes; ++c)
    if (counts(c) > 0) means_.row(c) /= counts(c);
  for (std::size_t i = 0; i < data.rows.size(); ++i)
    vars_.row(data.y[i]) += (x.row(static_cast<Index>(data.rows[i])) - means_.row(data.y[i])).array().square().matrix();
  for (int c = 0; c < n_classes; ++c) {
    if (counts(c) > 0) vars_.row(c) /= counts(c);
    vars_.row(c) = vars_.row(c).array().max(kVarianceFloor).matrix();
  }
  log_prior_.resize(n_classes);
  const double total = counts.sum();
  for (int c = 0; c < n_classes; ++c)
    log_prior_(c) = counts(c) > 0 ? std::log(counts(c) / total) : -std::numeric_limits<double>::infinity();
}

MatrixXr GaussianNaiveBayes::joint_log_likelihood(const MatrixXr& x) const {
  if (means_.size() == 0) throw InvalidArgument("naive bayes: model is not fitted");
  if (x.cols() != means_.cols())
    throw DimensionError("naive bayes: expected " + std::to_string(means_.cols()) + " features, got " +
                         std::to_string(x.cols()));
  const double log2pi = std::log(2 * std::numbers::pi);
  MatrixXr out(x.rows(), means_.rows());
  for (Index c = 0; c < means_.rows(); ++c) {
    const double norm = -0.5 * (vars_.row(c).array().log().sum() + log2pi * static_cast<double>(x.cols()));
    for (Index r = 0; r < x.rows(); ++r) {
      const double maha = ((x.row(r) - means_.row(c)).array().square() / vars_.row(c).array()).sum();
      out(r, c) = log_prior_(c) + norm - 0.5 * maha;
    }
  }
  return out;
}

Labels GaussianNaiveBayes::predict(const MatrixXr& x) const { return argmax_rows(joint_log_likelihood(x)); }

Labels knn_predict(const MatrixXr& train_x, std::span<const int> train_y, const MatrixXr& query, int k,
                   int n_classes) {
  check_rows(train_x, train_y, "knn");
  if (n_classes < 0) n_classes = train_y.empty() ? 0 : *std::max_element(train_y.begin(), train_y.end()) + 1;
  const auto data = labeled_rows(train_y, n_classes, "knn");
  const auto n = static_cast<int>(data.rows.size());
  if (k < 1 || k > n) throw InvalidArgument("knn: k must lie in [1, " + std::to_string(n) + "]");
  if (query.cols() != train_x.cols()) throw DimensionError("knn: query width does not match training width");

  const MatrixXr x = subset_rows(train_x, data.rows);
  Labels out(static_cast<std::size_t>(query.rows()));
  std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
  std::vector<int> votes(static_cast<std::size_t>(n_classes));
  for (Index q = 0; q < query.rows(); ++q) {
    for (int i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] = {(x.row(i) - query.row(q)).squaredNorm(), i};
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    std::fill(votes.begin(), votes.end(), 0);
    for (int j = 0; j < k; ++j) ++votes[static_cast<std::size_t>(data.y[static_cast<std::size_t>(dist[static_cast<std::size_t>(j)].second)])];
    out[static_cast<std::size_t>(q)] = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return out;
}

void LogisticRegression::fit(const MatrixXr& x, std::span<const int> y, int n_classes, const LogRegConfig& cfg) {
  check_rows(x, y, "logistic regression");
  const auto data = labeled_rows(y, n_classes, "logistic regression");
  if (distinct(data.y) < 2) throw InvalidArgument("logistic regression: need at least two classes");
  const nn::LayerSpec spec{n_classes, nn::Activation::softmax, 0.0};
  net_ = nn::DenseNet<float>::build(x.cols(), std::span(&spec, 1), cfg.train.seed);
  // Zero start: the fit then depends on features only through their values, not their order.
  net_.layer(0).weight.setZero();
  auto train = cfg.train;
  train.loss = nn::Loss::cross_entropy;
  train.l2 = cfg.l2;
  nn::train(net_, subset_rows(x, data.rows), nn::one_hot<float>(data.y, n_classes), train);
}

MatrixXr LogisticRegression::probabilities(const MatrixXr& x) const {
  if (net_.empty()) throw InvalidArgument("logistic regression: model is not fitted");
  return nn::predict(net_, x).cast<double>();
}

Labels LogisticRegression::predict(const MatrixXr& x) const { return argmax_rows(probabilities(x)); }

void MlpClassifier::fit(const MatrixXr& x, std::span<const int> y, int n_classes, int hidden_layers,
                        const MlpConfig& cfg) {
  check_rows(x, y, "mlp");
  if (hidden_layers < 1) throw InvalidArgument("mlp: need at least one hidden layer");
  const auto data = labeled_rows(y, n_classes, "mlp");
  if (distinct(data.y) < 2) throw InvalidArgument("mlp: need at least two classes");
  std::vector<nn::LayerSpec> specs(static_cast<std::size_t>(hidden_layers),
                                   nn::LayerSpec{cfg.hidden_width, nn::Activation::relu, cfg.dropout});
  specs.push_back({n_classes, nn::Activation::softmax, 0.0});
  net_ = nn::DenseNet<float>::build(x.cols(), specs, cfg.train.seed);
  auto train = cfg.train;
  train.loss = nn::Loss::cross_entropy;
  trace_ = nn::train(net_, subset_rows(x, data.rows), nn::one_hot<float>(data.y, n_classes), train);
  hidden_layers_ = hidden_layers;
}

Labels MlpClassifier::predict(const MatrixXr& x) const {
  if (net_.empty()) throw InvalidArgument("mlp: model is not fitted");
  return argmax_rows(nn::predict(net_, x));
}

MlpFamily mlp_family_fit(const MatrixXr& train_x, std::span<const int> train_y, const MatrixXr& valid_x,
                         std::span<const int> valid_y, int n_classes, const std::vector<int>& depths,
                         const MlpConfig& cfg) {
  if (depths.empty()) throw InvalidArgument("mlp family: no depths requested");
  check_rows(valid_x, valid_y, "mlp family");
  MlpFamily fam;
  fam.depths = depths;
  std::vector<std::future<MlpClassifier>> jobs;
  for (const int d : depths) {
    jobs.push_back(std::async(std::launch::async, [&, d] {
      MlpClassifier m;
      m.fit(train_x, train_y, n_classes, d, cfg);
      return m;
    }));
  }
  for (auto& j : jobs) fam.models.push_back(j.get());
  for (const auto& m : fam.models) fam.reports.push_back(evaluate(m.predict(valid_x), valid_y, n_classes));
  for (std::size_t i = 1; i < fam.reports.size(); ++i)
    if (fam.reports[i].balanced_accuracy > fam.reports[fam.best].balanced_accuracy) fam.best = i;
  return fam;
}

nlohmann::json ReportRecord::to_json() const {
  nlohmann::json j = {{"representation", representation}, {"reducer", reducer}, {"task", task},
                      {"model", model}, {"depth", nullptr}, {"k", nullptr}};
  if (depth) j["depth"] = *depth;
  if (k) j["k"] = *k;
  j["report"] = report.to_json();
  j["metadata"] = metadata;
  return j;
}

}  // namespace vulnspace::classify
