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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any failed.

#include "graphml_check.hpp"
#include "oracles.hpp"

#include "vulnspace/binio.hpp"
#include "vulnspace/classify.hpp"
#include "vulnspace/cluster.hpp"
#include "vulnspace/eval.hpp"
#include "vulnspace/nn.hpp"
#include "vulnspace/pipeline.hpp"
#include "vulnspace/project.hpp"
#include "vulnspace/reduce.hpp"
#include "vulnspace/theory.hpp"
#include "vulnspace/wordvec.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <iomanip>
#include <sstream>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace vulnspace;
using vulnspace::testing::Blobs;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

int failures = 0;

void criterion(const std::string& name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.fail(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (limit_seconds > 0 && secs > limit_seconds)
    o.fail("took " + std::to_string(secs) + " s, limit " + std::to_string(limit_seconds) + " s");
  std::ostringstream line;
  line << (o.pass ? "PASS " : "FAIL ") << name << " (" << std::fixed;
  line.precision(2);
  line << secs << " s)";
  if (!o.detail.empty()) line << ": " << o.detail;
  std::cout << line.str() << std::endl;
  if (!o.pass) ++failures;
}

// ---------------------------------------------------------------------------

Outcome metric_oracle() {
  Outcome o;
  std::mt19937_64 rng(101);
  for (int t = 0; t < 100; ++t) {
    const int rows = 2 + static_cast<int>(rng() % 6);
    const int cols = 2 + static_cast<int>(rng() % 7);
    Eigen::MatrixXd counts(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) counts(i, j) = static_cast<double>(rng() % 4 == 0 ? 0 : rng() % 20);
    counts(0, 0) += 1;
    const auto ref = testing::brute_force_scores(counts);

    // Expand to label arrays so the whole scoring path is exercised.
    Labels truth, clusters;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        for (int c = 0; c < static_cast<int>(counts(i, j)); ++c) {
          truth.push_back(i);
          clusters.push_back(j);
        }
    const auto s = eval::score(truth, clusters);
    const auto table = eval::contingency(truth, clusters);
    const double diffs[] = {
        std::abs(eval::entropy(table.class_totals) - ref.h_class),
        std::abs(eval::entropy(table.cluster_totals) - ref.h_cluster),
        std::abs(eval::conditional_entropy_classes_given_clusters(table) - ref.h_class_given_cluster),
        std::abs(s.mutual_information - ref.mi),
        std::abs(s.homogeneity - ref.homogeneity),
        std::abs(s.completeness - ref.completeness),
        std::abs(s.nmi - ref.nmi),
        std::abs(s.v_measure - ref.v),
    };
    for (double d : diffs)
      if (!(d <= 1e-10)) o.fail("table " + std::to_string(t) + " differs by " + std::to_string(d));
    if (!(std::abs(s.nmi - s.v_measure) <= 1e-12))
      o.fail("table " + std::to_string(t) + ": NMI and V differ by " + std::to_string(std::abs(s.nmi - s.v_measure)));
  }
  return o;
}

Outcome hand_fixtures() {
  Outcome o;
  const auto s = eval::score(Labels{0, 0, 1, 1}, Labels{0, 1, 2, 3});
  if (std::abs(s.homogeneity - 1.0) > 1e-12) o.fail("homogeneity " + std::to_string(s.homogeneity));
  if (std::abs(s.completeness - 0.5) > 1e-12) o.fail("completeness " + std::to_string(s.completeness));
  if (std::abs(s.v_measure - 2.0 / 3.0) > 1e-12) o.fail("V " + std::to_string(s.v_measure));
  const auto r = classify::evaluate(Labels{0, 0, 0, 0}, Labels{0, 0, 0, 1});
  if (std::abs(r.accuracy - 0.75) > 1e-12) o.fail("accuracy " + std::to_string(r.accuracy));
  if (std::abs(r.balanced_accuracy - 0.5) > 1e-12) o.fail("balanced accuracy " + std::to_string(r.balanced_accuracy));
  return o;
}

Outcome gradients() {
  Outcome o;
  double worst = 0;
  std::mt19937_64 rng(202);
  const nn::Activation hidden_kinds[] = {nn::Activation::relu, nn::Activation::linear, nn::Activation::sigmoid,
                                         nn::Activation::softmax};
  const std::pair<nn::Loss, nn::Activation> heads[] = {
      {nn::Loss::mse, nn::Activation::linear},        {nn::Loss::mse, nn::Activation::relu},
      {nn::Loss::mse, nn::Activation::sigmoid},       {nn::Loss::mse, nn::Activation::softmax},
      {nn::Loss::cross_entropy, nn::Activation::softmax},
      {nn::Loss::binary_cross_entropy, nn::Activation::sigmoid}};
  for (int net_id = 0; net_id < 20; ++net_id) {
    const Index in = 2 + static_cast<Index>(rng() % 4);
    const int hidden = static_cast<int>(rng() % 3);
    std::vector<nn::LayerSpec> specs;
    for (int h = 0; h < hidden; ++h)
      specs.push_back({2 + static_cast<Index>(rng() % 4), hidden_kinds[(net_id + h) % 4], 0.0});
    const Index out = 2 + static_cast<Index>(rng() % 3);
    for (const auto& [loss, last] : heads) {
      auto s = specs;
      s.push_back({out, last, 0.0});
      auto net = nn::DenseNet<double>::build(in, s, rng());
      for (std::size_t l = 0; l < net.depth(); ++l) net.layer(l).bias.setRandom();
      const MatrixXr x = MatrixXr::Random(5, in);
      MatrixXr y = MatrixXr::Zero(5, out);
      for (Index r = 0; r < 5; ++r) {
        if (loss == nn::Loss::cross_entropy)
          y(r, static_cast<Index>(rng() % static_cast<std::uint64_t>(out))) = 1;
        else if (loss == nn::Loss::binary_cross_entropy)
          for (Index c = 0; c < out; ++c) y(r, c) = static_cast<double>(rng() % 2);
        else
          y.row(r).setRandom();
      }
      const auto g = nn::backward(net, x, y, loss);
      const double err = testing::max_gradient_error(net, x, y, loss, g);
      worst = std::max(worst, err);
      if (!(err <= 1e-4))
        o.fail("net " + std::to_string(net_id) + " loss " + std::string(nn::to_string(loss)) + "/" +
               std::string(nn::to_string(last)) + ": relative error " + std::to_string(err));
    }
  }
  if (o.pass) {
    std::ostringstream s;
    s << "worst relative error " << std::scientific << std::setprecision(2) << worst;
    o.detail = s.str();
  }
  return o;
}

Outcome clustering_oracles() {
  Outcome o;
  std::mt19937_64 rng(303);
  std::normal_distribution<double> normal;
  // kmeans against every partition.
  for (int f = 0; f < 40; ++f) {
    const Index n = 3 + static_cast<Index>(f % 6);
    const int k = 2 + f % std::min<int>(3, static_cast<int>(n) - 2);
    MatrixXr x(n, 2);
    for (Index i = 0; i < n; ++i) x.row(i) << normal(rng), normal(rng);
    const double best = testing::exhaustive_kmeans_inertia(x, k);
    const auto res = cluster::kmeans(x, k, rng());
    if (!(res.inertia <= best * (1 + 1e-9) + 1e-12))
      o.fail("kmeans fixture " + std::to_string(f) + ": inertia " + std::to_string(res.inertia) + " > optimum " +
             std::to_string(best));
  }
  // OPTICS eps cut against DBSCAN.
  for (int t = 0; t < 20; ++t) {
    const Blobs b = testing::make_blobs(3, 15, 2, 0.5, 4.0, 5, rng());
    const int min_pts = 3 + t % 4;
    const double eps = 0.4 + 0.05 * (t % 6);
    const auto res = cluster::optics(b.x, min_pts, {eps, std::nullopt, 0});
    const Labels ref = testing::dbscan(b.x, eps, min_pts);
    if (!testing::same_partition(res.assignment.labels, ref))
      o.fail("optics set " + std::to_string(t) + " differs from DBSCAN");
  }
  // Ward costs.
  for (int t = 0; t < 20; ++t) {
    const MatrixXr x = MatrixXr::NullaryExpr(20, 3, [&]() { return normal(rng); });
    const auto d = cluster::ward_dendrogram(x);
    for (std::size_t s = 1; s < d.size(); ++s)
      if (d[s].cost < d[s - 1].cost * (1 - 1e-12))
        o.fail("ward set " + std::to_string(t) + " step " + std::to_string(s) + " cost decreased");
  }
  return o;
}

Outcome density_beats_kmeans() {
  Outcome o;
  int wins = 0;
  std::ostringstream trace;
  for (int trial = 0; trial < 20; ++trial) {
    const Blobs b = testing::make_blobs(5, 40, 20, 1.0, 8.0, 20, 1000 + static_cast<std::uint64_t>(trial));
    const auto km = cluster::kmeans(b.x, 5, static_cast<std::uint64_t>(trial));
    const auto op = cluster::optics(b.x, 10, {std::nullopt, 0.05, 0});
    const double h_km = eval::score(b.labels, km.assignment.labels, eval::NoisePolicy::exclude).homogeneity;
    const double h_op = eval::score(b.labels, op.assignment.labels, eval::NoisePolicy::exclude).homogeneity;
    if (h_op >= h_km) ++wins;
    trace << (trial ? " " : "") << std::setprecision(3) << h_op << "/" << h_km;
  }
  if (wins < 15) o.fail("OPTICS at least as homogeneous in " + std::to_string(wins) + " of 20 (" + trace.str() + ")");
  else o.detail = std::to_string(wins) + " of 20 trials";
  return o;
}

Outcome supervised_beats_pca() {
  Outcome o;
  int wins = 0;
  std::ostringstream trace;
  for (int trial = 0; trial < 20; ++trial) {
    std::mt19937_64 rng(2000 + static_cast<std::uint64_t>(trial));
    std::normal_distribution<double> normal;
    const Index n = 1000, dims = 50;
    MatrixXr x = MatrixXr::NullaryExpr(n, dims, [&]() { return normal(rng); });
    Labels y(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      // Sign pattern of a product and a radius: neither is linear in x.
      const int a = x(i, 0) * x(i, 1) > 0 ? 1 : 0;
      const int b = std::abs(x(i, 2)) > 0.674 ? 1 : 0;
      y[static_cast<std::size_t>(i)] = 2 * a + b;
    }
    const Index ntr = 800;
    const MatrixXr xtr = x.topRows(ntr), xte = x.bottomRows(n - ntr);
    const Labels ytr(y.begin(), y.begin() + ntr), yte(y.begin() + ntr, y.end());

    const auto pca = reduce::pca_fit(xtr, 10);
    const double acc_pca =
        classify::evaluate(classify::knn_predict(reduce::pca_transform(pca, xtr), ytr, reduce::pca_transform(pca, xte), 5, 4),
                           yte, 4)
            .accuracy;

    reduce::BottleneckConfig cfg;
    cfg.hidden = {64};
    cfg.train.epochs = 150;
    cfg.train.batch_size = 64;
    cfg.train.learning_rate = 3e-3;
    cfg.train.seed = static_cast<std::uint64_t>(trial);
    const auto model = reduce::bottleneck_fit<float>(xtr, {{"y", ytr, 4}}, 10, cfg);
    const MatrixXr ctr = model.encode(xtr).cast<double>(), cte = model.encode(xte).cast<double>();
    const double acc_sup = classify::evaluate(classify::knn_predict(ctr, ytr, cte, 5, 4), yte, 4).accuracy;
    if (acc_sup > acc_pca) ++wins;
    trace << (trial ? " " : "") << std::setprecision(3) << acc_sup << "/" << acc_pca;
  }
  if (wins < 15) o.fail("bottleneck ahead in " + std::to_string(wins) + " of 20 (" + trace.str() + ")");
  else o.detail = std::to_string(wins) + " of 20 trials";
  return o;
}

Outcome embedding_contract() {
  Outcome o;
  std::mt19937_64 rng(404);
  wordvec::VectorStore store;
  store.dim = 16;
  store.word_matrix = Matrix<float>::Random(40, 16);
  for (Index i = 0; i < 40; ++i) {
    store.words.push_back("w" + std::to_string(i));
    store.vocab.emplace(store.words.back(), i);
  }
  for (int t = 0; t < 1000; ++t) {
    std::vector<std::string> tokens;
    const int len = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < len; ++i) tokens.push_back("w" + std::to_string(rng() % 40));
    const auto base = wordvec::embed_doc(store, tokens);
    if (std::abs(base.vector.norm() - 1.0) > 1e-9) {
      o.fail("multiset " + std::to_string(t) + " has norm " + std::to_string(base.vector.norm()));
      continue;
    }
    auto shuffled = tokens;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    if (wordvec::embed_doc(store, shuffled).vector != base.vector)
      o.fail("multiset " + std::to_string(t) + " changes under permutation");

    auto scaled = store;
    const Index row = store.vocab.at(tokens[rng() % tokens.size()]);
    scaled.word_matrix.row(row) *= static_cast<float>(0.1 + 10.0 * std::uniform_real_distribution<>()(rng));
    const double gap = (wordvec::embed_doc(scaled, tokens).vector - base.vector).cwiseAbs().maxCoeff();
    if (gap > 1e-6) o.fail("multiset " + std::to_string(t) + " changes by " + std::to_string(gap) + " under scaling");
  }

  // Published FNV-1a 32-bit vectors.
  const std::pair<const char*, std::uint32_t> fnv[] = {{"", 0x811c9dc5u}, {"a", 0xe40c292cu}, {"foobar", 0xbf9cf968u}};
  for (const auto& [text, hash] : fnv)
    if (wordvec::fnv1a(text) != hash) o.fail(std::string("fnv1a(\"") + text + "\") mismatch");

  // The n-gram list of the standard example word, and bucket ids from the reference hash.
  const std::vector<std::string> where3 = {"<wh", "whe", "her", "ere", "re>"};
  if (wordvec::subword_ngrams("where", 3, 3) != where3) o.fail("n-grams of \"where\" at n=3");
  for (const char* word : {"where", "overflow", "sql_injection", "résumé", "ab"}) {
    const auto grams = wordvec::subword_ngrams(word);
    const auto ids = wordvec::subword_hashes(word);
    if (grams.size() != ids.size()) {
      o.fail(std::string("hash count for ") + word);
      continue;
    }
    for (std::size_t i = 0; i < grams.size(); ++i)
      if (ids[i] != testing::reference_fnv1a(grams[i]) % wordvec::kDefaultBuckets)
        o.fail(std::string("bucket of \"") + grams[i] + "\"");
  }
  return o;
}

Outcome tsne_sanity() {
  Outcome o;
  const Blobs b = testing::make_blobs(2, 100, 50, 1.0, 10.0, 0, 505);
  const MatrixXr p = project::joint_probabilities(b.x, 30.0);
  if (std::abs(p.sum() - 1.0) > 1e-9) o.fail("P sums to " + std::to_string(p.sum()));
  project::TsneParams params;
  params.seed = 9;
  const auto first = project::tsne(b.x, params);
  const auto second = project::tsne(b.x, params);
  const double sil = project::silhouette(first.coords, b.labels);
  if (!(sil > 0.5)) o.fail("silhouette " + std::to_string(sil));
  if (first.coords.size() != second.coords.size() ||
      std::memcmp(first.coords.data(), second.coords.data(), sizeof(double) * static_cast<std::size_t>(first.coords.size())) != 0)
    o.fail("coordinates differ between runs with the same seed");
  if (o.pass) o.detail = "silhouette " + std::to_string(sil);
  return o;
}

Outcome theory_shape() {
  Outcome o;
  // Unit-norm rows like description embeddings; within-cluster cosine is
  // about 0.8.
  Blobs b = testing::make_blobs(2, 100, 8, 0.3, 1.0, 0, 606);
  b.x.rowwise().normalize();
  const auto axioms = theory::axiom_library();
  const auto models = theory::synthesize(b.x, axioms);
  int good = 0;
  std::ostringstream trace;
  for (const auto& m : models) {
    const double a1 = m.result("A1")->satisfaction;
    const double a5 = m.result("A5")->satisfaction;  // mean of 1 - co over sampled space pairs
    trace << " seed " << m.seed << ": A1 " << a1 << ", mean co " << 1 - a5 << ";";
    if (a1 >= 0.9 && 1 - a5 <= 0.3) ++good;

    const MatrixXr u = b.x.topRows(50), v = b.x.bottomRows(50);
    if (m.co(u, v) != m.co(v, u)) o.fail("co is not symmetric for seed " + std::to_string(m.seed));
  }
  if (good < 1) o.fail("no seed met both:" + trace.str());

  std::vector<std::string> ids, text;
  for (Index i = 0; i < b.x.rows(); ++i) {
    ids.push_back("CVE-2020-" + std::to_string(1000 + i));
    text.push_back("description <" + std::to_string(i) + "> & more");
  }
  std::size_t previous = std::numeric_limits<std::size_t>::max();
  for (double threshold : {0.05, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 0.99, 1.0}) {
    const auto g = theory::extract_graph(models.front(), b.x, ids, text, threshold, 1000);
    if (g.edges.size() > previous) o.fail("edge count grew at threshold " + std::to_string(threshold));
    previous = g.edges.size();
    std::ostringstream xml;
    theory::write_graphml(xml, g);
    if (const auto err = testing::validate_graphml(xml.str()); !err.empty())
      o.fail("graphml at threshold " + std::to_string(threshold) + ": " + err);
  }
  if (o.pass) o.detail = std::to_string(good) + " of " + std::to_string(models.size()) + " seeds;" + trace.str();
  return o;
}

Outcome end_to_end() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("vulnspace_e2e_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path data = VULNSPACE_TEST_DATA;
  nlohmann::json config = {
      {"seed", 11},
      {"paths",
       {{"feeds", (data / "nvdcve-1.1-fixture.json").string()},
        {"vectors", (data / "vectors.vec").string()},
        {"lexicon", (fs::path(VULNSPACE_SOURCE_DIR) / "data/lexicon/products.txt").string()},
        {"workdir", "unused"}}},
      {"ingest", {{"first_year", 2015}, {"last_year", 2020}}},
      {"reduce", {{"dim", 8}, {"ae", {{"hidden", {32}}, {"epochs", 50}, {"batch_size", 64}}},
                  {"bottleneck", {{"hidden", {32}}, {"epochs", 50}}}}},
      {"cluster", {{"representations", {"pca", "nlp"}}, {"k", 5}, {"min_pts", 5}, {"score_tasks", {"cwe", "cvss_v3.AV"}}}},
      {"classify", {{"tasks", {"cwe", "cvss_v3.AV", "cvss_v2.AC"}}, {"mlp_depths", {1, 2}}, {"mlp_width", 32},
                    {"mlp_epochs", 30}, {"logreg_epochs", 50}}},
      {"project", {{"iterations", 300}, {"exaggeration_iterations", 100}, {"perplexity", 15.0}}},
      {"theory", {{"epochs", 60}, {"eval_samples", 256}, {"seeds", {0, 1}}, {"threshold", 0.7}}},
  };
  const fs::path config_path = root / "config.json";
  binio::write_file_atomic(config_path, config.dump(2));

  const char* compared[] = {"report.md",         "report_classify.csv", "report_cluster.csv",
                            "classify_reports.json", "cluster_scores.json", "bundle.vbnd",
                            "graph.graphml",     "static/points.json"};
  std::vector<std::string> first;
  for (int run = 0; run < 2; ++run) {
    const fs::path work = root / ("run" + std::to_string(run));
    std::ostringstream out, err;
    const int rc = cli::main({"run", "-c", config_path.string(), "--workdir", work.string()}, out, err);
    if (rc != 0) {
      o.fail("run " + std::to_string(run) + " exited " + std::to_string(rc) + ": " + err.str());
      return o;
    }
    for (std::size_t i = 0; i < std::size(compared); ++i) {
      const std::string bytes = binio::read_file(work / compared[i]);
      if (run == 0)
        first.push_back(bytes);
      else if (bytes != first[i])
        o.fail(std::string(compared[i]) + " differs between runs");
    }
    if (run == 0) {
      const auto split = nlohmann::json::parse(binio::read_file(work / "split.json"));
      const auto ingest = nlohmann::json::parse(binio::read_file(work / "ingest.json"));
      const std::size_t n = ingest.at("records");
      if (n != 200) o.fail("fixture ingested " + std::to_string(n) + " records");
      if (split.at("train").size() != 180 || split.at("validation").size() != 20)
        o.fail("split " + std::to_string(split.at("train").size()) + "/" +
               std::to_string(split.at("validation").size()));
    }
  }
  fs::remove_all(root);
  return o;
}

}  // namespace

int main() {
  criterion("metric_oracle_equivalence", 10, metric_oracle);
  criterion("hand_computed_fixtures", 0, hand_fixtures);
  criterion("gradient_correctness", 30, gradients);
  criterion("clustering_oracles", 0, clustering_oracles);
  criterion("density_clustering_homogeneity", 120, density_beats_kmeans);
  criterion("supervised_reduction_for_classification", 300, supervised_beats_pca);
  criterion("embedding_contract", 0, embedding_contract);
  criterion("tsne_sanity", 60, tsne_sanity);
  criterion("theory_shape", 300, theory_shape);
  criterion("end_to_end_determinism", 0, end_to_end);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
