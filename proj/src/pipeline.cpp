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

#include "vulnspace/pipeline.hpp"

#include "vulnspace/binio.hpp"
#include "vulnspace/classify.hpp"
#include "vulnspace/cluster.hpp"
#include "vulnspace/corpus.hpp"
#include "vulnspace/embedding.hpp"
#include "vulnspace/eval.hpp"
#include "vulnspace/project.hpp"
#include "vulnspace/reduce.hpp"
#include "vulnspace/server.hpp"
#include "vulnspace/temporal.hpp"
#include "vulnspace/textprep.hpp"
#include "vulnspace/theory.hpp"
#include "vulnspace/wordvec.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <future>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace vulnspace::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration.

json default_config() {
  return {
      {"seed", 0},
      {"paths", {{"feeds", nullptr}, {"vectors", nullptr}, {"workdir", nullptr}, {"lexicon", ""}, {"subwords", ""}}},
      {"ingest", {{"first_year", 1999}, {"last_year", 2020}, {"train_fraction", 0.9}}},
      {"textprep",
       {{"unicode_nfc", true},
        {"lowercase", true},
        {"urls", true},
        {"versions", true},
        {"cve_ids", true},
        {"punctuation", true}}},
      {"wordvec", {{"limit", 0}, {"threads", 0}}},
      {"reduce",
       {{"dim", reduce::kDefaultDim},
        {"methods", {"pca", "ae", "mlp_bottleneck"}},
        {"ae",
         {{"hidden", {500, 2000}},
          {"width_scale", 1.0},
          {"dropout", 0.1},
          {"epochs", 10000},
          {"batch_size", 1000},
          {"learning_rate", 1e-3}}},
        {"bottleneck",
         {{"hidden", {256}},
          {"dropout", 0.0},
          {"epochs", 200},
          {"batch_size", 128},
          {"learning_rate", 1e-3},
          {"targets",
           {"cvss_v3.AV", "cvss_v3.AC", "cvss_v3.PR", "cvss_v3.UI", "cvss_v3.S", "cvss_v3.C", "cvss_v3.I",
            "cvss_v3.A"}}}}}},
      {"cluster",
       {{"representations", {"pca"}},
        {"methods", {"kmeans", "ward", "optics"}},
        {"k", 0},
        {"min_pts", 10},
        {"xi", 0.05},
        {"eps_cut", nullptr},
        {"prereduce", true},
        {"noise_policy", "exclude"},
        {"score_tasks", json::array()}}},
      {"classify",
       {{"representations", {"nlp", "pca", "ae", "mlp_bottleneck"}},
        {"tasks", json::array()},
        {"models", {"nb", "knn", "logreg", "mlp"}},
        {"knn_k", 5},
        {"l2", 1e-4},
        {"logreg_epochs", 200},
        {"logreg_batch_size", 256},
        {"logreg_learning_rate", 0.01},
        {"mlp_depths", {1, 2, 3}},
        {"mlp_width", 128},
        {"mlp_dropout", 0.0},
        {"mlp_epochs", 200},
        {"mlp_batch_size", 128},
        {"mlp_learning_rate", 1e-3}}},
      {"project",
       {{"representation", "nlp"},
        {"perplexity", 30.0},
        {"iterations", 1000},
        {"learning_rate", 200.0},
        {"early_exaggeration", 12.0},
        {"exaggeration_iterations", 250},
        {"max_n", 10000}}},
      {"evolve", {{"top", 10}}},
      {"theory",
       {{"enabled", true},
        {"representation", "pca"},
        {"epochs", 400},
        {"batch", 128},
        {"learning_rate", 0.01},
        {"rank", 0},
        {"exists_hidden", {32}},
        {"barrier", 10.0},
        {"margin", 0.03},
        {"perturbation", 0.05},
        {"eval_samples", 1024},
        {"seeds", {0, 1, 2}},
        {"bounds", json::object()},
        {"threshold", 0.9},
        {"max_nodes", 1000},
        {"max_rows", 2000}}},
      {"bundle", {{"spaces", {"nlp", "pca"}}, {"export_static", true}, {"neighbor_k", 10}}},
      {"serve", {{"host", "127.0.0.1"}, {"port", 8080}}},
  };
}

namespace {

std::string kind_name(const json& j) {
  if (j.is_boolean()) return "a boolean";
  if (j.is_number_integer() || j.is_number_unsigned()) return "an integer";
  if (j.is_number()) return "a number";
  if (j.is_string()) return "a string";
  if (j.is_array()) return "an array";
  if (j.is_object()) return "an object";
  return "null";
}

bool same_kind(const json& def, const json& v) {
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_number_integer() || def.is_number_unsigned()) return v.is_number_integer() || v.is_number_unsigned();
  if (def.is_number()) return v.is_number();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) {
    if (!v.is_array()) return false;
    const json proto = def.empty() ? json("") : def.front();
    return std::all_of(v.begin(), v.end(), [&](const json& e) { return same_kind(proto, e); });
  }
  return false;
}

void merge(const json& def, const json& in, json& out, const std::string& prefix, std::vector<std::string>& errors) {
  for (const auto& [k, v] : in.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (!def.contains(k)) {
      errors.push_back("unknown key \"" + key + "\"");
      continue;
    }
    const json& d = def.at(k);
    if (d.is_object()) {
      if (!v.is_object()) {
        errors.push_back(key + ": expected an object, got " + kind_name(v));
      } else if (d.empty()) {
        out[k] = v;  // open map, checked by its stage
      } else {
        merge(d, v, out[k], key, errors);
      }
    } else if (d.is_null()) {
      out[k] = v;
    } else if (same_kind(d, v)) {
      out[k] = v;
    } else {
      errors.push_back(key + ": expected " + kind_name(d) + ", got " + kind_name(v));
    }
  }
}

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  const fs::path path(p);
  return (path.is_absolute() || base.empty() ? path : base / path).lexically_normal().string();
}

}  // namespace

ConfigCheck check_config(const json& tree, const fs::path& base) {
  ConfigCheck c;
  c.config = default_config();
  if (!tree.is_object()) {
    c.errors.push_back("configuration must be an object");
    return c;
  }
  merge(default_config(), tree, c.config, "", c.errors);

  auto& paths = c.config["paths"];
  auto& feeds = paths["feeds"];
  if (feeds.is_string()) feeds = json::array({feeds});
  if (feeds.is_null()) {
    c.errors.push_back("missing required key \"paths.feeds\"");
  } else if (!feeds.is_array() || feeds.empty() ||
             !std::all_of(feeds.begin(), feeds.end(), [](const json& f) { return f.is_string(); })) {
    c.errors.push_back("paths.feeds: expected a path or a non-empty array of paths");
  } else {
    for (auto& f : feeds) f = resolve(base, f.get<std::string>());
  }
  for (const char* key : {"vectors", "workdir"}) {
    auto& p = paths[key];
    if (p.is_null())
      c.errors.push_back(std::string("missing required key \"paths.") + key + "\"");
    else if (!p.is_string() || p.get<std::string>().empty())
      c.errors.push_back(std::string("paths.") + key + ": expected a path");
    else
      p = resolve(base, p.get<std::string>());
  }
  for (const char* key : {"lexicon", "subwords"}) paths[key] = resolve(base, paths[key].get<std::string>());
  const auto& eps = c.config["cluster"]["eps_cut"];
  if (!eps.is_null() && !eps.is_number()) c.errors.push_back("cluster.eps_cut: expected a number or null");
  return c;
}

ConfigCheck load_config(const fs::path& path) {
  std::string text;
  try {
    text = binio::read_file(path);
  } catch (const Error& e) {
    return {json::object(), {e.what()}};
  }
  json tree;
  try {
    tree = json::parse(text);
  } catch (const json::parse_error& e) {
    return {json::object(), {path.string() + ": " + e.what()}};
  }
  return check_config(tree, path.parent_path());
}

void apply_override(json& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw InvalidArgument("override must look like key.path=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &tree;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw InvalidArgument("bad override key \"" + key + "\"");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"ingest",  "embed",  "reduce", "cluster", "classify", "project",
                                                 "evolve",  "theory", "bundle", "report",  "serve"};
  return names;
}

// ---------------------------------------------------------------------------
// Work directory.

namespace {

// Configuration echoed into reports: everything except machine-specific paths.
json echo(const json& config) {
  json out = config;
  out.erase("paths");
  return out;
}

std::string representation_file(const std::string& rep) { return "embedding." + rep + ".vemb"; }
std::string representation_producer(const std::string& rep) { return rep == "nlp" ? "embed" : "reduce"; }

class Workdir {
 public:
  Workdir(const json& config, std::string stage, std::ostream* log)
      : root_(config.at("paths").at("workdir").get<std::string>()), config_(config), stage_(std::move(stage)),
        log_(log) {
    fs::create_directories(root_);
  }

  fs::path path(const std::string& name) const { return root_ / name; }

  fs::path need(const std::string& name, const std::string& producer) {
    const auto p = path(name);
    if (!fs::exists(p)) throw MissingArtifact(p, producer);
    inputs_.insert(name);
    return p;
  }

  bool has(const std::string& name) const { return fs::exists(path(name)); }

  void write(const std::string& name, std::string_view bytes) {
    binio::write_file_atomic(path(name), bytes);
    sidecar(name);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  /// For artifacts written by a module's own save function.
  void sidecar(const std::string& name) {
    json inputs = json::object();
    for (const auto& in : inputs_) inputs[in] = corpus::sha256_hex(binio::read_file(path(in)));
    const json meta = {{"artifact", name},
                       {"stage", stage_},
                       {"seed", config_.at("seed")},
                       {"inputs", inputs},
                       {"config", config_}};
    binio::write_file_atomic(path(name + ".meta.json"), meta.dump(2) + "\n");
    if (log_) *log_ << stage_ << ": wrote " << name << "\n";
  }

  std::ostream* log() const { return log_; }

 private:
  fs::path root_;
  const json& config_;
  std::string stage_;
  std::ostream* log_;
  std::set<std::string> inputs_;
};

std::uint64_t seed_of(const json& c) { return c.at("seed").get<std::uint64_t>(); }

template <typename T>
std::vector<T> list(const json& j) {
  return j.get<std::vector<T>>();
}

MatrixXr load_rep(Workdir& w, const std::string& rep) {
  return load_embedding(w.need(representation_file(rep), representation_producer(rep))).data;
}

corpus::Snapshot load_snap(Workdir& w) { return corpus::load_snapshot(w.need("snapshot.vsnp", "ingest")); }

corpus::Split load_split(Workdir& w) {
  const json j = json::parse(binio::read_file(w.need("split.json", "ingest")));
  return {j.at("train").get<std::vector<std::size_t>>(), j.at("validation").get<std::vector<std::size_t>>()};
}

std::vector<std::string> ids_of(const corpus::Snapshot& s) {
  std::vector<std::string> ids;
  ids.reserve(s.size());
  for (const auto& r : s.records) ids.push_back(r.id);
  return ids;
}

std::string csv_string(const std::function<void(std::ostream&)>& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

// ---------------------------------------------------------------------------
// Stages.

void stage_ingest(Workdir& w, const json& c) {
  const auto& ic = c.at("ingest");
  std::vector<fs::path> feeds;
  for (const auto& f : c.at("paths").at("feeds")) {
    feeds.emplace_back(f.get<std::string>());
    if (!fs::exists(feeds.back())) throw Error("feed file " + feeds.back().string() + " does not exist");
  }
  std::vector<corpus::Diagnostic> diags;
  const auto snap = corpus::ingest(feeds, {ic.at("first_year").get<int>(), ic.at("last_year").get<int>()}, {}, &diags);
  corpus::save_snapshot(w.path("snapshot.vsnp"), snap);
  w.sidecar("snapshot.vsnp");
  w.write("snapshot.csv", csv_string([&](std::ostream& o) { corpus::write_snapshot_csv(o, snap); }));
  const auto sp = corpus::split(snap, ic.at("train_fraction").get<double>(), seed_of(c));
  w.write_json("split.json", {{"train", sp.train}, {"validation", sp.validation}});
  std::map<std::string, long> kinds;
  json diag_list = json::array();
  for (const auto& d : diags) {
    ++kinds[d.kind];
    diag_list.push_back({{"item", d.item}, {"id", d.id}, {"kind", d.kind}, {"message", d.message}});
  }
  json sources = json::array();
  for (const auto& s : snap.source_files) sources.push_back({{"name", s.name}, {"sha256", s.digest}});
  w.write_json("ingest.json", {{"records", snap.size()},
                               {"train", sp.train.size()},
                               {"validation", sp.validation.size()},
                               {"diagnostic_counts", kinds},
                               {"diagnostics", diag_list},
                               {"sources", sources}});
  if (w.log())
    *w.log() << "ingest: " << snap.size() << " records, " << diags.size() << " diagnostics, split " << sp.train.size()
             << "/" << sp.validation.size() << "\n";
}

void stage_embed(Workdir& w, const json& c) {
  const auto snap = load_snap(w);
  const auto& paths = c.at("paths");
  textprep::PhraseLexicon lexicon;
  if (const auto lex = paths.at("lexicon").get<std::string>(); !lex.empty()) lexicon = textprep::PhraseLexicon::load(lex);
  const auto& tc = c.at("textprep");
  textprep::NormalizeOptions opts;
  opts.unicode_nfc = tc.at("unicode_nfc");
  opts.lowercase = tc.at("lowercase");
  opts.urls = tc.at("urls");
  opts.versions = tc.at("versions");
  opts.cve_ids = tc.at("cve_ids");
  opts.punctuation = tc.at("punctuation");

  const auto limit = c.at("wordvec").at("limit").get<std::size_t>();
  auto store = wordvec::load_vectors(paths.at("vectors").get<std::string>(),
                                     limit > 0 ? std::optional<std::size_t>(limit) : std::nullopt);
  if (const auto sub = paths.at("subwords").get<std::string>(); !sub.empty())
    wordvec::attach_subwords(store, wordvec::load_subwords(sub));

  std::vector<textprep::TokenSequence> docs;
  docs.reserve(snap.size());
  std::size_t dropped = 0;
  for (const auto& r : snap.records) {
    docs.push_back(textprep::preprocess(r.description, lexicon, opts));
    dropped += docs.back().dropped_count;
  }
  wordvec::BatchStats stats;
  MatrixXr x = wordvec::embed_batch(store, docs, &stats, c.at("wordvec").at("threads").get<unsigned>());
  save_embedding(w.path(representation_file("nlp")), {std::move(x), "nlp"});
  w.sidecar(representation_file("nlp"));
  w.write_json("embed.json", {{"rows", snap.size()},
                              {"dim", store.dim},
                              {"vocabulary", store.words.size()},
                              {"zero_rows", stats.zero_rows},
                              {"components", stats.components},
                              {"dropped_tokens", dropped},
                              {"rules_version", textprep::kRulesVersion}});
  if (stats.zero_rows > 0 && w.log())
    *w.log() << "embed: " << stats.zero_rows << " descriptions had no usable token and embed as zero\n";
}

nn::TrainConfig train_config(const json& j, std::uint64_t seed, nn::Loss loss, const std::string& prefix = "") {
  nn::TrainConfig t;
  t.epochs = j.at(prefix + "epochs").get<int>();
  t.batch_size = j.at(prefix + "batch_size").get<int>();
  t.learning_rate = j.at(prefix + "learning_rate").get<double>();
  t.loss = loss;
  t.seed = seed;
  return t;
}

void stage_reduce(Workdir& w, const json& c) {
  const auto snap = load_snap(w);
  const auto sp = load_split(w);
  const MatrixXr x = load_rep(w, "nlp");
  const MatrixXr train = classify::subset_rows(x, sp.train);
  const auto& rc = c.at("reduce");
  const Index d = rc.at("dim").get<Index>();
  const std::uint64_t seed = seed_of(c);
  json report = json::object();
  for (const auto& method : list<std::string>(rc.at("methods"))) {
    MatrixXr y;
    json info = json::object();
    if (method == "pca") {
      const auto model = reduce::pca_fit(train, d);
      y = reduce::pca_transform(model, x);
      info["explained_variance"] = std::vector<double>(model.explained_variance.data(),
                                                       model.explained_variance.data() + model.explained_variance.size());
      info["reconstruction_mse"] = reduce::reconstruction_mse(model, x);
    } else if (method == "ae") {
      const auto& ac = rc.at("ae");
      reduce::AutoencoderConfig cfg;
      cfg.hidden = list<Index>(ac.at("hidden"));
      cfg.width_scale = ac.at("width_scale");
      cfg.dropout = ac.at("dropout");
      cfg.train = train_config(ac, seed, nn::Loss::mse);
      const auto ae = reduce::ae_fit<float>(train, d, cfg);
      y = ae.encode(x).cast<double>();
      info["final_loss"] = ae.trace.loss.empty() ? 0.0 : ae.trace.loss.back();
      info["reconstruction_mse"] = reduce::reconstruction_mse(ae, x);
    } else if (method == "mlp_bottleneck") {
      const auto& bc = rc.at("bottleneck");
      reduce::BottleneckConfig cfg;
      cfg.hidden = list<Index>(bc.at("hidden"));
      cfg.dropout = bc.at("dropout");
      cfg.train = train_config(bc, seed, nn::Loss::cross_entropy);
      std::vector<reduce::HeadTarget> heads;
      for (const auto& t : classify::label_tasks(snap, list<std::string>(bc.at("targets"))))
        heads.push_back({t.name, classify::subset(t.targets, sp.train), t.class_count()});
      const auto model = reduce::bottleneck_fit<float>(train, heads, d, cfg);
      y = model.encode(x).cast<double>();
      info["heads"] = model.head_names;
      info["warnings"] = model.warnings;
      info["final_loss"] = model.trace.loss.empty() ? 0.0 : model.trace.loss.back();
    } else {
      throw InvalidArgument("reduce: unknown method \"" + method + "\"");
    }
    save_embedding(w.path(representation_file(method)), {std::move(y), method});
    w.sidecar(representation_file(method));
    report[method] = info;
  }
  w.write_json("reduce.json", report);
}

struct ClusterRun {
  std::string rep;
  std::string method;
  cluster::ClusterAssignment assignment;
  std::string extra_name;  // dendrogram or reachability CSV
  std::string extra;
};

int cluster_k(const json& cc, std::size_t n) {
  const int k = cc.at("k").get<int>();
  return k > 0 ? k : std::max(2, static_cast<int>(std::lround(static_cast<double>(n) / 30.0)));
}

ClusterRun run_clustering(const std::string& rep, const std::string& method, const MatrixXr& x, const json& cc,
                          std::uint64_t seed, const std::vector<std::string>& ids) {
  ClusterRun r{rep, method, {}, {}, {}};
  const int k = std::min<int>(cluster_k(cc, static_cast<std::size_t>(x.rows())), static_cast<int>(x.rows()));
  if (method == "kmeans") {
    r.assignment = cluster::kmeans(x, k, seed).assignment;
  } else if (method == "ward") {
    auto res = cluster::ward(x, cluster::WardCut{k, std::nullopt});
    r.assignment = std::move(res.assignment);
    r.extra_name = "dendrogram." + rep + ".csv";
    r.extra = csv_string([&](std::ostream& o) { cluster::write_dendrogram_csv(o, res.dendrogram); });
  } else if (method == "optics") {
    const MatrixXr xx = cc.at("prereduce").get<bool>() && x.cols() >= 2 ? cluster::prereduce_for_density(x) : x;
    cluster::OpticsExtraction how;
    if (cc.at("eps_cut").is_number())
      how.eps_cut = cc.at("eps_cut").get<double>();
    else
      how.xi = cc.at("xi").get<double>();
    auto res = cluster::optics(xx, cc.at("min_pts").get<int>(), how);
    r.assignment = std::move(res.assignment);
    r.extra_name = "reachability." + rep + ".csv";
    r.extra = csv_string([&](std::ostream& o) { cluster::write_reachability_csv(o, res.profile, ids); });
  } else {
    throw InvalidArgument("cluster: unknown method \"" + method + "\"");
  }
  r.assignment.method = method;
  return r;
}

void stage_cluster(Workdir& w, const json& c) {
  const auto snap = load_snap(w);
  load_rep(w, "nlp");
  const auto& cc = c.at("cluster");
  const auto ids = ids_of(snap);
  const auto policy = eval::noise_policy_from_string(cc.at("noise_policy").get<std::string>());
  const auto tasks = classify::label_tasks(snap, list<std::string>(cc.at("score_tasks")));
  json scores = json::array();
  for (const auto& rep : list<std::string>(cc.at("representations"))) {
    const MatrixXr x = load_rep(w, rep);
    std::vector<std::future<ClusterRun>> jobs;
    for (const auto& method : list<std::string>(cc.at("methods")))
      jobs.push_back(std::async(std::launch::async, [&, method] {
        return run_clustering(rep, method, x, cc, seed_of(c), ids);
      }));
    for (auto& job : jobs) {
      const auto run = job.get();
      const auto& a = run.assignment;
      w.write("clusters." + rep + "." + run.method + ".csv",
              csv_string([&](std::ostream& o) { cluster::write_assignment_csv(o, a, ids); }));
      if (!run.extra_name.empty()) w.write(run.extra_name, run.extra);
      for (const auto& t : tasks) {
        json row = {{"representation", "nlp"},
                    {"reducer", rep == "nlp" ? "none" : rep},
                    {"method", run.method},
                    {"task", t.name},
                    {"k", a.k},
                    {"noise", a.noise_count()},
                    {"params", a.params}};
        try {
          row["score"] = eval::to_json(eval::score(t.targets, a.labels, policy));
        } catch (const InvalidArgument& e) {
          row["score"] = nullptr;
          row["skipped"] = e.what();
        }
        scores.push_back(std::move(row));
      }
    }
  }
  w.write_json("cluster_scores.json",
               {{"noise_policy", cc.at("noise_policy")}, {"scores", scores}, {"config", echo(c)}});
}

void stage_classify(Workdir& w, const json& c) {
  const auto snap = load_snap(w);
  const auto sp = load_split(w);
  load_rep(w, "nlp");
  const auto& cc = c.at("classify");
  const auto seed = seed_of(c);
  const auto tasks = classify::label_tasks(snap, list<std::string>(cc.at("tasks")));
  const auto models = list<std::string>(cc.at("models"));
  json records = json::array();
  json skipped = json::array();
  for (const auto& rep : list<std::string>(cc.at("representations"))) {
    const MatrixXr x = load_rep(w, rep);
    for (const auto& task : tasks) {
      std::vector<std::size_t> tr, va;
      for (const auto i : sp.train)
        if (task.targets[i] != kMissing) tr.push_back(i);
      for (const auto i : sp.validation)
        if (task.targets[i] != kMissing) va.push_back(i);
      const Labels ytr = classify::subset(task.targets, tr);
      const Labels yva = classify::subset(task.targets, va);
      const std::set<int> distinct(ytr.begin(), ytr.end());
      if (distinct.size() < 2 || va.empty()) {
        skipped.push_back({{"representation", rep},
                           {"task", task.name},
                           {"reason", va.empty() ? "no labeled validation rows" : "fewer than two training classes"}});
        continue;
      }
      const MatrixXr xtr = classify::subset_rows(x, tr);
      const MatrixXr xva = classify::subset_rows(x, va);
      const int n = task.class_count();
      const auto add = [&](const std::string& model, const Labels& pred, std::optional<int> depth,
                           std::optional<int> k, json meta) {
        classify::ReportRecord r{"nlp", rep == "nlp" ? "none" : rep, task.name, model, depth, k,
                                 classify::evaluate(pred, yva, n), std::move(meta)};
        records.push_back(r.to_json());
      };
      for (const auto& m : models) {
        if (m == "nb") {
          classify::GaussianNaiveBayes nb;
          nb.fit(xtr, ytr, n);
          add(m, nb.predict(xva), {}, {}, json::object());
        } else if (m == "knn") {
          const int k = std::min<int>(cc.at("knn_k").get<int>(), static_cast<int>(tr.size()));
          add(m, classify::knn_predict(xtr, ytr, xva, k, n), {}, k, json::object());
        } else if (m == "logreg") {
          classify::LogRegConfig cfg;
          cfg.l2 = cc.at("l2");
          cfg.train = train_config(cc, seed, nn::Loss::cross_entropy, "logreg_");
          classify::LogisticRegression lr;
          lr.fit(xtr, ytr, n, cfg);
          add(m, lr.predict(xva), {}, {}, {{"l2", cfg.l2}});
        } else if (m == "mlp") {
          classify::MlpConfig cfg;
          cfg.hidden_width = cc.at("mlp_width").get<Index>();
          cfg.dropout = cc.at("mlp_dropout");
          cfg.train = train_config(cc, seed, nn::Loss::cross_entropy, "mlp_");
          const auto fam =
              classify::mlp_family_fit(xtr, ytr, xva, yva, n, list<int>(cc.at("mlp_depths")), cfg);
          for (std::size_t i = 0; i < fam.depths.size(); ++i) {
            classify::ReportRecord r{"nlp",     rep == "nlp" ? "none" : rep, task.name, m, fam.depths[i], {},
                                     fam.reports[i], {{"best", i == fam.best}, {"hidden_width", cfg.hidden_width}}};
            records.push_back(r.to_json());
          }
        } else {
          throw InvalidArgument("classify: unknown model \"" + m + "\"");
        }
      }
    }
  }
  w.write_json("classify_reports.json",
               {{"split", {{"train", sp.train.size()}, {"validation", sp.validation.size()}}},
                {"records", records},
                {"skipped", skipped},
                {"config", echo(c)}});
}

void stage_project(Workdir& w, const json& c) {
  const auto snap = load_snap(w);
  load_rep(w, "nlp");
  const auto& pc = c.at("project");
  const MatrixXr x = load_rep(w, pc.at("representation").get<std::string>());
  const auto rows = project::sample_rows(snap.size(), pc.at("max_n").get<std::size_t>(), seed_of(c));
  const MatrixXr xs = classify::subset_rows(x, rows);
  project::TsneParams params;
  params.perplexity = pc.at("perplexity");
  params.iterations = pc.at("iterations");
  params.learning_rate = pc.at("learning_rate");
  params.early_exaggeration = pc.at("early_exaggeration");
  params.exaggeration_iterations = pc.at("exaggeration_iterations");
  params.seed = seed_of(c);
  const auto proj = project::tsne(xs, params);
  std::vector<std::string> ids;
  for (const auto r : rows) ids.push_back(snap.records[r].id);
  w.write("projection.csv", csv_string([&](std::ostream& o) { project::write_projection_csv(o, proj.coords, ids); }));
  save_embedding(w.path("projection.vemb"), {proj.coords, "tsne"});
  w.sidecar("projection.vemb");
  json trace = json::array();
  for (const auto& p : proj.kl_trace) trace.push_back({{"iteration", p.iteration}, {"kl", p.kl}});
  w.write_json("projection.json", {{"rows", rows},
                                   {"representation", pc.at("representation")},
                                   {"params", params.to_json()},
                                   {"kl_trace", trace},
                                   {"warnings", proj.warnings}});
}

std::vector<std::pair<std::string, std::string>> cluster_runs(const json& c) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& rep : list<std::string>(c.at("cluster").at("representations")))
    for (const auto& m : list<std::string>(c.at("cluster").at("methods"))) out.emplace_back(rep, m);
  return out;
}

Labels load_assignment(Workdir& w, const std::string& rep, const std::string& method, std::size_t rows) {
  std::istringstream in(binio::read_file(w.need("clusters." + rep + "." + method + ".csv", "cluster")));
  auto a = cluster::read_assignment_csv(in, method);
  if (a.labels.size() != rows)
    throw DimensionError("clusters." + rep + "." + method + ".csv has " + std::to_string(a.labels.size()) +
                         " rows; the snapshot has " + std::to_string(rows));
  return a.labels;
}

void stage_evolve(Workdir& w, const json& c) {
  const auto snap = load_snap(w);
  json all = json::object();
  const auto top = c.at("evolve").at("top").get<std::size_t>();
  for (const auto& [rep, method] : cluster_runs(c)) {
    const auto labels = load_assignment(w, rep, method, snap.size());
    const auto e = temporal::evolution(labels, snap);
    const std::string key = rep + "." + method;
    w.write("evolution." + key + ".csv", csv_string([&](std::ostream& o) { temporal::write_evolution_csv(o, e); }));
    json j = temporal::to_json(e);
    json top_ids = json::array();
    for (const auto& s : temporal::top_n(e.series, top)) top_ids.push_back(s.cluster);
    j["top"] = top_ids;
    all[key] = std::move(j);
  }
  w.write_json("evolution.json", all);
}

temporal::Evolution evolution_from_json(const json& j) {
  temporal::Evolution e;
  e.first_year = j.at("first_year");
  e.last_year = j.at("last_year");
  e.noise = j.at("noise").get<std::vector<long>>();
  for (const auto& s : j.at("series")) {
    temporal::EvolutionSeries series;
    series.cluster = s.at("cluster");
    series.first_year = e.first_year;
    series.total = s.at("total");
    for (int y = e.first_year; y <= e.last_year; ++y) series.counts.push_back(s.at("counts").at(std::to_string(y)));
    e.series.push_back(std::move(series));
  }
  return e;
}

theory::CompositionGraph graph_from_json(const json& j) {
  theory::CompositionGraph g;
  g.threshold = j.at("threshold");
  g.advisory = j.value("advisory", "");
  for (const auto& n : j.at("nodes"))
    g.nodes.push_back({n.at("row"), n.at("cve_id"), n.at("excerpt"), n.at("degree")});
  for (const auto& e : j.at("edges")) g.edges.push_back({e.at("a"), e.at("b"), e.at("probability")});
  return g;
}

void stage_theory(Workdir& w, const json& c) {
  const auto& tc = c.at("theory");
  if (!tc.at("enabled").get<bool>()) {
    if (w.log()) *w.log() << "theory: disabled in the configuration\n";
    return;
  }
  const auto snap = load_snap(w);
  load_rep(w, "nlp");
  const MatrixXr full = load_rep(w, tc.at("representation").get<std::string>());
  const auto rows = project::sample_rows(snap.size(), tc.at("max_rows").get<std::size_t>(), seed_of(c) + 1);
  const MatrixXr x = classify::subset_rows(full, rows);
  std::vector<std::string> ids, descriptions;
  for (const auto r : rows) {
    ids.push_back(snap.records[r].id);
    descriptions.push_back(snap.records[r].description);
  }

  const auto axioms = theory::axiom_library(theory::bounds_from_json(tc.at("bounds")));
  theory::SynthesisConfig cfg;
  cfg.epochs = tc.at("epochs");
  cfg.batch = tc.at("batch");
  cfg.learning_rate = tc.at("learning_rate");
  cfg.rank = tc.at("rank");
  cfg.exists_hidden = list<Index>(tc.at("exists_hidden"));
  cfg.barrier = tc.at("barrier");
  cfg.margin = tc.at("margin");
  cfg.perturbation = tc.at("perturbation");
  cfg.eval_samples = tc.at("eval_samples");
  cfg.seeds.clear();
  for (const auto s : list<std::uint64_t>(tc.at("seeds"))) cfg.seeds.push_back(seed_of(c) + s);
  const auto models = theory::synthesize(x, axioms, cfg);
  theory::save_models(w.path("theory.vthy"), models);
  w.sidecar("theory.vthy");

  // Most axioms met, then highest total satisfaction, then the earlier seed.
  std::size_t best = 0;
  const auto rank = [](const theory::TheoryModel& m) {
    int met = 0;
    double total = 0;
    for (const auto& r : m.results) {
      met += r.met;
      total += r.satisfaction;
    }
    return std::pair{met, total};
  };
  for (std::size_t i = 1; i < models.size(); ++i)
    if (rank(models[i]) > rank(models[best])) best = i;

  auto g = theory::extract_graph(models[best], x, ids, descriptions, tc.at("threshold").get<double>(),
                                 tc.at("max_nodes").get<std::size_t>());
  for (auto& n : g.nodes) n.row = static_cast<Index>(rows[static_cast<std::size_t>(n.row)]);
  for (auto& e : g.edges) {
    e.a = static_cast<Index>(rows[static_cast<std::size_t>(e.a)]);
    e.b = static_cast<Index>(rows[static_cast<std::size_t>(e.b)]);
  }
  w.write("graph.graphml", csv_string([&](std::ostream& o) { theory::write_graphml(o, g); }));
  w.write_json("graph.json", theory::to_json(g));
  if (!g.advisory.empty() && w.log()) *w.log() << "theory: " << g.advisory << "\n";

  json model_list = json::array();
  for (const auto& m : models) {
    json results = json::array();
    for (const auto& r : m.results)
      results.push_back({{"id", r.id}, {"bound", r.bound}, {"satisfaction", r.satisfaction}, {"met", r.met}});
    model_list.push_back({{"seed", m.seed},
                          {"results", results},
                          {"final_objective", m.objective_trace.empty() ? 0.0 : m.objective_trace.back()},
                          {"notes", m.notes}});
  }
  json axiom_list = json::array();
  for (const auto& a : axioms)
    axiom_list.push_back({{"id", a.id}, {"statement", a.statement}, {"bound", a.bound}, {"structural", a.structural}});
  w.write_json("theory.json", {{"rows", rows.size()},
                               {"axioms", axiom_list},
                               {"models", model_list},
                               {"graph_model_seed", models[best].seed},
                               {"synthesis", cfg.to_json()},
                               {"caution", theory::kGraphCaution}});
}

// Restricts a graph over snapshot rows to `rows` and renumbers it.
theory::CompositionGraph restrict_graph(const theory::CompositionGraph& g, const std::vector<std::size_t>& rows) {
  std::map<Index, Index> index;
  for (std::size_t i = 0; i < rows.size(); ++i) index[static_cast<Index>(rows[i])] = static_cast<Index>(i);
  theory::CompositionGraph t;
  t.threshold = g.threshold;
  for (const auto& n : g.nodes)
    if (const auto it = index.find(n.row); it != index.end()) {
      auto copy = n;
      copy.row = it->second;
      t.nodes.push_back(std::move(copy));
    }
  for (const auto& e : g.edges) {
    const auto a = index.find(e.a);
    const auto b = index.find(e.b);
    if (a != index.end() && b != index.end()) t.edges.push_back({a->second, b->second, e.probability});
  }
  return theory::filter_graph(t, t.threshold);
}

void stage_bundle(Workdir& w, const json& c) {
  const auto snap = load_snap(w);
  load_rep(w, "nlp");
  const auto coords = load_embedding(w.need("projection.vemb", "project")).data;
  const json pj = json::parse(binio::read_file(w.need("projection.json", "project")));
  const auto rows = pj.at("rows").get<std::vector<std::size_t>>();
  if (static_cast<std::size_t>(coords.rows()) != rows.size())
    throw DimensionError("projection.vemb and projection.json disagree on the row count");

  server::AnalysisBundle b;
  b.snapshot.source_files = snap.source_files;
  b.snapshot.created = snap.created;
  for (const auto r : rows) b.snapshot.records.push_back(snap.records.at(r));
  b.projection = coords;
  for (const auto& [rep, method] : cluster_runs(c)) {
    const auto labels = load_assignment(w, rep, method, snap.size());
    b.assignments.push_back({rep + "." + method, classify::subset(labels, rows)});
  }
  b.overlays = server::label_overlays(b.snapshot);
  for (const auto& name : list<std::string>(c.at("bundle").at("spaces")))
    b.spaces.push_back({name, classify::subset_rows(load_rep(w, name), rows).cast<float>()});
  const json ev = json::parse(binio::read_file(w.need("evolution.json", "evolve")));
  for (const auto& [key, e] : ev.items()) b.evolution.emplace(key, evolution_from_json(e));
  if (c.at("theory").at("enabled").get<bool>()) {
    const auto g = graph_from_json(json::parse(binio::read_file(w.need("graph.json", "theory"))));
    b.graph = rows.size() == snap.size() ? g : restrict_graph(g, rows);
  }
  b.metadata = {{"config", echo(c)}, {"rows", rows.size()}, {"snapshot_rows", snap.size()}};
  if (b.graph) b.metadata["caution"] = theory::kGraphCaution;
  b = server::bundle(std::move(b));
  server::save_bundle(w.path("bundle.vbnd"), b);
  w.sidecar("bundle.vbnd");
  if (c.at("bundle").at("export_static").get<bool>()) {
    const auto files = server::export_static(b, w.path("static"), c.at("bundle").at("neighbor_k").get<int>());
    if (w.log()) *w.log() << "bundle: exported " << files.size() << " static files\n";
  }
}

std::string fixed(const json& v) {
  if (v.is_null()) return "";
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v.get<double>();
  return s.str();
}

std::string opt_int(const json& v) { return v.is_null() ? "" : std::to_string(v.get<long>()); }

void stage_report(Workdir& w, const json&) {
  const json cr = json::parse(binio::read_file(w.need("classify_reports.json", "classify")));
  const json cs = json::parse(binio::read_file(w.need("cluster_scores.json", "cluster")));

  std::ostringstream csv, md;
  csv << "representation,reducer,task,model,depth,k,accuracy,balanced_accuracy,precision,recall,f1,evaluated\n";
  md << "# Classifier reports\n\n"
     << "| representation | reducer | task | model | depth | k | accuracy | balanced accuracy | precision | recall | f1 "
        "| n |\n"
     << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : cr.at("records")) {
    const auto& rep = r.at("report");
    const std::vector<std::string> cells = {r.at("representation"),        r.at("reducer"),
                                            r.at("task"),                  r.at("model"),
                                            opt_int(r.at("depth")),        opt_int(r.at("k")),
                                            fixed(rep.at("accuracy")),     fixed(rep.at("balanced_accuracy")),
                                            fixed(rep.at("precision")),    fixed(rep.at("recall")),
                                            fixed(rep.at("f1")),           std::to_string(rep.at("evaluated").get<long>())};
    for (std::size_t i = 0; i < cells.size(); ++i) csv << (i ? "," : "") << cells[i];
    csv << "\n";
    md << "|";
    for (const auto& cell : cells) md << " " << cell << " |";
    md << "\n";
  }
  w.write("report_classify.csv", csv.str());

  std::ostringstream ccsv;
  ccsv << "representation,reducer,method,task,k,noise,nmi,homogeneity,completeness,v_measure,coverage\n";
  md << "\n# Cluster scores (noise policy: " << cs.at("noise_policy").get<std::string>() << ")\n\n"
     << "| representation | reducer | method | task | k | noise | NMI | homogeneity | completeness | V | coverage |\n"
     << "|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : cs.at("scores")) {
    const auto& s = r.at("score");
    const auto get = [&](const char* key) { return s.is_null() ? std::string() : fixed(s.at(key)); };
    const std::vector<std::string> cells = {r.at("representation"), r.at("reducer"),      r.at("method"),
                                            r.at("task"),           opt_int(r.at("k")),   opt_int(r.at("noise")),
                                            get("nmi"),             get("homogeneity"),   get("completeness"),
                                            get("v_measure"),       get("coverage")};
    for (std::size_t i = 0; i < cells.size(); ++i) ccsv << (i ? "," : "") << cells[i];
    ccsv << "\n";
    md << "|";
    for (const auto& cell : cells) md << " " << cell << " |";
    md << "\n";
  }
  w.write("report_cluster.csv", ccsv.str());
  w.write("report.md", md.str());
}

}  // namespace

void run_stage(const std::string& stage, const StageContext& ctx) {
  Workdir w(ctx.config, stage, ctx.log);
  const auto& c = ctx.config;
  if (stage == "ingest") return stage_ingest(w, c);
  if (stage == "embed") return stage_embed(w, c);
  if (stage == "reduce") return stage_reduce(w, c);
  if (stage == "cluster") return stage_cluster(w, c);
  if (stage == "classify") return stage_classify(w, c);
  if (stage == "project") return stage_project(w, c);
  if (stage == "evolve") return stage_evolve(w, c);
  if (stage == "theory") return stage_theory(w, c);
  if (stage == "bundle") return stage_bundle(w, c);
  if (stage == "report") return stage_report(w, c);
  if (stage == "serve") return serve(ctx, false);
  throw InvalidArgument("unknown stage \"" + stage + "\"");
}

namespace {
std::atomic<server::Service*> g_service{nullptr};
extern "C" void on_signal(int) {
  if (auto* s = g_service.load()) s->stop();
}
}  // namespace

void serve(const StageContext& ctx, bool check_only) {
  Workdir w(ctx.config, "serve", ctx.log);
  auto b = std::make_shared<const server::AnalysisBundle>(server::load_bundle(w.need("bundle.vbnd", "bundle")));
  const auto& sc = ctx.config.at("serve");
  server::Service service(b, sc.at("host").get<std::string>(), sc.at("port").get<int>());
  if (ctx.log)
    *ctx.log << "serving " << b->snapshot.size() << " records on http://" << sc.at("host").get<std::string>() << ":"
             << service.port() << std::endl;
  if (check_only) {
    service.stop();
    return;
  }
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.wait();
  g_service = nullptr;
}

// ---------------------------------------------------------------------------
// Command line.

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vulnerability description embedding pipeline", "vulnspace"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string workdir;
  std::vector<std::string> overrides;
  std::string host;
  std::optional<int> port;
  bool check_only = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "configuration file (JSON)")->required();
    sub->add_option("--seed", seed, "global seed");
    sub->add_option("--workdir", workdir, "artifact directory");
    sub->add_option("--set", overrides, "override a key: section.key=value");
  };
  for (const auto& stage : stage_names()) {
    auto* sub = app.add_subcommand(stage, "run the " + stage + " stage");
    add_common(sub);
    if (stage == "serve") {
      sub->add_option("--host", host, "bind address");
      sub->add_option("--port", port, "port (0 picks a free one)");
      sub->add_flag("--check", check_only, "start, report the port and stop");
    }
  }
  auto* all = app.add_subcommand("run", "run every stage from ingest to report");
  add_common(all);
  auto* validate = app.add_subcommand("validate-config", "check a configuration and print it normalized");
  validate->add_option("config", config_path, "configuration file")->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 64;
  }
  auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();

  json tree;
  try {
    tree = json::parse(binio::read_file(config_path));
  } catch (const std::exception& e) {
    err << "error: " << config_path << ": " << e.what() << "\n";
    return 1;
  }
  try {
    if (seed) tree["seed"] = *seed;
    if (!workdir.empty()) apply_override(tree, "paths.workdir=" + json(fs::absolute(workdir).string()).dump());
    if (!host.empty()) apply_override(tree, "serve.host=" + json(host).dump());
    if (port) apply_override(tree, "serve.port=" + std::to_string(*port));
    for (const auto& o : overrides) apply_override(tree, o);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  const auto check = check_config(tree, fs::path(config_path).parent_path());
  if (!check.ok()) {
    for (const auto& e : check.errors) err << "config error: " << e << "\n";
    return 1;
  }
  if (name == "validate-config") {
    out << check.config.dump(2) << "\n";
    return 0;
  }

  const StageContext ctx{check.config, &out};
  try {
    if (name == "run") {
      for (const auto& stage : stage_names())
        if (stage != "serve") run_stage(stage, ctx);
    } else if (name == "serve") {
      serve(ctx, check_only);
    } else {
      run_stage(name, ctx);
    }
  } catch (const MissingArtifact& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << name << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace vulnspace::cli
