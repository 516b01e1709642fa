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

#include "vulnspace/server.hpp"

#include "vulnspace/binio.hpp"
#include "vulnspace/classify.hpp"
#include "vulnspace/error.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <set>
#include <thread>

namespace vulnspace::server {

using nlohmann::json;

std::vector<Overlay> label_overlays(const corpus::Snapshot& snapshot) {
  std::vector<Overlay> out;
  for (const auto& task : classify::label_tasks(snapshot)) {
    Overlay o;
    o.name = task.name;
    o.values.reserve(task.targets.size());
    for (const int t : task.targets)
      o.values.push_back(t == kMissing ? kMissingLabel : task.classes[static_cast<std::size_t>(t)]);
    out.push_back(std::move(o));
  }
  return out;
}

void validate(const AnalysisBundle& b) {
  const auto n = b.snapshot.size();
  const auto check = [n](std::size_t got, const std::string& what) {
    if (got != n)
      throw DimensionError(what + " has " + std::to_string(got) + " rows but the snapshot has " + std::to_string(n));
  };
  if (n == 0) throw InvalidArgument("bundle: empty snapshot");
  check(static_cast<std::size_t>(b.projection.rows()), "projection");
  if (b.projection.cols() != 2) throw DimensionError("projection must have 2 columns");
  std::set<std::string> names;
  for (const auto& a : b.assignments) {
    check(a.labels.size(), "assignment \"" + a.method + "\"");
    if (!names.insert("cluster:" + a.method).second) throw InvalidArgument("duplicate cluster method " + a.method);
  }
  for (const auto& o : b.overlays) {
    check(o.values.size(), "overlay \"" + o.name + "\"");
    if (o.name == "cluster" || !names.insert(o.name).second) throw InvalidArgument("duplicate overlay " + o.name);
  }
  names.clear();
  for (const auto& s : b.spaces) {
    check(static_cast<std::size_t>(s.rows.rows()), "space \"" + s.name + "\"");
    if (!names.insert(s.name).second) throw InvalidArgument("duplicate space " + s.name);
  }
  for (const auto& [method, e] : b.evolution)
    if (e.first_year > e.last_year || e.noise.size() != static_cast<std::size_t>(e.last_year - e.first_year + 1))
      throw DimensionError("evolution \"" + method + "\" has an inconsistent year range");
    else
      for (const auto& s : e.series)
        if (s.counts.size() != e.noise.size())
          throw DimensionError("evolution \"" + method + "\" series " + std::to_string(s.cluster) +
                               " has the wrong number of years");
  if (b.graph)
    for (const auto& node : b.graph->nodes)
      if (node.row < 0 || static_cast<std::size_t>(node.row) >= n)
        throw DimensionError("graph node row " + std::to_string(node.row) + " is outside the snapshot");
}

AnalysisBundle bundle(AnalysisBundle parts) {
  validate(parts);
  return parts;
}

// ---------------------------------------------------------------------------
// "VBND": magic, u32 version, snapshot body, projection, assignments,
// overlays, spaces, evolution, optional graph, metadata JSON.

void save_bundle(const std::filesystem::path& path, const AnalysisBundle& b) {
  validate(b);
  binio::Writer w;
  w.magic("VBND", kBundleVersion);
  corpus::write_snapshot(w, b.snapshot);
  w.matrix_f64(b.projection);
  w.u64(b.assignments.size());
  for (const auto& a : b.assignments) {
    w.str(a.method);
    w.u64(a.labels.size());
    for (const int l : a.labels) w.i32(l);
  }
  w.u64(b.overlays.size());
  for (const auto& o : b.overlays) {
    w.str(o.name);
    w.u64(o.values.size());
    for (const auto& v : o.values) w.str(v);
  }
  w.u64(b.spaces.size());
  for (const auto& s : b.spaces) {
    w.str(s.name);
    w.matrix_f32(s.rows);
  }
  w.u64(b.evolution.size());
  for (const auto& [method, e] : b.evolution) {
    w.str(method);
    w.i32(e.first_year);
    w.i32(e.last_year);
    w.u64(e.series.size());
    for (const auto& s : e.series) {
      w.i32(s.cluster);
      w.u64(s.counts.size());
      for (const auto c : s.counts) w.i64(c);
    }
    w.u64(e.noise.size());
    for (const auto c : e.noise) w.i64(c);
  }
  w.u8(b.graph.has_value());
  if (b.graph) {
    const auto& g = *b.graph;
    w.f64(g.threshold);
    w.str(g.advisory);
    w.u64(g.nodes.size());
    for (const auto& n : g.nodes) {
      w.i64(n.row);
      w.str(n.cve_id);
      w.str(n.excerpt);
      w.i32(n.degree);
    }
    w.u64(g.edges.size());
    for (const auto& e : g.edges) {
      w.i64(e.a);
      w.i64(e.b);
      w.f64(e.probability);
    }
  }
  w.str(b.metadata.dump());
  binio::write_file_atomic(path, w.take());
}

AnalysisBundle load_bundle(const std::filesystem::path& path) {
  const std::string bytes = binio::read_file(path);
  binio::Reader r(bytes, path.string());
  r.expect_magic("VBND", kBundleVersion);
  AnalysisBundle b;
  b.snapshot = corpus::read_snapshot(r);
  b.projection = r.matrix_f64<double>();
  for (auto n = r.count(12); n > 0; --n) {
    Assignment a;
    a.method = r.str();
    for (auto k = r.count(4); k > 0; --k) a.labels.push_back(r.i32());
    b.assignments.push_back(std::move(a));
  }
  for (auto n = r.count(12); n > 0; --n) {
    Overlay o;
    o.name = r.str();
    for (auto k = r.count(4); k > 0; --k) o.values.push_back(r.str());
    b.overlays.push_back(std::move(o));
  }
  for (auto n = r.count(20); n > 0; --n) {
    Space s;
    s.name = r.str();
    s.rows = r.matrix_f32<float>();
    b.spaces.push_back(std::move(s));
  }
  for (auto n = r.count(28); n > 0; --n) {
    const std::string method = r.str();
    temporal::Evolution e;
    e.first_year = r.i32();
    e.last_year = r.i32();
    for (auto k = r.count(12); k > 0; --k) {
      temporal::EvolutionSeries s;
      s.cluster = r.i32();
      s.first_year = e.first_year;
      for (auto c = r.count(8); c > 0; --c) {
        s.counts.push_back(r.i64());
        s.total += s.counts.back();
      }
      e.series.push_back(std::move(s));
    }
    for (auto c = r.count(8); c > 0; --c) e.noise.push_back(r.i64());
    b.evolution.emplace(method, std::move(e));
  }
  if (r.u8()) {
    theory::CompositionGraph g;
    g.threshold = r.f64();
    g.advisory = r.str();
    for (auto n = r.count(20); n > 0; --n) {
      theory::GraphNode node;
      node.row = r.i64();
      node.cve_id = r.str();
      node.excerpt = r.str();
      node.degree = r.i32();
      g.nodes.push_back(std::move(node));
    }
    for (auto n = r.count(24); n > 0; --n) {
      theory::GraphEdge e;
      e.a = r.i64();
      e.b = r.i64();
      e.probability = r.f64();
      g.edges.push_back(e);
    }
    b.graph = std::move(g);
  }
  try {
    b.metadata = json::parse(r.str());
  } catch (const json::exception& e) {
    throw CorruptionError(path.string() + ": bad bundle metadata: " + e.what());
  }
  if (!r.at_end()) throw CorruptionError(path.string() + ": trailing bytes after bundle");
  try {
    validate(b);
  } catch (const Error& e) {
    throw CorruptionError(path.string() + ": " + e.what());
  }
  return b;
}

// ---------------------------------------------------------------------------
// API.

namespace {

[[noreturn]] void bad_param(const std::string& field, const std::string& message) {
  throw ApiError{400, "bad_parameter", message, field};
}

std::optional<std::string> param(const Params& p, const std::string& key) {
  const auto it = p.find(key);
  if (it == p.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

template <typename T>
std::optional<T> number_param(const Params& p, const std::string& key) {
  const auto s = param(p, key);
  if (!s) return std::nullopt;
  T v{};
  const auto [end, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
  if (ec != std::errc() || end != s->data() + s->size()) bad_param(key, key + " must be a number");
  return v;
}

json record_json(const corpus::CveRecord& r) {
  json cpes = json::array();
  for (const auto& c : r.cpes) cpes.push_back({{"vendor", c.vendor}, {"product", c.product}});
  json j = {{"id", r.id},
            {"published", corpus::format_date(r.published)},
            {"year", r.year},
            {"day_of_year", r.day_of_year},
            {"description", r.description},
            {"cwes", r.cwes},
            {"cpes", cpes},
            {"cvss_v2", nullptr},
            {"cvss_v3", nullptr}};
  if (r.cvss_v2) {
    json m = {{"base_score", r.cvss_v2->base_score}};
    const auto comps = corpus::v2_components();
    for (std::size_t c = 0; c < comps.size(); ++c)
      m[std::string(comps[c].name)] = comps[c].values[static_cast<std::size_t>(corpus::component_value(*r.cvss_v2, c))];
    j["cvss_v2"] = m;
  }
  if (r.cvss_v3) {
    json m = {{"base_score", r.cvss_v3->base_score}};
    const auto comps = corpus::v3_components();
    for (std::size_t c = 0; c < comps.size(); ++c)
      m[std::string(comps[c].name)] = comps[c].values[static_cast<std::size_t>(corpus::component_value(*r.cvss_v3, c))];
    j["cvss_v3"] = m;
  }
  return j;
}

json error_body(const ApiError& e) {
  json err = {{"code", e.code}, {"message", e.message}};
  if (!e.field.empty()) err["field"] = e.field;
  return {{"error", err}};
}

const Assignment& find_method(const AnalysisBundle& b, const Params& p) {
  if (b.assignments.empty()) throw ApiError{404, "no_clusters", "the bundle has no cluster assignments", ""};
  const auto m = param(p, "method");
  if (!m) return b.assignments.front();
  for (const auto& a : b.assignments)
    if (a.method == *m) return a;
  bad_param("method", "unknown cluster method \"" + *m + "\"");
}

}  // namespace

Api::Api(std::shared_ptr<const AnalysisBundle> bundle) : bundle_(std::move(bundle)) {
  if (!bundle_) throw InvalidArgument("api: null bundle");
  validate(*bundle_);
  for (std::size_t i = 0; i < bundle_->snapshot.size(); ++i) rows_.emplace(bundle_->snapshot.records[i].id, i);
}

std::size_t Api::row_of(std::string_view id) const {
  const auto it = rows_.find(std::string(id));
  if (it == rows_.end()) throw ApiError{404, "unknown_id", "no record with id \"" + std::string(id) + "\"", ""};
  return it->second;
}

json Api::meta() const {
  const auto& b = *bundle_;
  std::map<int, long> years;
  for (const auto& r : b.snapshot.records) ++years[r.year];
  json year_list = json::array();
  for (const auto& [y, c] : years) year_list.push_back({{"year", y}, {"count", c}});
  json overlays = json::array();
  if (!b.assignments.empty()) overlays.push_back("cluster");
  for (const auto& o : b.overlays) overlays.push_back(o.name);
  json methods = json::array();
  for (const auto& a : b.assignments) {
    std::set<int> ids(a.labels.begin(), a.labels.end());
    ids.erase(kNoise);
    methods.push_back({{"name", a.method},
                       {"clusters", ids.size()},
                       {"noise", std::count(a.labels.begin(), a.labels.end(), kNoise)}});
  }
  json spaces = json::array();
  for (const auto& s : b.spaces) spaces.push_back({{"name", s.name}, {"dim", s.rows.cols()}});
  json evolution = json::array();
  for (const auto& [m, e] : b.evolution) evolution.push_back(m);
  json j = {{"count", b.snapshot.size()}, {"years", year_list},   {"overlays", overlays},
            {"methods", methods},         {"spaces", spaces},     {"evolution_methods", evolution},
            {"graph", b.graph.has_value()}, {"metadata", b.metadata}};
  if (b.graph) j["graph_threshold"] = b.graph->threshold;
  return j;
}

json Api::points(const Params& p) const {
  const auto& b = *bundle_;
  std::string overlay = param(p, "overlay").value_or(b.assignments.empty() ? "year" : "cluster");
  const auto year = number_param<int>(p, "year");
  std::vector<std::string> cluster_values;
  const std::vector<std::string>* values = nullptr;
  json head = {{"overlay", overlay}};
  if (overlay == "cluster") {
    const auto& a = find_method(b, p);
    head["method"] = a.method;
    cluster_values.reserve(a.labels.size());
    for (const int l : a.labels) cluster_values.push_back(l == kNoise ? kMissingLabel : std::to_string(l));
    values = &cluster_values;
  } else {
    for (const auto& o : b.overlays)
      if (o.name == overlay) values = &o.values;
    if (!values) bad_param("overlay", "unknown overlay \"" + overlay + "\"");
  }
  head["year"] = year ? json(*year) : json(nullptr);
  json pts = json::array();
  for (std::size_t i = 0; i < b.snapshot.size(); ++i) {
    const auto& r = b.snapshot.records[i];
    if (year && r.year != *year) continue;
    const auto row = static_cast<Index>(i);
    pts.push_back({{"id", r.id}, {"x", b.projection(row, 0)}, {"y", b.projection(row, 1)}, {"value", (*values)[i]}});
  }
  head["points"] = std::move(pts);
  return head;
}

json Api::cve(std::string_view id) const {
  const auto& b = *bundle_;
  const std::size_t row = row_of(id);
  json j = record_json(b.snapshot.records[row]);
  json clusters = json::object();
  for (const auto& a : b.assignments) {
    const int l = a.labels[row];
    clusters[a.method] = l == kNoise ? json(nullptr) : json(l);
  }
  json labels = json::object();
  for (const auto& o : b.overlays) labels[o.name] = o.values[row];
  j["row"] = row;
  j["x"] = b.projection(static_cast<Index>(row), 0);
  j["y"] = b.projection(static_cast<Index>(row), 1);
  j["clusters"] = std::move(clusters);
  j["labels"] = std::move(labels);
  return j;
}

json Api::neighbors(std::string_view id, const Params& p) const {
  const auto& b = *bundle_;
  const std::size_t row = row_of(id);
  if (b.spaces.empty()) throw ApiError{404, "no_spaces", "the bundle has no searchable representation", ""};
  const Space* space = &b.spaces.front();
  if (const auto s = param(p, "space")) {
    space = nullptr;
    for (const auto& sp : b.spaces)
      if (sp.name == *s) space = &sp;
    if (!space) bad_param("space", "unknown space \"" + *s + "\"");
  }
  const long n = static_cast<long>(b.snapshot.size());
  const long k = number_param<long>(p, "k").value_or(10);
  if (k < 1 || k > n - 1) bad_param("k", "k must lie in [1, " + std::to_string(n - 1) + "]");
  const auto q = space->rows.row(static_cast<Index>(row)).cast<double>();
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(b.snapshot.size());
  for (std::size_t i = 0; i < b.snapshot.size(); ++i)
    if (i != row) d.emplace_back((space->rows.row(static_cast<Index>(i)).cast<double>() - q).norm(), i);
  std::partial_sort(d.begin(), d.begin() + k, d.end());
  json out = json::array();
  for (long i = 0; i < k; ++i) {
    const auto [dist, r] = d[static_cast<std::size_t>(i)];
    out.push_back({{"id", b.snapshot.records[r].id}, {"row", r}, {"distance", dist}});
  }
  return {{"id", std::string(id)}, {"space", space->name}, {"k", k}, {"neighbors", out}};
}

json Api::evolution(const Params& p) const {
  const auto& b = *bundle_;
  if (b.evolution.empty()) throw ApiError{404, "no_evolution", "the bundle has no evolution series", ""};
  auto it = b.evolution.begin();
  if (const auto m = param(p, "method")) {
    it = b.evolution.find(*m);
    if (it == b.evolution.end()) bad_param("method", "unknown cluster method \"" + *m + "\"");
  }
  json j = temporal::to_json(it->second);
  j["method"] = it->first;
  if (const auto top = number_param<long>(p, "top")) {
    if (*top < 1) bad_param("top", "top must be at least 1");
    json series = json::array();
    for (const auto& s : temporal::top_n(it->second.series, static_cast<std::size_t>(*top)))
      series.push_back(temporal::to_json(s));
    j["series"] = std::move(series);
    j["top"] = *top;
  }
  return j;
}

json Api::graph(const Params& p) const {
  const auto& b = *bundle_;
  if (!b.graph) throw ApiError{404, "no_graph", "the bundle has no composition graph", ""};
  const auto t = param(p, "threshold");
  if (!t) return theory::to_json(*b.graph);
  double threshold = 0;
  try {
    std::size_t used = 0;
    threshold = std::stod(*t, &used);
    if (used != t->size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    bad_param("threshold", "threshold must be a number");
  }
  if (!(threshold >= b.graph->threshold && threshold <= 1.0))
    bad_param("threshold", "threshold must lie in [" + std::to_string(b.graph->threshold) + ", 1]");
  return theory::to_json(theory::filter_graph(*b.graph, threshold));
}

Response Api::get(std::string_view path, const Params& params) const {
  try {
    const auto tail = [&](std::string_view prefix) -> std::optional<std::string_view> {
      if (!path.starts_with(prefix) || path.size() == prefix.size()) return std::nullopt;
      const auto rest = path.substr(prefix.size());
      if (rest.find('/') != std::string_view::npos) return std::nullopt;
      return rest;
    };
    json body;
    if (path == "/api/meta")
      body = meta();
    else if (path == "/api/points")
      body = points(params);
    else if (path == "/api/evolution")
      body = evolution(params);
    else if (path == "/api/graph")
      body = graph(params);
    else if (const auto id = tail("/api/cve/"))
      body = cve(*id);
    else if (const auto nid = tail("/api/neighbors/"))
      body = neighbors(*nid, params);
    else
      throw ApiError{404, "not_found", "no endpoint " + std::string(path), ""};
    return {200, body.dump()};
  } catch (const ApiError& e) {
    return {e.status, error_body(e).dump()};
  }
}

// ---------------------------------------------------------------------------
// HTTP.

struct Service::Impl {
  Api api;
  httplib::Server http;
  std::thread worker;

  explicit Impl(std::shared_ptr<const AnalysisBundle> b) : api(std::move(b)) {}
};

Service::Service(std::shared_ptr<const AnalysisBundle> bundle, const std::string& host, int port)
    : impl_(std::make_unique<Impl>(std::move(bundle))) {
  auto& http = impl_->http;
  const Api& api = impl_->api;
  http.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                            {"Access-Control-Allow-Methods", "GET, OPTIONS"},
                            {"Access-Control-Allow-Headers", "Content-Type"}});
  http.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  http.Get(R"(/api/.*)", [&api](const httplib::Request& req, httplib::Response& res) {
    Params params;
    for (const auto& [k, v] : req.params) params.emplace(k, v);
    const auto r = api.get(req.path, params);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  port_ = port == 0 ? http.bind_to_any_port(host) : (http.bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->worker = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
}

Service::~Service() {
  stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

void Service::stop() { impl_->http.stop(); }

void Service::wait() {
  if (impl_->worker.joinable()) impl_->worker.join();
}

// ---------------------------------------------------------------------------
// Static export.

std::vector<std::filesystem::path> export_static(const AnalysisBundle& b, const std::filesystem::path& dir,
                                                 int neighbor_k) {
  auto shared = std::make_shared<const AnalysisBundle>(b);
  const Api api(shared);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto emit = [&](const std::string& name, const json& j) {
    const auto path = dir / name;
    binio::write_file_atomic(path, j.dump() + "\n");
    written.push_back(path);
  };

  emit("meta.json", api.meta());

  json points = json::object();
  for (const auto& a : b.assignments) points["cluster:" + a.method] = api.points({{"overlay", "cluster"}, {"method", a.method}});
  for (const auto& o : b.overlays) points[o.name] = api.points({{"overlay", o.name}});
  emit("points.json", points);

  json cves = json::object();
  for (const auto& r : b.snapshot.records) cves[r.id] = api.cve(r.id);
  emit("cve.json", cves);

  json neighbors = json::object();
  const long k = std::min<long>(neighbor_k, static_cast<long>(b.snapshot.size()) - 1);
  for (const auto& s : b.spaces) {
    json per_id = json::object();
    if (k >= 1)
      for (const auto& r : b.snapshot.records)
        per_id[r.id] = api.neighbors(r.id, {{"space", s.name}, {"k", std::to_string(k)}});
    neighbors[s.name] = std::move(per_id);
  }
  emit("neighbors.json", neighbors);

  json evolution = json::object();
  for (const auto& [m, e] : b.evolution) evolution[m] = api.evolution({{"method", m}});
  emit("evolution.json", evolution);

  emit("graph.json", b.graph ? api.graph({}) : json{{"available", false}});
  return written;
}

}  // namespace vulnspace::server
