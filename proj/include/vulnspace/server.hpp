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

// Read-only JSON API over a precomputed analysis bundle.
//
//   GET /api/meta
//   GET /api/points?overlay=&year=&method=
//   GET /api/cve/{id}
//   GET /api/neighbors/{id}?k=&space=
//   GET /api/evolution?method=&top=
//   GET /api/graph?threshold=
//
// Errors carry {"error": {"code", "message", "field"?}}.

#ifndef VULNSPACE_SERVER_HPP
#define VULNSPACE_SERVER_HPP

#include "vulnspace/corpus.hpp"
#include "vulnspace/temporal.hpp"
#include "vulnspace/theory.hpp"
#include "vulnspace/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace vulnspace::server {

/// Per-row categorical values; "none" where a row has no label.
struct Overlay {
  std::string name;
  std::vector<std::string> values;
  bool operator==(const Overlay&) const = default;
};

struct Assignment {
  std::string method;
  Labels labels;
  bool operator==(const Assignment&) const = default;
};

/// A representation searchable by /api/neighbors.
struct Space {
  std::string name;
  Matrix<float> rows;
  bool operator==(const Space&) const = default;
};

struct AnalysisBundle {
  corpus::Snapshot snapshot;
  MatrixXr projection;  // N x 2
  std::vector<Assignment> assignments;
  std::vector<Overlay> overlays;
  std::vector<Space> spaces;
  std::map<std::string, temporal::Evolution> evolution;  // by cluster method
  std::optional<theory::CompositionGraph> graph;
  nlohmann::json metadata = nlohmann::json::object();

  bool operator==(const AnalysisBundle&) const = default;
};

inline constexpr const char* kMissingLabel = "none";

/// CVSS v2/v3 components, cwe, year and day as overlays.
std::vector<Overlay> label_overlays(const corpus::Snapshot& snapshot);

/// Throws DimensionError naming the first artifact whose length disagrees with
/// the snapshot, InvalidArgument on duplicate names.
void validate(const AnalysisBundle& b);
/// Validates and returns the bundle.
AnalysisBundle bundle(AnalysisBundle parts);

inline constexpr std::uint32_t kBundleVersion = 1;
void save_bundle(const std::filesystem::path& path, const AnalysisBundle& b);
AnalysisBundle load_bundle(const std::filesystem::path& path);

struct Response {
  int status = 200;
  std::string body;
};

using Params = std::map<std::string, std::string>;

/// Pure request handler. Builds its lookup tables once; every call is const.
class Api {
 public:
  explicit Api(std::shared_ptr<const AnalysisBundle> bundle);

  Response get(std::string_view path, const Params& params = {}) const;

  nlohmann::json meta() const;
  nlohmann::json points(const Params& params) const;
  nlohmann::json cve(std::string_view id) const;
  nlohmann::json neighbors(std::string_view id, const Params& params) const;
  nlohmann::json evolution(const Params& params) const;
  nlohmann::json graph(const Params& params) const;

  const AnalysisBundle& bundle() const { return *bundle_; }

 private:
  std::size_t row_of(std::string_view id) const;

  std::shared_ptr<const AnalysisBundle> bundle_;
  std::unordered_map<std::string, std::size_t> rows_;
};

/// Thrown by Api methods; turned into the error body by Api::get.
struct ApiError {
  int status;
  std::string code;
  std::string message;
  std::string field;
};

/// HTTP front end. Binds on construction, serves on a background thread.
class Service {
 public:
  Service(std::shared_ptr<const AnalysisBundle> bundle, const std::string& host, int port);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  int port() const { return port_; }
  void stop();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

/// One file per endpoint: meta.json, points.json, cve.json, neighbors.json,
/// evolution.json, graph.json. Returns the paths written.
std::vector<std::filesystem::path> export_static(const AnalysisBundle& b, const std::filesystem::path& dir,
                                                 int neighbor_k = 10);

}  // namespace vulnspace::server

#endif  // VULNSPACE_SERVER_HPP
