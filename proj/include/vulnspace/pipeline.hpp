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

// Configured pipeline stages. Every stage reads its inputs from and writes
// its outputs to the work directory, each output with a ".meta.json" sidecar
// holding the effective configuration.

#ifndef VULNSPACE_PIPELINE_HPP
#define VULNSPACE_PIPELINE_HPP

#include "vulnspace/error.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace vulnspace::cli {

/// Every key the configuration accepts, with its default. `null` marks a
/// required path or an optional number.
nlohmann::json default_config();

struct ConfigCheck {
  nlohmann::json config;  // defaults merged with the file, paths resolved
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

/// Merges `tree` over the defaults. Unknown keys, wrong types and missing
/// required paths are reported by dotted key. Relative paths resolve against
/// `base`.
ConfigCheck check_config(const nlohmann::json& tree, const std::filesystem::path& base = {});
ConfigCheck load_config(const std::filesystem::path& path);

/// Applies "a.b.c=value" (value parsed as JSON, else taken as a string).
void apply_override(nlohmann::json& tree, const std::string& assignment);

/// A stage input that does not exist yet.
class MissingArtifact : public Error {
 public:
  MissingArtifact(const std::filesystem::path& artifact, std::string producer)
      : Error("missing " + artifact.filename().string() + "; run the \"" + producer + "\" stage first"),
        producer_(std::move(producer)) {}
  const std::string& producer() const { return producer_; }

 private:
  std::string producer_;
};

const std::vector<std::string>& stage_names();

struct StageContext {
  nlohmann::json config;
  std::ostream* log = nullptr;
};

/// Runs one stage. Throws MissingArtifact or the module's own errors.
void run_stage(const std::string& stage, const StageContext& ctx);

/// serve blocks until interrupted unless `check_only`, which starts the
/// service, prints its port and stops.
void serve(const StageContext& ctx, bool check_only);

/// Full command line entry point: returns the process exit status.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vulnspace::cli

#endif  // VULNSPACE_PIPELINE_HPP
