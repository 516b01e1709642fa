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

#ifndef VULNSPACE_EMBEDDING_HPP
#define VULNSPACE_EMBEDDING_HPP

#include "vulnspace/types.hpp"

#include <filesystem>
#include <string>

namespace vulnspace {

/// Row-per-vulnerability matrix in snapshot order. `provenance` names the
/// producing stage: "nlp" for document embeddings, "pca", "ae" or
/// "mlp_bottleneck" for reduced ones, "tsne" for projections.
struct Embedding {
  MatrixXr data;
  std::string provenance;

  Index rows() const { return data.rows(); }
  Index dim() const { return data.cols(); }
};

/// "VEMB": magic, u32 version, u64 N, u32 d, provenance string, N*d float32 row-major.
void save_embedding(const std::filesystem::path& path, const Embedding& e);
Embedding load_embedding(const std::filesystem::path& path);
std::string serialize_embedding(const Embedding& e);
Embedding deserialize_embedding(std::string_view bytes, const std::string& context = "VEMB");

}  // namespace vulnspace

#endif  // VULNSPACE_EMBEDDING_HPP
