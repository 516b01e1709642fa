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

#include "vulnspace/embedding.hpp"

#include "vulnspace/binio.hpp"

namespace vulnspace {

namespace {
constexpr std::uint32_t kVersion = 1;
}

std::string serialize_embedding(const Embedding& e) {
  binio::Writer w;
  w.magic("VEMB", kVersion);
  w.u64(static_cast<std::uint64_t>(e.rows()));
  w.u32(static_cast<std::uint32_t>(e.dim()));
  w.str(e.provenance);
  for (Index r = 0; r < e.rows(); ++r)
    for (Index c = 0; c < e.dim(); ++c) w.f32(static_cast<float>(e.data(r, c)));
  return w.take();
}

Embedding deserialize_embedding(std::string_view bytes, const std::string& context) {
  binio::Reader r(bytes, context);
  r.expect_magic("VEMB", kVersion);
  const std::uint64_t n = r.u64();
  const std::uint32_t d = r.u32();
  Embedding e;
  e.provenance = r.str();
  if (d > 0 && n > r.remaining() / (4ull * d))
    throw CorruptionError(context + ": row data truncated");
  e.data.resize(static_cast<Index>(n), static_cast<Index>(d));
  for (Index i = 0; i < e.rows(); ++i)
    for (Index c = 0; c < e.dim(); ++c) e.data(i, c) = static_cast<double>(r.f32());
  if (!r.at_end()) throw CorruptionError(context + ": trailing bytes after row data");
  return e;
}

void save_embedding(const std::filesystem::path& path, const Embedding& e) {
  binio::write_file_atomic(path, serialize_embedding(e));
}

Embedding load_embedding(const std::filesystem::path& path) {
  return deserialize_embedding(binio::read_file(path), path.string());
}

}  // namespace vulnspace
