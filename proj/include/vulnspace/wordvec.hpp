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

// Pretrained word vectors (.vec text), fastText-style subword hashing for
// unknown tokens, and the mean-of-normalized-vectors document embedding.

#ifndef VULNSPACE_WORDVEC_HPP
#define VULNSPACE_WORDVEC_HPP

#include "vulnspace/textprep.hpp"
#include "vulnspace/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vulnspace::wordvec {

inline constexpr std::uint32_t kDefaultBuckets = 2000000;
inline constexpr int kDefaultMinN = 3;
inline constexpr int kDefaultMaxN = 6;

struct VectorStore {
  Index dim = 0;
  std::unordered_map<std::string, Index> vocab;
  std::vector<std::string> words;  // row order
  Matrix<float> word_matrix;
  /// bucket_count x dim, or empty meaning all-zero buckets.
  Matrix<float> bucket_matrix;
  std::uint32_t bucket_count = kDefaultBuckets;
  int min_n = kDefaultMinN;
  int max_n = kDefaultMaxN;

  Index size() const { return word_matrix.rows(); }
  bool has_buckets() const { return bucket_matrix.rows() > 0; }
};

/// Header "count dim", then "token v1 .. v_dim" per line. FormatError names the
/// offending line. Duplicate tokens keep their first row.
VectorStore load_vectors(const std::filesystem::path& path, std::optional<std::size_t> limit = {});
VectorStore parse_vectors(std::istream& in, const std::string& source, std::optional<std::size_t> limit = {});

/// "VSUB": magic, u32 bucket count, u32 dim, row-major float32 rows.
Matrix<float> load_subwords(const std::filesystem::path& path);
void save_subwords(const std::filesystem::path& path, const Matrix<float>& buckets);
/// Installs trained buckets; dim must match the store.
void attach_subwords(VectorStore& store, Matrix<float> buckets);

/// FNV-1a, 32 bit, over the UTF-8 bytes.
std::uint32_t fnv1a(std::string_view bytes);

/// Character n-grams of "<token>" (UTF-8 code points), start position outer,
/// length inner, hashed modulo bucket_count.
std::vector<std::uint32_t> subword_hashes(std::string_view token, std::uint32_t bucket_count = kDefaultBuckets,
                                          int min_n = kDefaultMinN, int max_n = kDefaultMaxN);
std::vector<std::string> subword_ngrams(std::string_view token, int min_n = kDefaultMinN, int max_n = kDefaultMaxN);

VectorXr token_vector(const VectorStore& store, std::string_view token);

struct DocEmbedding {
  VectorXr vector;
  std::size_t used_components = 0;
};

DocEmbedding embed_doc(const VectorStore& store, const std::vector<std::string>& tokens);
inline DocEmbedding embed_doc(const VectorStore& store, const textprep::TokenSequence& seq) {
  return embed_doc(store, seq.tokens);
}

struct BatchStats {
  std::size_t zero_rows = 0;  // documents with no usable component
  std::size_t components = 0;
};

/// One row per document, computed over `threads` workers (0 = hardware).
MatrixXr embed_batch(const VectorStore& store, const std::vector<textprep::TokenSequence>& docs,
                     BatchStats* stats = nullptr, unsigned threads = 0);

}  // namespace vulnspace::wordvec

#endif  // VULNSPACE_WORDVEC_HPP
