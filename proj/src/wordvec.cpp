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

#include "vulnspace/wordvec.hpp"

#include "vulnspace/binio.hpp"
#include "vulnspace/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <thread>

namespace vulnspace::wordvec {

namespace {

std::string at_line(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t b = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > b) out.push_back(line.substr(b, i - b));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& v) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace

VectorStore parse_vectors(std::istream& in, const std::string& source, std::optional<std::size_t> limit) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(at_line(source, 1) + "missing header");
  const auto head = fields(line);
  std::size_t count = 0;
  long long dim = 0;
  if (head.size() != 2 || !parse_number(head[0], count) || !parse_number(head[1], dim) || dim <= 0)
    throw FormatError(at_line(source, 1) + "header must be \"count dim\"");

  const std::size_t take = limit ? std::min(*limit, count) : count;
  VectorStore store;
  store.dim = static_cast<Index>(dim);
  store.word_matrix.resize(static_cast<Index>(take), store.dim);
  store.words.reserve(take);
  std::size_t lineno = 1;
  Index row = 0;
  std::size_t read = 0;
  while (read < take && std::getline(in, line)) {
    ++lineno;
    const auto f = fields(line);
    if (f.empty()) continue;
    ++read;
    if (static_cast<long long>(f.size()) != dim + 1)
      throw FormatError(at_line(source, lineno) + "expected token and " + std::to_string(dim) + " values, found " +
                        std::to_string(f.size() - 1));
    const std::string token(f[0]);
    if (store.vocab.contains(token)) continue;
    for (Index c = 0; c < store.dim; ++c) {
      float v = 0;
      if (!parse_number(f[static_cast<std::size_t>(c) + 1], v) || !std::isfinite(v))
        throw FormatError(at_line(source, lineno) + "bad value in column " + std::to_string(c + 1));
      store.word_matrix(row, c) = v;
    }
    store.vocab.emplace(token, row);
    store.words.push_back(token);
    ++row;
  }
  if (read < take)
    throw FormatError(at_line(source, lineno) + "header promises " + std::to_string(count) + " vectors, file ends after " +
                      std::to_string(read));
  store.word_matrix.conservativeResize(row, store.dim);
  return store;
}

VectorStore load_vectors(const std::filesystem::path& path, std::optional<std::size_t> limit) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vectors " + path.string());
  return parse_vectors(in, path.string(), limit);
}

Matrix<float> load_subwords(const std::filesystem::path& path) {
  const std::string bytes = binio::read_file(path);
  const std::string ctx = path.string();
  if (bytes.size() < 4 || bytes.compare(0, 4, "VSUB") != 0) throw FormatError(ctx + ": bad magic, expected \"VSUB\"");
  binio::Reader r(std::string_view(bytes).substr(4), ctx);
  const std::uint32_t buckets = r.u32();
  const std::uint32_t dim = r.u32();
  if (dim == 0 || buckets > r.remaining() / (4ull * dim))
    throw CorruptionError(ctx + ": bucket rows truncated");
  Matrix<float> m(static_cast<Index>(buckets), static_cast<Index>(dim));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index c = 0; c < m.cols(); ++c) m(i, c) = r.f32();
  if (!r.at_end()) throw CorruptionError(ctx + ": trailing bytes after bucket rows");
  return m;
}

void save_subwords(const std::filesystem::path& path, const Matrix<float>& buckets) {
  std::string out = "VSUB";
  binio::Writer body;
  body.u32(static_cast<std::uint32_t>(buckets.rows()));
  body.u32(static_cast<std::uint32_t>(buckets.cols()));
  for (Index i = 0; i < buckets.rows(); ++i)
    for (Index c = 0; c < buckets.cols(); ++c) body.f32(buckets(i, c));
  out += body.buffer();
  binio::write_file_atomic(path, out);
}

void attach_subwords(VectorStore& store, Matrix<float> buckets) {
  if (buckets.cols() != store.dim)
    throw DimensionError("subword dim " + std::to_string(buckets.cols()) + " does not match vector dim " +
                         std::to_string(store.dim));
  if (buckets.rows() == 0) throw InvalidArgument("subword matrix has no buckets");
  store.bucket_count = static_cast<std::uint32_t>(buckets.rows());
  store.bucket_matrix = std::move(buckets);
}

std::uint32_t fnv1a(std::string_view bytes) {
  std::uint32_t h = 2166136261u;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 16777619u;
  }
  return h;
}

std::vector<std::string> subword_ngrams(std::string_view token, int min_n, int max_n) {
  if (min_n < 1 || max_n < min_n) throw InvalidArgument("n-gram range must satisfy 1 <= min_n <= max_n");
  const std::string word = "<" + std::string(token) + ">";
  const auto continuation = [&word](std::size_t j) { return (static_cast<unsigned char>(word[j]) & 0xC0) == 0x80; };
  std::vector<std::string> out;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (continuation(i)) continue;
    std::string gram;
    std::size_t j = i;
    for (int n = 1; j < word.size() && n <= max_n; ++n) {
      gram.push_back(word[j++]);
      while (j < word.size() && continuation(j)) gram.push_back(word[j++]);
      if (n >= min_n) out.push_back(gram);
    }
  }
  return out;
}

std::vector<std::uint32_t> subword_hashes(std::string_view token, std::uint32_t bucket_count, int min_n, int max_n) {
  if (bucket_count == 0) throw InvalidArgument("bucket_count must be positive");
  std::vector<std::uint32_t> out;
  for (const auto& g : subword_ngrams(token, min_n, max_n)) out.push_back(fnv1a(g) % bucket_count);
  return out;
}

VectorXr token_vector(const VectorStore& store, std::string_view token) {
  if (const auto it = store.vocab.find(std::string(token)); it != store.vocab.end())
    return store.word_matrix.row(it->second).transpose().cast<double>();
  VectorXr v = VectorXr::Zero(store.dim);
  if (!store.has_buckets() || token.empty()) return v;
  const auto ids = subword_hashes(token, store.bucket_count, store.min_n, store.max_n);
  if (ids.empty()) return v;
  for (const auto id : ids) v += store.bucket_matrix.row(static_cast<Index>(id)).transpose().cast<double>();
  return v / static_cast<double>(ids.size());
}

DocEmbedding embed_doc(const VectorStore& store, const std::vector<std::string>& tokens) {
  // Sorted so that any permutation of the same multiset sums in the same order.
  std::vector<std::string> sorted(tokens);
  std::sort(sorted.begin(), sorted.end());
  DocEmbedding out;
  out.vector = VectorXr::Zero(store.dim);
  for (const auto& t : sorted) {
    const VectorXr v = token_vector(store, t);
    const double norm = v.norm();
    if (norm == 0.0) continue;
    out.vector += v / norm;
    ++out.used_components;
  }
  if (out.used_components == 0) return out;
  out.vector /= static_cast<double>(out.used_components);
  const double norm = out.vector.norm();
  // Unit vectors can cancel exactly; such a document has no direction.
  if (norm == 0.0) {
    out.used_components = 0;
    return out;
  }
  out.vector /= norm;
  return out;
}

MatrixXr embed_batch(const VectorStore& store, const std::vector<textprep::TokenSequence>& docs, BatchStats* stats,
                     unsigned threads) {
  MatrixXr out(static_cast<Index>(docs.size()), store.dim);
  std::vector<std::size_t> used(docs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, docs.size())));
  const auto work = [&](std::size_t first, std::size_t last) {
    for (std::size_t i = first; i < last; ++i) {
      const auto e = embed_doc(store, docs[i]);
      out.row(static_cast<Index>(i)) = e.vector.transpose();
      used[i] = e.used_components;
    }
  };
  if (threads <= 1) {
    work(0, docs.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (docs.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t first = t * chunk;
      const std::size_t last = std::min(docs.size(), first + chunk);
      if (first < last) pool.emplace_back(work, first, last);
    }
  }
  if (stats) {
    stats->zero_rows = static_cast<std::size_t>(std::count(used.begin(), used.end(), std::size_t{0}));
    stats->components = 0;
    for (const auto u : used) stats->components += u;
  }
  return out;
}

}  // namespace vulnspace::wordvec
