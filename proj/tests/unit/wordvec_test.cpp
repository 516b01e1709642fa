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

#include "vulnspace/error.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace wv = vulnspace::wordvec;
using vulnspace::Index;

namespace {

wv::VectorStore store_from(const std::string& text, std::optional<std::size_t> limit = {}) {
  std::istringstream in(text);
  return wv::parse_vectors(in, "test.vec", limit);
}

}  // namespace

TEST(Fnv1a, PublishedVectors) {
  EXPECT_EQ(wv::fnv1a(""), 0x811c9dc5u);
  EXPECT_EQ(wv::fnv1a("a"), 0xe40c292cu);
  EXPECT_EQ(wv::fnv1a("foobar"), 0xbf9cf968u);
  for (const char* s : {"<wh", "ere>", "x", "\xC3\xA9t\xC3\xA9"})
    EXPECT_EQ(wv::fnv1a(s), vulnspace::testing::reference_fnv1a(s)) << s;
}

TEST(Subwords, WhereThreeToSix) {
  EXPECT_EQ(wv::subword_ngrams("where", 3, 6),
            (std::vector<std::string>{"<wh", "<whe", "<wher", "<where", "whe", "wher", "where", "where>", "her",
                                      "here", "here>", "ere", "ere>", "re>"}));
}

TEST(Subwords, ShortTokens) {
  EXPECT_EQ(wv::subword_ngrams("ab", 3, 3), (std::vector<std::string>{"<ab", "ab>"}));
  EXPECT_EQ(wv::subword_ngrams("x", 3, 6), (std::vector<std::string>{"<x>"}));
  const auto h = wv::subword_hashes("ab", 1000, 3, 3);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h[0], vulnspace::testing::reference_fnv1a("<ab") % 1000);
  EXPECT_EQ(h[1], vulnspace::testing::reference_fnv1a("ab>") % 1000);
  EXPECT_EQ(wv::subword_hashes("where"), wv::subword_hashes("where"));
}

TEST(Subwords, CodePointAware) {
  // Two-byte characters count as one position.
  EXPECT_EQ(wv::subword_ngrams("\xC3\xA9", 3, 3), (std::vector<std::string>{"<\xC3\xA9>"}));
}

TEST(LoadVectors, ReadsAndLimits) {
  const std::string text = "2 3\nfoo 1 2 3\nbar 0.5 -1 2e-1\n";
  const auto s = store_from(text);
  EXPECT_EQ(s.dim, 3);
  EXPECT_EQ(s.size(), 2);
  EXPECT_EQ(s.vocab.at("bar"), 1);
  EXPECT_FLOAT_EQ(s.word_matrix(1, 2), 0.2f);
  EXPECT_FALSE(s.has_buckets());
  EXPECT_EQ(store_from(text, 1).size(), 1);
}

TEST(LoadVectors, ErrorsNameTheLine) {
  for (const auto& [text, line] : std::vector<std::pair<std::string, std::string>>{
           {"2 3\nfoo 1 2 3\nbar 1 2\n", "test.vec:3"},
           {"2 3\nfoo 1 2 x\nbar 1 2 3\n", "test.vec:2"},
           {"two 3\n", "test.vec:1"},
           {"3 3\nfoo 1 2 3\n", "test.vec"}}) {
    try {
      store_from(text);
      FAIL() << "expected FormatError for " << text;
    } catch (const vulnspace::FormatError& e) {
      EXPECT_NE(std::string(e.what()).find(line), std::string::npos) << e.what();
    }
  }
}

TEST(TokenVector, VocabAndOov) {
  auto s = store_from("1 2\nfoo 3 4\n");
  EXPECT_EQ(wv::token_vector(s, "foo"), (vulnspace::VectorXr(2) << 3, 4).finished());
  EXPECT_TRUE(wv::token_vector(s, "bar").isZero());

  vulnspace::Matrix<float> buckets(7, 2);
  for (Index i = 0; i < 7; ++i) buckets.row(i) << static_cast<float>(i), 1.0f;
  wv::attach_subwords(s, buckets);
  s.min_n = 3;
  s.max_n = 3;
  const auto ids = wv::subword_hashes("ab", 7, 3, 3);
  const double mean0 = (static_cast<double>(ids[0]) + ids[1]) / 2.0;
  const auto v = wv::token_vector(s, "ab");
  EXPECT_DOUBLE_EQ(v(0), mean0);
  EXPECT_DOUBLE_EQ(v(1), 1.0);
}

TEST(TokenVector, AttachRejectsWrongWidth) {
  auto s = store_from("1 2\nfoo 3 4\n");
  EXPECT_THROW(wv::attach_subwords(s, vulnspace::Matrix<float>::Zero(4, 3)), vulnspace::DimensionError);
}

TEST(Subwords, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "vulnspace_subwords_test.vsub";
  vulnspace::Matrix<float> m(3, 2);
  m << 1, 2, 3, 4, 5, 6;
  wv::save_subwords(path, m);
  EXPECT_EQ(wv::load_subwords(path), m);
  {
    std::ofstream bad(path, std::ios::binary);
    bad << "NOPE1234";
  }
  EXPECT_THROW(wv::load_subwords(path), vulnspace::FormatError);
  std::filesystem::remove(path);
}

TEST(EmbedDoc, HandArithmetic) {
  const auto s = store_from("3 2\na 3 4\nb 1 0\nc 0 1\n");
  const auto one = wv::embed_doc(s, std::vector<std::string>{"a"});
  EXPECT_EQ(one.used_components, 1u);
  EXPECT_NEAR(one.vector(0), 0.6, 1e-12);
  EXPECT_NEAR(one.vector(1), 0.8, 1e-12);

  const auto two = wv::embed_doc(s, std::vector<std::string>{"b", "c"});
  EXPECT_NEAR(two.vector(0), 1 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(two.vector(1), 1 / std::sqrt(2.0), 1e-12);

  const auto none = wv::embed_doc(s, std::vector<std::string>{"zz", "yy"});
  EXPECT_EQ(none.used_components, 0u);
  EXPECT_TRUE(none.vector.isZero());
}

TEST(EmbedDoc, PermutationAndScaleInvariant) {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> n;
  std::ostringstream text;
  text << "6 5\n";
  for (int w = 0; w < 6; ++w) {
    text << "w" << w;
    for (int c = 0; c < 5; ++c) text << ' ' << n(rng);
    text << '\n';
  }
  auto s = store_from(text.str());
  std::vector<std::string> doc{"w0", "w3", "w3", "w5", "w1", "oov"};
  const auto base = wv::embed_doc(s, doc);
  EXPECT_NEAR(base.vector.norm(), 1.0, 1e-6);
  EXPECT_EQ(base.used_components, 5u);
  for (int p = 0; p < 10; ++p) {
    std::shuffle(doc.begin(), doc.end(), rng);
    EXPECT_EQ(wv::embed_doc(s, doc).vector, base.vector);
  }
  s.word_matrix.row(3) *= 7.5f;
  EXPECT_TRUE(wv::embed_doc(s, doc).vector.isApprox(base.vector, 1e-6));
}

TEST(EmbedBatch, MatchesSingleAndCountsZeros) {
  const auto s = store_from("2 2\na 1 0\nb 0 1\n");
  std::vector<vulnspace::textprep::TokenSequence> docs{{{"a"}, 0}, {{"q"}, 0}, {{"a", "b"}, 0}};
  wv::BatchStats stats;
  const auto m = wv::embed_batch(s, docs, &stats, 2);
  EXPECT_EQ(stats.zero_rows, 1u);
  EXPECT_EQ(stats.components, 3u);
  for (Index i = 0; i < 3; ++i)
    EXPECT_EQ(m.row(i).transpose(), wv::embed_doc(s, docs[static_cast<std::size_t>(i)]).vector);
}
