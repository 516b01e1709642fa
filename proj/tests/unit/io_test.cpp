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


#include "vulnspace/binio.hpp"
#include "vulnspace/embedding.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <limits>

namespace bio = vulnspace::binio;
using vulnspace::MatrixXr;

TEST(Binio, ScalarsRoundTrip) {
  bio::Writer w;
  w.magic("TEST", 3);
  w.u8(200);
  w.u32(0xdeadbeef);
  w.u64(1ull << 40);
  w.i32(-5);
  w.i64(-(1ll << 35));
  w.f32(1.5f);
  w.f64(-std::numeric_limits<double>::infinity());
  w.str("héllo");
  w.bytes(std::string("\0\1\2", 3));
  const std::string buf = w.take();

  bio::Reader r(buf, "test");
  r.expect_magic("TEST", 3);
  EXPECT_EQ(r.u8(), 200);
  EXPECT_EQ(r.u32(), 0xdeadbeefu);
  EXPECT_EQ(r.u64(), 1ull << 40);
  EXPECT_EQ(r.i32(), -5);
  EXPECT_EQ(r.i64(), -(1ll << 35));
  EXPECT_EQ(r.f32(), 1.5f);
  EXPECT_EQ(r.f64(), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(r.str(), "héllo");
  EXPECT_EQ(r.bytes(), std::string("\0\1\2", 3));
  EXPECT_TRUE(r.at_end());
}

TEST(Binio, LittleEndian) {
  bio::Writer w;
  w.u32(0x01020304);
  EXPECT_EQ(w.buffer(), std::string("\x04\x03\x02\x01", 4));
}

TEST(Binio, MagicAndVersionErrors) {
  bio::Writer w;
  w.magic("TEST", 2);
  EXPECT_THROW(bio::Reader(w.buffer()).expect_magic("TSET", 2), vulnspace::FormatError);
  EXPECT_THROW(bio::Reader(w.buffer()).expect_magic("TEST", 1), vulnspace::FormatError);
  EXPECT_THROW(bio::Reader("TE").expect_magic("TEST", 1), vulnspace::FormatError);
}

TEST(Binio, TruncationIsCorruption) {
  bio::Writer w;
  w.str("abcdef");
  const std::string cut = w.buffer().substr(0, 7);
  bio::Reader r(cut);
  EXPECT_THROW(r.str(), vulnspace::CorruptionError);

  bio::Writer big;
  big.u64(1ull << 50);
  bio::Reader rb(big.buffer());
  EXPECT_THROW(rb.count(4), vulnspace::CorruptionError);
}

TEST(Binio, Matrices) {
  MatrixXr m(2, 3);
  m << 1, 2, 3, 4, 5, 6.25;
  bio::Writer w;
  w.matrix_f32(m);
  w.matrix_f64(m);
  w.matrix_f64(MatrixXr(0, 4));
  bio::Reader r(w.buffer());
  EXPECT_EQ(r.matrix_f32<double>(), m);
  EXPECT_EQ(r.matrix_f64<double>(), m);
  const auto empty = r.matrix_f64<double>();
  EXPECT_EQ(empty.rows(), 0);
  EXPECT_EQ(empty.cols(), 4);
  EXPECT_TRUE(r.at_end());
}

TEST(Binio, AtomicWriteAndRead) {
  const auto path = std::filesystem::temp_directory_path() / "vulnspace_binio_test.bin";
  bio::write_file_atomic(path, "first");
  bio::write_file_atomic(path, "second");
  EXPECT_EQ(bio::read_file(path), "second");
  std::filesystem::remove(path);
  EXPECT_THROW(bio::read_file(path), vulnspace::Error);
}

TEST(Embedding, RoundTrip) {
  vulnspace::Embedding e{MatrixXr::Random(5, 3), "pca"};
  e.data = e.data.cast<float>().cast<double>();
  const auto back = vulnspace::deserialize_embedding(vulnspace::serialize_embedding(e));
  EXPECT_EQ(back.provenance, "pca");
  EXPECT_EQ(back.data, e.data);

  const auto path = std::filesystem::temp_directory_path() / "vulnspace_embedding_test.vemb";
  vulnspace::save_embedding(path, e);
  EXPECT_EQ(vulnspace::load_embedding(path).data, e.data);
  std::filesystem::remove(path);
}

TEST(Embedding, Corruption) {
  const vulnspace::Embedding e{MatrixXr::Ones(4, 2), "nlp"};
  std::string bytes = vulnspace::serialize_embedding(e);
  EXPECT_THROW(vulnspace::deserialize_embedding(bytes.substr(0, bytes.size() - 1)), vulnspace::CorruptionError);
  EXPECT_THROW(vulnspace::deserialize_embedding(bytes + "x"), vulnspace::CorruptionError);
  bytes[0] = 'X';
  EXPECT_THROW(vulnspace::deserialize_embedding(bytes), vulnspace::FormatError);
}
