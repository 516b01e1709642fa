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

// Little-endian, length-prefixed primitives shared by the binary artifacts
// (VSNP, VSUB, VNET, VEMB, VTHY, VBND). Every file starts with a four-byte
// magic followed by a u32 format version.

#ifndef VULNSPACE_BINIO_HPP
#define VULNSPACE_BINIO_HPP

#include "vulnspace/error.hpp"
#include "vulnspace/types.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

namespace vulnspace::binio {

class Writer {
 public:
  void magic(std::string_view tag, std::uint32_t version) {
    buffer_.append(tag.data(), tag.size());
    u32(version);
  }

  void u8(std::uint8_t v) { buffer_.push_back(static_cast<char>(v)); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }

  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u32(bits);
  }

  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }

  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buffer_.append(s.data(), s.size());
  }

  void bytes(std::string_view s) {
    u64(s.size());
    buffer_.append(s.data(), s.size());
  }

  /// rows, cols, then row-major float32 values.
  template <typename Derived>
  void matrix_f32(const Eigen::MatrixBase<Derived>& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) f32(static_cast<float>(m(r, c)));
  }

  template <typename Derived>
  void matrix_f64(const Eigen::MatrixBase<Derived>& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) f64(static_cast<double>(m(r, c)));
  }

  const std::string& buffer() const noexcept { return buffer_; }
  std::string take() { return std::move(buffer_); }

 private:
  std::string buffer_;
};

class Reader {
 public:
  explicit Reader(std::string_view data, std::string context = "artifact")
      : data_(data), context_(std::move(context)) {}

  /// Throws FormatError on a magic mismatch or a version other than `version`.
  void expect_magic(std::string_view tag, std::uint32_t version) {
    if (data_.size() < tag.size() || data_.substr(0, tag.size()) != tag)
      throw FormatError(context_ + ": bad magic, expected \"" + std::string(tag) + "\"");
    pos_ = tag.size();
    const std::uint32_t found = u32();
    if (found != version)
      throw FormatError(context_ + ": unsupported format version " + std::to_string(found) +
                        " (expected " + std::to_string(version) + ")");
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }

  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  std::string bytes() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  template <typename Scalar>
  Matrix<Scalar> matrix_f32() {
    const auto rows = count(4);
    const auto cols = rows == 0 ? u64() : count(4 * rows);
    need(4 * rows * cols);
    Matrix<Scalar> m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<Scalar>(f32());
    return m;
  }

  template <typename Scalar>
  Matrix<Scalar> matrix_f64() {
    const auto rows = count(8);
    const auto cols = rows == 0 ? u64() : count(8 * rows);
    need(8 * rows * cols);
    Matrix<Scalar> m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<Scalar>(f64());
    return m;
  }

  /// Reads a u64 element count and rejects counts the remaining bytes cannot hold.
  std::uint64_t count(std::uint64_t min_bytes_per_item) {
    const std::uint64_t n = u64();
    if (min_bytes_per_item > 0 && n > remaining() / min_bytes_per_item)
      throw CorruptionError(context_ + ": element count " + std::to_string(n) +
                            " exceeds remaining data (truncated file?)");
    return n;
  }

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  bool at_end() const noexcept { return pos_ == data_.size(); }
  const std::string& context() const noexcept { return context_; }

 private:
  void need(std::uint64_t n) const {
    if (n > data_.size() - pos_)
      throw CorruptionError(context_ + ": unexpected end of data at byte " + std::to_string(pos_));
  }

  std::string_view data_;
  std::size_t pos_ = 0;
  std::string context_;
};

/// Whole-file read; throws Error when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace vulnspace::binio

#endif  // VULNSPACE_BINIO_HPP
