/*
 * Copyright 2026 The MMA Toolkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mma {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// Little-endian byte stream writer used by the dataset and checkpoint formats.
class ByteWriter {
 public:
  void magic(std::string_view tag);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void string(std::string_view s);
  void f64_array(std::span<const double> values);
  void u64_array(std::span<const std::uint64_t> values);

  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
  void write_file(const std::filesystem::path& path) const { write_file_bytes(path, bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}
  static ByteReader from_file(const std::filesystem::path& path) { return ByteReader(read_file_bytes(path)); }

  // Throws FormatError unless the next bytes equal `tag`.
  void expect_magic(std::string_view tag);
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string string();
  std::vector<double> f64_array();
  std::vector<std::uint64_t> u64_array();

  bool at_end() const noexcept { return pos_ == bytes_.size(); }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  const std::uint8_t* take(std::size_t n);

  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace mma
