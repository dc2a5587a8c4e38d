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

#include "mma/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mma/error.hpp"

namespace mma {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(p[i]) << (8 * i);
  return value;
}

// Guards array lengths read from untrusted input.
constexpr std::uint64_t kMaxArray = std::uint64_t{1} << 34;

}  // namespace

void ByteWriter::magic(std::string_view tag) { bytes_.insert(bytes_.end(), tag.begin(), tag.end()); }
void ByteWriter::u16(std::uint16_t v) { put_le(bytes_, v); }
void ByteWriter::u32(std::uint32_t v) { put_le(bytes_, v); }
void ByteWriter::u64(std::uint64_t v) { put_le(bytes_, v); }
void ByteWriter::f32(float v) { put_le(bytes_, std::bit_cast<std::uint32_t>(v)); }
void ByteWriter::f64(double v) { put_le(bytes_, std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::string(std::string_view s) {
  u64(s.size());
  bytes_.insert(bytes_.end(), s.begin(), s.end());
}

void ByteWriter::f64_array(std::span<const double> values) {
  u64(values.size());
  for (const double v : values) f64(v);
}

void ByteWriter::u64_array(std::span<const std::uint64_t> values) {
  u64(values.size());
  for (const auto v : values) u64(v);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

const std::uint8_t* ByteReader::take(std::size_t n) {
  if (n > remaining()) throw FormatError("unexpected end of data");
  const auto* p = bytes_.data() + pos_;
  pos_ += n;
  return p;
}

void ByteReader::expect_magic(std::string_view tag) {
  const auto* p = take(tag.size());
  if (std::memcmp(p, tag.data(), tag.size()) != 0) {
    throw FormatError("bad magic, expected " + std::string(tag));
  }
}

std::uint16_t ByteReader::u16() { return get_le<std::uint16_t>(take(2)); }
std::uint32_t ByteReader::u32() { return get_le<std::uint32_t>(take(4)); }
std::uint64_t ByteReader::u64() { return get_le<std::uint64_t>(take(8)); }
float ByteReader::f32() { return std::bit_cast<float>(u32()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::string() {
  const auto n = u64();
  if (n > remaining()) throw FormatError("string length exceeds data");
  const auto* p = take(n);
  return std::string(reinterpret_cast<const char*>(p), n);
}

std::vector<double> ByteReader::f64_array() {
  const auto n = u64();
  if (n > kMaxArray || n * 8 > remaining()) throw FormatError("array length exceeds data");
  std::vector<double> out(n);
  for (auto& v : out) v = f64();
  return out;
}

std::vector<std::uint64_t> ByteReader::u64_array() {
  const auto n = u64();
  if (n > kMaxArray || n * 8 > remaining()) throw FormatError("array length exceeds data");
  std::vector<std::uint64_t> out(n);
  for (auto& v : out) v = u64();
  return out;
}

}  // namespace mma
