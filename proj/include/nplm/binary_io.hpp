// Copyright 2026 The nplm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Little-endian primitive encoding shared by every persisted artifact.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nplm/error.hpp"

namespace nplm {

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void magic(std::string_view tag) { out_.write(tag.data(), static_cast<std::streamsize>(tag.size())); }

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  void bytes(std::span<const std::uint8_t> b) {
    out_.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  }

  void f32s(std::span<const float> v) {
    for (float x : v) f32(x);
  }
  void u32s(std::span<const std::uint32_t> v) {
    for (auto x : v) u32(x);
  }
  void u64s(std::span<const std::uint64_t> v) {
    for (auto x : v) u64(x);
  }

  void check() const {
    if (!out_) throw IoError("write failed");
  }

 private:
  template <typename T>
  void put_le(T v) {
    std::array<char, sizeof(T)> buf;
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out_.write(buf.data(), sizeof(T));
  }

  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  void expect_magic(std::string_view tag) {
    std::string got(tag.size(), '\0');
    in_.read(got.data(), static_cast<std::streamsize>(got.size()));
    if (!in_ || got != tag) throw FormatError("bad magic: expected '" + std::string(tag) + "'");
  }

  std::uint8_t u8() {
    char c;
    if (!in_.get(c)) throw FormatError("truncated input");
    return static_cast<std::uint8_t>(c);
  }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  std::string str() {
    const auto n = u32();
    std::string s(n, '\0');
    read_raw(s.data(), n);
    return s;
  }

  void bytes(std::span<std::uint8_t> out) { read_raw(reinterpret_cast<char*>(out.data()), out.size()); }

  void f32s(std::span<float> out) {
    for (auto& x : out) x = f32();
  }
  void u32s(std::span<std::uint32_t> out) {
    for (auto& x : out) x = u32();
  }
  void u64s(std::span<std::uint64_t> out) {
    for (auto& x : out) x = u64();
  }

  // Guards allocation sizes read from untrusted headers.
  std::uint64_t count(std::uint64_t limit, const char* what) {
    const auto n = u64();
    if (n > limit) throw FormatError(std::string("implausible ") + what + " count");
    return n;
  }

 private:
  void read_raw(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError("truncated input");
  }

  template <typename T>
  T get_le() {
    std::array<unsigned char, sizeof(T)> buf;
    read_raw(reinterpret_cast<char*>(buf.data()), sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
  }

  std::istream& in_;
};

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  auto in = open_input(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// splitmix64 finalizer; the one hash used for seeds and n-gram keys.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace nplm
