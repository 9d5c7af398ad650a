/* Copyright 2026 The VSCNN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "vscnn/tensor.hpp"

namespace vscnn {

/// Element type codes shared by the dense and sparse file formats.
enum class DtypeCode : std::uint8_t { s8 = 0, s16 = 1, s32 = 2 };

inline DtypeCode dtype_for_bits(int bits) {
  switch (bits) {
    case 8: return DtypeCode::s8;
    case 16: return DtypeCode::s16;
    case 32: return DtypeCode::s32;
    default: throw FormatError("no file dtype for " + std::to_string(bits) + "-bit elements");
  }
}

inline int bits_for_dtype(std::uint8_t code) {
  switch (code) {
    case 0: return 8;
    case 1: return 16;
    case 2: return 32;
    default: throw FormatError("unknown dtype code " + std::to_string(code));
  }
}

namespace detail {

class ByteWriter {
 public:
  void magic(const char (&m)[5]) { bytes_.insert(bytes_.end(), m, m + 4); }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) { put_le(static_cast<std::uint64_t>(v), 4); }

  void element(Element v, int bits) {
    if (!fits_bits(v, bits))
      throw FormatError("value " + std::to_string(v) + " does not fit the file dtype");
    put_le(static_cast<std::uint64_t>(v), static_cast<std::size_t>(bits / 8));
  }

  void u32_checked(std::size_t v, const char* what) {
    if (v > UINT32_MAX) throw FormatError(std::string(what) + " exceeds u32 range");
    u32(static_cast<std::uint32_t>(v));
  }

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  void put_le(std::uint64_t v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void expect_magic(const char (&m)[5]) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, m, 4) != 0)
      throw FormatError(std::string("bad magic, expected ") + m);
    pos_ += 4;
  }

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }

  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }

  Element element(int bits) {
    const auto n = static_cast<std::size_t>(bits / 8);
    const std::uint64_t raw = get_le(n);
    return wrap_to_bits(static_cast<Element>(raw), bits);
  }

  bool at_end() const { return pos_ == bytes_.size(); }

  void expect_end() const {
    if (!at_end()) throw FormatError("trailing bytes after payload");
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("truncated file");
  }

  std::uint64_t get_le(std::size_t n) {
    need(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += n;
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace detail

inline constexpr std::uint8_t kTensorFileVersion = 1;

/// "VSTN" | u8 version | u8 dtype | u8 rank | u32 dims[rank] | elements (LE, layout order)
inline std::vector<std::uint8_t> serialize_tensor(const DenseTensor& t) {
  detail::ByteWriter w;
  w.magic("VSTN");
  w.u8(kTensorFileVersion);
  w.u8(static_cast<std::uint8_t>(dtype_for_bits(t.bit_width())));
  if (t.rank() > 255) throw FormatError("rank too large");
  w.u8(static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.dims()) w.u32_checked(d, "dimension");
  for (auto v : t.data()) w.element(v, t.bit_width());
  return w.bytes();
}

inline DenseTensor deserialize_tensor(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("VSTN");
  if (auto v = r.u8(); v != kTensorFileVersion)
    throw FormatError("unsupported VSTN version " + std::to_string(v));
  const int bits = bits_for_dtype(r.u8());
  const std::size_t rank = r.u8();
  std::vector<std::size_t> dims(rank);
  for (auto& d : dims) d = r.u32();
  const std::size_t n = DenseTensor::product(dims);
  if (n > bytes.size()) throw FormatError("truncated file");
  std::vector<Element> elems(n);
  for (auto& e : elems) e = r.element(bits);
  r.expect_end();
  return DenseTensor(std::move(dims), std::move(elems), bits);
}

inline void write_tensor(const std::filesystem::path& path, const DenseTensor& t) {
  detail::write_file(path, serialize_tensor(t));
}

inline DenseTensor read_tensor(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return deserialize_tensor(bytes);
}

}  // namespace vscnn
