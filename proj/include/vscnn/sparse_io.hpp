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

#include <filesystem>
#include <vector>

#include "vscnn/sparse.hpp"
#include "vscnn/tensor_io.hpp"

namespace vscnn {

inline constexpr std::uint8_t kSparseFileVersion = 1;

/// "VSSP" | u8 version | u8 dtype | u8 rank | u32 V | u32 dims[rank] | u32 count
/// | count x (u32, u32, u32) coords | count x V payload elements.
/// Rank 3 is an activation tensor, rank 4 a weight tensor.
inline std::vector<std::uint8_t> serialize_sparse(const VectorSparseTensor& s) {
  detail::ByteWriter w;
  w.magic("VSSP");
  w.u8(kSparseFileVersion);
  w.u8(static_cast<std::uint8_t>(dtype_for_bits(s.bit_width())));
  w.u8(static_cast<std::uint8_t>(s.dense_dims().size()));
  w.u32_checked(s.vec_len(), "vector length");
  for (auto d : s.dense_dims()) w.u32_checked(d, "dimension");
  w.u32_checked(s.coords().size(), "coordinate count");
  for (const auto& c : s.coords()) {
    w.u32(c.a);
    w.u32(c.b);
    w.u32(c.c);
  }
  for (auto v : s.payload()) w.element(v, s.bit_width());
  return w.bytes();
}

inline VectorSparseTensor deserialize_sparse(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("VSSP");
  if (auto v = r.u8(); v != kSparseFileVersion)
    throw FormatError("unsupported VSSP version " + std::to_string(v));
  const int bits = bits_for_dtype(r.u8());
  const std::size_t rank = r.u8();
  if (rank != 3 && rank != 4) throw FormatError("VSSP rank must be 3 or 4");
  const std::size_t vec_len = r.u32();
  std::vector<std::size_t> dims(rank);
  for (auto& d : dims) d = r.u32();
  const std::size_t count = r.u32();
  if (count * 12 > bytes.size()) throw FormatError("truncated file");
  std::vector<VectorCoord> coords(count);
  for (auto& c : coords) {
    c.a = r.u32();
    c.b = r.u32();
    c.c = r.u32();
  }
  if (vec_len == 0 || count * vec_len > bytes.size()) throw FormatError("truncated file");
  std::vector<Element> payload(count * vec_len);
  for (auto& e : payload) e = r.element(bits);
  r.expect_end();
  const auto role = rank == 3 ? VectorRole::activation : VectorRole::weight;
  try {
    return VectorSparseTensor(role, vec_len, std::move(dims), std::move(coords),
                              std::move(payload), bits);
  } catch (const ShapeError& e) {
    throw FormatError(std::string("inconsistent VSSP contents: ") + e.what());
  }
}

inline void write_sparse(const std::filesystem::path& path, const VectorSparseTensor& s) {
  detail::write_file(path, serialize_sparse(s));
}

inline VectorSparseTensor read_sparse(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return deserialize_sparse(bytes);
}

}  // namespace vscnn
