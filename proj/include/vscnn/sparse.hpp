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

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vscnn/tensor.hpp"

namespace vscnn {

enum class VectorRole : std::uint8_t { activation = 0, weight = 1 };

/// Filter column inside a 3x3 kernel: A is the leftmost (dx = 0).
enum class KernelColumn : std::uint8_t { A = 0, B = 1, C = 2 };

inline char to_char(KernelColumn f) { return static_cast<char>('A' + static_cast<int>(f)); }

inline constexpr std::size_t kFilterSize = 3;

/// Vector coordinate. Activations: (channel, column, segment).
/// Weights: (out_c, in_c, kernel column). All zero-based.
struct VectorCoord {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  std::uint32_t c = 0;

  auto operator<=>(const VectorCoord&) const = default;
};

inline std::string to_string(const VectorCoord& k) {
  return "(" + std::to_string(k.a) + "," + std::to_string(k.b) + "," + std::to_string(k.c) + ")";
}

inline std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

/// Nonzero vectors of length V plus their coordinate index.
///
/// Activations are [c, h, w] dense tensors cut into vertical column segments of
/// V rows; the last segment is zero padded to V. Weights are [out_c, in_c, 3, 3]
/// kernels cut into 3-element filter columns. Only vectors with at least one
/// nonzero element are stored, in strictly increasing coordinate order.
class VectorSparseTensor {
 public:
  VectorSparseTensor() = default;

  VectorSparseTensor(VectorRole role, std::size_t vec_len, std::vector<std::size_t> dense_dims,
                     std::vector<VectorCoord> coords, std::vector<Element> payload,
                     int bit_width = 8)
      : role_(role),
        vec_len_(vec_len),
        dense_dims_(std::move(dense_dims)),
        coords_(std::move(coords)),
        payload_(std::move(payload)),
        bit_width_(bit_width) {
    validate();
  }

  VectorRole role() const { return role_; }
  std::size_t vec_len() const { return vec_len_; }
  const std::vector<std::size_t>& dense_dims() const { return dense_dims_; }
  const std::vector<VectorCoord>& coords() const { return coords_; }
  std::span<const Element> payload() const { return payload_; }
  int bit_width() const { return bit_width_; }
  std::size_t nnz_vectors() const { return coords_.size(); }

  std::span<const Element> vector(std::size_t k) const {
    return std::span<const Element>(payload_).subspan(k * vec_len_, vec_len_);
  }

  /// Segments per column (activations) or 3 filter columns (weights).
  std::size_t inner_count() const {
    return role_ == VectorRole::activation ? ceil_div(dense_dims_[1], vec_len_) : kFilterSize;
  }

  /// Number of vector positions in the dense shape.
  std::size_t slot_count() const {
    if (role_ == VectorRole::activation) return dense_dims_[0] * dense_dims_[2] * inner_count();
    return dense_dims_[0] * dense_dims_[1] * kFilterSize;
  }

  /// Linear slot of a coordinate; slot order equals coordinate order.
  std::size_t slot_of(const VectorCoord& k) const {
    const std::size_t mid = role_ == VectorRole::activation ? dense_dims_[2] : dense_dims_[1];
    return (std::size_t{k.a} * mid + k.b) * inner_count() + k.c;
  }

  std::optional<std::size_t> find(const VectorCoord& k) const {
    auto it = std::lower_bound(coords_.begin(), coords_.end(), k);
    if (it == coords_.end() || *it != k) return std::nullopt;
    return static_cast<std::size_t>(it - coords_.begin());
  }

  /// Slot -> payload vector index, -1 where the vector is absent.
  std::vector<std::int64_t> slot_table() const {
    std::vector<std::int64_t> table(slot_count(), -1);
    for (std::size_t k = 0; k < coords_.size(); ++k)
      table[slot_of(coords_[k])] = static_cast<std::int64_t>(k);
    return table;
  }

  friend bool operator==(const VectorSparseTensor&, const VectorSparseTensor&) = default;

 private:
  void validate() const {
    if (vec_len_ == 0) throw ShapeError("vector length must be >= 1");
    if (!valid_bit_width(bit_width_))
      throw ShapeError("unsupported bit width " + std::to_string(bit_width_));
    if (role_ == VectorRole::activation) {
      if (dense_dims_.size() != 3) throw ShapeError("activation dims must be [c, h, w]");
    } else {
      if (dense_dims_.size() != 4 || dense_dims_[2] != 3 || dense_dims_[3] != 3)
        throw ShapeError("weight dims must be [out_c, in_c, 3, 3]");
      if (vec_len_ != kFilterSize) throw ShapeError("weight vectors have length 3");
    }
    if (payload_.size() != coords_.size() * vec_len_)
      throw ShapeError("payload size does not match coordinate count");
    const std::size_t outer = dense_dims_[0];
    const std::size_t mid = role_ == VectorRole::activation ? dense_dims_[2] : dense_dims_[1];
    const std::size_t inner = inner_count();
    const std::size_t tail_rows =
        role_ == VectorRole::activation ? dense_dims_[1] - (inner - 1) * vec_len_ : vec_len_;
    for (std::size_t k = 0; k < coords_.size(); ++k) {
      const auto& c = coords_[k];
      if (c.a >= outer || c.b >= mid || c.c >= inner)
        throw ShapeError("coordinate " + to_string(c) + " outside dense shape " +
                         dims_to_string(dense_dims_));
      if (k > 0 && !(coords_[k - 1] < c))
        throw ShapeError("coordinates not strictly increasing at " + to_string(c));
      auto v = vector(k);
      if (std::all_of(v.begin(), v.end(), [](Element e) { return e == 0; }))
        throw ShapeError("stored vector " + to_string(c) + " is all zero");
      if (!std::all_of(v.begin(), v.end(), [&](Element e) { return fits_bits(e, bit_width_); }))
        throw OverflowError("vector " + to_string(c) + " does not fit the bit width");
      if (c.c + 1 == inner && tail_rows < vec_len_) {
        if (std::any_of(v.begin() + static_cast<std::ptrdiff_t>(tail_rows), v.end(),
                        [](Element e) { return e != 0; }))
          throw ShapeError("nonzero padding in tail segment " + to_string(c));
      }
    }
  }

  VectorRole role_ = VectorRole::activation;
  std::size_t vec_len_ = 1;
  std::vector<std::size_t> dense_dims_{0, 0, 0};
  std::vector<VectorCoord> coords_;
  std::vector<Element> payload_;
  int bit_width_ = 8;
};

/// Cuts every (channel, column) into ceil(h / V) vertical segments and keeps the
/// segments that hold a nonzero element.
inline VectorSparseTensor encode_activations(const DenseTensor& t, std::size_t vec_len) {
  if (vec_len == 0) throw ShapeError("vector length must be >= 1");
  if (t.rank() != 3) throw ShapeError("activations must be [c, h, w], got " + dims_to_string(t.dims()));
  const std::size_t c = t.dim(0), h = t.dim(1), w = t.dim(2);
  const std::size_t segs = ceil_div(h, vec_len);
  std::vector<VectorCoord> coords;
  std::vector<Element> payload;
  std::vector<Element> buf(vec_len);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t s = 0; s < segs; ++s) {
        bool nonzero = false;
        for (std::size_t r = 0; r < vec_len; ++r) {
          const std::size_t y = s * vec_len + r;
          buf[r] = y < h ? t.at(ch, y, x) : 0;
          nonzero |= buf[r] != 0;
        }
        if (!nonzero) continue;
        coords.push_back({static_cast<std::uint32_t>(ch), static_cast<std::uint32_t>(x),
                          static_cast<std::uint32_t>(s)});
        payload.insert(payload.end(), buf.begin(), buf.end());
      }
    }
  }
  return VectorSparseTensor(VectorRole::activation, vec_len, t.dims(), std::move(coords),
                            std::move(payload), t.bit_width());
}

/// One 3-element vector per (out_c, in_c, kernel column); all-zero columns dropped.
inline VectorSparseTensor encode_weights(const DenseTensor& w) {
  if (w.rank() != 4 || w.dim(2) != 3 || w.dim(3) != 3)
    throw UnsupportedError("weight vectors need 3x3 kernels, got " + dims_to_string(w.dims()));
  std::vector<VectorCoord> coords;
  std::vector<Element> payload;
  for (std::size_t o = 0; o < w.dim(0); ++o) {
    for (std::size_t ci = 0; ci < w.dim(1); ++ci) {
      for (std::size_t f = 0; f < kFilterSize; ++f) {
        const Element col[3] = {w.at(o, ci, 0, f), w.at(o, ci, 1, f), w.at(o, ci, 2, f)};
        if (col[0] == 0 && col[1] == 0 && col[2] == 0) continue;
        coords.push_back({static_cast<std::uint32_t>(o), static_cast<std::uint32_t>(ci),
                          static_cast<std::uint32_t>(f)});
        payload.insert(payload.end(), std::begin(col), std::end(col));
      }
    }
  }
  return VectorSparseTensor(VectorRole::weight, kFilterSize, w.dims(), std::move(coords),
                            std::move(payload), w.bit_width());
}

inline DenseTensor decode(const VectorSparseTensor& s) {
  DenseTensor out(s.dense_dims(), s.bit_width());
  const std::size_t v = s.vec_len();
  for (std::size_t k = 0; k < s.coords().size(); ++k) {
    const auto& c = s.coords()[k];
    const auto vec = s.vector(k);
    if (s.role() == VectorRole::activation) {
      const std::size_t h = out.dim(1);
      for (std::size_t r = 0; r < v; ++r) {
        const std::size_t y = std::size_t{c.c} * v + r;
        if (y < h) out.at(c.a, y, c.b) = vec[r];
      }
    } else {
      for (std::size_t r = 0; r < kFilterSize; ++r) out.at(c.a, c.b, r, c.c) = vec[r];
    }
  }
  return out;
}

/// Dense elements lying inside stored vectors. Tail segments cover only their
/// true rows, never the padding.
inline std::size_t covered_elements(const VectorSparseTensor& s) {
  if (s.role() == VectorRole::weight) return s.nnz_vectors() * kFilterSize;
  const std::size_t h = s.dense_dims()[1], v = s.vec_len();
  std::size_t n = 0;
  for (const auto& k : s.coords()) n += std::min(v, h - std::size_t{k.c} * v);
  return n;
}

/// Fraction of the dense elements covered by stored vectors. When every vector
/// spans the same number of rows this is stored vectors over vector slots.
inline double vector_density(const VectorSparseTensor& s) {
  const auto& d = s.dense_dims();
  const std::size_t total =
      std::accumulate(d.begin(), d.end(), std::size_t{1}, std::multiplies<>());
  if (total == 0) return 0.0;
  return static_cast<double>(covered_elements(s)) / static_cast<double>(total);
}

/// Number of filter-column vectors that survive pruning to `target_density`.
inline std::size_t pruned_vector_budget(std::size_t total, double target_density) {
  // Guard against products like 0.235 * 1000 = 235.00000000000003.
  const double exact = target_density * static_cast<double>(total);
  const double budget = std::ceil(exact - 1e-9 * std::max(1.0, exact));
  return std::min(total, static_cast<std::size_t>(std::max(0.0, budget)));
}

/// Vector pruning of a [out_c, in_c, 3, 3] kernel tensor: filter columns are
/// ranked by L2 norm across the whole layer (ties by coordinate order) and all
/// but the top ceil(target * total) are zeroed.
inline DenseTensor prune_weights_vector(const DenseTensor& w, double target_density) {
  if (!(target_density > 0.0 && target_density <= 1.0))
    throw ConfigError("target density must be in (0, 1], got " + std::to_string(target_density));
  if (w.rank() != 4 || w.dim(2) != 3 || w.dim(3) != 3)
    throw UnsupportedError("vector pruning needs 3x3 kernels, got " + dims_to_string(w.dims()));
  const std::size_t oc = w.dim(0), ic = w.dim(1);
  const std::size_t total = oc * ic * kFilterSize;

  struct Ranked {
    Element norm2;
    std::size_t slot;
  };
  std::vector<Ranked> ranked(total);
  for (std::size_t o = 0; o < oc; ++o)
    for (std::size_t ci = 0; ci < ic; ++ci)
      for (std::size_t f = 0; f < kFilterSize; ++f) {
        Element n2 = 0;
        for (std::size_t r = 0; r < kFilterSize; ++r) n2 += w.at(o, ci, r, f) * w.at(o, ci, r, f);
        const std::size_t slot = (o * ic + ci) * kFilterSize + f;
        ranked[slot] = {n2, slot};
      }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& x, const Ranked& y) { return x.norm2 > y.norm2; });

  DenseTensor out = w;
  const std::size_t keep = pruned_vector_budget(total, target_density);
  for (std::size_t k = keep; k < total; ++k) {
    const std::size_t slot = ranked[k].slot;
    const std::size_t f = slot % kFilterSize;
    const std::size_t ci = (slot / kFilterSize) % ic;
    const std::size_t o = slot / kFilterSize / ic;
    for (std::size_t r = 0; r < kFilterSize; ++r) out.at(o, ci, r, f) = 0;
  }
  return out;
}

/// Element and vector density of one operand.
struct DensityReport {
  double element_density = 0.0;
  double vector_density = 0.0;
  std::size_t vec_len = 0;
  VectorRole tensor_role = VectorRole::activation;
  std::size_t nonzero_elements = 0;
  std::size_t total_elements = 0;
  std::size_t nonzero_vectors = 0;
  std::size_t total_vectors = 0;
  std::size_t covered_elements = 0;
};

inline DensityReport density_report(const DenseTensor& dense, const VectorSparseTensor& sparse) {
  DensityReport r;
  r.vec_len = sparse.vec_len();
  r.tensor_role = sparse.role();
  r.nonzero_elements = dense.count_nonzero();
  r.total_elements = dense.size();
  r.nonzero_vectors = sparse.nnz_vectors();
  r.total_vectors = sparse.slot_count();
  r.covered_elements = covered_elements(sparse);
  r.element_density = element_density(dense);
  r.vector_density = vector_density(sparse);
  return r;
}

}  // namespace vscnn
