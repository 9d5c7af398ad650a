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
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "vscnn/error.hpp"

namespace vscnn {

using Element = std::int64_t;

inline bool valid_bit_width(int bits) {
  return bits == 8 || bits == 16 || bits == 32 || bits == 64;
}

inline Element min_for_bits(int bits) {
  return bits >= 64 ? INT64_MIN : -(Element{1} << (bits - 1));
}

inline Element max_for_bits(int bits) {
  return bits >= 64 ? INT64_MAX : (Element{1} << (bits - 1)) - 1;
}

inline bool fits_bits(Element v, int bits) {
  return v >= min_for_bits(bits) && v <= max_for_bits(bits);
}

/// Two's-complement wrap of `v` to a `bits`-wide signed integer.
inline Element wrap_to_bits(Element v, int bits) {
  if (bits >= 64) return v;
  const auto u = static_cast<std::uint64_t>(v) & ((std::uint64_t{1} << bits) - 1);
  const auto sign = std::uint64_t{1} << (bits - 1);
  return static_cast<Element>(u ^ sign) - static_cast<Element>(sign);
}

inline std::string dims_to_string(std::span<const std::size_t> dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
  os << ']';
  return os.str();
}

/// Shape of one convolution layer. Spatial sizes in pixels.
struct ConvLayerSpec {
  std::size_t in_h = 1;
  std::size_t in_w = 1;
  std::size_t in_c = 1;
  std::size_t out_c = 1;
  std::size_t k_h = 3;
  std::size_t k_w = 3;
  std::size_t stride = 1;
  std::size_t pad = 1;

  std::size_t out_h() const { return (in_h + 2 * pad - k_h) / stride + 1; }
  std::size_t out_w() const { return (in_w + 2 * pad - k_w) / stride + 1; }

  /// True for the 3x3 / stride 1 / pad 1 case the PE array is built for.
  bool accelerator_mappable() const {
    return k_h == 3 && k_w == 3 && stride == 1 && pad == 1;
  }

  void validate() const {
    if (in_h == 0 || in_w == 0 || in_c == 0 || out_c == 0)
      throw ShapeError("layer dimensions must be >= 1");
    if (k_h == 0 || k_w == 0 || stride == 0)
      throw ShapeError("kernel size and stride must be >= 1");
    if (in_h + 2 * pad < k_h || in_w + 2 * pad < k_w)
      throw ShapeError("kernel larger than padded input");
    if ((in_h + 2 * pad - k_h) % stride != 0 || (in_w + 2 * pad - k_w) % stride != 0)
      throw ShapeError("output size is not an integer for this stride");
  }

  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

/// Dense signed integer tensor, channel-major then row-major.
///
/// Elements are held in 64-bit storage; `bit_width()` declares the range the
/// values must fit (8 for operands, 32 or wider for accumulated outputs).
class DenseTensor {
 public:
  DenseTensor() = default;

  explicit DenseTensor(std::vector<std::size_t> dims, int bit_width = 8)
      : dims_(std::move(dims)), bit_width_(bit_width) {
    check_width();
    elems_.assign(product(dims_), 0);
  }

  DenseTensor(std::vector<std::size_t> dims, std::vector<Element> elems, int bit_width = 8)
      : dims_(std::move(dims)), elems_(std::move(elems)), bit_width_(bit_width) {
    check_width();
    if (elems_.size() != product(dims_))
      throw ShapeError("element count " + std::to_string(elems_.size()) +
                       " does not match dims " + dims_to_string(dims_));
    require_fits();
  }

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return elems_.size(); }
  bool empty() const { return elems_.empty(); }
  int bit_width() const { return bit_width_; }

  std::span<const Element> data() const { return elems_; }
  std::span<Element> data() { return elems_; }

  Element operator[](std::size_t i) const { return elems_[i]; }
  Element& operator[](std::size_t i) { return elems_[i]; }

  // rank-3 [c, h, w]
  Element at(std::size_t c, std::size_t y, std::size_t x) const {
    return elems_[(c * dims_[1] + y) * dims_[2] + x];
  }
  Element& at(std::size_t c, std::size_t y, std::size_t x) {
    return elems_[(c * dims_[1] + y) * dims_[2] + x];
  }

  // rank-4 [o, c, h, w]
  Element at(std::size_t o, std::size_t c, std::size_t y, std::size_t x) const {
    return elems_[((o * dims_[1] + c) * dims_[2] + y) * dims_[3] + x];
  }
  Element& at(std::size_t o, std::size_t c, std::size_t y, std::size_t x) {
    return elems_[((o * dims_[1] + c) * dims_[2] + y) * dims_[3] + x];
  }

  bool fits() const {
    return std::all_of(elems_.begin(), elems_.end(),
                       [&](Element v) { return fits_bits(v, bit_width_); });
  }

  void require_fits() const {
    for (std::size_t i = 0; i < elems_.size(); ++i) {
      if (!fits_bits(elems_[i], bit_width_))
        throw OverflowError("element " + std::to_string(i) + " = " +
                            std::to_string(elems_[i]) + " does not fit in " +
                            std::to_string(bit_width_) + " bits");
    }
  }

  std::size_t count_nonzero() const {
    return static_cast<std::size_t>(
        std::count_if(elems_.begin(), elems_.end(), [](Element v) { return v != 0; }));
  }

  /// Values compare equal; declared widths are ignored.
  friend bool operator==(const DenseTensor& a, const DenseTensor& b) {
    return a.dims_ == b.dims_ && a.elems_ == b.elems_;
  }

  static std::size_t product(std::span<const std::size_t> dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>{});
  }

 private:
  void check_width() const {
    if (!valid_bit_width(bit_width_))
      throw ShapeError("unsupported bit width " + std::to_string(bit_width_));
  }

  std::vector<std::size_t> dims_;
  std::vector<Element> elems_;
  int bit_width_ = 8;
};

inline DenseTensor relu(const DenseTensor& t) {
  DenseTensor out = t;
  for (auto& v : out.data()) v = std::max<Element>(v, 0);
  return out;
}

/// Fraction of nonzero elements.
inline double element_density(const DenseTensor& t) {
  if (t.empty()) throw ShapeError("element_density of an empty tensor");
  return static_cast<double>(t.count_nonzero()) / static_cast<double>(t.size());
}

}  // namespace vscnn
