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

#include <string>
#include <vector>

#include "vscnn/tensor.hpp"

namespace vscnn {

struct ConvOptions {
  int accumulator_bits = 32;
  /// Fail on any running sum outside the accumulator range instead of wrapping.
  bool checked = true;
};

/// Reference convolution. `input` is [c, h, w], `weights` is [out_c, c, k_h, k_w].
/// Zero padding is applied logically; any kernel, stride and pad are accepted.
/// Returns [out_c, out_h, out_w] with the accumulator bit width.
inline DenseTensor conv2d_reference(const DenseTensor& input, const DenseTensor& weights,
                                    const ConvLayerSpec& spec, ConvOptions opts = {}) {
  spec.validate();
  if (!valid_bit_width(opts.accumulator_bits) || opts.accumulator_bits < 16)
    throw ShapeError("unsupported accumulator width " + std::to_string(opts.accumulator_bits));
  const std::vector<std::size_t> in_dims{spec.in_c, spec.in_h, spec.in_w};
  const std::vector<std::size_t> w_dims{spec.out_c, spec.in_c, spec.k_h, spec.k_w};
  if (input.dims() != in_dims)
    throw ShapeError("input dims " + dims_to_string(input.dims()) + " do not match layer " +
                     dims_to_string(in_dims));
  if (weights.dims() != w_dims)
    throw ShapeError("weight dims " + dims_to_string(weights.dims()) + " do not match layer " +
                     dims_to_string(w_dims));

  const std::size_t oh = spec.out_h();
  const std::size_t ow = spec.out_w();
  const auto pad = static_cast<std::ptrdiff_t>(spec.pad);
  const auto stride = static_cast<std::ptrdiff_t>(spec.stride);
  const auto ih = static_cast<std::ptrdiff_t>(spec.in_h);
  const auto iw = static_cast<std::ptrdiff_t>(spec.in_w);
  const Element lo = min_for_bits(opts.accumulator_bits);
  const Element hi = max_for_bits(opts.accumulator_bits);

  DenseTensor out({spec.out_c, oh, ow}, opts.accumulator_bits);
  for (std::size_t o = 0; o < spec.out_c; ++o) {
    Element* plane = out.data().data() + o * oh * ow;
    for (std::size_t ci = 0; ci < spec.in_c; ++ci) {
      for (std::size_t dy = 0; dy < spec.k_h; ++dy) {
        for (std::size_t dx = 0; dx < spec.k_w; ++dx) {
          const Element w = weights.at(o, ci, dy, dx);
          if (w == 0) continue;
          for (std::size_t oy = 0; oy < oh; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy) * stride +
                                      static_cast<std::ptrdiff_t>(dy) - pad;
            if (iy < 0 || iy >= ih) continue;
            for (std::size_t ox = 0; ox < ow; ++ox) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox) * stride +
                                        static_cast<std::ptrdiff_t>(dx) - pad;
              if (ix < 0 || ix >= iw) continue;
              Element& acc = plane[oy * ow + ox];
              acc += input.at(ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) * w;
              if (acc < lo || acc > hi) {
                if (opts.checked)
                  throw OverflowError("accumulator overflow at output (" + std::to_string(o) +
                                      "," + std::to_string(oy) + "," + std::to_string(ox) + ")");
                acc = wrap_to_bits(acc, opts.accumulator_bits);
              }
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace vscnn
