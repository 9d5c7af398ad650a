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

// Small random-tensor generators shared by the property tests.

#pragma once

#include <cstdint>
#include <vector>

#include "vscnn/rng.hpp"
#include "vscnn/tensor.hpp"

namespace vscnn::testing {

inline DenseTensor random_tensor(std::vector<std::size_t> dims, Rng& rng, double density = 1.0,
                                 Element lo = -127, Element hi = 127) {
  DenseTensor t(std::move(dims));
  for (auto& v : t.data()) {
    if (!rng.bernoulli(density)) continue;
    do v = rng.in_range(lo, hi);
    while (v == 0);
  }
  return t;
}

/// Zeroes whole column segments of height `rows` with probability 1 - keep.
inline void drop_segments(DenseTensor& acts, std::size_t rows, double keep, Rng& rng) {
  const std::size_t c = acts.dim(0), h = acts.dim(1), w = acts.dim(2);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t s = 0; s * rows < h; ++s)
        if (!rng.bernoulli(keep))
          for (std::size_t y = s * rows; y < std::min(h, (s + 1) * rows); ++y) acts.at(ch, y, x) = 0;
}

}  // namespace vscnn::testing
