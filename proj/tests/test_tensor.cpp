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

#include <gtest/gtest.h>

#include <cstdint>
#include <vector>

#include "generators.hpp"
#include "oracles.hpp"
#include "vscnn/conv.hpp"
#include "vscnn/tensor.hpp"
#include "vscnn/tensor_io.hpp"

namespace vscnn {
namespace {

ConvLayerSpec layer(std::size_t h, std::size_t w, std::size_t c, std::size_t o) {
  return ConvLayerSpec{h, w, c, o, 3, 3, 1, 1};
}

TEST(ConvLayerSpec, OutputSize) {
  EXPECT_EQ(layer(5, 5, 1, 1).out_h(), 5u);
  ConvLayerSpec s{7, 9, 1, 1, 3, 3, 2, 1};
  EXPECT_EQ(s.out_h(), 4u);
  EXPECT_EQ(s.out_w(), 5u);
  ConvLayerSpec bad{6, 6, 1, 1, 3, 3, 2, 1};
  EXPECT_THROW(bad.validate(), ShapeError);
  EXPECT_THROW(layer(0, 5, 1, 1).validate(), ShapeError);
}

TEST(DenseTensor, RejectsWrongCountAndRange) {
  EXPECT_THROW(DenseTensor({2, 2}, {1, 2, 3}), ShapeError);
  EXPECT_THROW(DenseTensor({1}, {128}, 8), OverflowError);
  EXPECT_NO_THROW(DenseTensor({1}, {-128}, 8));
  EXPECT_THROW(DenseTensor({1}, 12), ShapeError);
}

TEST(DenseTensor, WrapToBits) {
  EXPECT_EQ(wrap_to_bits(128, 8), -128);
  EXPECT_EQ(wrap_to_bits(-129, 8), 127);
  EXPECT_EQ(wrap_to_bits(Element{1} << 31, 32), INT32_MIN);
}

TEST(Conv2dReference, OnesKernelOnOnesImage) {
  DenseTensor in({1, 5, 5}, std::vector<Element>(25, 1));
  DenseTensor w({1, 1, 3, 3}, std::vector<Element>(9, 1));
  // corners see 4 taps, edges 6, interior 9
  const std::vector<Element> expected = {
      4, 6, 6, 6, 4,  //
      6, 9, 9, 9, 6,  //
      6, 9, 9, 9, 6,  //
      6, 9, 9, 9, 6,  //
      4, 6, 6, 6, 4,
  };
  ASSERT_EQ(oracle::conv(in, w, 1, 1), expected);
  const DenseTensor out = conv2d_reference(in, w, layer(5, 5, 1, 1));
  EXPECT_EQ(out.dims(), (std::vector<std::size_t>{1, 5, 5}));
  EXPECT_EQ(std::vector<Element>(out.data().begin(), out.data().end()), expected);
}

TEST(Conv2dReference, ZeroWeightsGiveZeroOutput) {
  Rng rng(7);
  DenseTensor in = testing::random_tensor({3, 6, 4}, rng);
  DenseTensor w({2, 3, 3, 3});
  const DenseTensor out = conv2d_reference(in, w, layer(6, 4, 3, 2));
  EXPECT_EQ(out.count_nonzero(), 0u);
}

TEST(Conv2dReference, CenterDeltaSumsChannels) {
  Rng rng(11);
  DenseTensor in = testing::random_tensor({3, 5, 6}, rng);
  DenseTensor w({1, 3, 3, 3});
  for (std::size_t c = 0; c < 3; ++c) w.at(0, c, 1, 1) = 1;
  const DenseTensor out = conv2d_reference(in, w, layer(5, 6, 3, 1));
  for (std::size_t y = 0; y < 5; ++y)
    for (std::size_t x = 0; x < 6; ++x)
      EXPECT_EQ(out.at(0, y, x), in.at(0, y, x) + in.at(1, y, x) + in.at(2, y, x));
}

TEST(Conv2dReference, MatchesOracleForGeneralStrideAndPad) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    ConvLayerSpec s;
    s.k_h = 1 + rng.below(4);
    s.k_w = 1 + rng.below(4);
    s.stride = 1 + rng.below(2);
    s.pad = rng.below(3);
    s.in_c = 1 + rng.below(3);
    s.out_c = 1 + rng.below(3);
    s.in_h = s.k_h + s.stride * rng.below(5);
    s.in_w = s.k_w + s.stride * rng.below(5);
    // keep (in + 2 pad - k) divisible by stride
    s.in_h += (s.stride - (s.in_h + 2 * s.pad - s.k_h) % s.stride) % s.stride;
    s.in_w += (s.stride - (s.in_w + 2 * s.pad - s.k_w) % s.stride) % s.stride;
    DenseTensor in = testing::random_tensor({s.in_c, s.in_h, s.in_w}, rng, 0.7);
    DenseTensor w = testing::random_tensor({s.out_c, s.in_c, s.k_h, s.k_w}, rng, 0.7);
    const DenseTensor out = conv2d_reference(in, w, s);
    EXPECT_EQ(std::vector<Element>(out.data().begin(), out.data().end()),
              oracle::conv(in, w, s.stride, s.pad));
  }
}

TEST(Conv2dReference, ShapeMismatchIsReported) {
  DenseTensor in({2, 4, 4});
  DenseTensor w({1, 3, 3, 3});
  EXPECT_THROW(conv2d_reference(in, w, layer(4, 4, 2, 1)), ShapeError);
  EXPECT_THROW(conv2d_reference(DenseTensor({3, 4, 4}), w, layer(4, 4, 2, 1)), ShapeError);
}

TEST(Conv2dReference, CheckedOverflowNamesCoordinate) {
  // 1x3 row of 127s: the middle output sums three 127*127 products (48387),
  // the two edge outputs only two (32258), so only (0,0,1) leaves 16 bits.
  DenseTensor in({1, 1, 3}, std::vector<Element>(3, 127));
  DenseTensor w({1, 1, 3, 3}, std::vector<Element>(9, 127));
  try {
    conv2d_reference(in, w, layer(1, 3, 1, 1), {16, true});
    FAIL() << "expected overflow";
  } catch (const OverflowError& e) {
    EXPECT_NE(std::string(e.what()).find("(0,0,1)"), std::string::npos) << e.what();
  }
  // unchecked mode wraps to the accumulator width
  const DenseTensor wrapped = conv2d_reference(in, w, layer(1, 3, 1, 1), {16, false});
  EXPECT_EQ(wrapped.at(0, 0, 1), wrap_to_bits(3 * 127 * 127, 16));
  EXPECT_EQ(wrapped.at(0, 0, 0), 2 * 127 * 127);
  EXPECT_EQ(conv2d_reference(in, w, layer(1, 3, 1, 1)).at(0, 0, 1), 3 * 127 * 127);
}

TEST(Conv2dReferenceProperty, Linearity) {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t c = 1 + rng.below(4), o = 1 + rng.below(3);
    const std::size_t h = 1 + rng.below(9), w = 1 + rng.below(9);
    DenseTensor a = testing::random_tensor({c, h, w}, rng, 0.6, -60, 60);
    DenseTensor b = testing::random_tensor({c, h, w}, rng, 0.6, -60, 60);
    DenseTensor k = testing::random_tensor({o, c, 3, 3}, rng, 0.8);
    DenseTensor sum({c, h, w});
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = a[i] + b[i];
    const auto s = layer(h, w, c, o);
    const DenseTensor ca = conv2d_reference(a, k, s), cb = conv2d_reference(b, k, s);
    const DenseTensor cs = conv2d_reference(sum, k, s);
    for (std::size_t i = 0; i < cs.size(); ++i) ASSERT_EQ(cs[i], ca[i] + cb[i]);
  }
}

TEST(Conv2dReferenceProperty, SingleTapIsShiftedScaledCopy) {
  Rng rng(5);
  DenseTensor in = testing::random_tensor({1, 6, 7}, rng, 0.8);
  for (std::size_t dy = 0; dy < 3; ++dy)
    for (std::size_t dx = 0; dx < 3; ++dx) {
      DenseTensor k({1, 1, 3, 3});
      k.at(0, 0, dy, dx) = -3;
      const DenseTensor out = conv2d_reference(in, k, layer(6, 7, 1, 1));
      for (std::size_t y = 0; y < 6; ++y)
        for (std::size_t x = 0; x < 7; ++x) {
          const auto iy = static_cast<std::ptrdiff_t>(y + dy) - 1;
          const auto ix = static_cast<std::ptrdiff_t>(x + dx) - 1;
          const Element src = (iy < 0 || iy >= 6 || ix < 0 || ix >= 7)
                                  ? 0
                                  : in.at(0, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
          ASSERT_EQ(out.at(0, y, x), -3 * src) << "tap " << dy << "," << dx;
        }
    }
}

TEST(Relu, Examples) {
  EXPECT_EQ(relu(DenseTensor({3}, {-3, 0, 5})), DenseTensor({3}, {0, 0, 5}));
  EXPECT_EQ(relu(DenseTensor({2, 2}, {-1, -2, -3, -4})).count_nonzero(), 0u);
  const DenseTensor pos({4}, {0, 1, 2, 3});
  EXPECT_EQ(relu(pos), pos);
}

TEST(ReluProperty, NeverIncreasesNonzeroCount) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    DenseTensor t = testing::random_tensor({2, 1 + rng.below(8), 1 + rng.below(8)}, rng, rng.unit());
    EXPECT_LE(relu(t).count_nonzero(), t.count_nonzero());
    EXPECT_LE(element_density(relu(t)), element_density(t));
  }
}

TEST(ElementDensity, Examples) {
  EXPECT_EQ(element_density(DenseTensor({4, 4})), 0.0);
  EXPECT_EQ(element_density(DenseTensor({4}, {1, 0, -2, 0})), 0.5);
  EXPECT_THROW(element_density(DenseTensor({0})), ShapeError);
}

TEST(ElementDensity, BernoulliMaskWithinStatisticalTolerance) {
  Rng rng(1234);
  const double p = 0.3;
  DenseTensor t = testing::random_tensor({4, 100, 100}, rng, p);
  // n = 40000, sigma = sqrt(p(1-p)/n) ~ 0.0023; allow 5 sigma
  EXPECT_NEAR(element_density(t), p, 0.012);
}

TEST(TensorFile, ExactByteLayout) {
  const DenseTensor t({1, 1, 2}, {-1, 2}, 8);
  const std::vector<std::uint8_t> expected = {'V', 'S', 'T', 'N', 1, 0, 3, 1, 0, 0, 0, 1,
                                              0,   0,   0,   2,   0, 0, 0, 0xFF, 0x02};
  EXPECT_EQ(serialize_tensor(t), expected);
  const DenseTensor t16({2}, {-2, 300}, 16);
  const std::vector<std::uint8_t> expected16 = {'V', 'S', 'T', 'N', 1, 1, 1, 2, 0, 0, 0,
                                                0xFE, 0xFF, 0x2C, 0x01};
  EXPECT_EQ(serialize_tensor(t16), expected16);
}

TEST(TensorFile, RoundTripProperty) {
  Rng rng(77);
  for (int bits : {8, 16, 32}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Element hi = max_for_bits(bits);
      DenseTensor t({1 + rng.below(3), 1 + rng.below(5), 1 + rng.below(5)}, bits);
      for (auto& v : t.data()) v = rng.in_range(-hi - 1, hi);
      const DenseTensor back = deserialize_tensor(serialize_tensor(t));
      EXPECT_EQ(back, t);
      EXPECT_EQ(back.bit_width(), bits);
    }
  }
}

TEST(TensorFile, RejectsCorruptInput) {
  auto bytes = serialize_tensor(DenseTensor({2, 2}, {1, 2, 3, 4}));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_tensor(bad_magic), FormatError);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(deserialize_tensor(truncated), FormatError);
  auto bad_dtype = bytes;
  bad_dtype[5] = 9;
  EXPECT_THROW(deserialize_tensor(bad_dtype), FormatError);
  EXPECT_THROW(serialize_tensor(DenseTensor({1}, {1}, 64)), FormatError);
}

}  // namespace
}  // namespace vscnn
