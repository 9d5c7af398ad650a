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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "generators.hpp"
#include "oracles.hpp"
#include "vscnn/metrics.hpp"
#include "vscnn/pe_sim.hpp"

namespace vscnn {
namespace {

ConvLayerSpec layer(std::size_t h, std::size_t w, std::size_t c, std::size_t o) {
  return ConvLayerSpec{h, w, c, o, 3, 3, 1, 1};
}

TEST(IdealVectorCycles, DenseOperandsGiveDenseCount) {
  Rng rng(1);
  const auto s = layer(14, 6, 3, 8);
  const Mapping m = map_layer(s, kConfig4x14);
  DenseTensor in = testing::random_tensor({3, 14, 6}, rng);
  DenseTensor w = testing::random_tensor({8, 3, 3, 3}, rng);
  EXPECT_EQ(ideal_vector_cycles(encode_activations(in, 14), encode_weights(w), m),
            dense_cycle_count(s, kConfig4x14));
}

TEST(IdealVectorCycles, WorkedSparseExample) {
  DenseTensor in({1, 5, 5}, std::vector<Element>(25, 1));
  for (std::size_t y = 0; y < 5; ++y) in.at(0, y, 1) = 0;
  DenseTensor w({1, 1, 3, 3}, std::vector<Element>(9, 1));
  for (std::size_t r = 0; r < 3; ++r) w.at(0, 0, r, 2) = 0;
  const Mapping m = map_layer(layer(5, 5, 1, 1), PeArrayConfig{1, 5, 3});
  EXPECT_EQ(ideal_vector_cycles(encode_activations(in, 5), encode_weights(w), m), 8u);
}

TEST(IdealVectorCycles, ImbalancedBlocks) {
  // all work on out_c 0 (block 0); block 1 idles
  const auto s = layer(5, 5, 1, 2);
  DenseTensor in({1, 5, 5}, std::vector<Element>(25, 1));
  DenseTensor w({2, 1, 3, 3});
  for (std::size_t i = 0; i < 9; ++i) w[i] = 1;
  const Mapping m = map_layer(s, PeArrayConfig{2, 5, 3});
  const auto acts = encode_activations(in, 5);
  const auto wts = encode_weights(w);
  const SimResult r = simulate(schedule_sparse(m, acts, wts), acts, wts, m);
  EXPECT_EQ(r.total_cycles, 15u);
  EXPECT_EQ(ideal_vector_cycles(acts, wts, m) * 2, r.total_cycles + 1);  // ceil(15 / 2) = 8
}

TEST(IdealFinegrainedCycles, Examples) {
  const auto s = layer(14, 6, 2, 4);
  const Mapping m = map_layer(s, kConfig4x14);
  Rng rng(3);
  DenseTensor in = testing::random_tensor({2, 14, 6}, rng);
  DenseTensor w = testing::random_tensor({4, 2, 3, 3}, rng);
  const std::size_t macs = oracle::nonzero_products(in, w);
  ASSERT_EQ(nonzero_product_count(in, w, s), macs);
  EXPECT_EQ(ideal_finegrained_cycles(in, w, m), ceil_div(macs, 168));
  EXPECT_LE(ideal_finegrained_cycles(in, w, m), dense_cycle_count(s, kConfig4x14));

  EXPECT_EQ(ideal_finegrained_cycles(DenseTensor({2, 14, 6}), w, m), 0u);

  DenseTensor one({1, 9, 9});
  one.at(0, 4, 4) = 3;
  DenseTensor k({1, 1, 3, 3}, std::vector<Element>(9, 2));
  for (const auto& cfg : {kConfig4x14, kConfig8x7}) {
    const Mapping mm = map_layer(layer(9, 9, 1, 1), cfg);
    EXPECT_EQ(nonzero_product_count(one, k, mm.layer), 9u);
    EXPECT_EQ(ideal_finegrained_cycles(one, k, mm), 1u);
  }
}

TEST(ExploitationRatio, Examples) {
  EXPECT_EQ(exploitation_ratio(15, 8, 8), 1.0);
  EXPECT_EQ(exploitation_ratio(15, 15, 8), 0.0);
  EXPECT_EQ(exploitation_ratio(10, 10, 10), 1.0);
  EXPECT_DOUBLE_EQ(exploitation_ratio(20, 14, 8), 0.5);
  EXPECT_THROW(exploitation_ratio(15, 16, 8), ConsistencyError);
  EXPECT_THROW(exploitation_ratio(15, 7, 8), ConsistencyError);
  EXPECT_THROW(exploitation_ratio(5, 5, 8), ConsistencyError);
}

LayerMetrics measure(const DenseTensor& in, const DenseTensor& w, const ConvLayerSpec& s,
                     const PeArrayConfig& cfg, long index = 0) {
  const Mapping m = map_layer(s, cfg);
  const auto acts = encode_activations(in, cfg.rows);
  const auto wts = encode_weights(w);
  const SimResult r = simulate(schedule_sparse(m, acts, wts), acts, wts, m);
  return make_layer_metrics(index, "l" + std::to_string(index), dense_cycle_count(s, cfg),
                            r.total_cycles, ideal_vector_cycles(acts, wts, m),
                            ideal_finegrained_cycles(in, w, m), density_report(in, acts),
                            density_report(w, wts));
}

TEST(MetricsProperty, OrderingChainAndRatioBounds) {
  Rng rng(61);
  for (int trial = 0; trial < 60; ++trial) {
    const auto s = layer(1 + rng.below(24), 1 + rng.below(12), 1 + rng.below(6), 1 + rng.below(10));
    const PeArrayConfig cfg = trial % 2 ? kConfig8x7 : kConfig4x14;
    DenseTensor in = testing::random_tensor({s.in_c, s.in_h, s.in_w}, rng, rng.unit());
    testing::drop_segments(in, cfg.rows, rng.unit(), rng);
    DenseTensor w = prune_weights_vector(testing::random_tensor({s.out_c, s.in_c, 3, 3}, rng),
                                         0.2 + 0.8 * rng.unit());
    const LayerMetrics l = measure(in, w, s, cfg);
    EXPECT_LE(l.ideal_fg_cycles, l.ideal_vec_cycles);
    EXPECT_LE(l.ideal_vec_cycles, l.actual_cycles);
    EXPECT_LE(l.actual_cycles, l.dense_cycles);
    EXPECT_GE(l.speedup, 1.0);
    EXPECT_GE(l.exploit_vec, 0.0);
    EXPECT_LE(l.exploit_vec, 1.0);
    EXPECT_GE(l.exploit_fg, 0.0);
    EXPECT_LE(l.exploit_fg, 1.0);
  }
}

TEST(MetricsProperty, SingleBlockExploitsEveryZeroVector) {
  Rng rng(62);
  for (int trial = 0; trial < 30; ++trial) {
    const auto s = layer(1 + rng.below(20), 1 + rng.below(10), 1 + rng.below(4), 1 + rng.below(6));
    const PeArrayConfig cfg{1, 1 + rng.below(10), 3};
    DenseTensor in = testing::random_tensor({s.in_c, s.in_h, s.in_w}, rng, rng.unit());
    DenseTensor w = testing::random_tensor({s.out_c, s.in_c, 3, 3}, rng, rng.unit());
    const LayerMetrics l = measure(in, w, s, cfg);
    EXPECT_EQ(l.actual_cycles, l.ideal_vec_cycles);
    EXPECT_EQ(l.exploit_vec, 1.0);
  }
}

TEST(MetricsProperty, ZeroingVectorsNeverLowersSpeedup) {
  Rng rng(63);
  for (int trial = 0; trial < 30; ++trial) {
    const auto s = layer(1 + rng.below(20), 1 + rng.below(10), 1 + rng.below(4), 1 + rng.below(9));
    const PeArrayConfig cfg = kConfig4x14;
    DenseTensor in = testing::random_tensor({s.in_c, s.in_h, s.in_w}, rng, 0.5);
    DenseTensor w = testing::random_tensor({s.out_c, s.in_c, 3, 3}, rng, 0.8);
    const LayerMetrics before = measure(in, w, s, cfg);
    testing::drop_segments(in, cfg.rows, 0.6, rng);
    w = prune_weights_vector(w, 0.5);
    const LayerMetrics after = measure(in, w, s, cfg);
    EXPECT_GE(after.speedup, before.speedup);
    EXPECT_GE(after.dense_cycles - after.actual_cycles, before.dense_cycles - before.actual_cycles);
  }
}

MetricsReport sample_report(std::size_t layers) {
  Rng rng(70);
  MetricsReport r;
  r.label = "[4,14,3]";
  for (std::size_t i = 0; i < layers; ++i) {
    const auto s = layer(4 + rng.below(20), 2 + rng.below(10), 1 + rng.below(4), 1 + rng.below(9));
    DenseTensor in = testing::random_tensor({s.in_c, s.in_h, s.in_w}, rng, 0.4);
    DenseTensor w = prune_weights_vector(testing::random_tensor({s.out_c, s.in_c, 3, 3}, rng), 0.4);
    r.layers.push_back(measure(in, w, s, kConfig4x14, static_cast<long>(i)));
  }
  return r;
}

TEST(MetricsReport, TotalsAggregateCyclesFirst) {
  const MetricsReport r = sample_report(3);
  const LayerMetrics t = r.totals();
  std::size_t dense = 0, actual = 0;
  for (const auto& l : r.layers) {
    dense += l.dense_cycles;
    actual += l.actual_cycles;
  }
  EXPECT_EQ(t.dense_cycles, dense);
  EXPECT_EQ(t.actual_cycles, actual);
  EXPECT_DOUBLE_EQ(t.speedup, double(dense) / double(actual));

  MetricsReport single;
  single.layers = {r.layers[0]};
  const LayerMetrics only = single.totals();
  EXPECT_EQ(only.dense_cycles, r.layers[0].dense_cycles);
  EXPECT_EQ(only.speedup, r.layers[0].speedup);
  EXPECT_EQ(only.exploit_fg, r.layers[0].exploit_fg);
  EXPECT_DOUBLE_EQ(only.input.vector_density, r.layers[0].input.vector_density);
}

TEST(MetricsCsv, EmptyReportIsHeaderOnly) {
  EXPECT_EQ(to_csv(MetricsReport{}), std::string(kMetricsCsvHeader) + "\n");
  const ParsedMetrics p = parse_csv(to_csv(MetricsReport{}));
  EXPECT_TRUE(p.layers.empty());
  EXPECT_FALSE(p.totals);
}

TEST(MetricsCsv, ThirteenLayersPlusTotals) {
  const std::string csv = to_csv(sample_report(13));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 15);
  const ParsedMetrics p = parse_csv(csv);
  EXPECT_EQ(p.layers.size(), 13u);
  ASSERT_TRUE(p.totals);
  EXPECT_EQ(p.totals->name, "network");
}

void expect_same_fields(const LayerMetrics& a, const LayerMetrics& b) {
  EXPECT_EQ(a.layer, b.layer);
  EXPECT_EQ(a.name, b.name);
  EXPECT_EQ(a.dense_cycles, b.dense_cycles);
  EXPECT_EQ(a.actual_cycles, b.actual_cycles);
  EXPECT_EQ(a.ideal_vec_cycles, b.ideal_vec_cycles);
  EXPECT_EQ(a.ideal_fg_cycles, b.ideal_fg_cycles);
  EXPECT_EQ(a.speedup, b.speedup);
  EXPECT_EQ(a.exploit_vec, b.exploit_vec);
  EXPECT_EQ(a.exploit_fg, b.exploit_fg);
  EXPECT_EQ(a.input.element_density, b.input.element_density);
  EXPECT_EQ(a.input.vector_density, b.input.vector_density);
  EXPECT_EQ(a.weight.element_density, b.weight.element_density);
  EXPECT_EQ(a.weight.vector_density, b.weight.vector_density);
}

TEST(MetricsCsv, RoundTripPreservesEveryNumericField) {
  const MetricsReport r = sample_report(5);
  const ParsedMetrics p = parse_csv(to_csv(r));
  ASSERT_EQ(p.layers.size(), r.layers.size());
  for (std::size_t i = 0; i < r.layers.size(); ++i) expect_same_fields(p.layers[i], r.layers[i]);
  expect_same_fields(*p.totals, r.totals());
}

TEST(MetricsCsv, RejectsMalformedInput) {
  EXPECT_THROW(parse_csv("layer,name\n"), FormatError);
  EXPECT_THROW(parse_csv(std::string(kMetricsCsvHeader) + "\n0,a,1,2\n"), FormatError);
  EXPECT_THROW(parse_csv(std::string(kMetricsCsvHeader) + "\n0,a,x,1,1,1,1,1,1,1,1,1,1\n"),
               FormatError);
}

TEST(EmitReport, WritesCsvAndSummary) {
  const auto dir = std::filesystem::temp_directory_path() / "vscnn_emit_report_test";
  std::filesystem::create_directories(dir);
  const MetricsReport r = sample_report(2);
  emit_report(r, dir / "metrics.csv");
  std::ifstream csv(dir / "metrics.csv");
  std::stringstream ss;
  ss << csv.rdbuf();
  EXPECT_EQ(ss.str(), to_csv(r));
  std::ifstream js(dir / "metrics.json");
  const auto j = nlohmann::json::parse(js);
  EXPECT_EQ(j.at("layers"), 2);
  EXPECT_EQ(j.at("totals").at("actual_cycles"), r.totals().actual_cycles);
  EXPECT_THROW(emit_report(r, dir / "missing_dir" / "m.csv"), IoError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace vscnn
