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

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vscnn/mapping.hpp"
#include "vscnn/sparse.hpp"

namespace vscnn {

/// Schedulable (input vector, filter column) pairs for each block: every
/// stored input vector of channel ci meets every stored filter column (o, ci, *).
inline std::vector<std::size_t> vector_pairs_per_block(const VectorSparseTensor& acts,
                                                       const VectorSparseTensor& wts,
                                                       const Mapping& m) {
  check_sparse_operands(m, acts, wts);
  const auto& L = m.layer;
  std::vector<std::size_t> per_channel(L.in_c, 0);
  for (const auto& c : acts.coords()) ++per_channel[c.a];
  std::vector<std::size_t> pairs(m.config.blocks, 0);
  for (const auto& c : wts.coords()) pairs[m.block_of(c.a)] += per_channel[c.b];
  return pairs;
}

/// Perfectly balanced vector-sparse execution: all schedulable pairs spread over B blocks.
inline std::size_t ideal_vector_cycles(const VectorSparseTensor& acts, const VectorSparseTensor& wts,
                                       const Mapping& m) {
  std::size_t total = 0;
  for (auto p : vector_pairs_per_block(acts, wts, m)) total += p;
  return ceil_div(total, m.config.blocks);
}

/// Products of the full convolution whose input and weight are both nonzero.
inline std::size_t nonzero_product_count(const DenseTensor& acts, const DenseTensor& wts,
                                         const ConvLayerSpec& L) {
  if (acts.dims() != std::vector<std::size_t>{L.in_c, L.in_h, L.in_w})
    throw ShapeError("activation dims " + dims_to_string(acts.dims()) + " do not match layer");
  if (wts.dims() != std::vector<std::size_t>{L.out_c, L.in_c, L.k_h, L.k_w})
    throw ShapeError("weight dims " + dims_to_string(wts.dims()) + " do not match layer");
  const std::size_t oh = L.out_h(), ow = L.out_w();
  const auto pad = static_cast<std::ptrdiff_t>(L.pad);
  const auto stride = static_cast<std::ptrdiff_t>(L.stride);
  // reach[ci][dy][dx]: outputs whose tap (dy, dx) lands on a nonzero input of ci
  std::vector<std::size_t> reach(L.in_c * L.k_h * L.k_w, 0);
  for (std::size_t ci = 0; ci < L.in_c; ++ci)
    for (std::size_t dy = 0; dy < L.k_h; ++dy)
      for (std::size_t dx = 0; dx < L.k_w; ++dx) {
        std::size_t n = 0;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy) * stride + static_cast<std::ptrdiff_t>(dy) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(L.in_h)) continue;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox) * stride + static_cast<std::ptrdiff_t>(dx) - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(L.in_w)) continue;
            n += acts.at(ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) != 0;
          }
        }
        reach[(ci * L.k_h + dy) * L.k_w + dx] = n;
      }
  std::size_t total = 0;
  for (std::size_t o = 0; o < L.out_c; ++o)
    for (std::size_t ci = 0; ci < L.in_c; ++ci)
      for (std::size_t dy = 0; dy < L.k_h; ++dy)
        for (std::size_t dx = 0; dx < L.k_w; ++dx)
          if (wts.at(o, ci, dy, dx) != 0) total += reach[(ci * L.k_h + dy) * L.k_w + dx];
  return total;
}

/// Every PE of every block busy with a useful nonzero product each cycle.
inline std::size_t ideal_finegrained_cycles(const DenseTensor& acts, const DenseTensor& wts,
                                            const Mapping& m) {
  return ceil_div(nonzero_product_count(acts, wts, m.layer), m.config.total_pes());
}

/// Fraction of skippable cycles actually skipped: (dense - actual) / (dense - ideal).
inline double exploitation_ratio(std::size_t dense, std::size_t actual, std::size_t ideal) {
  if (ideal > dense)
    throw ConsistencyError("ideal cycles " + std::to_string(ideal) + " exceed dense cycles " +
                           std::to_string(dense));
  if (actual > dense || actual < ideal)
    throw ConsistencyError("actual cycles " + std::to_string(actual) + " outside [" +
                           std::to_string(ideal) + ", " + std::to_string(dense) + "]");
  if (dense == ideal) return 1.0;
  return static_cast<double>(dense - actual) / static_cast<double>(dense - ideal);
}

inline double speedup_of(std::size_t dense, std::size_t actual) {
  if (actual == 0) return dense == 0 ? 1.0 : std::numeric_limits<double>::infinity();
  return static_cast<double>(dense) / static_cast<double>(actual);
}

struct LayerMetrics {
  long layer = 0;  // -1 on the totals row
  std::string name;
  std::size_t dense_cycles = 0;
  std::size_t actual_cycles = 0;
  std::size_t ideal_vec_cycles = 0;
  std::size_t ideal_fg_cycles = 0;
  double speedup = 1.0;
  double exploit_vec = 1.0;
  double exploit_fg = 1.0;
  DensityReport input;
  DensityReport weight;
};

inline LayerMetrics make_layer_metrics(long index, std::string name, std::size_t dense,
                                       std::size_t actual, std::size_t ideal_vec,
                                       std::size_t ideal_fg, DensityReport input,
                                       DensityReport weight) {
  if (!(ideal_fg <= ideal_vec && ideal_vec <= actual && actual <= dense))
    throw ConsistencyError("cycle ordering violated: fg " + std::to_string(ideal_fg) + ", vec " +
                           std::to_string(ideal_vec) + ", actual " + std::to_string(actual) +
                           ", dense " + std::to_string(dense));
  LayerMetrics r;
  r.layer = index;
  r.name = std::move(name);
  r.dense_cycles = dense;
  r.actual_cycles = actual;
  r.ideal_vec_cycles = ideal_vec;
  r.ideal_fg_cycles = ideal_fg;
  r.speedup = speedup_of(dense, actual);
  r.exploit_vec = exploitation_ratio(dense, actual, ideal_vec);
  r.exploit_fg = exploitation_ratio(dense, actual, ideal_fg);
  r.input = std::move(input);
  r.weight = std::move(weight);
  return r;
}

namespace detail {

inline DensityReport merge_density(const DensityReport& a, const DensityReport& b) {
  DensityReport r = a;
  r.nonzero_elements += b.nonzero_elements;
  r.total_elements += b.total_elements;
  r.nonzero_vectors += b.nonzero_vectors;
  r.total_vectors += b.total_vectors;
  r.covered_elements += b.covered_elements;
  r.element_density = r.total_elements ? double(r.nonzero_elements) / double(r.total_elements) : 0.0;
  r.vector_density = r.total_elements ? double(r.covered_elements) / double(r.total_elements) : 0.0;
  return r;
}

}  // namespace detail

struct MetricsReport {
  std::string label;  // e.g. the PE configuration
  std::vector<LayerMetrics> layers;

  /// Network totals: cycles are summed first, then ratios are formed.
  LayerMetrics totals() const {
    std::size_t dense = 0, actual = 0, vec = 0, fg = 0;
    DensityReport in, w;
    if (!layers.empty()) {
      in = layers.front().input;
      w = layers.front().weight;
      in.nonzero_elements = in.total_elements = in.nonzero_vectors = in.total_vectors = in.covered_elements = 0;
      w.nonzero_elements = w.total_elements = w.nonzero_vectors = w.total_vectors = w.covered_elements = 0;
    }
    for (const auto& l : layers) {
      dense += l.dense_cycles;
      actual += l.actual_cycles;
      vec += l.ideal_vec_cycles;
      fg += l.ideal_fg_cycles;
      in = detail::merge_density(in, l.input);
      w = detail::merge_density(w, l.weight);
    }
    return make_layer_metrics(-1, "network", dense, actual, vec, fg, in, w);
  }
};

inline constexpr const char* kMetricsCsvHeader =
    "layer,name,dense_cycles,actual_cycles,ideal_vec_cycles,ideal_fg_cycles,speedup,exploit_vec,"
    "exploit_fg,in_elem_density,in_vec_density,w_elem_density,w_vec_density";

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw FormatError("bad number '" + s + "' in metrics CSV");
  return v;
}

inline std::size_t parse_count(const std::string& s) {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw FormatError("bad count '" + s + "' in metrics CSV");
  return v;
}

inline std::string csv_row(const LayerMetrics& l) {
  std::ostringstream os;
  os << (l.layer < 0 ? std::string("total") : std::to_string(l.layer)) << ',' << l.name << ','
     << l.dense_cycles << ',' << l.actual_cycles << ',' << l.ideal_vec_cycles << ','
     << l.ideal_fg_cycles << ',' << format_double(l.speedup) << ',' << format_double(l.exploit_vec)
     << ',' << format_double(l.exploit_fg) << ',' << format_double(l.input.element_density) << ','
     << format_double(l.input.vector_density) << ',' << format_double(l.weight.element_density)
     << ',' << format_double(l.weight.vector_density);
  return os.str();
}

}  // namespace detail

/// Header, one row per layer, then a totals row when there are layers.
inline std::string to_csv(const MetricsReport& r) {
  std::string out = std::string(kMetricsCsvHeader) + '\n';
  for (const auto& l : r.layers) out += detail::csv_row(l) + '\n';
  if (!r.layers.empty()) out += detail::csv_row(r.totals()) + '\n';
  return out;
}

struct ParsedMetrics {
  std::vector<LayerMetrics> layers;
  std::optional<LayerMetrics> totals;
};

/// Reads back the numeric CSV fields. Raw density counts are not stored in CSV.
inline ParsedMetrics parse_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kMetricsCsvHeader)
    throw FormatError("metrics CSV header mismatch");
  ParsedMetrics out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 13) throw FormatError("metrics CSV row has " + std::to_string(f.size()) + " fields");
    LayerMetrics l;
    l.layer = f[0] == "total" ? -1 : static_cast<long>(detail::parse_count(f[0]));
    l.name = f[1];
    l.dense_cycles = detail::parse_count(f[2]);
    l.actual_cycles = detail::parse_count(f[3]);
    l.ideal_vec_cycles = detail::parse_count(f[4]);
    l.ideal_fg_cycles = detail::parse_count(f[5]);
    l.speedup = detail::parse_double(f[6]);
    l.exploit_vec = detail::parse_double(f[7]);
    l.exploit_fg = detail::parse_double(f[8]);
    l.input.element_density = detail::parse_double(f[9]);
    l.input.vector_density = detail::parse_double(f[10]);
    l.weight.element_density = detail::parse_double(f[11]);
    l.weight.vector_density = detail::parse_double(f[12]);
    if (l.layer < 0) {
      if (out.totals) throw FormatError("metrics CSV has two totals rows");
      out.totals = l;
    } else {
      if (out.totals) throw FormatError("metrics CSV has a layer row after the totals row");
      out.layers.push_back(std::move(l));
    }
  }
  return out;
}

inline nlohmann::json summary_json(const MetricsReport& r) {
  nlohmann::json j{{"format", "vscnn-metrics"}, {"version", 1}, {"label", r.label},
                   {"layers", r.layers.size()}};
  if (!r.layers.empty()) {
    const auto t = r.totals();
    j["totals"] = {{"dense_cycles", t.dense_cycles},
                   {"actual_cycles", t.actual_cycles},
                   {"ideal_vec_cycles", t.ideal_vec_cycles},
                   {"ideal_fg_cycles", t.ideal_fg_cycles},
                   {"speedup", t.speedup},
                   {"exploit_vec", t.exploit_vec},
                   {"exploit_fg", t.exploit_fg}};
  }
  return j;
}

/// Writes the CSV to `csv_path` and the summary next to it with a .json extension.
inline void emit_report(const MetricsReport& r, const std::filesystem::path& csv_path) {
  auto write_text = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + p.string() + " for writing");
    f << text;
    if (!f) throw IoError("write failed: " + p.string());
  };
  write_text(csv_path, to_csv(r));
  auto summary = csv_path;
  summary.replace_extension(".json");
  write_text(summary, summary_json(r).dump(2) + '\n');
}

}  // namespace vscnn
