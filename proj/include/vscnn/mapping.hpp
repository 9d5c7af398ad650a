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

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "vscnn/sparse.hpp"
#include "vscnn/tensor.hpp"

namespace vscnn {

/// Accelerator geometry: `blocks` PE arrays of `rows` x `cols` PEs.
struct PeArrayConfig {
  std::size_t blocks = 1;
  std::size_t rows = 1;
  std::size_t cols = 3;

  std::size_t total_pes() const { return blocks * rows * cols; }

  void validate() const {
    if (blocks == 0 || rows == 0) throw ConfigError("PE array needs at least one block and row");
    if (cols != 3)
      throw UnsupportedError("PE array columns must be 3 to match the filter width, got " +
                             std::to_string(cols));
  }

  std::string to_string() const {
    return "[" + std::to_string(blocks) + "," + std::to_string(rows) + "," +
           std::to_string(cols) + "]";
  }

  friend bool operator==(const PeArrayConfig&, const PeArrayConfig&) = default;
};

inline constexpr PeArrayConfig kConfig4x14{4, 14, 3};
inline constexpr PeArrayConfig kConfig8x7{8, 7, 3};

/// Parses "B,R,C" (brackets optional).
inline PeArrayConfig parse_pe_config(std::string text) {
  std::erase_if(text, [](char ch) { return ch == '[' || ch == ']' || ch == ' '; });
  PeArrayConfig cfg;
  char c1 = 0, c2 = 0;
  std::istringstream is(text);
  if (!(is >> cfg.blocks >> c1 >> cfg.rows >> c2 >> cfg.cols) || c1 != ',' || c2 != ',' ||
      !is.eof())
    throw ConfigError("PE config must look like B,R,C, got '" + text + "'");
  cfg.validate();
  return cfg;
}

struct Mapping {
  ConvLayerSpec layer;
  PeArrayConfig config;
  std::size_t segments = 0;
  std::vector<std::size_t> block_assignment;  // out_c -> block

  std::size_t block_of(std::size_t out_c) const { return block_assignment.at(out_c); }

  std::vector<std::size_t> channels_of(std::size_t block) const {
    std::vector<std::size_t> out;
    for (std::size_t o = 0; o < block_assignment.size(); ++o)
      if (block_assignment[o] == block) out.push_back(o);
    return out;
  }
};

inline Mapping map_layer(const ConvLayerSpec& spec, const PeArrayConfig& cfg) {
  spec.validate();
  cfg.validate();
  auto reject = [](const char* field, std::size_t got) {
    throw UnsupportedError(std::string("unsupported mapping: ") + field + " = " +
                           std::to_string(got) + " (PE array handles 3x3, stride 1, pad 1)");
  };
  if (spec.k_h != 3) reject("k_h", spec.k_h);
  if (spec.k_w != 3) reject("k_w", spec.k_w);
  if (spec.stride != 1) reject("stride", spec.stride);
  if (spec.pad != 1) reject("pad", spec.pad);

  Mapping m;
  m.layer = spec;
  m.config = cfg;
  m.segments = ceil_div(spec.in_h, cfg.rows);
  m.block_assignment.resize(spec.out_c);
  for (std::size_t o = 0; o < spec.out_c; ++o) m.block_assignment[o] = o % cfg.blocks;
  return m;
}

/// One PE-array cycle: an input column segment times one filter column.
/// Columns are 1-based as in the timing diagram; output columns 0 and
/// out_w + 1 are padding positions and marked `discard`.
struct ScheduleEntry {
  std::uint32_t block = 0;
  std::uint32_t cycle = 0;
  std::uint32_t in_c = 0;
  std::uint32_t in_col = 0;
  std::uint32_t seg = 0;
  std::uint32_t out_c = 0;
  KernelColumn wcol = KernelColumn::A;
  std::uint32_t out_col = 0;
  bool discard = false;
  bool route_up = false;    // diagonal 0 lands in the last row of segment seg - 1
  bool route_down = false;  // diagonal R + 1 lands in the first row of segment seg + 1

  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

/// Output column fed by input column `in_col` through filter column `f`.
inline std::int64_t output_column(std::uint32_t in_col, KernelColumn f) {
  return static_cast<std::int64_t>(in_col) + 1 - static_cast<std::int64_t>(f);
}

struct Schedule {
  std::vector<std::vector<ScheduleEntry>> blocks;

  std::size_t cycles(std::size_t block) const { return blocks.at(block).size(); }

  std::size_t total_cycles() const {
    std::size_t best = 0;
    for (const auto& b : blocks) best = std::max(best, b.size());
    return best;
  }

  std::size_t entry_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.size();
    return n;
  }
};

namespace detail {

inline ScheduleEntry make_entry(const Mapping& m, std::size_t block, std::size_t cycle,
                                std::size_t o, std::size_t ci, std::size_t seg,
                                std::size_t in_col, KernelColumn f) {
  const std::size_t out_w = m.layer.out_w();
  const std::size_t out_h = m.layer.out_h();
  const std::size_t rows = m.config.rows;
  ScheduleEntry e;
  e.block = static_cast<std::uint32_t>(block);
  e.cycle = static_cast<std::uint32_t>(cycle);
  e.in_c = static_cast<std::uint32_t>(ci);
  e.in_col = static_cast<std::uint32_t>(in_col);
  e.seg = static_cast<std::uint32_t>(seg);
  e.out_c = static_cast<std::uint32_t>(o);
  e.wcol = f;
  const auto oc = output_column(e.in_col, f);
  e.out_col = static_cast<std::uint32_t>(oc);
  e.discard = oc < 1 || oc > static_cast<std::int64_t>(out_w);
  e.route_up = seg > 0;
  e.route_down = (seg + 1) * rows < out_h;
  return e;
}

}  // namespace detail

/// Dense schedule. Per block: out_c -> in_c -> segment -> input column ->
/// filter column A, B, C; every combination takes one cycle.
inline Schedule schedule_dense(const Mapping& m) {
  Schedule s;
  s.blocks.resize(m.config.blocks);
  const auto& L = m.layer;
  for (std::size_t b = 0; b < m.config.blocks; ++b) {
    auto& entries = s.blocks[b];
    const auto channels = m.channels_of(b);
    entries.reserve(channels.size() * L.in_c * m.segments * L.in_w * kFilterSize);
    std::size_t cycle = 0;
    for (std::size_t o : channels)
      for (std::size_t ci = 0; ci < L.in_c; ++ci)
        for (std::size_t seg = 0; seg < m.segments; ++seg)
          for (std::size_t col = 1; col <= L.in_w; ++col)
            for (std::size_t f = 0; f < kFilterSize; ++f)
              entries.push_back(detail::make_entry(m, b, ++cycle, o, ci, seg, col,
                                                   static_cast<KernelColumn>(f)));
  }
  return s;
}

inline void check_sparse_operands(const Mapping& m, const VectorSparseTensor& acts,
                                  const VectorSparseTensor& wts) {
  const auto& L = m.layer;
  if (acts.role() != VectorRole::activation) throw ShapeError("activation operand has weight role");
  if (wts.role() != VectorRole::weight) throw ShapeError("weight operand has activation role");
  if (acts.vec_len() != m.config.rows)
    throw ShapeError("activation vector length " + std::to_string(acts.vec_len()) +
                     " does not match PE rows " + std::to_string(m.config.rows));
  if (acts.dense_dims() != std::vector<std::size_t>{L.in_c, L.in_h, L.in_w})
    throw ShapeError("activation dims " + dims_to_string(acts.dense_dims()) +
                     " do not match the mapped layer");
  if (wts.dense_dims() != std::vector<std::size_t>{L.out_c, L.in_c, 3, 3})
    throw ShapeError("weight dims " + dims_to_string(wts.dense_dims()) +
                     " do not match the mapped layer");
}

/// Sparse schedule: the dense loop nest restricted to pairs whose input vector
/// and filter column are both present in the sparse indexes, renumbered
/// without idle cycles.
inline Schedule schedule_sparse(const Mapping& m, const VectorSparseTensor& acts,
                                const VectorSparseTensor& wts) {
  check_sparse_operands(m, acts, wts);
  const auto& L = m.layer;
  const auto act_slots = acts.slot_table();
  const auto w_slots = wts.slot_table();

  Schedule s;
  s.blocks.resize(m.config.blocks);
  for (std::size_t b = 0; b < m.config.blocks; ++b) {
    auto& entries = s.blocks[b];
    std::size_t cycle = 0;
    for (std::size_t o : m.channels_of(b)) {
      for (std::size_t ci = 0; ci < L.in_c; ++ci) {
        const std::size_t wbase = (o * L.in_c + ci) * kFilterSize;
        const bool present[3] = {w_slots[wbase] >= 0, w_slots[wbase + 1] >= 0,
                                 w_slots[wbase + 2] >= 0};
        if (!present[0] && !present[1] && !present[2]) continue;
        for (std::size_t seg = 0; seg < m.segments; ++seg)
          for (std::size_t col = 1; col <= L.in_w; ++col) {
            if (act_slots[(ci * L.in_w + (col - 1)) * m.segments + seg] < 0) continue;
            for (std::size_t f = 0; f < kFilterSize; ++f)
              if (present[f])
                entries.push_back(detail::make_entry(m, b, ++cycle, o, ci, seg, col,
                                                     static_cast<KernelColumn>(f)));
          }
      }
    }
  }
  return s;
}

/// Closed-form dense cycles per block for the most loaded block.
inline std::size_t dense_cycle_count(const ConvLayerSpec& spec, const PeArrayConfig& cfg) {
  const Mapping m = map_layer(spec, cfg);
  return ceil_div(spec.out_c, cfg.blocks) * spec.in_c * m.segments * spec.in_w * kFilterSize;
}

/// "block,cycle,in_c,col,seg,out_c,wcol,out_col,discard"
inline std::string dump_entry(const ScheduleEntry& e) {
  std::ostringstream os;
  os << e.block << ',' << e.cycle << ',' << e.in_c << ',' << e.in_col << ',' << e.seg << ','
     << e.out_c << ',' << to_char(e.wcol) << ',' << e.out_col << ',' << (e.discard ? 1 : 0);
  return os.str();
}

/// One line per entry, blocks in order.
inline std::string dump_schedule(const Schedule& s) {
  std::string out;
  for (const auto& b : s.blocks)
    for (const auto& e : b) out += dump_entry(e) + '\n';
  return out;
}

}  // namespace vscnn
