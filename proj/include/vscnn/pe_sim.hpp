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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vscnn/mapping.hpp"
#include "vscnn/sparse.hpp"
#include "vscnn/tensor.hpp"

namespace vscnn {

/// One cycle of the R x 3 PE array. PE(i, j) multiplies input[i] by weight[j];
/// products travel diagonally and sum into p[i - j + 2], giving R + 2 partial
/// sums for consecutive output rows. p[0] and p[R + 1] are the boundary sums.
inline void pe_array_cycle_into(std::span<const Element> input, std::span<const Element> weight,
                                std::span<Element> diagonals) {
  const std::size_t rows = input.size();
  std::fill(diagonals.begin(), diagonals.end(), 0);
  for (std::size_t i = 0; i < rows; ++i) {
    const Element x = input[i];
    if (x == 0) continue;
    diagonals[i + 2] += x * weight[0];
    diagonals[i + 1] += x * weight[1];
    diagonals[i] += x * weight[2];
  }
}

inline std::vector<Element> pe_array_cycle(std::span<const Element> input,
                                           std::span<const Element> weight) {
  if (weight.size() != kFilterSize)
    throw ShapeError("weight vector must have 3 elements, got " + std::to_string(weight.size()));
  if (input.empty()) throw ShapeError("input vector must not be empty");
  std::vector<Element> p(input.size() + 2);
  pe_array_cycle_into(input, weight, p);
  return p;
}

inline std::vector<Element> pe_array_cycle(std::span<const Element> input,
                                           std::span<const Element> weight, std::size_t rows) {
  if (input.size() != rows)
    throw ShapeError("input vector has " + std::to_string(input.size()) + " elements, PE array has " +
                     std::to_string(rows) + " rows");
  return pe_array_cycle(input, weight);
}

/// Index-addressed partial-sum storage keyed by (out_c, output column, segment, row).
class PsumBuffer {
 public:
  struct Key {
    std::uint32_t out_c = 0;
    std::uint32_t out_col = 0;  // 1-based
    std::uint32_t seg = 0;
    std::uint32_t row = 0;
  };

  PsumBuffer(std::size_t out_c, std::size_t out_w, std::size_t segments, std::size_t rows,
             int accumulator_bits = 32, bool checked = true,
             std::optional<std::size_t> capacity_limit = std::nullopt)
      : out_c_(out_c),
        out_w_(out_w),
        segments_(segments),
        rows_(rows),
        bits_(accumulator_bits),
        checked_(checked),
        capacity_(capacity_limit),
        values_(out_c * out_w * segments * rows, 0),
        used_(values_.size(), 0) {}

  /// Adds `v` to the entry at `k`. `block` and `cycle` label errors.
  void accumulate(const Key& k, Element v, std::uint32_t block = 0, std::uint32_t cycle = 0) {
    const std::size_t i = index(k);
    if (!used_[i]) {
      if (capacity_ && entries_ + 1 > *capacity_)
        throw CapacityError("partial-sum buffer capacity " + std::to_string(*capacity_) +
                            " exceeded at block " + std::to_string(block) + " cycle " +
                            std::to_string(cycle));
      used_[i] = 1;
      ++entries_;
    }
    Element& acc = values_[i];
    acc += v;
    if (!fits_bits(acc, bits_)) {
      if (checked_)
        throw OverflowError("accumulator overflow at output (" + std::to_string(k.out_c) + ", col " +
                            std::to_string(k.out_col) + ", seg " + std::to_string(k.seg) +
                            ", row " + std::to_string(k.row) + ") cycle " + std::to_string(cycle));
      acc = wrap_to_bits(acc, bits_);
    }
  }

  Element value(const Key& k) const { return values_[index(k)]; }
  std::size_t entry_count() const { return entries_; }
  std::optional<std::size_t> capacity_limit() const { return capacity_; }

  /// Dense [out_c, out_h, out_w] view; rows past out_h in the last segment are dropped.
  DenseTensor materialize(std::size_t out_h) const {
    DenseTensor out({out_c_, out_h, out_w_}, bits_);
    for (std::size_t o = 0; o < out_c_; ++o)
      for (std::size_t y = 0; y < out_h; ++y)
        for (std::size_t x = 0; x < out_w_; ++x)
          out.at(o, y, x) = values_[((o * out_w_ + x) * segments_ + y / rows_) * rows_ + y % rows_];
    return out;
  }

 private:
  std::size_t index(const Key& k) const {
    if (k.out_c >= out_c_ || k.out_col < 1 || k.out_col > out_w_ || k.seg >= segments_ ||
        k.row >= rows_)
      throw ShapeError("partial-sum key out of range");
    return ((std::size_t{k.out_c} * out_w_ + (k.out_col - 1)) * segments_ + k.seg) * rows_ + k.row;
  }

  std::size_t out_c_, out_w_, segments_, rows_;
  int bits_;
  bool checked_;
  std::optional<std::size_t> capacity_;
  std::vector<Element> values_;
  std::vector<std::uint8_t> used_;
  std::size_t entries_ = 0;
};

struct SimOptions {
  int accumulator_bits = 32;
  bool checked = true;
  std::optional<std::size_t> psum_capacity;
};

struct SimResult {
  DenseTensor output;
  std::vector<std::size_t> cycles_per_block;
  std::size_t total_cycles = 0;
  std::size_t mac_count = 0;
  std::size_t sram_reads = 0;   // operand vectors plus psum read-modify-write reads
  std::size_t sram_writes = 0;  // psum writes
};

namespace detail {

/// Flat vector store addressed by operand slot.
struct VectorTable {
  std::size_t vec_len = 0;
  std::vector<Element> storage;
  std::vector<std::int64_t> offset;  // slot -> start in storage, -1 if absent

  const Element* find(std::size_t slot) const {
    const auto off = offset[slot];
    return off < 0 ? nullptr : storage.data() + off;
  }
};

inline VectorTable make_table(const VectorSparseTensor& s) {
  VectorTable t;
  t.vec_len = s.vec_len();
  t.storage.assign(s.payload().begin(), s.payload().end());
  t.offset = s.slot_table();
  for (auto& o : t.offset)
    if (o >= 0) o *= static_cast<std::int64_t>(t.vec_len);
  return t;
}

inline VectorTable activation_table(const VectorSparseTensor& acts, const Mapping& m) {
  const auto& L = m.layer;
  if (acts.role() != VectorRole::activation) throw ShapeError("activation operand has weight role");
  if (acts.vec_len() != m.config.rows)
    throw ShapeError("activation vector length " + std::to_string(acts.vec_len()) +
                     " does not match PE rows " + std::to_string(m.config.rows));
  if (acts.dense_dims() != std::vector<std::size_t>{L.in_c, L.in_h, L.in_w})
    throw ShapeError("activation dims " + dims_to_string(acts.dense_dims()) +
                     " do not match the mapped layer");
  return make_table(acts);
}

inline VectorTable activation_table(const DenseTensor& acts, const Mapping& m) {
  const auto& L = m.layer;
  if (acts.dims() != std::vector<std::size_t>{L.in_c, L.in_h, L.in_w})
    throw ShapeError("activation dims " + dims_to_string(acts.dims()) +
                     " do not match the mapped layer");
  const std::size_t rows = m.config.rows;
  VectorTable t;
  t.vec_len = rows;
  const std::size_t slots = L.in_c * L.in_w * m.segments;
  t.storage.assign(slots * rows, 0);
  t.offset.resize(slots);
  for (std::size_t ci = 0; ci < L.in_c; ++ci)
    for (std::size_t x = 0; x < L.in_w; ++x)
      for (std::size_t s = 0; s < m.segments; ++s) {
        const std::size_t slot = (ci * L.in_w + x) * m.segments + s;
        t.offset[slot] = static_cast<std::int64_t>(slot * rows);
        for (std::size_t r = 0; r < rows && s * rows + r < L.in_h; ++r)
          t.storage[slot * rows + r] = acts.at(ci, s * rows + r, x);
      }
  return t;
}

inline VectorTable weight_table(const VectorSparseTensor& wts, const Mapping& m) {
  const auto& L = m.layer;
  if (wts.role() != VectorRole::weight) throw ShapeError("weight operand has activation role");
  if (wts.dense_dims() != std::vector<std::size_t>{L.out_c, L.in_c, 3, 3})
    throw ShapeError("weight dims " + dims_to_string(wts.dense_dims()) +
                     " do not match the mapped layer");
  return make_table(wts);
}

inline VectorTable weight_table(const DenseTensor& wts, const Mapping& m) {
  const auto& L = m.layer;
  if (wts.dims() != std::vector<std::size_t>{L.out_c, L.in_c, 3, 3})
    throw ShapeError("weight dims " + dims_to_string(wts.dims()) + " do not match the mapped layer");
  VectorTable t;
  t.vec_len = kFilterSize;
  const std::size_t slots = L.out_c * L.in_c * kFilterSize;
  t.storage.resize(slots * kFilterSize);
  t.offset.resize(slots);
  for (std::size_t o = 0; o < L.out_c; ++o)
    for (std::size_t ci = 0; ci < L.in_c; ++ci)
      for (std::size_t f = 0; f < kFilterSize; ++f) {
        const std::size_t slot = (o * L.in_c + ci) * kFilterSize + f;
        t.offset[slot] = static_cast<std::int64_t>(slot * kFilterSize);
        for (std::size_t r = 0; r < kFilterSize; ++r)
          t.storage[slot * kFilterSize + r] = wts.at(o, ci, r, f);
      }
  return t;
}

}  // namespace detail

/// Executes `sched` on the PE array model. Activations and weights may be
/// dense tensors or vector-sparse tensors; every scheduled operand must exist.
template <typename Acts, typename Wts>
SimResult simulate(const Schedule& sched, const Acts& acts, const Wts& wts, const Mapping& m,
                   const SimOptions& opts = {}) {
  const auto& L = m.layer;
  const std::size_t rows = m.config.rows;
  if (sched.blocks.size() != m.config.blocks)
    throw MismatchError("schedule has " + std::to_string(sched.blocks.size()) +
                        " blocks, mapping has " + std::to_string(m.config.blocks));
  const detail::VectorTable act_table = detail::activation_table(acts, m);
  const detail::VectorTable w_table = detail::weight_table(wts, m);

  const std::size_t out_h = L.out_h();
  const std::size_t out_w = L.out_w();
  PsumBuffer psum(L.out_c, out_w, m.segments, rows, opts.accumulator_bits, opts.checked,
                  opts.psum_capacity);
  SimResult result;
  result.cycles_per_block.assign(m.config.blocks, 0);
  std::vector<Element> diag(rows + 2);

  for (std::size_t b = 0; b < sched.blocks.size(); ++b) {
    for (const ScheduleEntry& e : sched.blocks[b]) {
      if (e.block != b || e.out_c >= L.out_c || e.in_c >= L.in_c || e.seg >= m.segments ||
          e.in_col < 1 || e.in_col > L.in_w || m.block_of(e.out_c) != b)
        throw MismatchError("schedule entry " + dump_entry(e) + " does not fit the mapping");
      const std::size_t act_slot = (std::size_t{e.in_c} * L.in_w + (e.in_col - 1)) * m.segments + e.seg;
      const std::size_t w_slot =
          (std::size_t{e.out_c} * L.in_c + e.in_c) * kFilterSize + static_cast<std::size_t>(e.wcol);
      const Element* in = act_table.find(act_slot);
      const Element* w = w_table.find(w_slot);
      if (in == nullptr || w == nullptr)
        throw MismatchError("missing " + std::string(in == nullptr ? "input" : "weight") +
                            " operand for block " + std::to_string(b) + " cycle " +
                            std::to_string(e.cycle));

      ++result.cycles_per_block[b];
      result.mac_count += rows * kFilterSize;
      result.sram_reads += 2;
      if (e.discard) continue;

      pe_array_cycle_into({in, rows}, {w, kFilterSize}, diag);
      auto add = [&](std::uint32_t seg, std::size_t row, Element v) {
        psum.accumulate({e.out_c, e.out_col, seg, static_cast<std::uint32_t>(row)}, v, e.block,
                        e.cycle);
        ++result.sram_reads;
        ++result.sram_writes;
      };
      for (std::size_t r = 0; r < rows && e.seg * rows + r < out_h; ++r) add(e.seg, r, diag[r + 1]);
      if (e.route_up) add(e.seg - 1, rows - 1, diag[0]);
      if (e.route_down) add(e.seg + 1, 0, diag[rows + 1]);
    }
  }
  for (auto c : result.cycles_per_block) result.total_cycles = std::max(result.total_cycles, c);
  result.output = psum.materialize(out_h);
  return result;
}

/// ReLU followed by zero detection into activation vectors of length `vec_len`.
inline VectorSparseTensor post_process(const DenseTensor& out, std::size_t vec_len) {
  return encode_activations(relu(out), vec_len);
}

inline constexpr int kSimReportVersion = 1;

inline nlohmann::json to_json(const SimResult& r) {
  return {
      {"format", "vscnn-sim-result"},
      {"version", kSimReportVersion},
      {"output_dims", r.output.dims()},
      {"cycles_per_block", r.cycles_per_block},
      {"total_cycles", r.total_cycles},
      {"mac_count", r.mac_count},
      {"sram_reads", r.sram_reads},
      {"sram_writes", r.sram_writes},
  };
}

/// Counts only; the output tensor itself is not part of the report.
inline SimResult sim_result_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "vscnn-sim-result") throw FormatError("not a simulation report");
    if (j.at("version").get<int>() != kSimReportVersion)
      throw FormatError("unsupported simulation report version");
    SimResult r;
    r.output = DenseTensor(j.at("output_dims").get<std::vector<std::size_t>>(), 32);
    r.cycles_per_block = j.at("cycles_per_block").get<std::vector<std::size_t>>();
    r.total_cycles = j.at("total_cycles").get<std::size_t>();
    r.mac_count = j.at("mac_count").get<std::size_t>();
    r.sram_reads = j.at("sram_reads").get<std::size_t>();
    r.sram_writes = j.at("sram_writes").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed simulation report: ") + e.what());
  }
}

}  // namespace vscnn
