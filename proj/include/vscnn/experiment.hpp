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
#include <cstdint>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vscnn/conv.hpp"
#include "vscnn/mapping.hpp"
#include "vscnn/metrics.hpp"
#include "vscnn/pe_sim.hpp"
#include "vscnn/rng.hpp"
#include "vscnn/sparse.hpp"
#include "vscnn/sparse_io.hpp"
#include "vscnn/tensor.hpp"
#include "vscnn/tensor_io.hpp"

namespace vscnn {

struct NamedLayer {
  std::string name;
  ConvLayerSpec spec;
};

/// Spatial scale as a fraction; scaled sizes round up.
struct Scale {
  std::size_t num = 1;
  std::size_t den = 1;

  std::size_t apply(std::size_t x) const { return std::max<std::size_t>(1, ceil_div(x * num, den)); }
};

inline Scale parse_scale(const std::string& text) {
  Scale s;
  if (auto slash = text.find('/'); slash != std::string::npos) {
    try {
      s.num = std::stoul(text.substr(0, slash));
      s.den = std::stoul(text.substr(slash + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad scale '" + text + "'");
    }
  } else {
    double v = 0;
    try {
      v = std::stod(text);
    } catch (const std::exception&) {
      throw ConfigError("bad scale '" + text + "'");
    }
    if (!(v > 0)) throw ConfigError("scale must be positive");
    // exact for inverse powers of two and simple decimals
    s.den = 1u << 20;
    s.num = static_cast<std::size_t>(std::llround(v * static_cast<double>(s.den)));
    const std::size_t g = std::gcd(s.num, s.den);
    s.num /= g;
    s.den /= g;
  }
  if (s.num == 0 || s.den == 0) throw ConfigError("scale must be positive");
  return s;
}

/// The 13 3x3 convolution layers of VGG-16 at 224x224, spatially scaled.
inline std::vector<NamedLayer> vgg16_layers(Scale scale = {}) {
  struct Row {
    const char* name;
    std::size_t hw, in_c, out_c;
  };
  static constexpr Row rows[] = {
      {"conv1_1", 224, 3, 64},    {"conv1_2", 224, 64, 64},   {"conv2_1", 112, 64, 128},
      {"conv2_2", 112, 128, 128}, {"conv3_1", 56, 128, 256},  {"conv3_2", 56, 256, 256},
      {"conv3_3", 56, 256, 256},  {"conv4_1", 28, 256, 512},  {"conv4_2", 28, 512, 512},
      {"conv4_3", 28, 512, 512},  {"conv5_1", 14, 512, 512},  {"conv5_2", 14, 512, 512},
      {"conv5_3", 14, 512, 512},
  };
  std::vector<NamedLayer> out;
  for (const auto& r : rows) {
    ConvLayerSpec s;
    s.in_h = s.in_w = scale.apply(r.hw);
    s.in_c = r.in_c;
    s.out_c = r.out_c;
    out.push_back({r.name, s});
  }
  return out;
}

/// "HxWxCxO" with 3x3 kernel, stride 1, pad 1.
inline ConvLayerSpec parse_layer_shape(const std::string& text) {
  ConvLayerSpec s;
  char x1 = 0, x2 = 0, x3 = 0;
  std::istringstream is(text);
  if (!(is >> s.in_h >> x1 >> s.in_w >> x2 >> s.in_c >> x3 >> s.out_c) || x1 != 'x' || x2 != 'x' ||
      x3 != 'x' || !is.eof())
    throw ConfigError("layer shape must look like HxWxCxO, got '" + text + "'");
  s.validate();
  return s;
}

struct InputModel {
  enum class Kind { bernoulli, relu_propagated, file };
  Kind kind = Kind::relu_propagated;
  double p = 1.0;
  std::filesystem::path path;

  std::string to_string() const {
    switch (kind) {
      case Kind::bernoulli: {
        std::ostringstream os;
        os << "bernoulli:" << p;
        return os.str();
      }
      case Kind::relu_propagated: return "relu";
      case Kind::file: return "file:" + path.string();
    }
    return "";
  }
};

/// "bernoulli:P", "relu" or "file:PATH".
inline InputModel parse_input_model(const std::string& text) {
  InputModel m;
  if (text == "relu" || text == "relu-propagated") {
    m.kind = InputModel::Kind::relu_propagated;
  } else if (text.rfind("bernoulli:", 0) == 0) {
    m.kind = InputModel::Kind::bernoulli;
    try {
      m.p = std::stod(text.substr(10));
    } catch (const std::exception&) {
      throw ConfigError("bad bernoulli density in '" + text + "'");
    }
    if (!(m.p > 0.0 && m.p <= 1.0)) throw ConfigError("input density must be in (0, 1]");
  } else if (text.rfind("file:", 0) == 0) {
    m.kind = InputModel::Kind::file;
    m.path = text.substr(5);
  } else {
    throw ConfigError("unknown input model '" + text + "'");
  }
  return m;
}

struct ExperimentConfig {
  PeArrayConfig pe_config = kConfig4x14;
  std::string catalog = "vgg16";  // used when `layers` is empty
  Scale scale{1, 8};
  std::vector<NamedLayer> layers;
  double weight_density = 0.235;
  InputModel input_model;
  std::uint64_t seed = 1;
  int dtype_bits = 8;
  int accumulator_bits = 32;
  std::filesystem::path out_dir = "out";

  std::vector<NamedLayer> resolved_layers() const {
    if (!layers.empty()) return layers;
    if (catalog == "vgg16") return vgg16_layers(scale);
    throw ConfigError("unknown layer catalog '" + catalog + "'");
  }

  void validate() const {
    pe_config.validate();
    if (!(weight_density > 0.0 && weight_density <= 1.0))
      throw ConfigError("weight density must be in (0, 1]");
    if (dtype_bits != 8 && dtype_bits != 16 && dtype_bits != 32)
      throw ConfigError("dtype must be 8, 16 or 32 bits");
    if (!valid_bit_width(accumulator_bits) || accumulator_bits < dtype_bits)
      throw ConfigError("accumulator must be 16, 32 or 64 bits and at least the operand width");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw ConfigError("bad integer for " + key + ": '" + v + "'");
  return out;
}

}  // namespace detail

/// Applies one `key=value` setting.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "pe") {
    cfg.pe_config = parse_pe_config(value);
  } else if (key == "layers") {
    cfg.layers.clear();
    if (value == "vgg16") {
      cfg.catalog = value;
      return;
    }
    std::istringstream is(value);
    std::size_t i = 0;
    for (std::string item; std::getline(is, item, ';');) {
      item = detail::trim(item);
      if (item.empty()) continue;
      std::string name = "layer" + std::to_string(i++);
      if (auto colon = item.find(':'); colon != std::string::npos) {
        name = item.substr(0, colon);
        item = item.substr(colon + 1);
      }
      cfg.layers.push_back({name, parse_layer_shape(item)});
    }
  } else if (key == "scale") {
    cfg.scale = parse_scale(value);
  } else if (key == "weight_density" || key == "weight-density") {
    try {
      cfg.weight_density = std::stod(value);
    } catch (const std::exception&) {
      throw ConfigError("bad weight density '" + value + "'");
    }
  } else if (key == "input_model" || key == "input-model") {
    cfg.input_model = parse_input_model(value);
  } else if (key == "seed") {
    cfg.seed = detail::parse_u64(key, value);
  } else if (key == "dtype") {
    cfg.dtype_bits = static_cast<int>(detail::parse_u64(key, value));
  } else if (key == "acc_bits" || key == "acc-bits") {
    cfg.accumulator_bits = static_cast<int>(detail::parse_u64(key, value));
  } else if (key == "out") {
    cfg.out_dir = value;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

/// Flat `key = value` text; '#' starts a comment.
inline ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig cfg = {}) {
  std::istringstream is(text);
  std::size_t lineno = 0;
  for (std::string line; std::getline(is, line);) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + " has no '='");
    apply_setting(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig cfg = {}) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), std::move(cfg));
}

// Operand generation -------------------------------------------------------

enum class StreamTag : std::uint64_t { weights = 1, input = 2, image = 3, sparsity = 4 };

inline Rng layer_rng(std::uint64_t seed, std::size_t layer, StreamTag tag) {
  return Rng(derive_seed(seed, layer, static_cast<std::uint64_t>(tag)));
}

/// Uniform weights in [-max, max] for the operand width.
inline DenseTensor random_weights(const ConvLayerSpec& s, int bits, Rng& rng) {
  DenseTensor w({s.out_c, s.in_c, s.k_h, s.k_w}, bits);
  const Element hi = max_for_bits(bits);
  for (auto& v : w.data()) v = rng.in_range(-hi, hi);
  return w;
}

/// Each element nonzero with probability p; nonzero values in [1, max].
inline DenseTensor bernoulli_activations(std::size_t c, std::size_t h, std::size_t w, double p,
                                         int bits, Rng& rng) {
  DenseTensor t({c, h, w}, bits);
  const Element hi = max_for_bits(bits);
  for (auto& v : t.data()) v = rng.bernoulli(p) ? rng.in_range(1, hi) : 0;
  return t;
}

/// Synthetic vector-sparse activations: each vector slot kept with probability
/// `density`; kept vectors hold nonzero values in [1, max] (tail padding stays 0).
inline VectorSparseTensor gen_sparsity(std::size_t c, std::size_t h, std::size_t w, double density,
                                       std::uint64_t seed, std::size_t vec_len, int bits = 8) {
  if (!(density >= 0.0 && density <= 1.0)) throw ConfigError("density must be in [0, 1]");
  if (vec_len == 0) throw ConfigError("vector length must be >= 1");
  if (c == 0 || h == 0 || w == 0) throw ConfigError("dims must be >= 1");
  Rng rng(derive_seed(seed, 0, static_cast<std::uint64_t>(StreamTag::sparsity)));
  const Element hi = max_for_bits(bits);
  const std::size_t segs = ceil_div(h, vec_len);
  std::vector<VectorCoord> coords;
  std::vector<Element> payload;
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t s = 0; s < segs; ++s) {
        if (!rng.bernoulli(density)) continue;
        coords.push_back({static_cast<std::uint32_t>(ch), static_cast<std::uint32_t>(x),
                          static_cast<std::uint32_t>(s)});
        for (std::size_t r = 0; r < vec_len; ++r)
          payload.push_back(s * vec_len + r < h ? rng.in_range(1, hi) : 0);
      }
  return VectorSparseTensor(VectorRole::activation, vec_len, {c, h, w}, std::move(coords),
                            std::move(payload), bits);
}

/// Brings a ReLU output back into the operand range. Positive values are
/// shifted right just enough to fit and never collapse to zero, so the zero
/// pattern of the ReLU output is preserved exactly.
inline DenseTensor requantize(const DenseTensor& t, int bits) {
  const Element hi = max_for_bits(bits);
  Element peak = 0;
  for (auto v : t.data()) peak = std::max(peak, v);
  int shift = 0;
  while ((peak >> shift) > hi) ++shift;
  DenseTensor out(t.dims(), bits);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Element v = t[i];
    out[i] = v <= 0 ? 0 : std::max<Element>(1, v >> shift);
  }
  return out;
}

/// Max pooling with window ceil(H / h) x ceil(W / w) (ceil mode at the edges).
inline DenseTensor downscale(const DenseTensor& t, std::size_t h, std::size_t w) {
  const std::size_t c = t.dim(0), H = t.dim(1), W = t.dim(2);
  if (h == H && w == W) return t;
  if (h == 0 || w == 0 || h > H || w > W)
    throw ShapeError("cannot downscale " + dims_to_string(t.dims()) + " to " + std::to_string(h) +
                     "x" + std::to_string(w));
  const std::size_t fy = ceil_div(H, h), fx = ceil_div(W, w);
  if (ceil_div(H, fy) != h || ceil_div(W, fx) != w)
    throw ShapeError("no integer pooling window maps " + dims_to_string(t.dims()) + " to " +
                     std::to_string(h) + "x" + std::to_string(w));
  DenseTensor out({c, h, w}, t.bit_width());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        Element best = std::numeric_limits<Element>::min();
        for (std::size_t yy = y * fy; yy < std::min(H, (y + 1) * fy); ++yy)
          for (std::size_t xx = x * fx; xx < std::min(W, (x + 1) * fx); ++xx)
            best = std::max(best, t.at(ch, yy, xx));
        out.at(ch, y, x) = best;
      }
  return out;
}

/// Network input image for the ReLU-propagated model: nonnegative pixels.
inline DenseTensor random_image(const ConvLayerSpec& s, int bits, Rng& rng) {
  DenseTensor t({s.in_c, s.in_h, s.in_w}, bits);
  const Element hi = max_for_bits(bits);
  for (auto& v : t.data()) v = rng.in_range(0, hi);
  return t;
}

inline DenseTensor load_input_file(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, "VSSP"))
    return decode(deserialize_sparse(bytes));
  return deserialize_tensor(bytes);
}

// Layer and network runs ---------------------------------------------------

struct LayerOperands {
  DenseTensor input;    // [in_c, in_h, in_w]
  DenseTensor weights;  // [out_c, in_c, 3, 3], already pruned
};

struct LayerRun {
  SimResult dense;
  SimResult sparse;
  LayerMetrics metrics;
};

/// Pruned random weights for layer `index`; independent of the PE configuration.
inline DenseTensor layer_weights(const ExperimentConfig& cfg, std::size_t index,
                                 const ConvLayerSpec& spec) {
  Rng rng = layer_rng(cfg.seed, index, StreamTag::weights);
  return prune_weights_vector(random_weights(spec, cfg.dtype_bits, rng), cfg.weight_density);
}

/// Input for layer `index` when it does not come from a previous layer.
inline DenseTensor layer_input(const ExperimentConfig& cfg, std::size_t index,
                               const ConvLayerSpec& spec) {
  switch (cfg.input_model.kind) {
    case InputModel::Kind::bernoulli: {
      Rng rng = layer_rng(cfg.seed, index, StreamTag::input);
      return bernoulli_activations(spec.in_c, spec.in_h, spec.in_w, cfg.input_model.p,
                                   cfg.dtype_bits, rng);
    }
    case InputModel::Kind::relu_propagated: {
      Rng rng = layer_rng(cfg.seed, index, StreamTag::image);
      return random_image(spec, cfg.dtype_bits, rng);
    }
    case InputModel::Kind::file: {
      DenseTensor t = load_input_file(cfg.input_model.path);
      if (t.dims() != std::vector<std::size_t>{spec.in_c, spec.in_h, spec.in_w})
        throw ShapeError("input file dims " + dims_to_string(t.dims()) +
                         " do not match the layer");
      return t;
    }
  }
  throw ConfigError("unknown input model");
}

/// Maps, schedules, simulates (dense and sparse) and cross-checks one layer
/// against the reference convolution.
inline LayerRun execute_layer(const ExperimentConfig& cfg, std::size_t index,
                              const NamedLayer& layer, const LayerOperands& ops) {
  const Mapping m = map_layer(layer.spec, cfg.pe_config);
  const SimOptions sim_opts{cfg.accumulator_bits, true, std::nullopt};
  const DenseTensor reference =
      conv2d_reference(ops.input, ops.weights, layer.spec, {cfg.accumulator_bits, true});

  LayerRun run;
  run.dense = simulate(schedule_dense(m), ops.input, ops.weights, m, sim_opts);
  if (run.dense.output != reference)
    throw MismatchError("oracle mismatch: dense simulation of " + layer.name +
                        " differs from the reference convolution");

  const VectorSparseTensor acts = encode_activations(ops.input, cfg.pe_config.rows);
  const VectorSparseTensor wts = encode_weights(ops.weights);
  run.sparse = simulate(schedule_sparse(m, acts, wts), acts, wts, m, sim_opts);
  if (run.sparse.output != reference)
    throw MismatchError("oracle mismatch: sparse simulation of " + layer.name +
                        " differs from the reference convolution");

  run.metrics = make_layer_metrics(
      static_cast<long>(index), layer.name, run.dense.total_cycles, run.sparse.total_cycles,
      ideal_vector_cycles(acts, wts, m), ideal_finegrained_cycles(ops.input, ops.weights, m),
      density_report(ops.input, acts), density_report(ops.weights, wts));
  return run;
}

inline LayerRun run_layer(const ExperimentConfig& cfg, const NamedLayer& layer,
                          std::size_t index = 0) {
  cfg.validate();
  return execute_layer(cfg, index, layer,
                       {layer_input(cfg, index, layer.spec), layer_weights(cfg, index, layer.spec)});
}

/// Runs all layers in order. With the ReLU-propagated input model, each layer
/// consumes the previous layer's post-processed output (requantized and pooled
/// down to the next layer's size).
inline MetricsReport run_network(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto layers = cfg.resolved_layers();
  MetricsReport report;
  report.label = cfg.pe_config.to_string();
  std::optional<DenseTensor> carried;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& spec = layers[i].spec;
    LayerOperands ops{carried ? std::move(*carried) : layer_input(cfg, i, spec),
                      layer_weights(cfg, i, spec)};
    carried.reset();
    if (ops.input.dims() != std::vector<std::size_t>{spec.in_c, spec.in_h, spec.in_w})
      throw ShapeError("layer " + layers[i].name + " expects input " +
                       dims_to_string(std::vector<std::size_t>{spec.in_c, spec.in_h, spec.in_w}) +
                       ", got " + dims_to_string(ops.input.dims()));
    LayerRun run = execute_layer(cfg, i, layers[i], ops);
    report.layers.push_back(run.metrics);

    if (cfg.input_model.kind != InputModel::Kind::bernoulli && i + 1 < layers.size()) {
      const auto& next = layers[i + 1].spec;
      const DenseTensor activated =
          decode(post_process(run.sparse.output, cfg.pe_config.rows));
      carried = downscale(requantize(activated, cfg.dtype_bits), next.in_h, next.in_w);
    }
  }
  return report;
}

// Worked 5x5 example -------------------------------------------------------

struct WorkedExample {
  NamedLayer layer;
  PeArrayConfig config;
  DenseTensor dense_input;
  DenseTensor dense_weights;
  DenseTensor sparse_input;    // input column B zeroed
  DenseTensor sparse_weights;  // filter column C pruned
};

/// 5x5 single-channel input, one 3x3 kernel, 5 rows x 3 columns of PEs.
inline WorkedExample worked_example() {
  WorkedExample ex;
  ex.layer = {"example_5x5", ConvLayerSpec{5, 5, 1, 1, 3, 3, 1, 1}};
  ex.config = PeArrayConfig{1, 5, 3};
  std::vector<Element> in(25), w(9);
  for (std::size_t i = 0; i < in.size(); ++i) in[i] = static_cast<Element>(i % 7) + 1;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<Element>(i) - 4 + (i >= 4);
  ex.dense_input = DenseTensor({1, 5, 5}, in);
  ex.dense_weights = DenseTensor({1, 1, 3, 3}, w);
  ex.sparse_input = ex.dense_input;
  for (std::size_t y = 0; y < 5; ++y) ex.sparse_input.at(0, y, 1) = 0;
  ex.sparse_weights = ex.dense_weights;
  for (std::size_t r = 0; r < 3; ++r) ex.sparse_weights.at(0, 0, r, 2) = 0;
  return ex;
}

/// Timing-diagram style labels: input column, filter column and output column.
struct CycleLabels {
  std::string input;
  std::string weight;
  std::string output;
};

inline CycleLabels cycle_labels(const ScheduleEntry& e, std::size_t rows) {
  auto col_letter = [](std::size_t col) { return std::string(1, static_cast<char>('A' + col - 1)); };
  const std::string first = std::to_string(e.seg * rows + 1);
  const std::string last = std::to_string(e.seg * rows + rows);
  CycleLabels l;
  l.input = col_letter(e.in_col) + first + "-" + col_letter(e.in_col) + last;
  l.weight = "W" + std::string(1, to_char(e.wcol)) + "1-W" + std::string(1, to_char(e.wcol)) + "3";
  l.output = e.discard ? "x" : "O" + col_letter(e.out_col) + first + "-O" + col_letter(e.out_col) + last;
  return l;
}

}  // namespace vscnn
