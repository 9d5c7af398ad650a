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

// Command-line front end: worked example, layer and network runs, pruning,
// synthetic sparsity generation and report printing.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "vscnn/vscnn.hpp"

namespace fs = std::filesystem;
using namespace vscnn;

namespace {

/// Experiment flags. Values given on the command line override the config file.
struct ExperimentFlags {
  std::string config;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void add(CLI::App* app, bool with_pe = true) {
    app->add_option("--config", config, "key=value config file")->check(CLI::ExistingFile);
    auto opt = [&](const std::string& key, const std::string& flag, const std::string& help) {
      options[key] = app->add_option(flag, values[key], help);
    };
    if (with_pe) opt("pe", "--pe", "PE array B,R,C (default 4,14,3)");
    opt("weight_density", "--weight-density", "weight vector density after pruning");
    opt("input_model", "--input-model", "relu | bernoulli:P | file:PATH");
    opt("seed", "--seed", "random seed");
    opt("scale", "--scale", "spatial scale of the VGG-16 catalog, e.g. 1/8");
    opt("layers", "--layers", "vgg16 or 'name:HxWxCxO;...'");
    opt("dtype", "--dtype", "operand bits: 8, 16 or 32");
    opt("acc_bits", "--acc-bits", "accumulator bits");
    opt("out", "--out", "output directory");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config(config);
    for (const auto& [key, o] : options)
      if (o->count() > 0) apply_setting(cfg, key, values.at(key));
    cfg.validate();
    return cfg;
  }
};

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * v);
  return buf;
}

std::string fixed(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void print_schedule(const Schedule& s, std::size_t rows) {
  std::printf("%5s  %-8s %-8s %-8s  %s\n", "cycle", "input", "weight", "output",
              "block,cycle,in_c,col,seg,out_c,wcol,out_col,discard");
  for (const auto& e : s.blocks[0]) {
    const CycleLabels l = cycle_labels(e, rows);
    std::printf("%5u  %-8s %-8s %-8s  %s\n", e.cycle, l.input.c_str(), l.weight.c_str(),
                l.output.c_str(), dump_entry(e).c_str());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  const std::vector<std::uint8_t> bytes(text.begin(), text.end());
  detail::write_file(path, bytes);
}

int cmd_demo(const fs::path& out) {
  const WorkedExample ex = worked_example();
  const Mapping m = map_layer(ex.layer.spec, ex.config);
  const std::size_t rows = ex.config.rows;

  const Schedule dense = schedule_dense(m);
  std::cout << "dense schedule (5x5 input, 3x3 kernel, 5x3 PEs)\n";
  print_schedule(dense, rows);
  const SimResult dr = simulate(dense, ex.dense_input, ex.dense_weights, m);
  if (dr.output != conv2d_reference(ex.dense_input, ex.dense_weights, ex.layer.spec))
    throw MismatchError("oracle mismatch: dense demo output differs from the reference");
  std::cout << "dense: " << dr.total_cycles << " cycles, output matches reference\n\n";

  const auto acts = encode_activations(ex.sparse_input, rows);
  const auto wts = encode_weights(ex.sparse_weights);
  const Schedule sparse = schedule_sparse(m, acts, wts);
  std::cout << "sparse schedule (input column B zero, filter column WC pruned)\n";
  print_schedule(sparse, rows);
  const SimResult sr = simulate(sparse, acts, wts, m);
  if (sr.output != conv2d_reference(ex.sparse_input, ex.sparse_weights, ex.layer.spec))
    throw MismatchError("oracle mismatch: sparse demo output differs from the reference");

  std::vector<std::uint32_t> skipped;
  for (const auto& e : dense.blocks[0]) {
    const bool kept = std::any_of(sparse.blocks[0].begin(), sparse.blocks[0].end(), [&](const auto& s) {
      return s.in_col == e.in_col && s.seg == e.seg && s.wcol == e.wcol && s.in_c == e.in_c;
    });
    if (!kept) skipped.push_back(e.cycle);
  }
  std::string skipped_text;
  for (auto c : skipped) skipped_text += (skipped_text.empty() ? "" : ",") + std::to_string(c);
  const std::size_t saved = dr.total_cycles - sr.total_cycles;
  std::cout << "sparse: " << sr.total_cycles << " cycles, " << saved << "/" << dr.total_cycles
            << " cycles saved (" << percent(double(saved) / double(dr.total_cycles))
            << "), skipped dense cycles " << skipped_text << ", output matches reference\n";

  fs::create_directories(out);
  write_text(out / "demo_dense_schedule.txt", dump_schedule(dense));
  write_text(out / "demo_sparse_schedule.txt", dump_schedule(sparse));
  return 0;
}

void print_row(const LayerMetrics& l) {
  std::printf("%-10s dense %10zu  actual %10zu  ideal_vec %10zu  ideal_fg %10zu  speedup %s  "
              "exploit_vec %s  exploit_fg %s\n",
              l.name.c_str(), l.dense_cycles, l.actual_cycles, l.ideal_vec_cycles,
              l.ideal_fg_cycles, fixed(l.speedup).c_str(), fixed(l.exploit_vec).c_str(),
              fixed(l.exploit_fg).c_str());
}

NamedLayer pick_layer(const ExperimentConfig& cfg, const std::string& name, const std::string& dims) {
  if (!dims.empty()) return {name.empty() ? "layer" : name, parse_layer_shape(dims)};
  const auto layers = cfg.resolved_layers();
  if (name.empty()) return layers.front();
  for (const auto& l : layers)
    if (l.name == name) return l;
  throw ConfigError("no layer named '" + name + "'");
}

int cmd_run_layer(const ExperimentFlags& flags, const std::string& name, const std::string& dims) {
  const ExperimentConfig cfg = flags.resolve();
  const NamedLayer layer = pick_layer(cfg, name, dims);
  std::size_t index = 0;
  const auto layers = cfg.resolved_layers();
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (dims.empty() && layers[i].name == layer.name) index = i;

  const LayerRun run = run_layer(cfg, layer, index);
  MetricsReport report;
  report.label = cfg.pe_config.to_string();
  report.layers.push_back(run.metrics);
  fs::create_directories(cfg.out_dir);
  emit_report(report, cfg.out_dir / "layer.csv");
  write_text(cfg.out_dir / "layer_dense_sim.json", to_json(run.dense).dump(2) + "\n");
  write_text(cfg.out_dir / "layer_sparse_sim.json", to_json(run.sparse).dump(2) + "\n");
  std::cout << "PE array " << cfg.pe_config.to_string() << ", layer "
            << dims_to_string(std::vector<std::size_t>{layer.spec.in_h, layer.spec.in_w,
                                                       layer.spec.in_c, layer.spec.out_c})
            << " (HxWxCxO), outputs match reference\n";
  print_row(run.metrics);
  return 0;
}

int cmd_run_network(const ExperimentFlags& flags, const std::vector<std::string>& pes) {
  ExperimentConfig cfg = flags.resolve();
  std::vector<PeArrayConfig> configs;
  for (const auto& p : pes) configs.push_back(parse_pe_config(p));
  if (configs.empty()) configs.push_back(cfg.pe_config);

  fs::create_directories(cfg.out_dir);
  for (const auto& pe : configs) {
    cfg.pe_config = pe;
    const MetricsReport report = run_network(cfg);
    const std::string file = "network_" + std::to_string(pe.blocks) + "x" +
                             std::to_string(pe.rows) + "x" + std::to_string(pe.cols) + ".csv";
    emit_report(report, cfg.out_dir / file);
    std::cout << "PE array " << pe.to_string() << " -> " << (cfg.out_dir / file).string() << "\n";
    for (const auto& l : report.layers) print_row(l);
    print_row(report.totals());
  }
  return 0;
}

int cmd_prune(const ExperimentFlags& flags, const std::string& in, const std::string& dims) {
  const ExperimentConfig cfg = flags.resolve();
  DenseTensor w;
  if (!in.empty()) {
    w = read_tensor(in);
  } else {
    const NamedLayer layer = pick_layer(cfg, "", dims);
    Rng rng = layer_rng(cfg.seed, 0, StreamTag::weights);
    w = random_weights(layer.spec, cfg.dtype_bits, rng);
  }
  const auto before = density_report(w, encode_weights(w));
  const DenseTensor pruned = prune_weights_vector(w, cfg.weight_density);
  const auto sparse = encode_weights(pruned);
  const auto after = density_report(pruned, sparse);
  fs::create_directories(cfg.out_dir);
  write_tensor(cfg.out_dir / "pruned.vstn", pruned);
  write_sparse(cfg.out_dir / "pruned.vssp", sparse);
  std::cout << "weights " << dims_to_string(w.dims()) << ": filter columns " << before.nonzero_vectors
            << " -> " << after.nonzero_vectors << " of " << after.total_vectors
            << ", vector density " << fixed(before.vector_density, 4) << " -> "
            << fixed(after.vector_density, 4) << ", element density "
            << fixed(before.element_density, 4) << " -> " << fixed(after.element_density, 4) << "\n";
  return 0;
}

int cmd_gen_sparsity(const std::string& dims, double density, std::uint64_t seed,
                     std::size_t vec_len, int bits, const fs::path& out) {
  std::vector<std::size_t> d;
  {
    std::string item;
    std::istringstream is(dims);
    while (std::getline(is, item, 'x')) {
      std::size_t v = 0;
      auto r = std::from_chars(item.data(), item.data() + item.size(), v);
      if (r.ec != std::errc{} || r.ptr != item.data() + item.size())
        throw ConfigError("bad dims '" + dims + "', expected CxHxW");
      d.push_back(v);
    }
  }
  if (d.size() != 3) throw ConfigError("bad dims '" + dims + "', expected CxHxW");
  const auto s = gen_sparsity(d[0], d[1], d[2], density, seed, vec_len, bits);
  fs::create_directories(out);
  write_sparse(out / "sparsity.vssp", s);
  std::cout << "kept " << s.nnz_vectors() << " of " << s.slot_count() << " vectors ("
            << fixed(vector_density(s), 4) << ") -> " << (out / "sparsity.vssp").string() << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& files) {
  std::vector<double> totals;
  for (const auto& f : files) {
    const auto bytes = detail::read_file(f);
    const ParsedMetrics p = parse_csv(std::string(bytes.begin(), bytes.end()));
    std::cout << f << "\n";
    for (const auto& l : p.layers) print_row(l);
    if (p.totals) {
      print_row(*p.totals);
      totals.push_back(p.totals->speedup);
    }
  }
  if (totals.size() == 2)
    std::cout << "speedup ratio (second / first): " << fixed(totals[1] / totals[0], 4) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cycle-level model of a vector-sparse CNN accelerator"};
  app.require_subcommand(1);

  std::string out = "out";
  auto* demo = app.add_subcommand("demo", "5x5 worked example: dense and sparse schedules");
  demo->add_option("--out", out, "output directory");

  ExperimentFlags layer_flags;
  std::string layer_name, layer_dims;
  auto* run_layer_cmd = app.add_subcommand("run-layer", "simulate one layer dense and sparse");
  layer_flags.add(run_layer_cmd);
  run_layer_cmd->add_option("--layer", layer_name, "catalog layer name, e.g. conv3_1");
  run_layer_cmd->add_option("--dims", layer_dims, "explicit layer HxWxCxO");

  ExperimentFlags net_flags;
  std::vector<std::string> pes;
  auto* run_net = app.add_subcommand("run-network", "run all layers and write the metrics CSV");
  net_flags.add(run_net, false);
  run_net->add_option("--pe", pes, "PE array B,R,C; repeat to compare configurations")
      ->allow_extra_args(false);

  ExperimentFlags prune_flags;
  std::string prune_in, prune_dims;
  auto* prune = app.add_subcommand("prune", "vector-prune a weight tensor");
  prune_flags.add(prune);
  prune->add_option("--in", prune_in, "weight tensor file")->check(CLI::ExistingFile);
  prune->add_option("--dims", prune_dims, "random weights for layer HxWxCxO");

  std::string gen_dims;
  double gen_density = 0.5;
  std::uint64_t gen_seed = 1;
  std::size_t gen_vec = 14;
  int gen_bits = 8;
  std::string gen_out = "out";
  auto* gen = app.add_subcommand("gen-sparsity", "write a synthetic vector-sparse activation file");
  gen->add_option("--dims", gen_dims, "CxHxW")->required();
  gen->add_option("--density", gen_density, "fraction of vectors kept");
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("--vec-len", gen_vec, "vector length V");
  gen->add_option("--dtype", gen_bits, "value bits");
  gen->add_option("--out", gen_out, "output directory");

  std::vector<std::string> report_files;
  auto* report = app.add_subcommand("report", "print metrics CSV files");
  report->add_option("csv", report_files, "metrics CSV files")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorCategory::config);
  }

  try {
    if (*demo) return cmd_demo(out);
    if (*run_layer_cmd) return cmd_run_layer(layer_flags, layer_name, layer_dims);
    if (*run_net) return cmd_run_network(net_flags, pes);
    if (*prune) return cmd_prune(prune_flags, prune_in, prune_dims);
    if (*gen) return cmd_gen_sparsity(gen_dims, gen_density, gen_seed, gen_vec, gen_bits, gen_out);
    if (*report) return cmd_report(report_files);
  } catch (const Error& e) {
    std::cerr << "error [" << category_name(e.category()) << "]: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
