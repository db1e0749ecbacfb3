/**
 * Copyright 2026 The nextcell Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "nextcell/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "nextcell/error.hpp"
#include "nextcell/ingest.hpp"
#include "nextcell/replay.hpp"
#include "nextcell/seal.hpp"
#include "nextcell/vgae.hpp"

#ifndef NEXTCELL_VERSION
#define NEXTCELL_VERSION "0.0.0"
#endif

namespace nextcell {
namespace fs = std::filesystem;
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

// Assigns cfg[key] to `target` when present.
template <class T>
void take(const ConfigMap& cfg, const std::string& key, T& target) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return;
  if constexpr (std::is_same_v<T, bool>) {
    target = to_bool(key, it->second);
  } else if constexpr (std::is_floating_point_v<T>) {
    target = to_double(key, it->second);
  } else if constexpr (std::is_same_v<T, int>) {
    const auto v = to_count(key, it->second);
    if (v > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) throw ConfigError(key + ": value too large");
    target = static_cast<int>(v);
  } else {
    target = static_cast<T>(to_count(key, it->second));
  }
}

const std::set<std::string>& scenario_keys() {
  static const std::set<std::string> keys{
      "n_cells",        "n_ues",           "area_m",      "cell_spacing_m",    "speed_min_mps",
      "speed_max_mps",  "duration_s",      "sample_period_s", "max_neighbors", "rng_seed",
      "roam_radius_m",  "pathloss_exponent", "shadowing_sigma_db", "shadowing_decorrelation_m", "hysteresis_db",
      "report_window_db", "tx_power_dbm"};
  return keys;
}

const std::set<std::string>& rw_keys() {
  static const std::set<std::string> keys{"rw.blocks",   "rw.ues_per_block", "rw.cells_per_block",
                                          "rw.link_probability", "rw.ue_width", "rw.cell_width",
                                          "rw.edge_width", "rw.duplicate_fraction", "rw.seed"};
  return keys;
}

const std::set<std::string>& train_keys() {
  static const std::set<std::string> keys{
      "lr",       "max_epochs",  "patience",    "weight_decay", "hidden",         "latent",
      "kl_weight", "threshold_objective", "resample_negatives", "hops", "seal_hidden", "seal_layers",
      "label_dim", "seal_normalized", "batch_size"};
  return keys;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::trunc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::out | mode);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

void record_output(RunManifest& m, const fs::path& path) { m.outputs[path.string()] = hex64(hash_file(path.string())); }

void write_manifest(RunManifest& m, const fs::path& path) {
  m.finished_utc = utc_now();
  auto out = open_out(path);
  m.write(out);
}

RunManifest start_manifest(const std::string& command, const ConfigMap& cfg) {
  RunManifest m;
  m.command = command;
  m.config = cfg;
  m.tool_version = NEXTCELL_VERSION;
  m.started_utc = utc_now();
  return m;
}

struct Dataset {
  AttributedGraph graph;
  std::string hash;
  IngestWarnings warnings;
};

Dataset load_dataset(const fs::path& dir) {
  const auto nodes = (dir / "nodes.csv").string(), edges = (dir / "edges.csv").string();
  Dataset d;
  d.graph = load_edge_list(nodes, edges, &d.warnings);
  d.hash = hex64(fnv1a(read_file(edges), fnv1a(read_file(nodes))));
  return d;
}

SplitBundle load_or_make_split(const AttributedGraph& g, const std::string& split_file, std::uint64_t seed) {
  if (split_file.empty()) return make_split(g, SplitRatios{}, seed);
  std::ifstream in(split_file);
  if (!in) throw DataError("cannot read " + split_file);
  return read_split_manifest(in);
}


struct Scored {
  std::vector<double> val_scores, val_labels, test_scores, test_labels;
  double infer_time_s = 0.0;
};

std::vector<double> labels_for(std::size_t pos, std::size_t neg) {
  std::vector<double> y(pos, 1.0);
  y.resize(pos + neg, 0.0);
  return y;
}

std::vector<NodePair> joined(const std::vector<NodePair>& a, const std::vector<NodePair>& b) {
  std::vector<NodePair> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Scores validation and test pairs; times the test pass only.
template <class ScoreFn>
Scored score_splits(const SplitBundle& bundle, ScoreFn&& score) {
  Scored s;
  const auto val = joined(bundle.val_pos, bundle.val_neg);
  const auto test = joined(bundle.test_pos, bundle.test_neg);
  s.val_scores = score(val);
  s.val_labels = labels_for(bundle.val_pos.size(), bundle.val_neg.size());
  s.infer_time_s = timing([&] { s.test_scores = score(test); });
  s.test_labels = labels_for(bundle.test_pos.size(), bundle.test_neg.size());
  return s;
}

EvalReport report_from(const Scored& s, const TrainConfig& cfg) {
  double threshold = 0.5;
  try {
    threshold = tune_threshold(s.val_scores, s.val_labels, cfg.threshold_grid, cfg.threshold_objective).threshold;
  } catch (const ThresholdError&) {
    // Single-class validation labels: keep the neutral threshold.
  }
  EvalReport r = make_report(s.test_scores, s.test_labels, threshold);
  r.infer_time_s = s.infer_time_s;
  return r;
}

Scored score_checkpoint(const Checkpoint& ckpt, const AttributedGraph& g, const SplitBundle& bundle) {
  const auto model = ckpt.meta.count("model") ? ckpt.meta.at("model") : std::string();
  if (model == "vgae") {
    const auto params = VgaeParams::from_checkpoint(ckpt);
    if (params.in_width != g.node_feature_width() || params.edge_width != g.edge_feature_width()) {
      throw DimensionError("checkpoint expects node/edge widths " + std::to_string(params.in_width) + "/" +
                           std::to_string(params.edge_width) + ", dataset has " +
                           std::to_string(g.node_feature_width()) + "/" + std::to_string(g.edge_feature_width()));
    }
    const GraphInputs inputs = prepare_inputs(g, bundle.message_edges);
    return score_splits(bundle, [&](const std::vector<NodePair>& pairs) { return predict_links(params, inputs, pairs); });
  }
  if (model == "seal") {
    const auto params = SealParams::from_checkpoint(ckpt);
    const std::size_t width = g.node_feature_width() + params.label_dim + g.edge_feature_width();
    if (params.in_width != width) {
      throw DimensionError("checkpoint expects input width " + std::to_string(params.in_width) + ", dataset gives " +
                           std::to_string(width));
    }
    const SealInputs inputs = prepare_seal_inputs(g, bundle.message_edges, params.label_dim, params.hops);
    return score_splits(bundle, [&](const std::vector<NodePair>& pairs) { return predict_seal(params, inputs, pairs); });
  }
  throw DataError("checkpoint has unknown model '" + model + "'");
}

// Runs job(i) for i in [0, n) on up to `threads` workers; rethrows the
// failure of the lowest index.
template <class Job>
void parallel_for(std::size_t n, std::size_t threads, Job&& job) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = std::max<std::size_t>(1, std::min(threads, n));
  for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Subcommands

struct GenArgs {
  std::string config, out, kind = "em";
  std::optional<std::uint64_t> seed;
};

int cmd_gen(const GenArgs& a) {
  const ConfigMap cfg = a.config.empty() ? ConfigMap{} : load_config(a.config);
  reject_unknown_keys(cfg);
  const fs::path out(a.out);
  fs::create_directories(out);
  RunManifest m = start_manifest("gen " + a.kind, cfg);
  AttributedGraph g;
  if (a.kind == "em") {
    ScenarioConfig sc = scenario_from_config(cfg);
    if (a.seed) sc.rng_seed = *a.seed;
    sc.validate();
    m.seeds = {sc.rng_seed};
    const MobilityTrace trace = generate_scenario(sc);
    {
      auto f = open_out(out / "trace.csv");
      write_trace(f, trace);
    }
    {
      auto f = open_out(out / "scenario.cfg");
      write_config_echo(f, sc);
    }
    record_output(m, out / "trace.csv");
    record_output(m, out / "scenario.cfg");
    // Radio features are not in [0, 1]; scale so loading does not clamp them.
    g = min_max_scaled(trace_to_graph(trace));
  } else if (a.kind == "rw") {
    RwLikeConfig rc = rw_from_config(cfg);
    if (a.seed) rc.seed = *a.seed;
    m.seeds = {rc.seed};
    const RawTables t = generate_rw_like(rc);
    g = homogenize(t.ues, t.cells, t.edges);
  } else {
    throw ConfigError("kind: expected em or rw, got '" + a.kind + "'");
  }
  write_edge_list(g, (out / "nodes.csv").string(), (out / "edges.csv").string());
  record_output(m, out / "nodes.csv");
  record_output(m, out / "edges.csv");
  m.dataset_hash = hex64(fnv1a(read_file((out / "edges.csv").string()), fnv1a(read_file((out / "nodes.csv").string()))));
  write_manifest(m, out / "manifest.txt");
  std::cout << "nodes=" << g.num_nodes() << " edges=" << g.num_edges() << " density=" << density(g)
            << " hash=" << m.dataset_hash << '\n';
  return kExitOk;
}

struct IngestArgs {
  std::string nodes, edges, out;
  std::size_t cells = 0, ues = 0;
  std::uint64_t subset_seed = 0;
};

int cmd_ingest(const IngestArgs& a) {
  IngestWarnings warnings;
  AttributedGraph g = load_edge_list(a.nodes, a.edges, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  if (a.cells > 0 || a.ues > 0) g = extract_subset(g, SubsetSpec{a.cells, a.ues, a.subset_seed});
  const fs::path out(a.out);
  fs::create_directories(out);
  RunManifest m = start_manifest("ingest", {{"nodes", a.nodes}, {"edges", a.edges}});
  m.seeds = {a.subset_seed};
  write_edge_list(g, (out / "nodes.csv").string(), (out / "edges.csv").string());
  record_output(m, out / "nodes.csv");
  record_output(m, out / "edges.csv");
  m.dataset_hash = hex64(fnv1a(read_file((out / "edges.csv").string()), fnv1a(read_file((out / "nodes.csv").string()))));
  write_manifest(m, out / "manifest.txt");
  std::cout << "nodes=" << g.num_nodes() << " ues=" << g.num_ues() << " cells=" << g.num_cells()
            << " edges=" << g.num_edges() << " density=" << density(g) << " warnings=" << warnings.size() << '\n';
  return kExitOk;
}

struct SplitArgs {
  std::string data, out;
  std::uint64_t seed = 1;
};

int cmd_split(const SplitArgs& a) {
  const Dataset d = load_dataset(a.data);
  const SplitBundle b = make_split(d.graph, SplitRatios{}, a.seed);
  const fs::path out = a.out.empty() ? fs::path(a.data) / ("split_" + std::to_string(a.seed) + ".csv") : fs::path(a.out);
  {
    auto f = open_out(out);
    write_split_manifest(f, b);
  }
  std::cout << "train=" << b.train_pos.size() << " val=" << b.val_pos.size() << " test=" << b.test_pos.size()
            << " file=" << out.string() << " hash=" << hex64(hash_file(out.string())) << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string model, data, seeds = "1", config, out, split;
  bool force = false, init_only = false;
  double max_cost = 5e7;
};

int cmd_train(const TrainArgs& a) {
  if (a.model != "vgae" && a.model != "seal") throw ConfigError("model: expected vgae or seal, got '" + a.model + "'");
  const ConfigMap cfg_map = a.config.empty() ? ConfigMap{} : load_config(a.config);
  reject_unknown_keys(cfg_map);
  const TrainConfig base = train_from_config(cfg_map, a.model == "seal" ? TrainConfig::seal_defaults()
                                                                          : TrainConfig::vgae_defaults());
  base.validate();
  const auto seeds = parse_seeds(a.seeds);
  const Dataset d = load_dataset(a.data);
  const AttributedGraph& g = d.graph;

  if (a.model == "seal" && !a.force) {
    const double cost = estimate_subgraph_cost(g, 2 * g.num_edges(), base.hops);
    if (cost > a.max_cost) {
      std::cerr << "refusing SEAL: estimated subgraph cost " << cost << " exceeds " << a.max_cost
                << " (nodes=" << g.num_nodes() << ", edges=" << g.num_edges() << "); use --force to run anyway\n";
      return kExitData;
    }
  }

  const fs::path out = a.out.empty() ? fs::path(a.data) / "runs" : fs::path(a.out);
  fs::create_directories(out);
  RunManifest m = start_manifest("train " + a.model, cfg_map);
  m.seeds = seeds;
  m.dataset_hash = d.hash;

  std::vector<TrainedRun> runs(seeds.size());
  parallel_for(seeds.size(), thread_cap(), [&](std::size_t i) {
    TrainConfig cfg = base;
    cfg.seed = seeds[i];
    const SplitBundle bundle = load_or_make_split(g, a.split, seeds[i]);
    if (a.init_only) {
      TrainedRun r;
      if (a.model == "vgae") {
        r.checkpoint = VgaeParams::init(g.node_feature_width(), g.edge_feature_width(), cfg.hidden, cfg.latent, cfg.seed)
                           .to_checkpoint();
      } else {
        auto p = SealParams::init(g.node_feature_width() + cfg.label_dim + g.edge_feature_width(), cfg.seal_hidden,
                                  cfg.seal_layers, cfg.seed);
        p.label_dim = cfg.label_dim;
        p.hops = cfg.hops;
        p.normalized = cfg.seal_normalized;
        r.checkpoint = p.to_checkpoint();
      }
      r.report = report_from(score_checkpoint(r.checkpoint, g, bundle), cfg);
      runs[i] = std::move(r);
    } else {
      runs[i] = train_and_evaluate(a.model, g, bundle, cfg);
    }
  });

  const fs::path results = out / "results.csv";
  const bool fresh = !fs::exists(results);
  auto table = open_out(results, std::ios::app);
  if (fresh) table << kResultsHeader << '\n';
  const std::string dataset = fs::path(a.data).filename().empty() ? fs::path(a.data).parent_path().filename().string()
                                                                  : fs::path(a.data).filename().string();
  std::cout << kResultsHeader << '\n';
  std::vector<EvalReport> reports;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const std::string tag = a.model + "_seed" + std::to_string(seeds[i]);
    save_checkpoint((out / (tag + ".ckpt")).string(), runs[i].checkpoint);
    {
      auto f = open_out(out / ("curve_" + tag + ".csv"));
      write_curve(f, runs[i].curve);
    }
    record_output(m, out / (tag + ".ckpt"));
    record_output(m, out / ("curve_" + tag + ".csv"));
    const std::string row = results_row(a.model, dataset, std::to_string(seeds[i]), runs[i].report);
    table << row << '\n';
    std::cout << row << '\n';
    reports.push_back(runs[i].report);
  }
  if (seeds.size() > 1) {
    const std::string row = results_row(a.model, dataset, "mean", mean_report(reports));
    table << row << '\n';
    std::cout << row << '\n';
  }
  table.close();
  write_manifest(m, out / ("manifest_" + a.model + ".txt"));
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint, data, split, config;
  std::uint64_t split_seed = 1;
};

int cmd_eval(const EvalArgs& a) {
  const ConfigMap cfg_map = a.config.empty() ? ConfigMap{} : load_config(a.config);
  reject_unknown_keys(cfg_map);
  const TrainConfig cfg = train_from_config(cfg_map, TrainConfig::vgae_defaults());
  const Dataset d = load_dataset(a.data);
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const SplitBundle bundle = load_or_make_split(d.graph, a.split, a.split_seed);
  const EvalReport r = report_from(score_checkpoint(ckpt, d.graph, bundle), cfg);
  write_report(std::cout, r);
  return kExitOk;
}

struct ReplayArgs {
  std::string trace, config, log;
  double head_fraction = 0.7, threshold = 0.5, window = 5.0;
  std::uint64_t seed = 1;
  bool oracle = false;
};

int cmd_replay(const ReplayArgs& a) {
  const ConfigMap cfg_map = a.config.empty() ? ConfigMap{} : load_config(a.config);
  reject_unknown_keys(cfg_map);
  std::ifstream in(a.trace);
  if (!in) throw DataError("cannot read " + a.trace);
  const MobilityTrace trace = read_trace(in);
  ReplayExperiment exp;
  exp.head_fraction = a.head_fraction;
  exp.split_seed = a.seed;
  exp.train = train_from_config(cfg_map, TrainConfig::vgae_defaults());
  exp.train.seed = a.seed;
  exp.replay.threshold = a.threshold;
  exp.replay.pingpong_window_s = a.window;
  exp.oracle = a.oracle;
  const ReplayOutcome o = run_replay_experiment(trace, exp);
  write_replay_report(std::cout, o.report);
  std::cout << "baseline_accuracy=" << o.baseline_accuracy << " t_split=" << o.t_split
            << " head_handovers=" << o.head_handovers << " train_s=" << o.train_time_s << '\n';
  if (!a.log.empty()) {
    auto f = open_out(a.log);
    write_replay_log(f, o.report);
  }
  return kExitOk;
}

struct BenchArgs {
  std::string config, sizes = "1,2,4", out;
  int epochs = 50, repeats = 3;
};

int cmd_bench(const BenchArgs& a) {
  const ConfigMap cfg_map = a.config.empty() ? ConfigMap{} : load_config(a.config);
  reject_unknown_keys(cfg_map);
  std::vector<double> multipliers;
  std::stringstream ss(a.sizes);
  for (std::string part; std::getline(ss, part, ',');) multipliers.push_back(to_double("sizes", trim(part)));
  const auto rows = bench_vgae(scenario_from_config(cfg_map), multipliers,
                               train_from_config(cfg_map, TrainConfig::vgae_defaults()), a.epochs, a.repeats);
  std::ostringstream table;
  table << "multiplier,nodes,edges,epochs,train_s\n";
  std::vector<double> x, y;
  for (const auto& r : rows) {
    table << r.multiplier << ',' << r.nodes << ',' << r.edges << ',' << r.epochs << ',' << r.train_s << '\n';
    x.push_back(static_cast<double>(r.nodes));
    y.push_back(r.train_s);
  }
  std::cout << table.str() << "r2=" << (rows.size() >= 2 ? linear_r2(x, y) : 1.0) << '\n';
  if (!a.out.empty()) {
    auto f = open_out(a.out);
    f << table.str();
  }
  return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------

ConfigMap parse_config(std::istream& in) {
  ConfigMap cfg;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": missing key");
    if (value.empty()) throw ConfigError(key + ": missing value on line " + std::to_string(line_no));
    cfg[key] = value;
  }
  return cfg;
}

ConfigMap load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  return parse_config(in);
}

ScenarioConfig scenario_from_config(const ConfigMap& cfg, ScenarioConfig s) {
  take(cfg, "n_cells", s.n_cells);
  take(cfg, "n_ues", s.n_ues);
  take(cfg, "area_m", s.area_m);
  take(cfg, "cell_spacing_m", s.cell_spacing_m);
  take(cfg, "speed_min_mps", s.speed_min_mps);
  take(cfg, "speed_max_mps", s.speed_max_mps);
  take(cfg, "duration_s", s.duration_s);
  take(cfg, "sample_period_s", s.sample_period_s);
  take(cfg, "max_neighbors", s.max_neighbors);
  take(cfg, "rng_seed", s.rng_seed);
  take(cfg, "roam_radius_m", s.roam_radius_m);
  take(cfg, "pathloss_exponent", s.pathloss_exponent);
  take(cfg, "shadowing_sigma_db", s.shadowing_sigma_db);
  take(cfg, "shadowing_decorrelation_m", s.shadowing_decorrelation_m);
  take(cfg, "hysteresis_db", s.hysteresis_db);
  take(cfg, "report_window_db", s.report_window_db);
  take(cfg, "tx_power_dbm", s.tx_power_dbm);
  return s;
}

RwLikeConfig rw_from_config(const ConfigMap& cfg, RwLikeConfig r) {
  take(cfg, "rw.blocks", r.blocks);
  take(cfg, "rw.ues_per_block", r.ues_per_block);
  take(cfg, "rw.cells_per_block", r.cells_per_block);
  take(cfg, "rw.link_probability", r.link_probability);
  take(cfg, "rw.ue_width", r.ue_width);
  take(cfg, "rw.cell_width", r.cell_width);
  take(cfg, "rw.edge_width", r.edge_width);
  take(cfg, "rw.duplicate_fraction", r.duplicate_fraction);
  take(cfg, "rw.seed", r.seed);
  return r;
}

TrainConfig train_from_config(const ConfigMap& cfg, TrainConfig t) {
  take(cfg, "lr", t.lr);
  take(cfg, "max_epochs", t.max_epochs);
  take(cfg, "patience", t.patience);
  take(cfg, "weight_decay", t.weight_decay);
  take(cfg, "hidden", t.hidden);
  take(cfg, "latent", t.latent);
  if (cfg.count("kl_weight")) t.kl_weight = to_double("kl_weight", cfg.at("kl_weight"));
  if (auto it = cfg.find("threshold_objective"); it != cfg.end()) {
    if (it->second == "f1") {
      t.threshold_objective = ThresholdObjective::F1;
    } else if (it->second == "mcc") {
      t.threshold_objective = ThresholdObjective::MCC;
    } else {
      throw ConfigError("threshold_objective: expected f1 or mcc, got '" + it->second + "'");
    }
  }
  take(cfg, "resample_negatives", t.resample_negatives);
  take(cfg, "hops", t.hops);
  take(cfg, "seal_hidden", t.seal_hidden);
  take(cfg, "seal_layers", t.seal_layers);
  take(cfg, "label_dim", t.label_dim);
  take(cfg, "seal_normalized", t.seal_normalized);
  take(cfg, "batch_size", t.batch_size);
  return t;
}

void reject_unknown_keys(const ConfigMap& cfg) {
  for (const auto& [key, value] : cfg) {
    if (!scenario_keys().count(key) && !rw_keys().count(key) && !train_keys().count(key))
      throw ConfigError(key + ": unknown configuration key");
  }
}

std::vector<std::uint64_t> parse_seeds(std::string_view text) {
  const std::string s = trim(text);
  std::vector<std::uint64_t> out;
  if (const auto dots = s.find(".."); dots != std::string::npos) {
    const auto lo = to_count("seed", s.substr(0, dots));
    const auto hi = to_count("seed", s.substr(dots + 2));
    if (hi < lo) throw ConfigError("seed: empty range '" + s + "'");
    if (hi - lo >= 100000) throw ConfigError("seed: range '" + s + "' is too long");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, ',');) out.push_back(to_count("seed", trim(part)));
  if (out.empty()) throw ConfigError("seed: no seeds given");
  return out;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_file(const std::string& path) { return fnv1a(read_file(path)); }

std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

void RunManifest::write(std::ostream& out) const {
  out << "command = " << command << '\n';
  out << "tool_version = " << tool_version << '\n';
  out << "started_utc = " << started_utc << '\n';
  out << "finished_utc = " << finished_utc << '\n';
  out << "dataset_hash = " << dataset_hash << '\n';
  out << "seeds = ";
  for (std::size_t i = 0; i < seeds.size(); ++i) out << (i ? "," : "") << seeds[i];
  out << '\n';
  for (const auto& [k, v] : config) out << "config." << k << " = " << v << '\n';
  for (const auto& [file, hash] : outputs) out << "output " << file << " = " << hash << '\n';
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::size_t thread_cap() {
  if (const char* env = std::getenv("NEXTCELL_THREADS")) {
    std::size_t v = 0;
    const std::string_view s(env);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && p == s.data() + s.size() && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

TrainedRun train_and_evaluate(const std::string& model, const AttributedGraph& g, const SplitBundle& bundle,
                              const TrainConfig& cfg) {
  TrainedRun run;
  TrainResult base;
  if (model == "vgae") {
    auto r = train_vgae(g, bundle, cfg);
    run.checkpoint = r.params.to_checkpoint();
    base = r;
  } else if (model == "seal") {
    auto r = train_seal(g, bundle, cfg);
    run.checkpoint = r.params.to_checkpoint();
    base = r;
  } else {
    throw ConfigError("model: expected vgae or seal, got '" + model + "'");
  }
  run.curve = base.curve;
  run.best_epoch = base.best_epoch;
  if (base.best_epoch >= 1) {
    run.best_val_auc = base.curve[static_cast<std::size_t>(base.best_epoch - 1)].auc;
    run.best_val_ap = base.curve[static_cast<std::size_t>(base.best_epoch - 1)].ap;
  }
  run.report = report_from(score_checkpoint(run.checkpoint, g, bundle), cfg);
  run.report.train_time_s = base.train_time_s;
  run.report.epochs_run = base.epochs_run;
  return run;
}

EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const AttributedGraph& g, const SplitBundle& bundle,
                               const TrainConfig& cfg) {
  return report_from(score_checkpoint(ckpt, g, bundle), cfg);
}

ScenarioConfig scaled_scenario(const ScenarioConfig& base, double multiplier) {
  if (!(multiplier > 0.0)) throw ConfigError("multiplier: must be positive");
  ScenarioConfig s = base;
  s.n_cells = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(base.n_cells * multiplier)));
  s.n_ues = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(base.n_ues * multiplier)));
  double extent = 0.0;
  for (const auto& p : hexagonal_layout(s.n_cells, s.cell_spacing_m, 0.0))
    extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
  s.area_m = std::max(base.area_m * std::sqrt(multiplier), 2.0 * extent + s.cell_spacing_m);
  return s;
}

std::vector<BenchRow> bench_vgae(const ScenarioConfig& base, std::span<const double> multipliers, TrainConfig cfg,
                                 int epochs, int repeats) {
  if (epochs < 1) throw ConfigError("epochs: must be at least 1");
  if (repeats < 1) throw ConfigError("repeats: must be at least 1");
  cfg.max_epochs = epochs;
  cfg.patience = epochs - 1;
  std::vector<BenchRow> rows;
  for (double m : multipliers) {
    const AttributedGraph g = trace_to_graph(generate_scenario(scaled_scenario(base, m)));
    const SplitBundle bundle = make_split(g, SplitRatios{}, cfg.seed);
    std::vector<double> times;
    for (int r = 0; r < repeats; ++r) times.push_back(train_vgae(g, bundle, cfg).train_time_s);
    std::sort(times.begin(), times.end());
    rows.push_back({m, g.num_nodes(), g.num_edges(), epochs, times[times.size() / 2]});
  }
  return rows;
}

double linear_r2(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw MetricError("linear fit needs at least two paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw MetricError("linear fit needs distinct x values");
  if (syy == 0.0) return 1.0;
  return sxy * sxy / (sxx * syy);
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"nextcell: GNN link prediction for proactive next-cell handover"};
  app.require_subcommand(1);
  app.set_version_flag("--version", NEXTCELL_VERSION);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic trace and graph");
  g->add_option("--config", gen.config, "key = value config file");
  g->add_option("--seed", gen.seed, "Override the generator seed");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--kind", gen.kind, "em (mobility trace) or rw (anonymised edge list)");

  IngestArgs ingest;
  auto* i = app.add_subcommand("ingest", "Load an edge-list dataset, optionally extracting a subset");
  i->add_option("--nodes", ingest.nodes, "Node file")->required();
  i->add_option("--edges", ingest.edges, "Edge file")->required();
  i->add_option("--out", ingest.out, "Output directory")->required();
  i->add_option("--cells", ingest.cells, "Subset cell count");
  i->add_option("--ues", ingest.ues, "Subset UE count");
  i->add_option("--subset-seed", ingest.subset_seed, "Subset selection seed");

  SplitArgs split;
  auto* s = app.add_subcommand("split", "Write a seeded train/val/test split manifest");
  s->add_option("--data", split.data, "Dataset directory")->required();
  s->add_option("--seed", split.seed, "Split seed");
  s->add_option("--out", split.out, "Manifest path");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train vgae or seal over one or more seeds");
  t->add_option("model", train.model, "vgae or seal")->required();
  t->add_option("--data", train.data, "Dataset directory")->required();
  t->add_option("--seed", train.seeds, "Seed, range a..b or list a,b,c");
  t->add_option("--config", train.config, "key = value config file");
  t->add_option("--out", train.out, "Run directory");
  t->add_option("--split", train.split, "Split manifest (default: split by seed)");
  t->add_option("--max-cost", train.max_cost, "SEAL subgraph cost limit");
  t->add_flag("--force", train.force, "Run SEAL beyond the cost limit");
  t->add_flag("--init-only", train.init_only, "Store and evaluate untrained parameters");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a split's test pairs");
  e->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  e->add_option("--data", eval.data, "Dataset directory")->required();
  e->add_option("--split", eval.split, "Split manifest");
  e->add_option("--split-seed", eval.split_seed, "Split seed when no manifest is given");
  e->add_option("--config", eval.config, "key = value config file");

  ReplayArgs replay;
  auto* r = app.add_subcommand("replay", "Replay a trace's tail handovers against a model trained on its head");
  r->add_option("--trace", replay.trace, "Trace file")->required();
  r->add_option("--config", replay.config, "key = value config file");
  r->add_option("--head-fraction", replay.head_fraction, "Share of the time span used for training");
  r->add_option("--seed", replay.seed, "Split and training seed");
  r->add_option("--threshold", replay.threshold, "Decision threshold");
  r->add_option("--window", replay.window, "Ping-pong window in seconds");
  r->add_option("--log", replay.log, "Per-event log file");
  r->add_flag("--oracle", replay.oracle, "Score with the ground truth");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Time VGAE training on scaled synthetic graphs");
  b->add_option("--config", bench.config, "key = value config file");
  b->add_option("--sizes", bench.sizes, "Comma-separated size multipliers");
  b->add_option("--epochs", bench.epochs, "Epochs per run");
  b->add_option("--repeats", bench.repeats, "Runs per size (median reported)");
  b->add_option("--out", bench.out, "Table file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*i) return cmd_ingest(ingest);
    if (*s) return cmd_split(split);
    if (*t) return cmd_train(train);
    if (*e) return cmd_eval(eval);
    if (*r) return cmd_replay(replay);
    if (*b) return cmd_bench(bench);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const TrainingError& err) {
    std::cerr << "training error: " << err.what() << '\n';
    return kExitTraining;
  } catch (const NumericError& err) {
    std::cerr << "training error: " << err.what() << '\n';
    return kExitTraining;
  } catch (const OptimizerError& err) {
    std::cerr << "training error: " << err.what() << '\n';
    return kExitTraining;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace nextcell
