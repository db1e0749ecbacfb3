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
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nextcell/graph.hpp"
#include "nextcell/metrics.hpp"
#include "nextcell/nn.hpp"
#include "nextcell/splitter.hpp"
#include "nextcell/synth.hpp"
#include "nextcell/training.hpp"

namespace nextcell {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitTraining = 4;

/// Line-oriented `key = value` text; `#` starts a comment. Later keys win.
using ConfigMap = std::map<std::string, std::string>;

/// Throws ConfigError with the line number on malformed lines.
ConfigMap parse_config(std::istream& in);
ConfigMap load_config(const std::string& path);

/// Overrides fields of `base` from scenario keys (n_cells, roam_radius_m, ...).
/// Keys of other groups are ignored; a bad value names its key.
ScenarioConfig scenario_from_config(const ConfigMap& cfg, ScenarioConfig base = {});
/// Keys prefixed `rw.` (rw.blocks, rw.edge_width, ...).
RwLikeConfig rw_from_config(const ConfigMap& cfg, RwLikeConfig base = {});
/// Training keys (lr, patience, hidden, seal_layers, ...).
TrainConfig train_from_config(const ConfigMap& cfg, TrainConfig base);
/// Throws ConfigError naming the first key no group recognises.
void reject_unknown_keys(const ConfigMap& cfg);

/// "7", "1..10" (inclusive) or "1,4,9".
std::vector<std::uint64_t> parse_seeds(std::string_view text);

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
/// 64-bit FNV-1a, continuing from `h`.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset);
/// Hash of a file's bytes; throws DataError when it cannot be read.
std::uint64_t hash_file(const std::string& path);
std::string hex64(std::uint64_t v);

/// Provenance record written next to every command's outputs.
struct RunManifest {
  std::string command;
  ConfigMap config;
  std::vector<std::uint64_t> seeds;
  std::string dataset_hash;
  std::string tool_version;
  std::string started_utc;
  std::string finished_utc;
  /// Output file -> content hash.
  std::map<std::string, std::string> outputs;

  void write(std::ostream& out) const;
};

std::string utc_now();
/// NEXTCELL_THREADS if set and positive, otherwise the hardware count.
std::size_t thread_cap();

/// Everything one training run produces.
struct TrainedRun {
  Checkpoint checkpoint;
  std::vector<CurvePoint> curve;
  /// Test-split metrics at the threshold tuned on validation.
  EvalReport report;
  double best_val_auc = 0.0;
  double best_val_ap = 0.0;
  int best_epoch = 0;
};

/// `model` is "vgae" or "seal"; anything else is a ConfigError.
TrainedRun train_and_evaluate(const std::string& model, const AttributedGraph& g, const SplitBundle& bundle,
                              const TrainConfig& cfg);
/// Test-split report of a stored model. Throws DimensionError when the
/// checkpoint does not fit the graph's feature widths.
EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const AttributedGraph& g, const SplitBundle& bundle,
                               const TrainConfig& cfg);

/// Scenario with cell and UE counts multiplied; the area grows with the
/// square root so the layout keeps its density.
ScenarioConfig scaled_scenario(const ScenarioConfig& base, double multiplier);

struct BenchRow {
  double multiplier = 1.0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  int epochs = 0;
  /// Median over repeats.
  double train_s = 0.0;
};

/// VGAE training time for a fixed epoch count (no early stopping) on each
/// scaled scenario.
std::vector<BenchRow> bench_vgae(const ScenarioConfig& base, std::span<const double> multipliers, TrainConfig cfg,
                                 int epochs, int repeats);
/// Coefficient of determination of the least-squares line through (x, y).
double linear_r2(std::span<const double> x, std::span<const double> y);

/// Entry point of the `nextcell` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace nextcell
