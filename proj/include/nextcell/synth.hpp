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

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nextcell/graph.hpp"

namespace nextcell {

/// Scenario for the EM-like generator: hexagonal cell layout, random-waypoint
/// UEs and log-distance radio measurements.
struct ScenarioConfig {
  std::size_t n_cells = 31;
  std::size_t n_ues = 70;
  double area_m = 1600.0;
  double cell_spacing_m = 250.0;
  double speed_min_mps = 1.0;
  double speed_max_mps = 3.0;
  double duration_s = 600.0;
  double sample_period_s = 1.0;
  std::size_t max_neighbors = 6;
  std::uint64_t rng_seed = 1;

  // Radio and mobility model.
  double roam_radius_m = 30.0;
  double pathloss_exponent = 3.5;
  double shadowing_sigma_db = 4.0;
  double shadowing_decorrelation_m = 50.0;
  double hysteresis_db = 3.0;
  /// Cells within this many dB of the strongest one are reported.
  double report_window_db = 3.0;
  double tx_power_dbm = 15.0;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

inline constexpr std::size_t kRadioFeatureCount = 8;

struct RadioFeatureVector {
  double rsrp_dbm = 0.0;
  double rsrq_db = 0.0;
  double transport_blocks = 0.0;
  double available_rbs = 0.0;
  double packet_size_bytes = 0.0;
  double mcs_index = 0.0;
  double sig_pw_ul_dbm = 0.0;
  double sig_pw_dl_dbm = 0.0;

  std::array<double, kRadioFeatureCount> to_array() const;
  static RadioFeatureVector from_array(const std::array<double, kRadioFeatureCount>& v);
  friend bool operator==(const RadioFeatureVector&, const RadioFeatureVector&) = default;
};

struct CandidateMeasurement {
  std::int64_t cell = 0;
  RadioFeatureVector features;
  friend bool operator==(const CandidateMeasurement&, const CandidateMeasurement&) = default;
};

/// One measurement report: the serving cell plus every reported cell
/// (the serving cell included).
struct MobilitySample {
  double t = 0.0;
  std::int64_t ue = 0;
  std::int64_t serving_cell = 0;
  std::vector<CandidateMeasurement> candidates;
  friend bool operator==(const MobilitySample&, const MobilitySample&) = default;
};

/// Samples ordered by (t, ue).
using MobilityTrace = std::vector<MobilitySample>;

struct HandoverEvent {
  double t = 0.0;
  std::int64_t ue = 0;
  std::int64_t from_cell = 0;
  std::int64_t to_cell = 0;
  friend bool operator==(const HandoverEvent&, const HandoverEvent&) = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// First `n` sites of a hexagonal lattice with the given spacing, nearest to
/// the centre first, centred on (centre, centre).
std::vector<Point> hexagonal_layout(std::size_t n, double spacing, double centre);

MobilityTrace generate_scenario(const ScenarioConfig& cfg);

/// One edge per UE-cell pair seen in any report, features taken from the
/// first observation. Node features are means of incident edge features.
AttributedGraph trace_to_graph(const MobilityTrace& trace);

/// One record per serving-cell change per UE, ordered by t then UE.
std::vector<HandoverEvent> ground_truth_next_cell(const MobilityTrace& trace);

/// Samples with t < t_split, and samples with t >= t_split.
std::pair<MobilityTrace, MobilityTrace> split_trace(const MobilityTrace& trace, double t_split);

// Trace files: header then `t,ue,serving,cell,rsrp,rsrq,tb,arb,pkt,mcs,ul,dl`
// with one line per candidate per sample.
void write_trace(std::ostream& out, const MobilityTrace& trace);
MobilityTrace read_trace(std::istream& in);
/// `key = value` lines, readable back through the config parser.
void write_config_echo(std::ostream& out, const ScenarioConfig& cfg);

/// Generator for anonymised, block-structured data shaped like the large
/// operator dataset: isolated sub-networks of UEs and cells, features drawn
/// uniformly in [0, 1].
struct RwLikeConfig {
  std::size_t blocks = 10;
  std::size_t ues_per_block = 100;
  std::size_t cells_per_block = 10;
  /// Probability that a UE links to a cell of its own block.
  double link_probability = 0.5;
  std::size_t ue_width = 10;
  std::size_t cell_width = 6;
  std::size_t edge_width = 37;
  /// Fraction of UE-cell links duplicated under a higher edge id.
  double duplicate_fraction = 0.1;
  std::uint64_t seed = 1;
};

struct RawTables {
  std::vector<RawNode> ues;
  std::vector<RawNode> cells;
  std::vector<RawEdge> edges;
};

RawTables generate_rw_like(const RwLikeConfig& cfg);

}  // namespace nextcell
