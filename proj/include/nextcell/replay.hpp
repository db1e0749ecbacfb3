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
#include <optional>
#include <span>
#include <vector>

#include "nextcell/graph.hpp"
#include "nextcell/synth.hpp"
#include "nextcell/training.hpp"
#include "nextcell/vgae.hpp"

namespace nextcell {

/// Scores the candidate cells of one UE at one instant.
class NextCellScorer {
 public:
  virtual ~NextCellScorer() = default;
  /// One score in [0, 1] per cell, or nullopt when the UE is unknown to the
  /// model.
  virtual std::optional<std::vector<double>> score(double t, std::int64_t ue,
                                                   std::span<const std::int64_t> cells) const = 0;
};

/// Link probabilities from a trained VGAE; the latent matrix is computed
/// once on construction. Cells unknown to the graph score 0.
class VgaeScorer : public NextCellScorer {
 public:
  VgaeScorer(const AttributedGraph& g, const VgaeParams& params, std::span<const NodePair> message_edges);
  std::optional<std::vector<double>> score(double t, std::int64_t ue,
                                           std::span<const std::int64_t> cells) const override;

 private:
  const AttributedGraph* graph_;
  Tensor z_;
};

/// Scores 1 for the true target of a handover and 0 otherwise.
class OracleScorer : public NextCellScorer {
 public:
  explicit OracleScorer(std::span<const HandoverEvent> truth);
  std::optional<std::vector<double>> score(double t, std::int64_t ue,
                                           std::span<const std::int64_t> cells) const override;

 private:
  std::map<std::pair<double, std::int64_t>, std::int64_t> targets_;
};

struct ReplayConfig {
  double threshold = 0.5;
  double pingpong_window_s = 5.0;

  void validate() const;
};

struct ReplayEvent {
  double t = 0.0;
  std::int64_t ue = 0;
  std::int64_t from_cell = 0;
  std::int64_t to_cell = 0;
  /// Absent when no candidate reached the threshold or the UE is unknown.
  std::optional<std::int64_t> predicted;
  bool correct = false;
  bool unpredictable = false;
  double latency_s = 0.0;
};

struct ReplayReport {
  /// Correct / predictable events; 1.0 when there were no events.
  double next_cell_accuracy = 1.0;
  std::size_t pingpong_count = 0;
  std::size_t handover_count = 0;
  std::size_t unpredictable_count = 0;
  bool no_events = true;
  double mean_decision_latency_s = 0.0;
  double max_decision_latency_s = 0.0;
  std::vector<ReplayEvent> events;
};

/// For every ground-truth handover, scores the non-serving cells of the
/// UE's last report under the old serving cell and predicts the best one
/// scoring at least the threshold.
ReplayReport replay(const MobilityTrace& trace, std::span<const HandoverEvent> truth,
                    const NextCellScorer& scorer, const ReplayConfig& cfg);

/// Handover pairs A->B followed by B->A for the same UE within the window.
std::size_t count_pingpongs(std::span<const HandoverEvent> truth, double window_s);

/// In-sample accuracy of predicting each UE's most frequent target.
double baseline_next_cell(std::span<const HandoverEvent> truth);
/// Accuracy on `evaluation` of each UE's most frequent target in `history`;
/// UEs without history count as misses.
double baseline_next_cell(std::span<const HandoverEvent> history, std::span<const HandoverEvent> evaluation);

void write_replay_report(std::ostream& out, const ReplayReport& report);
/// Rows `t,ue,from,to,predicted,correct,latency_s`.
void write_replay_log(std::ostream& out, const ReplayReport& report);

/// Train on the head of a trace, replay the handovers of its tail.
struct ReplayExperiment {
  /// Share of the trace's time span used for training.
  double head_fraction = 0.7;
  std::uint64_t split_seed = 1;
  TrainConfig train;
  ReplayConfig replay;
  /// Score with the ground truth instead of a trained model.
  bool oracle = false;
};

struct ReplayOutcome {
  ReplayReport report;
  /// Tail accuracy of each UE's most frequent head target.
  double baseline_accuracy = 0.0;
  double t_split = 0.0;
  std::size_t head_handovers = 0;
  double train_time_s = 0.0;
};

/// The model graph is built from the head only, so the tail is unseen.
ReplayOutcome run_replay_experiment(const MobilityTrace& trace, const ReplayExperiment& exp);

}  // namespace nextcell
