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
#include "nextcell/replay.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include "nextcell/error.hpp"
#include "nextcell/splitter.hpp"
#include "nextcell/training.hpp"

namespace nextcell {
namespace {

// Most frequent target per UE; ties go to the smaller cell id.
std::map<std::int64_t, std::int64_t> majority_targets(std::span<const HandoverEvent> events) {
  std::map<std::int64_t, std::map<std::int64_t, std::size_t>> counts;
  for (const auto& e : events) ++counts[e.ue][e.to_cell];
  std::map<std::int64_t, std::int64_t> best;
  for (const auto& [ue, per_cell] : counts) {
    std::size_t top = 0;
    for (const auto& [cell, c] : per_cell) {
      if (c > top) {
        top = c;
        best[ue] = cell;
      }
    }
  }
  return best;
}

}  // namespace

VgaeScorer::VgaeScorer(const AttributedGraph& g, const VgaeParams& params, std::span<const NodePair> message_edges)
    : graph_(&g), z_(encode(prepare_inputs(g, message_edges), params, false, 0).z) {}

std::optional<std::vector<double>> VgaeScorer::score(double /*t*/, std::int64_t ue,
                                                     std::span<const std::int64_t> cells) const {
  const auto u = graph_->find_node(NodeKind::UE, ue);
  if (!u) return std::nullopt;
  std::vector<NodePair> pairs;
  std::vector<std::size_t> slot;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (const auto c = graph_->find_node(NodeKind::Cell, cells[k])) {
      pairs.push_back({*u, *c});
      slot.push_back(k);
    }
  }
  std::vector<double> scores(cells.size(), 0.0);
  const auto probs = decode_pairs(z_, pairs);
  for (std::size_t k = 0; k < slot.size(); ++k) scores[slot[k]] = probs[k];
  return scores;
}

OracleScorer::OracleScorer(std::span<const HandoverEvent> truth) {
  for (const auto& e : truth) targets_[{e.t, e.ue}] = e.to_cell;
}

std::optional<std::vector<double>> OracleScorer::score(double t, std::int64_t ue,
                                                       std::span<const std::int64_t> cells) const {
  auto it = targets_.find({t, ue});
  if (it == targets_.end()) return std::nullopt;
  std::vector<double> scores(cells.size(), 0.0);
  for (std::size_t k = 0; k < cells.size(); ++k)
    if (cells[k] == it->second) scores[k] = 1.0;
  return scores;
}

void ReplayConfig::validate() const {
  if (!std::isfinite(threshold) || threshold < 0.0 || threshold > 1.0)
    throw ConfigError("threshold: must lie in [0, 1]");
  if (!std::isfinite(pingpong_window_s) || pingpong_window_s <= 0.0)
    throw ConfigError("pingpong_window_s: must be positive");
}

ReplayReport replay(const MobilityTrace& trace, std::span<const HandoverEvent> truth, const NextCellScorer& scorer,
                    const ReplayConfig& cfg) {
  cfg.validate();
  std::unordered_map<std::int64_t, std::vector<const MobilitySample*>> by_ue;
  for (const auto& s : trace) by_ue[s.ue].push_back(&s);
  for (auto& [ue, samples] : by_ue)
    std::stable_sort(samples.begin(), samples.end(), [](const auto* a, const auto* b) { return a->t < b->t; });

  ReplayReport report;
  report.handover_count = truth.size();
  report.pingpong_count = count_pingpongs(truth, cfg.pingpong_window_s);
  std::size_t correct = 0;
  double latency_sum = 0.0;
  for (const auto& h : truth) {
    ReplayEvent ev;
    ev.t = h.t;
    ev.ue = h.ue;
    ev.from_cell = h.from_cell;
    ev.to_cell = h.to_cell;

    const MobilitySample* last = nullptr;
    if (auto it = by_ue.find(h.ue); it != by_ue.end()) {
      for (const auto* s : it->second) {
        if (s->t >= h.t) break;
        if (s->serving_cell == h.from_cell) last = s;
      }
    }
    std::vector<std::int64_t> cells;
    if (last != nullptr)
      for (const auto& c : last->candidates)
        if (c.cell != last->serving_cell) cells.push_back(c.cell);

    const auto start = std::chrono::steady_clock::now();
    std::optional<std::vector<double>> scores;
    if (!cells.empty()) scores = scorer.score(h.t, h.ue, cells);
    if (scores && !cells.empty()) {
      const auto best = std::max_element(scores->begin(), scores->end());
      if (*best >= cfg.threshold) ev.predicted = cells[static_cast<std::size_t>(best - scores->begin())];
    }
    ev.latency_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    ev.unpredictable = !scores.has_value();
    ev.correct = ev.predicted && *ev.predicted == h.to_cell;
    if (ev.unpredictable) {
      ++report.unpredictable_count;
    } else {
      correct += ev.correct ? 1 : 0;
      latency_sum += ev.latency_s;
      report.max_decision_latency_s = std::max(report.max_decision_latency_s, ev.latency_s);
    }
    report.events.push_back(ev);
  }
  const std::size_t scored = report.handover_count - report.unpredictable_count;
  report.no_events = scored == 0;
  if (scored > 0) {
    report.next_cell_accuracy = static_cast<double>(correct) / static_cast<double>(scored);
    report.mean_decision_latency_s = latency_sum / static_cast<double>(scored);
  }
  return report;
}

std::size_t count_pingpongs(std::span<const HandoverEvent> truth, double window_s) {
  std::map<std::int64_t, std::vector<const HandoverEvent*>> by_ue;
  for (const auto& e : truth) by_ue[e.ue].push_back(&e);
  std::size_t count = 0;
  for (auto& [ue, events] : by_ue) {
    std::stable_sort(events.begin(), events.end(), [](const auto* a, const auto* b) { return a->t < b->t; });
    for (std::size_t k = 1; k < events.size(); ++k) {
      const auto& a = *events[k - 1];
      const auto& b = *events[k];
      if (b.from_cell == a.to_cell && b.to_cell == a.from_cell && b.t - a.t <= window_s) ++count;
    }
  }
  return count;
}

double baseline_next_cell(std::span<const HandoverEvent> truth) { return baseline_next_cell(truth, truth); }

double baseline_next_cell(std::span<const HandoverEvent> history, std::span<const HandoverEvent> evaluation) {
  if (evaluation.empty()) return 1.0;
  const auto best = majority_targets(history);
  std::size_t hits = 0;
  for (const auto& e : evaluation) {
    auto it = best.find(e.ue);
    if (it != best.end() && it->second == e.to_cell) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(evaluation.size());
}

void write_replay_report(std::ostream& out, const ReplayReport& r) {
  out << "next_cell_accuracy=" << r.next_cell_accuracy << " handovers=" << r.handover_count
      << " unpredictable=" << r.unpredictable_count << " pingpongs=" << r.pingpong_count
      << " mean_latency_s=" << r.mean_decision_latency_s << " max_latency_s=" << r.max_decision_latency_s
      << " no_events=" << (r.no_events ? 1 : 0) << '\n';
}

void write_replay_log(std::ostream& out, const ReplayReport& r) {
  out << "t,ue,from,to,predicted,correct,latency_s\n";
  for (const auto& e : r.events) {
    out << e.t << ',' << e.ue << ',' << e.from_cell << ',' << e.to_cell << ',';
    if (e.predicted) out << *e.predicted;
    out << ',' << (e.correct ? 1 : 0) << ',' << e.latency_s << '\n';
  }
}

ReplayOutcome run_replay_experiment(const MobilityTrace& trace, const ReplayExperiment& exp) {
  if (trace.empty()) throw DataError("replay: empty trace");
  if (!(exp.head_fraction > 0.0 && exp.head_fraction < 1.0)) throw ConfigError("head_fraction: must lie in (0, 1)");
  exp.replay.validate();
  double t_min = trace.front().t, t_max = trace.front().t;
  for (const auto& s : trace) {
    t_min = std::min(t_min, s.t);
    t_max = std::max(t_max, s.t);
  }
  ReplayOutcome out;
  out.t_split = t_min + exp.head_fraction * (t_max - t_min);
  const auto [head, tail] = split_trace(trace, out.t_split);
  if (head.empty() || tail.empty()) throw DataError("replay: trace too short to split");

  std::vector<HandoverEvent> history, evaluation;
  for (const auto& h : ground_truth_next_cell(trace)) (h.t < out.t_split ? history : evaluation).push_back(h);
  out.head_handovers = history.size();
  out.baseline_accuracy = baseline_next_cell(history, evaluation);

  if (exp.oracle) {
    out.report = replay(trace, evaluation, OracleScorer(evaluation), exp.replay);
    return out;
  }
  const AttributedGraph g = trace_to_graph(head);
  const SplitBundle bundle = make_split(g, SplitRatios{}, exp.split_seed);
  const auto trained = train_vgae(g, bundle, exp.train);
  out.train_time_s = trained.train_time_s;
  out.report = replay(trace, evaluation, VgaeScorer(g, trained.params, bundle.message_edges), exp.replay);
  return out;
}

}  // namespace nextcell
