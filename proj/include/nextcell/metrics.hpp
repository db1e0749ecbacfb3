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

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>

namespace nextcell {

struct Confusion {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct ThresholdedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  double mcc = 0.0;
  Confusion confusion;
};

/// Labels are 0/1 (anything > 0.5 counts as positive).
/// Rank-sum AUC with tied scores sharing their average rank. Throws
/// MetricError unless both classes are present.
double auc(std::span<const double> scores, std::span<const double> labels);

/// sum_k (R_k - R_{k-1}) P_k over prefixes in (score desc, index asc) order.
double average_precision(std::span<const double> scores, std::span<const double> labels);

/// Confusion at `score >= t` and the metrics derived from it. Ratios with a
/// zero denominator are 0, including MCC.
ThresholdedMetrics thresholded_metrics(std::span<const double> scores, std::span<const double> labels,
                                       double threshold);
ThresholdedMetrics metrics_from_confusion(const Confusion& c);

struct EvalReport {
  double auc = 0.0;
  double ap = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  double mcc = 0.0;
  double threshold = 0.5;
  Confusion confusion;
  double train_time_s = 0.0;
  double infer_time_s = 0.0;
  int epochs_run = 0;
};

EvalReport make_report(std::span<const double> scores, std::span<const double> labels, double threshold);

/// `key=value` pairs on one line.
void write_report(std::ostream& out, const EvalReport& report);

/// Results table columns.
inline constexpr const char* kResultsHeader =
    "model,dataset,seed,auc,ap,precision,recall,f1,accuracy,mcc,threshold,train_s,infer_s,epochs";
std::string results_row(const std::string& model, const std::string& dataset, const std::string& seed,
                        const EvalReport& report);
/// Field-wise mean (confusion counts summed).
EvalReport mean_report(std::span<const EvalReport> reports);

/// Wall-clock seconds of run(), on the steady clock.
template <class F>
double timing(F&& run) {
  const auto start = std::chrono::steady_clock::now();
  std::forward<F>(run)();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace nextcell
