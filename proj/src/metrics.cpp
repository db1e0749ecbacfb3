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
#include "nextcell/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <vector>

#include "nextcell/error.hpp"

namespace nextcell {
namespace {

bool positive(double label) { return label > 0.5; }

void require_aligned(std::span<const double> scores, std::span<const double> labels, const char* metric) {
  if (scores.size() != labels.size()) {
    throw MetricError(std::string(metric) + ": " + std::to_string(scores.size()) + " scores for " +
                      std::to_string(labels.size()) + " labels");
  }
}

}  // namespace

double auc(std::span<const double> scores, std::span<const double> labels) {
  require_aligned(scores, labels, "auc");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j share their average.
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (positive(labels[order[k]])) {
        pos_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw MetricError("auc: both classes must be present");
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double average_precision(std::span<const double> scores, std::span<const double> labels) {
  require_aligned(scores, labels, "average_precision");
  const std::size_t n = scores.size();
  const auto n_pos = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), positive));
  if (n_pos == 0) throw MetricError("average_precision: no positive labels");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!positive(labels[order[k]])) continue;
    ++tp;
    ap += static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  return ap / static_cast<double>(n_pos);
}

ThresholdedMetrics metrics_from_confusion(const Confusion& c) {
  ThresholdedMetrics m;
  m.confusion = c;
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.accuracy = c.total() > 0 ? (tp + tn) / static_cast<double>(c.total()) : 0.0;
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  m.mcc = denom > 0 ? (tp * tn - fp * fn) / std::sqrt(denom) : 0.0;
  return m;
}

ThresholdedMetrics thresholded_metrics(std::span<const double> scores, std::span<const double> labels,
                                       double threshold) {
  require_aligned(scores, labels, "thresholded_metrics");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw MetricError("threshold must be in [0, 1]");
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (positive(labels[i])) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  return metrics_from_confusion(c);
}

EvalReport make_report(std::span<const double> scores, std::span<const double> labels, double threshold) {
  EvalReport r;
  r.auc = auc(scores, labels);
  r.ap = average_precision(scores, labels);
  const auto m = thresholded_metrics(scores, labels, threshold);
  r.precision = m.precision;
  r.recall = m.recall;
  r.f1 = m.f1;
  r.accuracy = m.accuracy;
  r.mcc = m.mcc;
  r.confusion = m.confusion;
  r.threshold = threshold;
  return r;
}

void write_report(std::ostream& out, const EvalReport& r) {
  out << std::setprecision(6) << "auc=" << r.auc << " ap=" << r.ap << " precision=" << r.precision
      << " recall=" << r.recall << " f1=" << r.f1 << " accuracy=" << r.accuracy << " mcc=" << r.mcc
      << " threshold=" << r.threshold << " tp=" << r.confusion.tp << " fp=" << r.confusion.fp
      << " tn=" << r.confusion.tn << " fn=" << r.confusion.fn << " train_s=" << r.train_time_s
      << " infer_s=" << r.infer_time_s << " epochs=" << r.epochs_run << '\n';
}

std::string results_row(const std::string& model, const std::string& dataset, const std::string& seed,
                        const EvalReport& r) {
  std::ostringstream out;
  out << std::setprecision(6) << model << ',' << dataset << ',' << seed << ',' << r.auc << ',' << r.ap << ','
      << r.precision << ',' << r.recall << ',' << r.f1 << ',' << r.accuracy << ',' << r.mcc << ',' << r.threshold
      << ',' << r.train_time_s << ',' << r.infer_time_s << ',' << r.epochs_run;
  return out.str();
}

EvalReport mean_report(std::span<const EvalReport> reports) {
  EvalReport m;
  if (reports.empty()) return m;
  m.threshold = 0.0;
  double epochs = 0.0;
  for (const auto& r : reports) {
    m.auc += r.auc;
    m.ap += r.ap;
    m.precision += r.precision;
    m.recall += r.recall;
    m.f1 += r.f1;
    m.accuracy += r.accuracy;
    m.mcc += r.mcc;
    m.threshold += r.threshold;
    m.train_time_s += r.train_time_s;
    m.infer_time_s += r.infer_time_s;
    epochs += r.epochs_run;
    m.confusion.tp += r.confusion.tp;
    m.confusion.fp += r.confusion.fp;
    m.confusion.tn += r.confusion.tn;
    m.confusion.fn += r.confusion.fn;
  }
  const double n = static_cast<double>(reports.size());
  for (double* v : {&m.auc, &m.ap, &m.precision, &m.recall, &m.f1, &m.accuracy, &m.mcc, &m.threshold,
                    &m.train_time_s, &m.infer_time_s})
    *v /= n;
  m.epochs_run = static_cast<int>(std::lround(epochs / n));
  return m;
}

}  // namespace nextcell
