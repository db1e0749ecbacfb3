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
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "nextcell/error.hpp"
#include "nextcell/metrics.hpp"
#include "support.hpp"

using namespace nextcell;
using nextcell::testing::brute_ap;
using nextcell::testing::brute_auc;

TEST_CASE("auc and ap match brute force on random instances") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 19;
    std::vector<double> scores(n), labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = std::uniform_real_distribution<double>(0, 1)(rng);
      labels[i] = static_cast<double>(rng() % 2);
    }
    labels[0] = 1.0;
    labels[1] = 0.0;
    CHECK(std::abs(auc(scores, labels) - brute_auc(scores, labels)) < 1e-12);
    CHECK(std::abs(average_precision(scores, labels) - brute_ap(scores, labels)) < 1e-12);
  }
}

TEST_CASE("auc counts tied pairs as one half") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 19;
    std::vector<double> scores(n), labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng() % 4) / 4.0;
      labels[i] = static_cast<double>(rng() % 2);
    }
    labels[0] = 1.0;
    labels[1] = 0.0;
    CHECK(std::abs(auc(scores, labels) - brute_auc(scores, labels)) < 1e-12);
  }
  const std::vector<double> constant(6, 0.3), labels{1, 0, 1, 0, 1, 0};
  CHECK(auc(constant, labels) == 0.5);
}

TEST_CASE("reference rankings") {
  const std::vector<double> scores{0.9, 0.8, 0.7, 0.6, 0.5};
  CHECK(auc(scores, std::vector<double>{1, 1, 0, 0, 0}) == 1.0);
  CHECK(auc(scores, std::vector<double>{0, 0, 0, 1, 1}) == 0.0);
  CHECK(average_precision(scores, std::vector<double>{1, 1, 0, 0, 0}) == 1.0);
  // A single positive ranked last among n items.
  CHECK(average_precision(scores, std::vector<double>{0, 0, 0, 0, 1}) == doctest::Approx(1.0 / 5.0));
  // Positives at ranks 1 and 3: (1/1 + 2/3) / 2.
  CHECK(average_precision(scores, std::vector<double>{1, 0, 1, 0, 0}) == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("confusion-derived metrics") {
  const auto m = metrics_from_confusion({4, 1, 3, 2});
  CHECK(m.precision == doctest::Approx(0.8));
  CHECK(m.recall == doctest::Approx(4.0 / 6.0));
  CHECK(m.f1 == doctest::Approx(2 * 0.8 * (4.0 / 6.0) / (0.8 + 4.0 / 6.0)));
  CHECK(m.accuracy == doctest::Approx(0.7));
  CHECK(m.mcc == doctest::Approx(10.0 / std::sqrt(600.0)).epsilon(1e-12));
}

TEST_CASE("thresholding counts scores at the threshold as positive") {
  const std::vector<double> scores{0.9, 0.5, 0.49, 0.2, 0.7, 0.1};
  const std::vector<double> labels{1, 1, 1, 0, 0, 0};
  const auto m = thresholded_metrics(scores, labels, 0.5);
  CHECK(m.confusion == Confusion{2, 1, 2, 1});
}

TEST_CASE("perfect and all-positive classifiers") {
  const std::vector<double> labels{1, 1, 0, 0};
  const auto perfect = thresholded_metrics(std::vector<double>{0.9, 0.6, 0.4, 0.1}, labels, 0.5);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);
  CHECK(perfect.mcc == 1.0);
  const auto everyone = thresholded_metrics(std::vector<double>{0.9, 0.9, 0.9, 0.9}, labels, 0.5);
  CHECK(everyone.recall == 1.0);
  CHECK(everyone.precision == 0.5);
  CHECK(everyone.mcc == 0.0);  // zero denominator convention
}

TEST_CASE("ranking metrics are invariant to monotone transforms") {
  std::mt19937_64 rng(9);
  std::vector<double> scores(50), labels(50), warped(50);
  for (std::size_t i = 0; i < 50; ++i) {
    scores[i] = std::uniform_real_distribution<double>(0, 1)(rng);
    labels[i] = i % 3 == 0 ? 1.0 : 0.0;
    warped[i] = std::pow(scores[i], 3.0) * 0.5 + 0.1;
  }
  CHECK(auc(scores, labels) == auc(warped, labels));
  CHECK(average_precision(scores, labels) == average_precision(warped, labels));
}

TEST_CASE("random labels give mcc near zero") {
  std::mt19937_64 rng(10);
  std::vector<double> scores(20000), labels(20000);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = std::uniform_real_distribution<double>(0, 1)(rng);
    labels[i] = static_cast<double>(rng() % 2);
  }
  CHECK(std::abs(thresholded_metrics(scores, labels, 0.5).mcc) < 0.1);
  CHECK(std::abs(auc(scores, labels) - 0.5) < 0.02);
}

TEST_CASE("invalid inputs raise MetricError") {
  const std::vector<double> s{0.1, 0.2};
  CHECK_THROWS_AS(auc(s, std::vector<double>{1, 1}), MetricError);
  CHECK_THROWS_AS(auc(s, std::vector<double>{1}), MetricError);
  CHECK_THROWS_AS(average_precision(s, std::vector<double>{0, 0}), MetricError);
  CHECK_THROWS_AS(thresholded_metrics(s, std::vector<double>{0, 1}, 1.5), MetricError);
}

TEST_CASE("reports and result rows") {
  const std::vector<double> scores{0.9, 0.8, 0.3, 0.2};
  const std::vector<double> labels{1, 0, 1, 0};
  auto r = make_report(scores, labels, 0.5);
  CHECK(r.auc == 0.75);
  CHECK(r.confusion == Confusion{1, 1, 1, 1});
  const auto row = results_row("vgae", "em", "3", r);
  CHECK(row.rfind("vgae,em,3,", 0) == 0);
  CHECK(std::count(row.begin(), row.end(), ',') == std::count(kResultsHeader, kResultsHeader + std::strlen(kResultsHeader), ','));
  EvalReport other = r;
  other.auc = 0.25;
  const std::vector<EvalReport> both{r, other};
  CHECK(mean_report(both).auc == 0.5);
  std::ostringstream out;
  write_report(out, r);
  CHECK(out.str().find("auc=0.75") != std::string::npos);
}
