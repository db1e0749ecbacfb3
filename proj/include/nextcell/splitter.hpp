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
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "nextcell/graph.hpp"
#include "nextcell/node_pair.hpp"

namespace nextcell {

/// Positive and negative (ue, cell) pairs for training, validation and test.
struct SplitBundle {
  std::vector<NodePair> train_pos;
  std::vector<NodePair> val_pos;
  std::vector<NodePair> test_pos;
  std::vector<NodePair> train_neg;
  std::vector<NodePair> val_neg;
  std::vector<NodePair> test_neg;
  /// Edges that may carry messages; always equal to train_pos.
  std::vector<NodePair> message_edges;

  bool has_negatives() const { return !train_neg.empty() || !val_neg.empty() || !test_neg.empty(); }
  friend bool operator==(const SplitBundle&, const SplitBundle&) = default;
};

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

/// Largest-remainder apportionment of `total` items; ties go to the earlier part.
std::array<std::size_t, 3> apportion(std::size_t total, const SplitRatios& ratios);

/// Positive split. A spanning forest (chosen in seeded order) goes to train
/// first so that every non-isolated node keeps an edge there; the remaining
/// edges are shuffled and fill train, val, test. Throws SplitError for fewer
/// than 10 edges or when the forest does not fit in the train share.
SplitBundle split(const AttributedGraph& g, const SplitRatios& ratios, std::uint64_t seed);

/// Draws one negative UE-cell pair per positive in each split. Candidates
/// are rejected against every positive edge and every negative already drawn
/// for any split. Throws SamplingError when the graph cannot supply enough.
SplitBundle sample_negatives(const AttributedGraph& g, SplitBundle bundle, std::uint64_t seed);

/// split() followed by sample_negatives() with a derived seed.
SplitBundle make_split(const AttributedGraph& g, const SplitRatios& ratios, std::uint64_t seed);

/// Manifest rows `split,polarity,src,dst` with a header line.
void write_split_manifest(std::ostream& out, const SplitBundle& bundle);
SplitBundle read_split_manifest(std::istream& in);

}  // namespace nextcell
