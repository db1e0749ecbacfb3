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
#include "nextcell/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>

#include "nextcell/error.hpp"

namespace nextcell {

std::array<std::size_t, 3> apportion(std::size_t total, const SplitRatios& ratios) {
  const std::array<double, 3> r{ratios.train, ratios.val, ratios.test};
  for (double x : r)
    if (!(x >= 0.0)) throw SplitError("split ratios must be nonnegative");
  const double sum = r[0] + r[1] + r[2];
  if (std::abs(sum - 1.0) > 1e-9) throw SplitError("split ratios must sum to 1");
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(total) * r[i];
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] > remainder[b] + 1e-12; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) counts[order[k % 3]]++;
  return counts;
}

SplitBundle split(const AttributedGraph& g, const SplitRatios& ratios, std::uint64_t seed) {
  const std::size_t m = g.num_edges();
  if (m < 10) throw SplitError("graph has " + std::to_string(m) + " edges; at least 10 are needed to split");
  const auto counts = apportion(m, ratios);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  // Spanning forest in shuffled order.
  std::vector<std::size_t> parent(g.num_nodes());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::size_t> forest, rest;
  for (std::size_t k : order) {
    const auto& e = g.edges()[k];
    const auto a = find(e.src), b = find(e.dst);
    if (a != b) {
      parent[a] = b;
      forest.push_back(k);
    } else {
      rest.push_back(k);
    }
  }
  if (forest.size() > counts[0]) {
    throw SplitError("spanning forest of " + std::to_string(forest.size()) + " edges does not fit in " +
                     std::to_string(counts[0]) + " training edges");
  }

  SplitBundle bundle;
  auto pair_of = [&](std::size_t k) { return NodePair{g.edges()[k].src, g.edges()[k].dst}; };
  for (std::size_t k : forest) bundle.train_pos.push_back(pair_of(k));
  std::size_t next = 0;
  while (bundle.train_pos.size() < counts[0]) bundle.train_pos.push_back(pair_of(rest[next++]));
  while (bundle.val_pos.size() < counts[1]) bundle.val_pos.push_back(pair_of(rest[next++]));
  while (bundle.test_pos.size() < counts[2]) bundle.test_pos.push_back(pair_of(rest[next++]));
  bundle.message_edges = bundle.train_pos;
  return bundle;
}

SplitBundle sample_negatives(const AttributedGraph& g, SplitBundle bundle, std::uint64_t seed) {
  const std::array<std::size_t, 3> needed{bundle.train_pos.size(), bundle.val_pos.size(), bundle.test_pos.size()};
  const std::size_t total = needed[0] + needed[1] + needed[2];
  const std::size_t n_ue = g.num_ues(), n_cell = g.num_cells();
  const std::size_t possible = n_ue * n_cell;
  const std::size_t available = possible - g.num_edges();
  if (available < total) {
    throw SamplingError("need " + std::to_string(total) + " negative pairs but only " + std::to_string(available) +
                        " UE-cell non-edges exist (shortfall " + std::to_string(total - available) + ")");
  }

  std::mt19937_64 rng(seed);
  std::vector<NodePair> drawn;
  drawn.reserve(total);
  if (available < 2 * total) {
    // Dense graph: enumerate every non-edge and take a shuffled prefix.
    std::vector<NodePair> pool;
    pool.reserve(available);
    for (std::size_t u = 0; u < n_ue; ++u)
      for (std::size_t c = n_ue; c < n_ue + n_cell; ++c)
        if (!g.has_edge(u, c)) pool.push_back({u, c});
    std::shuffle(pool.begin(), pool.end(), rng);
    drawn.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(total));
  } else {
    std::uniform_int_distribution<std::size_t> pick_ue(0, n_ue - 1);
    std::uniform_int_distribution<std::size_t> pick_cell(n_ue, n_ue + n_cell - 1);
    std::unordered_set<NodePair, NodePairHash> used;
    while (drawn.size() < total) {
      const NodePair p{pick_ue(rng), pick_cell(rng)};
      if (g.has_edge(p.src, p.dst) || !used.insert(p).second) continue;
      drawn.push_back(p);
    }
  }
  auto it = drawn.begin();
  bundle.train_neg.assign(it, it + static_cast<std::ptrdiff_t>(needed[0]));
  it += static_cast<std::ptrdiff_t>(needed[0]);
  bundle.val_neg.assign(it, it + static_cast<std::ptrdiff_t>(needed[1]));
  it += static_cast<std::ptrdiff_t>(needed[1]);
  bundle.test_neg.assign(it, it + static_cast<std::ptrdiff_t>(needed[2]));
  return bundle;
}

SplitBundle make_split(const AttributedGraph& g, const SplitRatios& ratios, std::uint64_t seed) {
  return sample_negatives(g, split(g, ratios, seed), seed ^ 0x9E3779B97F4A7C15ULL);
}

void write_split_manifest(std::ostream& out, const SplitBundle& bundle) {
  out << "split,polarity,src,dst\n";
  auto rows = [&](const char* split, const char* polarity, const std::vector<NodePair>& pairs) {
    for (const auto& p : pairs) out << split << ',' << polarity << ',' << p.src << ',' << p.dst << '\n';
  };
  rows("train", "pos", bundle.train_pos);
  rows("val", "pos", bundle.val_pos);
  rows("test", "pos", bundle.test_pos);
  rows("train", "neg", bundle.train_neg);
  rows("val", "neg", bundle.val_neg);
  rows("test", "neg", bundle.test_neg);
}

SplitBundle read_split_manifest(std::istream& in) {
  SplitBundle bundle;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || line.rfind("split,polarity,src,dst", 0) != 0) {
    throw DataError("split manifest line 1: expected header split,polarity,src,dst");
  }
  ++line_no;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string split_name, polarity, src, dst;
    std::getline(ss, split_name, ',');
    std::getline(ss, polarity, ',');
    std::getline(ss, src, ',');
    std::getline(ss, dst, ',');
    std::vector<NodePair>* target = nullptr;
    const bool pos = polarity == "pos";
    if (!pos && polarity != "neg") throw DataError("split manifest line " + std::to_string(line_no) + ": bad polarity");
    if (split_name == "train") target = pos ? &bundle.train_pos : &bundle.train_neg;
    else if (split_name == "val") target = pos ? &bundle.val_pos : &bundle.val_neg;
    else if (split_name == "test") target = pos ? &bundle.test_pos : &bundle.test_neg;
    else throw DataError("split manifest line " + std::to_string(line_no) + ": bad split '" + split_name + "'");
    try {
      target->push_back({std::stoull(src), std::stoull(dst)});
    } catch (const std::exception&) {
      throw DataError("split manifest line " + std::to_string(line_no) + ": bad node index");
    }
  }
  bundle.message_edges = bundle.train_pos;
  return bundle;
}

}  // namespace nextcell
