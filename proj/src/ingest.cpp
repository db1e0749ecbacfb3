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
#include "nextcell/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>

#include "nextcell/error.hpp"

namespace nextcell {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

template <class T>
T parse_number(std::string_view field, const char* file, std::size_t line_no) {
  T value{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw DataError(std::string(file) + " line " + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "'");
  }
  return value;
}

double parse_feature(std::string_view field, const char* file, std::size_t line_no, IngestWarnings* warnings) {
  const double v = parse_number<double>(field, file, line_no);
  if (!std::isfinite(v)) {
    throw DataError(std::string(file) + " line " + std::to_string(line_no) + ": non-finite feature");
  }
  if (v < 0.0 || v > 1.0) {
    if (warnings) {
      warnings->push_back(std::string(file) + " line " + std::to_string(line_no) + ": feature " + std::string(field) +
                          " outside [0, 1], clamped");
    }
    return std::clamp(v, 0.0, 1.0);
  }
  return v;
}

}  // namespace

AttributedGraph load_edge_list(std::istream& node_in, std::istream& edge_in, IngestWarnings* warnings) {
  std::string line;
  if (!std::getline(node_in, line)) throw DataError("node file line 1: missing header");
  auto header = split_fields(line);
  if (header.size() < 2 || header[0] != "node_id" || header[1] != "kind") {
    throw DataError("node file line 1: header must start with node_id,kind");
  }
  const std::size_t node_width = header.size() - 2;

  std::vector<RawNode> ues, cells;
  std::size_t line_no = 1;
  while (std::getline(node_in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_fields(line);
    if (fields.size() < 2 || fields.size() > node_width + 2) {
      throw DataError("node file line " + std::to_string(line_no) + ": expected 2 to " + std::to_string(node_width + 2) +
                      " fields, got " + std::to_string(fields.size()));
    }
    RawNode node;
    node.id = parse_number<std::int64_t>(fields[0], "node file", line_no);
    std::string kind(fields[1]);
    std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char c) { return std::tolower(c); });
    for (std::size_t k = 2; k < fields.size(); ++k) node.features.push_back(parse_feature(fields[k], "node file", line_no, warnings));
    if (kind == "ue" || kind == "0") {
      ues.push_back(std::move(node));
    } else if (kind == "cell" || kind == "1") {
      cells.push_back(std::move(node));
    } else {
      throw DataError("node file line " + std::to_string(line_no) + ": unknown kind '" + std::string(fields[1]) + "'");
    }
  }
  auto check_width = [](const std::vector<RawNode>& nodes, const char* kind) {
    std::size_t width = 0;
    for (const auto& n : nodes) width = std::max(width, n.features.size());
    for (const auto& n : nodes) {
      if (n.features.size() != width) {
        throw DataError(std::string("node file: ") + kind + " " + std::to_string(n.id) + " has " +
                        std::to_string(n.features.size()) + " features, other " + kind + "s have " + std::to_string(width));
      }
    }
  };
  check_width(ues, "ue");
  check_width(cells, "cell");

  if (!std::getline(edge_in, line)) throw DataError("edge file line 1: missing header");
  header = split_fields(line);
  if (header.size() < 3 || header[0] != "edge_id" || header[1] != "src" || header[2] != "dst") {
    throw DataError("edge file line 1: header must start with edge_id,src,dst");
  }
  const std::size_t edge_width = header.size() - 3;
  std::vector<RawEdge> edges;
  line_no = 1;
  while (std::getline(edge_in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_fields(line);
    if (fields.size() != edge_width + 3) {
      throw DataError("edge file line " + std::to_string(line_no) + ": expected " + std::to_string(edge_width + 3) +
                      " fields, got " + std::to_string(fields.size()));
    }
    RawEdge e;
    e.edge_id = parse_number<std::int64_t>(fields[0], "edge file", line_no);
    e.ue = parse_number<std::int64_t>(fields[1], "edge file", line_no);
    e.cell = parse_number<std::int64_t>(fields[2], "edge file", line_no);
    e.features.reserve(edge_width);
    for (std::size_t k = 3; k < fields.size(); ++k) e.features.push_back(parse_feature(fields[k], "edge file", line_no, warnings));
    edges.push_back(std::move(e));
  }
  return homogenize(ues, cells, edges);
}

AttributedGraph load_edge_list(const std::string& node_file, const std::string& edge_file, IngestWarnings* warnings) {
  std::ifstream nodes(node_file);
  if (!nodes) throw DataError("cannot open node file " + node_file);
  std::ifstream edges(edge_file);
  if (!edges) throw DataError("cannot open edge file " + edge_file);
  return load_edge_list(nodes, edges, warnings);
}

void write_edge_list(const AttributedGraph& g, std::ostream& nodes, std::ostream& edges) {
  std::unordered_set<std::int64_t> ue_ids;
  bool disjoint = true;
  for (const auto& n : g.nodes())
    if (n.kind == NodeKind::UE) ue_ids.insert(n.raw_id);
  for (const auto& n : g.nodes())
    if (n.kind == NodeKind::Cell && ue_ids.contains(n.raw_id)) disjoint = false;
  auto file_id = [&](std::size_t node) {
    return disjoint ? g.node(node).raw_id : static_cast<std::int64_t>(node);
  };

  // Both kinds share the padded width in memory; the file keeps that width.
  const std::size_t width = g.node_feature_width();
  nodes << "node_id,kind";
  for (std::size_t k = 0; k < width; ++k) nodes << ",f" << (k + 1);
  nodes << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& n : g.nodes()) {
    nodes << file_id(n.node_id) << ',' << to_string(n.kind);
    for (double v : n.features) nodes << ',' << v;
    nodes << '\n';
  }
  edges << "edge_id,src,dst";
  for (std::size_t k = 0; k < g.edge_feature_width(); ++k) edges << ",f" << (k + 1);
  edges << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& e : g.edges()) {
    edges << e.edge_id << ',' << file_id(e.src) << ',' << file_id(e.dst);
    for (double v : e.features) edges << ',' << v;
    edges << '\n';
  }
}

void write_edge_list(const AttributedGraph& g, const std::string& node_file, const std::string& edge_file) {
  std::ofstream nodes(node_file);
  if (!nodes) throw DataError("cannot write " + node_file);
  std::ofstream edges(edge_file);
  if (!edges) throw DataError("cannot write " + edge_file);
  write_edge_list(g, nodes, edges);
}

AttributedGraph extract_subset(const AttributedGraph& g, const SubsetSpec& spec) {
  if (spec.n_cells == 0 || spec.n_ues == 0) throw BoundsError("subset counts must be positive");
  if (spec.n_cells > g.num_cells() || spec.n_ues > g.num_ues()) {
    throw BoundsError("subset of " + std::to_string(spec.n_cells) + " cells and " + std::to_string(spec.n_ues) +
                      " UEs exceeds graph with " + std::to_string(g.num_cells()) + " cells and " +
                      std::to_string(g.num_ues()) + " UEs");
  }
  std::mt19937_64 rng(spec.selection_seed);
  std::vector<std::size_t> cells(g.num_cells());
  std::iota(cells.begin(), cells.end(), g.num_ues());
  std::shuffle(cells.begin(), cells.end(), rng);
  cells.resize(spec.n_cells);

  std::vector<char> keep(g.num_nodes(), 0);
  std::vector<char> attached(g.num_ues(), 0);
  for (std::size_t c : cells) {
    keep[c] = 1;
    for (std::size_t u : g.neighbors(c)) attached[u] = 1;
  }
  std::vector<std::size_t> near, far;
  for (std::size_t u = 0; u < g.num_ues(); ++u) (attached[u] ? near : far).push_back(u);
  std::shuffle(near.begin(), near.end(), rng);
  std::shuffle(far.begin(), far.end(), rng);
  near.insert(near.end(), far.begin(), far.end());
  for (std::size_t k = 0; k < spec.n_ues; ++k) keep[near[k]] = 1;

  std::vector<std::size_t> remap(g.num_nodes(), 0);
  std::vector<NodeRecord> nodes;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    if (!keep[i]) continue;
    remap[i] = nodes.size();
    NodeRecord rec = g.node(i);
    rec.node_id = nodes.size();
    nodes.push_back(std::move(rec));
  }
  std::vector<EdgeRecord> edges;
  for (const auto& e : g.edges()) {
    if (!keep[e.src] || !keep[e.dst]) continue;
    EdgeRecord rec = e;
    rec.src = remap[e.src];
    rec.dst = remap[e.dst];
    edges.push_back(std::move(rec));
  }
  return AttributedGraph(std::move(nodes), std::move(edges));
}

}  // namespace nextcell
