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
#include <string>
#include <vector>

#include "nextcell/graph.hpp"

namespace nextcell {

/// Non-fatal findings while loading (clamped features and the like).
using IngestWarnings = std::vector<std::string>;

/// Node file: header `node_id,kind,f1..fk`, kind is `ue` or `cell`. Rows may
/// carry fewer than k features; each kind's width is the longest row of that
/// kind. Edge file: header `edge_id,src,dst,f1..fm` with src a UE node_id and
/// dst a cell node_id. Features outside [0, 1] are clamped with a warning.
/// The graph goes through homogenize(), so duplicate pairs collapse onto the
/// lowest edge_id.
AttributedGraph load_edge_list(const std::string& node_file, const std::string& edge_file,
                               IngestWarnings* warnings = nullptr);
AttributedGraph load_edge_list(std::istream& nodes, std::istream& edges, IngestWarnings* warnings = nullptr);

/// Writes g in the format read by load_edge_list. UEs and cells get disjoint
/// node ids in the file (their raw ids when those are disjoint, otherwise
/// dense indices).
void write_edge_list(const AttributedGraph& g, std::ostream& nodes, std::ostream& edges);
void write_edge_list(const AttributedGraph& g, const std::string& node_file, const std::string& edge_file);

struct SubsetSpec {
  std::size_t n_cells = 0;
  std::size_t n_ues = 0;
  std::uint64_t selection_seed = 0;
};

/// Seeded subset: picks n_cells cells, then UEs attached to them first (any
/// remaining slots go to unattached UEs), and keeps the induced edges. Node
/// ids are recompacted. Throws BoundsError when the requested subset exceeds the graph.
AttributedGraph extract_subset(const AttributedGraph& g, const SubsetSpec& spec);

}  // namespace nextcell
