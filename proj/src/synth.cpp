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
#include "nextcell/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>

#include "nextcell/error.hpp"

namespace nextcell {
namespace {

// Log-distance path loss reference at 1 m (free space near 2 GHz).
constexpr double kReferenceLossDb = 38.0;
// Thermal noise per 15 kHz resource element plus a 7 dB noise figure.
constexpr double kNoiseDbm = -125.2;
constexpr double kRsrpMin = -140.0;
constexpr double kRsrpMax = -40.0;
constexpr double kRsrqMin = -20.0;
constexpr double kRsrqMax = -3.0;
constexpr double kMaxUplinkDbm = 23.0;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

void require(bool ok, const char* field, const std::string& why) {
  if (!ok) throw ConfigError(std::string(field) + ": " + why);
}

}  // namespace

void ScenarioConfig::validate() const {
  require(n_cells >= 2, "n_cells", "need at least 2 cells");
  require(n_ues >= 1, "n_ues", "must be positive");
  require(area_m > 0.0, "area_m", "must be positive");
  require(cell_spacing_m > 0.0, "cell_spacing_m", "must be positive");
  require(speed_min_mps >= 0.0, "speed_min_mps", "must be nonnegative");
  require(speed_max_mps >= speed_min_mps, "speed_max_mps", "must be >= speed_min_mps");
  require(duration_s > 0.0, "duration_s", "must be positive");
  require(sample_period_s > 0.0, "sample_period_s", "must be positive");
  const double steps = duration_s / sample_period_s;
  require(std::abs(steps - std::round(steps)) < 1e-9, "sample_period_s", "must divide duration_s");
  require(max_neighbors >= 2, "max_neighbors", "must be at least 2");
  require(roam_radius_m >= 0.0, "roam_radius_m", "must be nonnegative");
  require(pathloss_exponent > 0.0, "pathloss_exponent", "must be positive");
  require(shadowing_sigma_db >= 0.0, "shadowing_sigma_db", "must be nonnegative");
  require(shadowing_decorrelation_m > 0.0, "shadowing_decorrelation_m", "must be positive");
  require(hysteresis_db >= 0.0, "hysteresis_db", "must be nonnegative");
  require(report_window_db >= 0.0, "report_window_db", "must be nonnegative");
  // Geometry: every site of the layout must fall inside the square.
  for (const auto& p : hexagonal_layout(n_cells, cell_spacing_m, area_m / 2.0)) {
    require(p.x >= 0.0 && p.x <= area_m && p.y >= 0.0 && p.y <= area_m, "cell_spacing_m",
            "cell layout does not fit in area_m");
  }
}

std::array<double, kRadioFeatureCount> RadioFeatureVector::to_array() const {
  return {rsrp_dbm, rsrq_db, transport_blocks, available_rbs, packet_size_bytes, mcs_index, sig_pw_ul_dbm, sig_pw_dl_dbm};
}

RadioFeatureVector RadioFeatureVector::from_array(const std::array<double, kRadioFeatureCount>& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
}

std::vector<Point> hexagonal_layout(std::size_t n, double spacing, double centre) {
  struct Site {
    double dist, angle;
    Point p;
  };
  std::vector<Site> sites;
  // Enough rings: a hexagon of radius R holds 3R(R+1)+1 sites.
  int radius = 0;
  while (static_cast<std::size_t>(3 * radius * (radius + 1) + 1) < n) ++radius;
  ++radius;
  for (int q = -radius; q <= radius; ++q) {
    for (int r = -radius; r <= radius; ++r) {
      if (std::abs(q + r) > radius) continue;
      const double x = spacing * (q + r / 2.0);
      const double y = spacing * (r * std::numbers::sqrt3 / 2.0);
      double angle = std::atan2(y, x);
      if (angle < 0.0) angle += 2.0 * std::numbers::pi;
      // Round distances so lattice ties are broken by angle only.
      const double dist = std::round(std::hypot(x, y) / spacing * 1e6) / 1e6;
      sites.push_back({dist, angle, {centre + x, centre + y}});
    }
  }
  std::sort(sites.begin(), sites.end(), [](const Site& a, const Site& b) {
    return a.dist != b.dist ? a.dist < b.dist : a.angle < b.angle;
  });
  std::vector<Point> out;
  for (std::size_t i = 0; i < n && i < sites.size(); ++i) out.push_back(sites[i].p);
  return out;
}

namespace {

struct UeTrack {
  std::vector<MobilitySample> samples;
};

// Spatially consistent log-normal shadowing: per cell, i.i.d. Gaussians on a
// square grid with the decorrelation distance as pitch, bilinearly
// interpolated and renormalised so every point keeps variance sigma^2.
class ShadowField {
 public:
  ShadowField(const ScenarioConfig& cfg, std::size_t n_cells)
      : pitch_(cfg.shadowing_decorrelation_m),
        side_(static_cast<std::size_t>(std::ceil(cfg.area_m / pitch_)) + 2),
        values_(n_cells * side_ * side_) {
    std::mt19937_64 rng(cfg.rng_seed ^ 0x5AD0F1E1DULL);
    std::normal_distribution<double> gauss(0.0, cfg.shadowing_sigma_db);
    for (auto& v : values_) v = gauss(rng);
  }

  double at(std::size_t cell, Point p) const {
    const double gx = std::clamp(p.x / pitch_, 0.0, static_cast<double>(side_ - 2));
    const double gy = std::clamp(p.y / pitch_, 0.0, static_cast<double>(side_ - 2));
    const auto ix = static_cast<std::size_t>(gx), iy = static_cast<std::size_t>(gy);
    const double fx = gx - static_cast<double>(ix), fy = gy - static_cast<double>(iy);
    const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const double* g = values_.data() + cell * side_ * side_;
    const double v[4] = {g[iy * side_ + ix], g[iy * side_ + ix + 1], g[(iy + 1) * side_ + ix],
                         g[(iy + 1) * side_ + ix + 1]};
    double sum = 0.0, norm = 0.0;
    for (int k = 0; k < 4; ++k) {
      sum += w[k] * v[k];
      norm += w[k] * w[k];
    }
    return sum / std::sqrt(norm);
  }

 private:
  double pitch_;
  std::size_t side_;
  std::vector<double> values_;
};

// Generates one UE's samples. Uses its own RNG stream so UEs are independent.
UeTrack simulate_ue(const ScenarioConfig& cfg, std::size_t ue, const std::vector<Point>& cells,
                    const std::vector<double>& cell_load, const ShadowField& shadowing) {
  std::seed_seq seq{static_cast<std::uint64_t>(cfg.rng_seed), static_cast<std::uint64_t>(ue), std::uint64_t{0x5EED}};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto clamp_to_area = [&](Point p) {
    return Point{std::clamp(p.x, 0.0, cfg.area_m), std::clamp(p.y, 0.0, cfg.area_m)};
  };
  auto point_in_disc = [&](Point c, double radius) {
    const double r = radius * std::sqrt(unit(rng));
    const double a = 2.0 * std::numbers::pi * unit(rng);
    return clamp_to_area({c.x + r * std::cos(a), c.y + r * std::sin(a)});
  };

  // Homes are spread round-robin over the cells so every cell has UEs nearby.
  const Point home = point_in_disc(cells[ue % cells.size()], cfg.cell_spacing_m / 2.0);
  Point pos = home;
  Point waypoint = point_in_disc(home, cfg.roam_radius_m);
  double speed = cfg.speed_min_mps + (cfg.speed_max_mps - cfg.speed_min_mps) * unit(rng);

  const std::size_t n_cells = cells.size();

  const auto steps = static_cast<std::size_t>(std::llround(cfg.duration_s / cfg.sample_period_s));
  const double noise_lin = db_to_linear(kNoiseDbm);
  std::vector<double> rsrp(n_cells), lin(n_cells);
  std::vector<std::size_t> order(n_cells);
  std::int64_t serving = -1;

  UeTrack track;
  track.samples.reserve(steps);
  for (std::size_t step = 0; step < steps; ++step) {
    const double t = static_cast<double>(step) * cfg.sample_period_s;
    double total = noise_lin;
    for (std::size_t c = 0; c < n_cells; ++c) {
      const double d = std::max(1.0, std::hypot(pos.x - cells[c].x, pos.y - cells[c].y));
      const double loss = kReferenceLossDb + 10.0 * cfg.pathloss_exponent * std::log10(d);
      rsrp[c] = std::clamp(cfg.tx_power_dbm - loss + shadowing.at(c, pos), kRsrpMin, kRsrpMax);
      lin[c] = db_to_linear(rsrp[c]);
      total += lin[c];
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rsrp[a] > rsrp[b]; });
    const std::size_t best = order[0];
    if (serving < 0 || rsrp[best] >= rsrp[static_cast<std::size_t>(serving)] + cfg.hysteresis_db) {
      serving = static_cast<std::int64_t>(best);
    }

    std::vector<std::size_t> reported;
    const std::size_t min_reported = std::min<std::size_t>(2, n_cells);
    for (std::size_t k = 0; k < n_cells && reported.size() < cfg.max_neighbors; ++k) {
      const std::size_t c = order[k];
      if (reported.size() >= min_reported && rsrp[c] < rsrp[best] - cfg.report_window_db) break;
      reported.push_back(c);
    }
    if (std::find(reported.begin(), reported.end(), static_cast<std::size_t>(serving)) == reported.end()) {
      reported.back() = static_cast<std::size_t>(serving);
    }

    MobilitySample sample;
    sample.t = t;
    sample.ue = static_cast<std::int64_t>(ue);
    sample.serving_cell = serving;
    for (std::size_t c : reported) {
      RadioFeatureVector f;
      f.rsrp_dbm = rsrp[c];
      f.rsrq_db = std::clamp(kRsrqMax + linear_to_db(lin[c] / total), kRsrqMin, kRsrqMax);
      const double sinr_db = linear_to_db(lin[c] / std::max(total - lin[c], noise_lin));
      f.mcs_index = std::clamp(std::round((sinr_db + 5.0) * 28.0 / 35.0 + 1.5 * gauss(rng)), 0.0, 28.0);
      const double load = std::clamp(cell_load[c] + 0.05 * gauss(rng), 0.0, 1.0);
      f.available_rbs = std::round(100.0 * (1.0 - load));
      f.transport_blocks = std::round((f.mcs_index + 1.0) * f.available_rbs / 10.0 * (0.8 + 0.4 * unit(rng)));
      f.packet_size_bytes = std::max(0.0, std::round(200.0 + 40.0 * f.mcs_index + 100.0 * gauss(rng)));
      const double path_loss = cfg.tx_power_dbm - rsrp[c];
      f.sig_pw_ul_dbm = std::min(kMaxUplinkDbm, -90.0 + 0.8 * path_loss) + gauss(rng);
      f.sig_pw_dl_dbm = rsrp[c] + 30.8 + gauss(rng);
      sample.candidates.push_back({static_cast<std::int64_t>(c), f});
    }
    track.samples.push_back(std::move(sample));

    // Random waypoint step.
    double budget = speed * cfg.sample_period_s;
    while (budget > 0.0) {
      const double dx = waypoint.x - pos.x, dy = waypoint.y - pos.y;
      const double dist = std::hypot(dx, dy);
      if (dist > budget) {
        pos = {pos.x + dx / dist * budget, pos.y + dy / dist * budget};
        budget = 0.0;
      } else {
        pos = waypoint;
        budget -= dist;
        waypoint = point_in_disc(home, cfg.roam_radius_m);
        speed = cfg.speed_min_mps + (cfg.speed_max_mps - cfg.speed_min_mps) * unit(rng);
        if (dist == 0.0 && budget > 0.0 && waypoint.x == pos.x && waypoint.y == pos.y) break;
      }
    }
  }
  return track;
}

}  // namespace

MobilityTrace generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto cells = hexagonal_layout(cfg.n_cells, cfg.cell_spacing_m, cfg.area_m / 2.0);
  std::mt19937_64 cell_rng(cfg.rng_seed ^ 0xCE11CE11ULL);
  std::uniform_real_distribution<double> load_dist(0.2, 0.8);
  std::vector<double> cell_load(cells.size());
  for (auto& l : cell_load) l = load_dist(cell_rng);

  const ShadowField shadowing(cfg, cells.size());
  std::vector<UeTrack> tracks(cfg.n_ues);
  for (std::size_t ue = 0; ue < cfg.n_ues; ++ue) tracks[ue] = simulate_ue(cfg, ue, cells, cell_load, shadowing);

  // Merge in (t, ue) order: every UE has a sample at every step.
  MobilityTrace trace;
  const std::size_t steps = tracks.front().samples.size();
  trace.reserve(steps * cfg.n_ues);
  for (std::size_t step = 0; step < steps; ++step)
    for (auto& track : tracks) trace.push_back(std::move(track.samples[step]));
  return trace;
}

AttributedGraph trace_to_graph(const MobilityTrace& trace) {
  std::map<std::int64_t, std::vector<double>> ue_sum, cell_sum;
  std::map<std::int64_t, std::size_t> ue_count, cell_count;
  std::vector<RawEdge> edges;
  std::unordered_map<NodePair, bool, NodePairHash> seen;
  std::int64_t observation = 0;
  for (const auto& s : trace) {
    ue_sum.try_emplace(s.ue, kRadioFeatureCount, 0.0);
    ue_count.try_emplace(s.ue, 0);
    for (const auto& c : s.candidates) {
      const std::int64_t id = observation++;
      cell_sum.try_emplace(c.cell, kRadioFeatureCount, 0.0);
      cell_count.try_emplace(c.cell, 0);
      const NodePair key{static_cast<std::size_t>(s.ue), static_cast<std::size_t>(c.cell)};
      if (!seen.emplace(key, true).second) continue;
      const auto f = c.features.to_array();
      edges.push_back(RawEdge{id, s.ue, c.cell, std::vector<double>(f.begin(), f.end()), s.t});
      for (std::size_t k = 0; k < kRadioFeatureCount; ++k) {
        ue_sum[s.ue][k] += f[k];
        cell_sum[c.cell][k] += f[k];
      }
      ue_count[s.ue]++;
      cell_count[c.cell]++;
    }
  }
  auto to_nodes = [](const auto& sums, const auto& counts) {
    std::vector<RawNode> out;
    for (const auto& [id, sum] : sums) {
      RawNode n{id, sum};
      const double k = static_cast<double>(counts.at(id));
      if (k > 0)
        for (auto& v : n.features) v /= k;
      out.push_back(std::move(n));
    }
    return out;
  };
  const auto ues = to_nodes(ue_sum, ue_count);
  const auto cells = to_nodes(cell_sum, cell_count);
  return homogenize(ues, cells, edges);
}

std::vector<HandoverEvent> ground_truth_next_cell(const MobilityTrace& trace) {
  std::map<std::int64_t, std::int64_t> serving;
  std::vector<HandoverEvent> events;
  for (const auto& s : trace) {
    auto [it, inserted] = serving.try_emplace(s.ue, s.serving_cell);
    if (!inserted && it->second != s.serving_cell) {
      events.push_back({s.t, s.ue, it->second, s.serving_cell});
      it->second = s.serving_cell;
    }
  }
  std::stable_sort(events.begin(), events.end(), [](const HandoverEvent& a, const HandoverEvent& b) {
    return a.t != b.t ? a.t < b.t : a.ue < b.ue;
  });
  return events;
}

std::pair<MobilityTrace, MobilityTrace> split_trace(const MobilityTrace& trace, double t_split) {
  std::pair<MobilityTrace, MobilityTrace> out;
  for (const auto& s : trace) (s.t < t_split ? out.first : out.second).push_back(s);
  return out;
}

void write_trace(std::ostream& out, const MobilityTrace& trace) {
  out << "t,ue,serving,cell,rsrp,rsrq,tb,arb,pkt,mcs,ul,dl\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& s : trace) {
    for (const auto& c : s.candidates) {
      out << s.t << ',' << s.ue << ',' << s.serving_cell << ',' << c.cell;
      for (double v : c.features.to_array()) out << ',' << v;
      out << '\n';
    }
  }
}

MobilityTrace read_trace(std::istream& in) {
  MobilityTrace trace;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) return trace;
  ++line_no;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> values;
    while (std::getline(ss, field, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw DataError("trace line " + std::to_string(line_no) + ": cannot parse '" + field + "'");
      }
    }
    if (values.size() != 4 + kRadioFeatureCount) {
      throw DataError("trace line " + std::to_string(line_no) + ": expected 12 fields, got " + std::to_string(values.size()));
    }
    const double t = values[0];
    const auto ue = static_cast<std::int64_t>(values[1]);
    const auto serving = static_cast<std::int64_t>(values[2]);
    if (trace.empty() || trace.back().t != t || trace.back().ue != ue) {
      trace.push_back(MobilitySample{t, ue, serving, {}});
    }
    std::array<double, kRadioFeatureCount> f{};
    std::copy(values.begin() + 4, values.end(), f.begin());
    trace.back().candidates.push_back({static_cast<std::int64_t>(values[3]), RadioFeatureVector::from_array(f)});
  }
  return trace;
}

void write_config_echo(std::ostream& out, const ScenarioConfig& cfg) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "n_cells = " << cfg.n_cells << '\n'
      << "n_ues = " << cfg.n_ues << '\n'
      << "area_m = " << cfg.area_m << '\n'
      << "cell_spacing_m = " << cfg.cell_spacing_m << '\n'
      << "speed_min_mps = " << cfg.speed_min_mps << '\n'
      << "speed_max_mps = " << cfg.speed_max_mps << '\n'
      << "duration_s = " << cfg.duration_s << '\n'
      << "sample_period_s = " << cfg.sample_period_s << '\n'
      << "max_neighbors = " << cfg.max_neighbors << '\n'
      << "rng_seed = " << cfg.rng_seed << '\n'
      << "roam_radius_m = " << cfg.roam_radius_m << '\n'
      << "pathloss_exponent = " << cfg.pathloss_exponent << '\n'
      << "shadowing_sigma_db = " << cfg.shadowing_sigma_db << '\n'
      << "shadowing_decorrelation_m = " << cfg.shadowing_decorrelation_m << '\n'
      << "hysteresis_db = " << cfg.hysteresis_db << '\n'
      << "report_window_db = " << cfg.report_window_db << '\n'
      << "tx_power_dbm = " << cfg.tx_power_dbm << '\n';
}

RawTables generate_rw_like(const RwLikeConfig& cfg) {
  if (cfg.blocks == 0 || cfg.ues_per_block == 0 || cfg.cells_per_block == 0) {
    throw ConfigError("blocks, ues_per_block and cells_per_block must be positive");
  }
  if (cfg.link_probability <= 0.0 || cfg.link_probability > 1.0) throw ConfigError("link_probability: must be in (0, 1]");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto features = [&](std::size_t width) {
    std::vector<double> f(width);
    for (auto& v : f) v = unit(rng);
    return f;
  };
  RawTables t;
  const auto cell_base = static_cast<std::int64_t>(cfg.blocks * cfg.ues_per_block);
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    for (std::size_t i = 0; i < cfg.ues_per_block; ++i)
      t.ues.push_back({static_cast<std::int64_t>(b * cfg.ues_per_block + i), features(cfg.ue_width)});
    for (std::size_t j = 0; j < cfg.cells_per_block; ++j)
      t.cells.push_back({cell_base + static_cast<std::int64_t>(b * cfg.cells_per_block + j), features(cfg.cell_width)});
  }
  std::int64_t next_id = 0;
  std::vector<RawEdge> duplicates;
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    std::vector<std::size_t> cell_degree(cfg.cells_per_block, 0);
    for (std::size_t i = 0; i < cfg.ues_per_block; ++i) {
      const auto ue = static_cast<std::int64_t>(b * cfg.ues_per_block + i);
      std::vector<std::size_t> linked;
      for (std::size_t j = 0; j < cfg.cells_per_block; ++j)
        if (unit(rng) < cfg.link_probability) linked.push_back(j);
      if (linked.empty()) linked.push_back(static_cast<std::size_t>(unit(rng) * static_cast<double>(cfg.cells_per_block)) % cfg.cells_per_block);
      for (std::size_t j : linked) {
        const std::int64_t cell = cell_base + static_cast<std::int64_t>(b * cfg.cells_per_block + j);
        t.edges.push_back({next_id++, ue, cell, features(cfg.edge_width), std::nullopt});
        cell_degree[j]++;
        if (unit(rng) < cfg.duplicate_fraction) duplicates.push_back({0, ue, cell, features(cfg.edge_width), std::nullopt});
      }
    }
    // Cells nobody linked to get one UE of their block.
    for (std::size_t j = 0; j < cfg.cells_per_block; ++j) {
      if (cell_degree[j] > 0) continue;
      const auto ue = static_cast<std::int64_t>(b * cfg.ues_per_block) +
                      static_cast<std::int64_t>(static_cast<std::size_t>(unit(rng) * static_cast<double>(cfg.ues_per_block)) % cfg.ues_per_block);
      t.edges.push_back({next_id++, ue, cell_base + static_cast<std::int64_t>(b * cfg.cells_per_block + j), features(cfg.edge_width), std::nullopt});
    }
  }
  for (auto& d : duplicates) {
    d.edge_id = next_id++;
    t.edges.push_back(std::move(d));
  }
  return t;
}

}  // namespace nextcell
