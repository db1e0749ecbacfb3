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

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nextcell/cli.hpp"
#include "nextcell/error.hpp"

using namespace nextcell;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path& scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("nextcell_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run nextcell_cmd(const std::string& args) {
  const auto out = scratch() / "stdout.txt";
  const auto err = scratch() / "stderr.txt";
  const std::string cmd = std::string("NEXTCELL_THREADS=2 '") + NEXTCELL_CLI_PATH + "' " + args + " > '" +
                          out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string write_file(const std::string& name, const std::string& text) {
  const auto p = scratch() / name;
  std::ofstream(p) << text;
  return p.string();
}

// One EM dataset shared by the end-to-end cases.
const fs::path& em_data() {
  static const fs::path dir = [] {
    const auto d = scratch() / "em";
    const auto r = nextcell_cmd("gen --kind em --seed 1 --out '" + d.string() + "'");
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("config parsing") {
  std::istringstream in("# comment\n n_ues = 12  # trailing\n\nlr=0.5\n");
  const auto cfg = parse_config(in);
  CHECK(cfg == ConfigMap{{"n_ues", "12"}, {"lr", "0.5"}});
  std::istringstream no_eq("n_ues 12\n");
  try {
    parse_config(no_eq);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
  std::istringstream empty_value("lr =\n");
  CHECK_THROWS_AS(parse_config(empty_value), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/cfg"), ConfigError);
}

TEST_CASE("config maps onto typed settings") {
  const ConfigMap cfg{{"n_ues", "12"},      {"speed_max_mps", "4.5"}, {"lr", "0.03"},
                      {"patience", "7"},    {"kl_weight", "0"},       {"threshold_objective", "mcc"},
                      {"rw.blocks", "3"},   {"resample_negatives", "false"}};
  const auto s = scenario_from_config(cfg);
  CHECK(s.n_ues == 12);
  CHECK(s.speed_max_mps == 4.5);
  const auto t = train_from_config(cfg, TrainConfig::vgae_defaults());
  CHECK(t.lr == 0.03);
  CHECK(t.patience == 7);
  CHECK(t.kl_weight == 0.0);
  CHECK(t.threshold_objective == ThresholdObjective::MCC);
  CHECK_FALSE(t.resample_negatives);
  CHECK(rw_from_config(cfg).blocks == 3);
  CHECK_NOTHROW(reject_unknown_keys(cfg));
  CHECK_THROWS_AS(reject_unknown_keys({{"n_users", "3"}}), ConfigError);
  CHECK_THROWS_AS(scenario_from_config({{"n_ues", "-3"}}), ConfigError);
  CHECK_THROWS_AS(train_from_config({{"lr", "fast"}}, TrainConfig{}), ConfigError);
  CHECK_THROWS_AS(train_from_config({{"threshold_objective", "auc"}}, TrainConfig{}), ConfigError);
}

TEST_CASE("seed lists") {
  CHECK(parse_seeds("7") == std::vector<std::uint64_t>{7});
  CHECK(parse_seeds("1..4") == std::vector<std::uint64_t>{1, 2, 3, 4});
  CHECK(parse_seeds("1, 4,9") == std::vector<std::uint64_t>{1, 4, 9});
  CHECK_THROWS_AS(parse_seeds("5..2"), ConfigError);
  CHECK_THROWS_AS(parse_seeds("x"), ConfigError);
  CHECK_THROWS_AS(parse_seeds(""), ConfigError);
}

TEST_CASE("fnv-1a reference vectors") {
  CHECK(hex64(fnv1a("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a("a")) == "af63dc4c8601ec8c");
  CHECK(hex64(fnv1a("foobar")) == "85944171f73967e8");
  CHECK(fnv1a("bar", fnv1a("foo")) == fnv1a("foobar"));
}

TEST_CASE("linear fit quality") {
  const std::vector<double> x{1, 2, 4};
  CHECK(linear_r2(x, std::vector<double>{3, 5, 9}) == doctest::Approx(1.0));
  // y = (1, 3, 2) against x = (1, 2, 3): r = 0.5.
  CHECK(linear_r2(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}) == doctest::Approx(0.25));
  CHECK_THROWS_AS(linear_r2(std::vector<double>{1, 1}, std::vector<double>{1, 2}), MetricError);
}

TEST_CASE("scaled scenarios grow counts and keep the layout inside the area") {
  const ScenarioConfig base;
  for (double m : {0.5, 1.0, 2.0, 4.0}) {
    const auto s = scaled_scenario(base, m);
    CHECK(s.n_cells == static_cast<std::size_t>(std::llround(31 * m)));
    CHECK(s.n_ues == static_cast<std::size_t>(std::llround(70 * m)));
    CHECK(s.area_m >= base.area_m * std::sqrt(m) - 1e-9);
    CHECK_NOTHROW(s.validate());
  }
  CHECK_THROWS_AS(scaled_scenario(base, 0.0), ConfigError);
}

TEST_CASE("run manifests record their fields") {
  RunManifest m;
  m.command = "train vgae";
  m.seeds = {1, 2};
  m.dataset_hash = "abc";
  m.config = {{"lr", "0.1"}};
  std::ostringstream out;
  m.write(out);
  const std::string text = out.str();
  CHECK(text.find("train vgae") != std::string::npos);
  CHECK(text.find("abc") != std::string::npos);
  CHECK(text.find("lr") != std::string::npos);
  CHECK(utc_now().size() == 20);  // YYYY-MM-DDTHH:MM:SSZ
  CHECK(thread_cap() >= 1);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(nextcell_cmd("").code == kExitUsage);
  CHECK(nextcell_cmd("frobnicate").code == kExitUsage);
  CHECK(nextcell_cmd("--help").code == kExitOk);
  CHECK(nextcell_cmd("train gnn --data '" + em_data().string() + "'").code == kExitUsage);
  CHECK(nextcell_cmd("gen --kind xx --out '" + (scratch() / "x").string() + "'").code == kExitUsage);
  const auto bad = write_file("bad.cfg", "n_ues 3\n");
  const auto r = nextcell_cmd("gen --config '" + bad + "' --out '" + (scratch() / "y").string() + "'");
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("line 1") != std::string::npos);
  const auto unknown = write_file("unknown.cfg", "n_usres = 3\n");
  CHECK(nextcell_cmd("gen --config '" + unknown + "' --out '" + (scratch() / "y").string() + "'").code == kExitUsage);
}

TEST_CASE("data errors exit with 3") {
  CHECK(nextcell_cmd("train vgae --data /nonexistent/dir").code == kExitData);
  CHECK(nextcell_cmd("ingest --nodes /nonexistent/n.csv --edges /nonexistent/e.csv --out '" + scratch().string() + "'")
            .code == kExitData);
  const auto r = nextcell_cmd("train seal --max-cost 1 --data '" + em_data().string() + "'");
  CHECK(r.code == kExitData);
  CHECK(r.err.find("--force") != std::string::npos);
}

TEST_CASE("generation is byte-for-byte reproducible") {
  const auto a = scratch() / "gen_a";
  const auto b = scratch() / "gen_b";
  const auto ra = nextcell_cmd("gen --kind em --seed 3 --out '" + a.string() + "'");
  const auto rb = nextcell_cmd("gen --kind em --seed 3 --out '" + b.string() + "'");
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  CHECK(ra.out == rb.out);
  CHECK(ra.out.find("hash=") != std::string::npos);
  for (const char* f : {"trace.csv", "nodes.csv", "edges.csv", "scenario.cfg"}) CHECK(slurp(a / f) == slurp(b / f));
  CHECK(fs::exists(a / "manifest.txt"));
  const auto rc = nextcell_cmd("gen --kind em --seed 4 --out '" + (scratch() / "gen_c").string() + "'");
  CHECK(rc.out != ra.out);
}

TEST_CASE("train, split and eval round trip") {
  const auto runs = scratch() / "runs";
  const auto r = nextcell_cmd("train vgae --seed 1..2 --data '" + em_data().string() + "' --out '" + runs.string() + "'");
  REQUIRE(r.code == 0);
  const std::string table = slurp(runs / "results.csv");
  CHECK(table.rfind(kResultsHeader, 0) == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 4);  // header, two seeds, mean
  CHECK(table.find("vgae,em,mean,") != std::string::npos);
  CHECK(fs::exists(runs / "vgae_seed1.ckpt"));
  CHECK(fs::exists(runs / "curve_vgae_seed2.csv"));
  CHECK(fs::exists(runs / "manifest_vgae.txt"));

  const auto manifest = scratch() / "split1.csv";
  REQUIRE(nextcell_cmd("split --data '" + em_data().string() + "' --seed 1 --out '" + manifest.string() + "'").code == 0);
  const auto e = nextcell_cmd("eval --checkpoint '" + (runs / "vgae_seed1.ckpt").string() + "' --data '" +
                              em_data().string() + "' --split '" + manifest.string() + "'");
  CHECK(e.code == 0);
  CHECK(e.out.find("auc=") != std::string::npos);
}

TEST_CASE("evaluating on a dataset with another schema exits with 3") {
  const auto rw = scratch() / "rw";
  const auto cfg = write_file("rw.cfg", "rw.blocks = 2\nrw.ues_per_block = 20\nrw.cells_per_block = 4\n");
  REQUIRE(nextcell_cmd("gen --kind rw --config '" + cfg + "' --out '" + rw.string() + "'").code == 0);
  const auto runs = scratch() / "runs_init";
  REQUIRE(nextcell_cmd("train vgae --init-only --data '" + em_data().string() + "' --out '" + runs.string() + "'").code ==
          0);
  const auto e =
      nextcell_cmd("eval --checkpoint '" + (runs / "vgae_seed1.ckpt").string() + "' --data '" + rw.string() + "'");
  CHECK(e.code == kExitData);
}

TEST_CASE("divergence exits with 4 and names the epoch") {
  const auto cfg = write_file("diverge.cfg", "lr = 1e300\n");
  const auto r = nextcell_cmd("train vgae --config '" + cfg + "' --data '" + em_data().string() + "' --out '" +
                              (scratch() / "runs_div").string() + "'");
  CHECK(r.code == kExitTraining);
  CHECK(r.err.find("epoch 1") != std::string::npos);
}

TEST_CASE("replay and bench run end to end") {
  const auto log = scratch() / "replay_log.csv";
  const auto r = nextcell_cmd("replay --oracle --trace '" + (em_data() / "trace.csv").string() + "' --log '" +
                              log.string() + "'");
  CHECK(r.code == 0);
  CHECK(r.out.find("next_cell_accuracy=1") != std::string::npos);
  CHECK(fs::exists(log));
  const auto table = scratch() / "bench.csv";
  const auto b = nextcell_cmd("bench --sizes 0.5,1 --epochs 3 --repeats 1 --out '" + table.string() + "'");
  CHECK(b.code == 0);
  CHECK(b.out.find("r2=") != std::string::npos);
  CHECK(slurp(table).rfind("multiplier,nodes,edges,epochs,train_s\n", 0) == 0);
}

// Test cases run in file order; this one removes the scratch directory.
TEST_CASE("remove scratch files") {
  std::error_code ec;
  fs::remove_all(scratch(), ec);
  CHECK_FALSE(ec);
}
