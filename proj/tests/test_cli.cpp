/* Copyright 2026 The epicon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

#include "commands.hpp"
#include "epicon/attention.hpp"
#include "epicon/binary_io.hpp"
#include "epicon/config.hpp"
#include "epicon/epipolar.hpp"
#include "epicon/mask_io.hpp"
#include "epicon/scene.hpp"
#include "epicon/trajectory_io.hpp"

using namespace epicon;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

/// Values of every `key=` occurrence in a key=value log.
std::vector<std::string> values(const std::string& log, const std::string& key) {
  std::vector<std::string> found;
  std::istringstream in(log);
  std::string token;
  while (in >> token) {
    if (token.rfind(key + "=", 0) == 0) found.push_back(token.substr(key.size() + 1));
  }
  return found;
}

std::string value(const std::string& log, const std::string& key) {
  const auto v = values(log, key);
  REQUIRE(!v.empty());
  return v.front();
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("epicon_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

// Two latent frames, second camera shifted along x: epipolar lines are rows.
std::string rectified_trajectory() {
  std::string t = "TRAJ1 w2c 64 80 pixel\n";
  for (int f = 0; f < 5; ++f) {
    t += std::to_string(f) + " 80 80 32 40 1 0 0 " + (f == 4 ? "-1" : "0") +
         " 0 1 0 0 0 0 1 0\n";
  }
  return t;
}

}  // namespace

TEST_CASE("mask: static trajectory is degenerate") {
  TempDir dir;
  save_trajectory(dir / "static.txt", static_trajectory(13, {12, 16}));
  const Run r = run({"mask", "--trajectory", dir / "static.txt", "--out", dir / "m.epmv"});
  CHECK(r.code == 3);
  CHECK(r.err.find("warning: all pairs degenerate") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "m.epmv"));
}

TEST_CASE("mask: byte count and determinism") {
  TempDir dir;
  save_trajectory(dir / "t.txt", dolly_trajectory(13, {12, 16}));
  const Run a = run({"mask", "--trajectory", dir / "t.txt", "--out", dir / "a.epmv"});
  REQUIRE(a.code == 0);
  const std::size_t l = 4 * 16 * 12;
  const std::size_t expected = 5 + 12 + 8 + (l * l + 7) / 8;
  CHECK(read_file_bytes(dir / "a.epmv").size() == expected);
  CHECK(value(a.out, "bytes") == std::to_string(expected));
  CHECK(value(a.out, "dims") == "4x12x16");
  CHECK(values(a.out, "pair").size() == 16);
  CHECK(value(a.out, "degenerate_pairs") == "0");

  const Run b = run({"mask", "--trajectory", dir / "t.txt", "--out", dir / "b.epmv"});
  CHECK(b.out == a.out);
  CHECK(read_file_bytes(dir / "a.epmv") == read_file_bytes(dir / "b.epmv"));

  const Run wrong = run({"--dims", "4x8x8", "mask", "--trajectory", dir / "t.txt", "--out",
                         dir / "c.epmv"});
  CHECK(wrong.code == 4);
}

TEST_CASE("loss: uniform attention, mismatch, and library agreement") {
  TempDir dir;
  save_trajectory(dir / "t.txt", dolly_trajectory(5, {3, 4}));
  REQUIRE(run({"mask", "--trajectory", dir / "t.txt", "--out", dir / "m.epmv"}).code == 0);
  const int l = 2 * 3 * 4;
  save_attention(dir / "u.attn",
                 AttentionMap(2, l, std::vector<double>(2 * l * l, 1.0 / l)));
  const Run u = run({"loss", "--attention", dir / "u.attn", "--mask", dir / "m.epmv"});
  REQUIRE(u.code == 0);
  CHECK(value(u.out, "loss") == "0");
  CHECK(value(u.out, "suppressed_count") == "0");
  CHECK(values(u.out, "pair").size() == 4);

  save_attention(dir / "small.attn", AttentionMap(1, 3, std::vector<double>(9, 1.0 / 3)));
  CHECK(run({"loss", "--attention", dir / "small.attn", "--mask", dir / "m.epmv"}).code == 4);

  std::mt19937_64 rng(71);
  std::normal_distribution<double> n(0.0, 1.5);
  std::vector<double> z(static_cast<std::size_t>(l) * l);
  for (double& x : z) x = n(rng);
  const AttentionMap a = AttentionMap::from_logits(1, l, z);
  save_attention(dir / "r.attn", a);
  const Run r = run({"loss", "--attention", dir / "r.attn", "--mask", dir / "m.epmv"});
  REQUIRE(r.code == 0);
  const EpipolarMaskVolume mask = load_mask_volume(dir / "m.epmv");
  std::vector<int> all(l);
  for (int i = 0; i < l; ++i) all[i] = i;
  const BatchLossReport want = epipolar_loss_batch(a, mask, all, 30.0, DeltaScope::kPerRow);
  CHECK(std::stod(value(r.out, "loss")) == want.loss);
  CHECK(want.loss > 0.0);

  // All-foreground human mask: no active queries, zero loss.
  MaskSequence human(2, 24, 32, true);
  write_text(dir / "h.txt", serialize_mask_sequence(human));
  const Run fg = run({"loss", "--attention", dir / "r.attn", "--mask", dir / "m.epmv",
                      "--background", dir / "h.txt"});
  REQUIRE(fg.code == 0);
  CHECK(value(fg.out, "loss") == "0");
  CHECK(value(fg.out, "active_queries") == "0");
}

TEST_CASE("gradcheck: pass, negative control, single token") {
  const Run ok = run({"gradcheck"});
  CHECK(ok.code == 0);
  CHECK(value(ok.out, "status") == "pass");
  CHECK(values(ok.out, "instance").size() == 20);
  CHECK(std::stod(value(ok.out, "max_rel_error")) < 1e-6);

  const Run bad = run({"gradcheck", "--corrupt-gradient", "--instances", "3"});
  CHECK(bad.code == 5);
  CHECK(value(bad.out, "status") == "fail");
  CHECK_FALSE(values(bad.out, "failing_seed").empty());

  const Run one = run({"--dims", "1x1x1", "gradcheck", "--instances", "2"});
  CHECK(one.code == 0);
  CHECK(value(one.out, "max_rel_error") == "0");
}

TEST_CASE("render: rectified band, upscale and range checks") {
  TempDir dir;
  write_text(dir / "rect.txt", rectified_trajectory());
  REQUIRE(run({"mask", "--trajectory", dir / "rect.txt", "--out", dir / "m.epmv"}).code == 0);

  const Run r = run({"render", "--mask", dir / "m.epmv", "--query", "0,3,5", "--key-frame", "1",
                     "--out", dir / "band.pgm"});
  REQUIRE(r.code == 0);
  CHECK(value(r.out, "popcount") == "24");
  CHECK(value(r.out, "all_true") == "0");
  const auto pgm = read_file_bytes(dir / "band.pgm");
  const std::string header = "P5\n8 10\n255\n";
  REQUIRE(pgm.size() == header.size() + 80);
  for (int v = 0; v < 10; ++v) {
    for (int u = 0; u < 8; ++u) {
      CHECK(pgm[header.size() + v * 8 + u] == (v >= 4 && v <= 6 ? 255 : 0));
    }
  }

  const Run same = run({"render", "--mask", dir / "m.epmv", "--query", "0,3,5", "--key-frame",
                        "0", "--out", dir / "diag.pgm"});
  CHECK(value(same.out, "all_true") == "1");

  const Run big = run({"--upscale", "8", "render", "--mask", dir / "m.epmv", "--query", "0,3,5",
                       "--key-frame", "1", "--out", dir / "big.pgm"});
  REQUIRE(big.code == 0);
  CHECK(value(big.out, "width") == "64");
  CHECK(value(big.out, "height") == "80");
  const std::string big_header = "P5\n64 80\n255\n";
  CHECK(read_file_bytes(dir / "big.pgm").size() == big_header.size() + 64 * 80);

  CHECK(run({"render", "--mask", dir / "m.epmv", "--query", "0,8,5", "--key-frame", "1", "--out",
             dir / "x.pgm"}).code == 4);
  CHECK(run({"render", "--mask", dir / "m.epmv", "--query", "0,3,5", "--key-frame", "2", "--out",
             dir / "x.pgm"}).code == 4);
  CHECK(run({"render", "--mask", dir / "m.epmv", "--query", "0;3;5", "--key-frame", "1", "--out",
             dir / "x.pgm"}).code == 2);
}

TEST_CASE("demo-train: zero steps and all-foreground background") {
  const Run zero = run({"--seed", "7", "demo-train", "--steps", "0"});
  REQUIRE(zero.code == 0);
  CHECK(values(zero.out, "step").size() == 1);
  CHECK(value(zero.out, "mass_ratio") == "1");
  CHECK(value(zero.out, "dims") == "4x12x9");

  TempDir dir;
  write_text(dir / "fg.txt", serialize_mask_sequence(MaskSequence(4, 96, 72, true)));
  const Run fg = run({"--seed", "7", "demo-train", "--steps", "5", "--background", dir / "fg.txt"});
  REQUIRE(fg.code == 0);
  CHECK(value(fg.out, "background_queries") == "0");
  CHECK(value(fg.out, "initial_mass") == value(fg.out, "final_mass"));

  save_trajectory(dir / "static.txt", static_trajectory(13, {12, 9}));
  CHECK(run({"demo-train", "--trajectory", dir / "static.txt", "--steps", "1"}).code == 3);

  const Run a = run({"--seed", "7", "demo-train", "--steps", "3"});
  const Run b = run({"--seed", "7", "demo-train", "--steps", "3"});
  CHECK(a.out == b.out);
}

TEST_CASE("parse errors and the config round trip") {
  TempDir dir;
  CHECK(run({}).code == 2);
  CHECK(run({"nonsense"}).code == 2);
  CHECK(run({"mask"}).code == 2);
  CHECK(run({"--percentile", "100", "config"}).code == 2);
  CHECK(run({"--delta-scope", "frame", "config"}).code == 2);
  write_text(dir / "bad.txt", "TRAJ1 w2c 64 48 pixel\n0 1 2 3\n");
  const Run bad = run({"mask", "--trajectory", dir / "bad.txt", "--out", dir / "m.epmv"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("line 2") != std::string::npos);
  CHECK(run({"mask", "--trajectory", dir / "missing.txt", "--out", dir / "m.epmv"}).code == 1);
  CHECK(run({"--help"}).code == 0);

  const Run c = run({"--seed", "9", "--percentile", "50", "config"});
  REQUIRE(c.code == 0);
  write_text(dir / "c.json", c.out);
  const Run back = run({"--config", dir / "c.json", "config"});
  CHECK(back.out == c.out);
  CHECK(CliConfig::from_json(c.out).seed == 9);
  const Run override_seed = run({"--config", dir / "c.json", "--seed", "3", "config"});
  CHECK(CliConfig::from_json(override_seed.out).seed == 3);
  CHECK(CliConfig::from_json(override_seed.out).percentile == 50);
  write_text(dir / "unknown.json", "{\"colour\": 1}");
  CHECK(run({"--config", dir / "unknown.json", "config"}).code == 2);
}
