/* Copyright 2026 The CVSNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cvsnet_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Runs the CLI with stdout and stderr captured under `dir`.
int run_cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = std::string("\"") + CVSNET_CLI_PATH + "\" " + args + " > \"" +
                          (dir / "stdout.txt").string() + "\" 2> \"" +
                          (dir / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 1") {
  const fs::path dir = scratch_dir("usage");
  CHECK(run_cli("", dir) == 1);
  CHECK(run_cli("frobnicate", dir) == 1);
  CHECK(slurp(dir / "stderr.txt").find("inspect") != std::string::npos);
  CHECK(run_cli("inspect --no-such-flag", dir) == 1);
}

TEST_CASE("inspect prints the cost report and writes a manifest") {
  const fs::path dir = scratch_dir("inspect");
  const fs::path out = dir / "out";
  REQUIRE(run_cli("inspect --config tiny --out \"" + out.string() + "\"", dir) == 0);
  CHECK(slurp(dir / "stdout.txt").find("total") != std::string::npos);
  const nlohmann::json m = read_json(out / "manifest.json");
  CHECK(m["command"] == "inspect");
  CHECK(m["exit_code"] == 0);
  CHECK(m.contains("config_hash"));
  CHECK(m.contains("seed"));
  CHECK(m["versions"].contains("cvsnet"));
  CHECK(fs::exists(out / "inspect.json"));

  // a config file works the same as the preset it spells out
  const fs::path cfg = dir / "tiny.json";
  std::ofstream(cfg) << m["config"].dump();
  const fs::path out2 = dir / "out2";
  REQUIRE(run_cli("inspect --config \"" + cfg.string() + "\" --out \"" + out2.string() + "\"", dir) == 0);
  CHECK(read_json(out2 / "manifest.json")["config_hash"] == m["config_hash"]);
}

TEST_CASE("runtime failures exit with 2 and still write a manifest") {
  const fs::path dir = scratch_dir("failure");
  const fs::path out = dir / "out";
  CHECK(run_cli("inspect --config no-such-preset --out \"" + out.string() + "\"", dir) == 2);
  const nlohmann::json m = read_json(out / "manifest.json");
  CHECK(m["exit_code"] == 2);
  CHECK_FALSE(m["error"].is_null());
  CHECK(run_cli("eval --config tiny --ckpt /nonexistent.ckpt --synthetic 4 --out \"" +
                    (dir / "out2").string() + "\"",
                dir) == 2);
}

TEST_CASE("gradcheck runs the full suite") {
  const fs::path dir = scratch_dir("gradcheck");
  const fs::path out = dir / "out";
  CHECK(run_cli("gradcheck --seed 7 --out \"" + out.string() + "\"", dir) == 0);
  const nlohmann::json report = read_json(out / "gradcheck.json");
  CHECK(report.dump().find("end_to_end") != std::string::npos);
  CHECK(read_json(out / "manifest.json")["gradcheck_passed"] == true);
}

TEST_CASE("train, eval and sweeps on synthetic data") {
  const fs::path dir = scratch_dir("train");
  const fs::path out = dir / "out";
  REQUIRE(run_cli("train --config tiny --synthetic 24 --epochs 2 --batch-size 8 --seed 3 --out \"" +
                      out.string() + "\"",
                  dir) == 0);
  CHECK(fs::exists(out / "metrics.jsonl"));
  CHECK(fs::exists(out / "best.ckpt"));
  const std::string ckpt = (out / "best.ckpt").string();

  const fs::path ev = dir / "eval";
  REQUIRE(run_cli("eval --ckpt \"" + ckpt + "\" --synthetic 12 --out \"" + ev.string() + "\"", dir) == 0);
  const nlohmann::json e = read_json(ev / "eval.json");
  CHECK(e["top5"].get<double>() >= e["top1"].get<double>());

  const fs::path br = dir / "brightness";
  REQUIRE(run_cli("ablate-brightness --ckpt \"" + ckpt + "\" --out \"" + br.string() + "\"", dir) == 0);
  CHECK(read_json(br / "brightness_report.json").contains("ordering"));
  const fs::path co = dir / "color";
  REQUIRE(run_cli("ablate-color --ckpt \"" + ckpt + "\" --out \"" + co.string() + "\"", dir) == 0);
  CHECK(fs::exists(co / "color_report.json"));
  const fs::path pw = dir / "pathways";
  REQUIRE(run_cli("pathways --ckpt \"" + ckpt + "\" --out \"" + pw.string() + "\"", dir) == 0);
  CHECK(read_json(pw / "pathways_report.json").contains("channel_shares"));
  const fs::path fe = dir / "features";
  REQUIRE(run_cli("export-features --ckpt \"" + ckpt + "\" --taps lgn.m --out \"" + fe.string() + "\"",
                  dir) == 0);
  CHECK(fs::exists(fe / "features" / "lgn.m.ppm"));
}

TEST_CASE("two identical training runs produce identical logs") {
  const fs::path dir = scratch_dir("repro");
  std::string logs[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = dir / ("run" + std::to_string(i));
    REQUIRE(run_cli("train --config tiny --synthetic 16 --epochs 2 --batch-size 8 --seed 5 --out \"" +
                        out.string() + "\"",
                    dir) == 0);
    logs[i] = slurp(out / "metrics.jsonl");
  }
  CHECK_FALSE(logs[0].empty());
  CHECK(logs[0] == logs[1]);
}

}  // TEST_SUITE
