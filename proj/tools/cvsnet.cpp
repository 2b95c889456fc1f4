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

// cvsnet: command-line front end.
//
//   cvsnet <subcommand> [--config FILE|PRESET] [--ckpt FILE] [--seed N] [--out DIR] ...
//
// Exit status: 0 success, 1 usage error, 2 runtime failure. Every run that
// gets past argument parsing writes DIR/manifest.json.

#include <zlib.h>

#include <Eigen/Core>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "cvsnet/ablation.hpp"
#include "cvsnet/checkpoint.hpp"
#include "cvsnet/gradcheck.hpp"
#include "cvsnet/train.hpp"
#include "cvsnet/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cvsnet {
namespace {

struct Common {
  std::string config;
  std::string ckpt;
  std::optional<std::uint64_t> seed;
  std::string out = "cvsnet_out";
};

struct Options {
  Common common;
  // data
  std::string data;
  std::string data_kind = "cifar10_binary";
  std::string split = "val";
  Index synthetic = 0;
  // train
  std::string train_config;
  int epochs = -1;
  int warmup = -1;
  Index batch_size = 0;
  double lr = 0;
  Index max_steps = -1;
  Index max_eval = -1;
  bool no_augment = false;
  // ablation / export
  std::string image;
  std::vector<double> values;
  std::vector<std::string> taps;
};

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

std::string config_hash(const std::string& text) {
  return hex32(crc32_of(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  CVSNET_CHECK(out.good(), IoError, "cannot write '", path.string(), "'");
  out << text;
}

ModelConfig resolve_config(const Common& c) {
  ModelConfig cfg;
  if (c.config.empty()) {
    cfg = ModelConfig::preset("default");
  } else if (fs::exists(c.config)) {
    cfg = ModelConfig::load(c.config);
  } else {
    cfg = ModelConfig::preset(c.config);
  }
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

CvsNetF build_model(const Common& c) {
  if (!c.ckpt.empty()) return load_checkpoint<float>(c.ckpt);
  return CvsNetF(resolve_config(c));
}

Dataset load_data(const Options& o, Split split, Index resolution, Index classes) {
  if (o.synthetic > 0) {
    const Index n = split == Split::kTrain ? o.synthetic : std::max<Index>(o.synthetic / 5, 10);
    return synthetic_dataset(n, std::min<Index>(classes, 10), resolution,
                             split == Split::kTrain ? 1 : 2);
  }
  CVSNET_CHECK(!o.data.empty(), ArgumentError, "--data (or --synthetic) is required");
  return load_dataset(DatasetSource{parse_dataset_kind(o.data_kind), o.data, split});
}

Tensor<float> stimulus(const Options& o, Index r, json& manifest) {
  Tensor<float> img(Shape{1, 3, r, r});
  if (!o.image.empty()) {
    const Image8 src = read_image(o.image);
    resize_crop(src, 0.0, 0.0, double(src.height), double(src.width), r, img.data());
    manifest["image"] = o.image;
  } else {
    const Dataset ds = synthetic_dataset(1, 1, r, 11);
    img = load_batch<float>(ds, std::vector<Index>{0}, r).images;
    manifest["image"] = "synthetic";
  }
  return img;
}

std::vector<std::string> tap_list(const Options& o) {
  if (!o.taps.empty()) return o.taps;
  return {kTapNames.begin(), kTapNames.end()};
}

int cmd_inspect(const Options& o, json& manifest) {
  const CvsNetF model = build_model(o.common);
  manifest["config"] = model.config().to_json_value();
  const CostReport report = count_params_flops(model);
  std::cout << "model " << model.config().name << "\n" << report.text();
  const PathwayRatioReport ratio = pathway_ratio_report(model.config().lgn, model.outer_partition());
  std::printf("pathway shares M %.3f  P %.3f  K %.3f  (max deviation from 5/90/5: %.3f)\n",
              ratio.m_share, ratio.p_share, ratio.k_share, ratio.max_deviation);
  json j = report.to_json_value();
  j["config"] = model.config().to_json_value();
  write_text(fs::path(o.common.out) / "inspect.json", j.dump(2) + "\n");
  return 0;
}

int cmd_train(const Options& o, json& manifest) {
  CvsNetF model = build_model(o.common);
  TrainConfig tc;
  if (!o.train_config.empty()) {
    std::ifstream in(o.train_config);
    CVSNET_CHECK(in.good(), IoError, "cannot open train config '", o.train_config, "'");
    tc = TrainConfig::from_json_value(json::parse(in));
  }
  tc.seed = o.common.seed.value_or(model.config().seed);
  if (o.epochs >= 0) tc.epochs = o.epochs;
  if (o.warmup >= 0) tc.warmup_epochs = o.warmup;
  if (o.batch_size > 0) tc.batch_size = o.batch_size;
  if (o.lr > 0) tc.base_lr = o.lr;
  if (o.max_steps >= 0) tc.max_steps_per_epoch = o.max_steps;
  if (o.max_eval >= 0) tc.max_eval_samples = o.max_eval;
  if (o.no_augment) tc.augment.enabled = false;
  if (tc.epochs > 0 && tc.warmup_epochs >= tc.epochs) tc.warmup_epochs = tc.epochs - 1;
  tc.validate();
  manifest["config"] = model.config().to_json_value();
  manifest["train_config"] = tc.to_json_value();
  manifest["data"] = o.synthetic > 0 ? json("synthetic:" + std::to_string(o.synthetic))
                                     : json(o.data_kind + ":" + o.data);

  const Index r = model.config().input_resolution;
  const Index classes = model.config().head.classes;
  const Dataset train_set = load_data(o, Split::kTrain, r, classes);
  Dataset val_set;
  bool has_val = true;
  try {
    val_set = load_data(o, Split::kVal, r, classes);
  } catch (const IoError&) {
    has_val = false;
  }
  std::printf("training on %lld samples, %s validation, %d epochs\n",
              static_cast<long long>(train_set.size()),
              has_val ? std::to_string(val_set.size()).c_str() : "no", tc.epochs);
  const TrainResult result =
      train(model, train_set, has_val ? &val_set : nullptr, tc, TrainOutputs{o.common.out, true},
            [](const EpochMetrics& m) { std::cout << m.to_jsonl() << std::flush; });
  save_checkpoint(model, (fs::path(o.common.out) / "last.ckpt").string());
  manifest["best_epoch"] = result.best_epoch;
  manifest["best_score"] = result.best_val_top1;
  return 0;
}

int cmd_eval(const Options& o, json& manifest) {
  const CvsNetF model = build_model(o.common);
  manifest["config"] = model.config().to_json_value();
  const Dataset ds = load_data(o, parse_split(o.split), model.config().input_resolution,
                               model.config().head.classes);
  const EvalResult r = evaluate(model, ds, 100, o.max_eval > 0 ? o.max_eval : 0);
  json j{{"count", r.count}, {"top1", r.top1()}, {"top5", r.top5()}, {"split", o.split}};
  std::printf("top1 %.4f  top5 %.4f  (%lld samples)\n", r.top1(), r.top5(),
              static_cast<long long>(r.count));
  write_text(fs::path(o.common.out) / "eval.json", j.dump(2) + "\n");
  return 0;
}

int cmd_sweep(const Options& o, json& manifest, SweepKind kind, const std::string& report_name,
              bool pathways) {
  const CvsNetF model = build_model(o.common);
  manifest["config"] = model.config().to_json_value();
  StimulusSweep sweep = kind == SweepKind::kBrightness ? StimulusSweep::brightness()
                                                       : StimulusSweep::hue();
  if (!o.values.empty()) sweep.values = o.values;
  const Tensor<float> img = stimulus(o, model.config().input_resolution, manifest);
  std::vector<std::string> taps = tap_list(o);
  if (pathways && o.taps.empty()) taps = {"lgn.m", "lgn.p", "lgn.k"};
  const ChangeReport report = run_sweep(model, img, sweep, taps, o.common.out);
  json j = report.to_json_value();
  if (pathways) {
    const PathwayRatioReport ratio =
        pathway_ratio_report(model.config().lgn, model.outer_partition());
    j["channel_shares"] = {{"M", ratio.m_share},
                           {"P", ratio.p_share},
                           {"K", ratio.k_share},
                           {"max_deviation", ratio.max_deviation},
                           {"near_biological", ratio.near_biological}};
  }
  write_text(fs::path(o.common.out) / report_name, j.dump(2) + "\n");
  std::printf("pathway change M %.6f  P %.6f  K %.6f  ordering %s\n", report.m_change,
              report.p_change, report.k_change, report.ordering.c_str());
  for (std::size_t t = 0; t < report.taps.size(); ++t) {
    std::printf("  %-24s", report.taps[t].c_str());
    for (double v : report.metrics[t]) std::printf(" %.6f", v);
    std::printf("\n");
  }
  return 0;
}

int cmd_gradcheck(const Options& o, json& manifest) {
  const std::uint64_t seed = o.common.seed.value_or(0);
  const std::vector<GradcheckResult> results = run_gradcheck_suite(seed);
  json rows = json::array();
  bool ok = true;
  for (const auto& r : results) {
    std::cout << r.summary() << "\n";
    ok = ok && r.passed;
    rows.push_back({{"name", r.name},
                    {"passed", r.passed},
                    {"max_error", r.max_error},
                    {"tolerance", r.tolerance},
                    {"checked", r.checked},
                    {"skipped", r.skipped}});
  }
  write_text(fs::path(o.common.out) / "gradcheck.json", rows.dump(2) + "\n");
  manifest["gradcheck_passed"] = ok;
  std::cout << (ok ? "all gradient checks passed\n" : "gradient checks FAILED\n");
  return ok ? 0 : 2;
}

int cmd_export(const Options& o, json& manifest) {
  const CvsNetF model = build_model(o.common);
  manifest["config"] = model.config().to_json_value();
  const Tensor<float> img = stimulus(o, model.config().input_resolution, manifest);
  NoGradGuard no_grad;
  const ForwardResult<float> fwd = model.forward(img);
  json files = json::array();
  for (const auto& tap : tap_list(o)) {
    const Tensor<float>& t = fwd.taps.at(tap).value();
    const fs::path mean_path = fs::path("features") / (tap + ".ppm");
    const fs::path grid_path = fs::path("features") / (tap + "_channels.ppm");
    export_feature_map(t, (fs::path(o.common.out) / mean_path).string());
    export_channel_grid(t, (fs::path(o.common.out) / grid_path).string());
    files.push_back(mean_path.generic_string());
    files.push_back(grid_path.generic_string());
  }
  manifest["files"] = files;
  std::printf("wrote %zu feature images under %s/features\n", files.size(), o.common.out.c_str());
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "model config JSON file or preset name");
  sub->add_option("--ckpt", c.ckpt, "checkpoint to load");
  sub->add_option("--seed", c.seed, "seed");
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
}

void add_data(CLI::App* sub, Options& o) {
  sub->add_option("--data", o.data, "dataset root");
  sub->add_option("--data-kind", o.data_kind, "cifar10_binary or image_folder")
      ->capture_default_str();
  sub->add_option("--synthetic", o.synthetic, "use N synthetic training samples");
}

}  // namespace
}  // namespace cvsnet

int main(int argc, char** argv) {
  using namespace cvsnet;
  CLI::App app{"CVSNet: a convolutional network modelled on the primate visual system"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1, 1);
  app.fallthrough(false);
  Options o;

  auto* inspect = app.add_subcommand("inspect", "parameter and FLOP report");
  auto* train_cmd = app.add_subcommand("train", "train a model");
  auto* eval_cmd = app.add_subcommand("eval", "top-1/top-5 accuracy");
  auto* bright = app.add_subcommand("ablate-brightness", "brightness sweep over the tap points");
  auto* color = app.add_subcommand("ablate-color", "hue-rotation sweep over the tap points");
  auto* pathways = app.add_subcommand("pathways", "M/P/K pathway sensitivity to darkening");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  auto* export_cmd = app.add_subcommand("export-features", "write tap feature maps as P6 images");
  for (auto* sub : {inspect, train_cmd, eval_cmd, bright, color, pathways, gradcheck, export_cmd}) {
    add_common(sub, o.common);
  }
  add_data(train_cmd, o);
  train_cmd->add_option("--train-config", o.train_config, "training config JSON");
  train_cmd->add_option("--epochs", o.epochs, "epochs");
  train_cmd->add_option("--warmup", o.warmup, "warm-up epochs");
  train_cmd->add_option("--batch-size", o.batch_size, "mini-batch size");
  train_cmd->add_option("--lr", o.lr, "base learning rate");
  train_cmd->add_option("--max-steps", o.max_steps, "cap on steps per epoch");
  train_cmd->add_option("--max-eval", o.max_eval, "cap on validation samples");
  train_cmd->add_flag("--no-augment", o.no_augment, "disable crop and flip");
  add_data(eval_cmd, o);
  eval_cmd->add_option("--split", o.split, "train or val")->capture_default_str();
  eval_cmd->add_option("--max-eval", o.max_eval, "cap on samples");
  for (auto* sub : {bright, color, pathways, export_cmd}) {
    sub->add_option("--image", o.image, "stimulus image (.png/.ppm); synthetic if omitted");
    sub->add_option("--taps", o.taps, "tap names (default: all)");
  }
  bright->add_option("--factors", o.values, "brightness factors in (0, 1]");
  pathways->add_option("--factors", o.values, "brightness factors in (0, 1]");
  color->add_option("--degrees", o.values, "hue rotations in [0, 360)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (e.get_exit_code() != 0) std::cerr << app.help();
    return 1;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  json manifest{{"command", name},
                {"argv", std::vector<std::string>(argv, argv + argc)},
                {"seed", o.common.seed ? json(*o.common.seed) : json(nullptr)},
                {"versions",
                 {{"cvsnet", kVersion},
                  {"checkpoint_format", kCheckpointVersion},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"zlib", zlibVersion()},
                  {"compiler", __VERSION__}}}};
  int code = 0;
  try {
    fs::create_directories(o.common.out);
    if (name == "inspect") code = cmd_inspect(o, manifest);
    else if (name == "train") code = cmd_train(o, manifest);
    else if (name == "eval") code = cmd_eval(o, manifest);
    else if (name == "ablate-brightness")
      code = cmd_sweep(o, manifest, SweepKind::kBrightness, "brightness_report.json", false);
    else if (name == "ablate-color")
      code = cmd_sweep(o, manifest, SweepKind::kHue, "color_report.json", false);
    else if (name == "pathways")
      code = cmd_sweep(o, manifest, SweepKind::kBrightness, "pathways_report.json", true);
    else if (name == "gradcheck") code = cmd_gradcheck(o, manifest);
    else if (name == "export-features") code = cmd_export(o, manifest);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    manifest["error"] = e.what();
    code = 2;
  }
  if (manifest.contains("config")) {
    manifest["config_hash"] = config_hash(manifest["config"].dump());
  }
  manifest["exit_code"] = code;
  try {
    write_text(fs::path(o.common.out) / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "error: cannot write manifest: " << e.what() << "\n";
    return 2;
  }
  return code;
}
