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

#include <filesystem>

#include "cvsnet/ablation.hpp"
#include "cvsnet/checkpoint.hpp"
#include "doctest.h"
#include "oracles.hpp"

namespace cvsnet {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cvsnet_test_ablation" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TensorD pixel(double r, double g, double b) {
  TensorD t(Shape{1, 3, 1, 1});
  t.array() << r, g, b;
  return t;
}

/// Textbook hexcone conversion, used as the hue-rotation oracle.
std::array<double, 3> naive_rotate(double r, double g, double b, double degrees) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  double h = 0;
  if (d > 0) {
    if (mx == r) h = 60 * std::fmod((g - b) / d + 6, 6.0);
    else if (mx == g) h = 60 * ((b - r) / d + 2);
    else h = 60 * ((r - g) / d + 4);
  }
  const double s = mx > 0 ? d / mx : 0;
  const double v = mx;
  h = std::fmod(h + degrees, 360.0);
  const double c = v * s;
  const double x = c * (1 - std::abs(std::fmod(h / 60, 2.0) - 1));
  const double m = v - c;
  double rp = 0, gp = 0, bp = 0;
  if (h < 60) rp = c, gp = x;
  else if (h < 120) rp = x, gp = c;
  else if (h < 180) gp = c, bp = x;
  else if (h < 240) gp = x, bp = c;
  else if (h < 300) rp = x, bp = c;
  else rp = c, bp = x;
  return {rp + m, gp + m, bp + m};
}

ModelConfig tiny_bias_free() {
  ModelConfig cfg = ModelConfig::preset("tiny");
  cfg.conv_bias = false;
  cfg.seed = 3;
  return cfg;
}

std::vector<std::string> all_taps() { return {kTapNames.begin(), kTapNames.end()}; }

}  // namespace

TEST_SUITE("ablation_lab") {

TEST_CASE("brightness scales pixels") {
  const TensorD x = pixel(0.8, 0.5, 0.0);
  CHECK(adjust_brightness(x, 0.5)(0, 0, 0, 0) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(oracle::bitwise_equal(adjust_brightness(x, 1.0), x));
  CHECK_THROWS_AS(adjust_brightness(x, 0.0), ArgumentError);
  CHECK_THROWS_AS(adjust_brightness(x, -0.5), ArgumentError);
  const TensorD over = pixel(1.5, 0.2, 0.0);
  CHECK(adjust_brightness(over, 1.0)(0, 0, 0, 0) == 1.0);

  for (int trial = 0; trial < 20; ++trial) {
    const TensorD img = oracle::random_tensor<double>(Shape{1, 3, 5, 5}, 40 + trial, 0, 1);
    const double f = 0.05 * (trial + 1);
    const TensorD out = adjust_brightness(img, f);
    for (Index i = 0; i < img.size(); ++i) CHECK(out.array()[i] == f * img.array()[i]);
  }
}

TEST_CASE("hue rotation on the colour wheel") {
  const TensorD red = pixel(1, 0, 0);
  const TensorD green = rotate_hue(red, 120);
  CHECK(oracle::max_abs_diff(green, pixel(0, 1, 0)) < 1e-6);
  CHECK(oracle::max_abs_diff(rotate_hue(red, 240), pixel(0, 0, 1)) < 1e-6);

  const TensorD img = oracle::random_tensor<double>(Shape{2, 3, 4, 4}, 50, 0, 1);
  CHECK(oracle::max_abs_diff(rotate_hue(img, 0), img) < 1e-6);
  CHECK(oracle::max_abs_diff(rotate_hue(rotate_hue(img, 60), 300), img) < 1e-5);
  CHECK(oracle::max_abs_diff(rotate_hue(rotate_hue(rotate_hue(img, 120), 120), 120), img) < 1e-5);

  for (double deg : {0.0, 45.0, 60.0, 137.5, 180.0, 299.0}) {
    const TensorD out = rotate_hue(img, deg);
    for (Index n = 0; n < 2; ++n)
      for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 4; ++j) {
          const auto ref = naive_rotate(img(n, 0, i, j), img(n, 1, i, j), img(n, 2, i, j), deg);
          for (Index c = 0; c < 3; ++c) CHECK(std::abs(out(n, c, i, j) - ref[std::size_t(c)]) < 1e-9);
          const double v_in = std::max({img(n, 0, i, j), img(n, 1, i, j), img(n, 2, i, j)});
          const double v_out = std::max({out(n, 0, i, j), out(n, 1, i, j), out(n, 2, i, j)});
          CHECK(std::abs(v_in - v_out) < 1e-6);
        }
  }
  CHECK_THROWS_AS(StimulusSweep::hue({360.0}).validate(), ArgumentError);
  CHECK_THROWS_AS(StimulusSweep::brightness({1.2}).validate(), ArgumentError);
}

TEST_CASE("feature change metric") {
  const TensorD a = oracle::random_tensor<double>(Shape{2, 3, 4, 5}, 60);
  CHECK(feature_change(a, a) == 0.0);
  TensorD twice(a.shape(), 2.0 * a.array());
  CHECK(feature_change(a, twice) == doctest::Approx(1.0).epsilon(1e-9));
  const double norm = std::sqrt(a.array().square().sum());
  for (double beta : {0.0, 0.25, 0.5, 3.0}) {
    TensorD scaled(a.shape(), beta * a.array());
    // the 1e-8 guard in the denominator is the only departure from |beta - 1|
    CHECK(std::abs(feature_change(a, scaled) - std::abs(beta - 1) * norm / (norm + 1e-8)) < 1e-12);
  }
  const TensorD b = oracle::random_tensor<double>(Shape{2, 3, 4, 5}, 61);
  double diff = 0, ref = 0;
  for (Index i = 0; i < a.size(); ++i) {
    diff += (b.array()[i] - a.array()[i]) * (b.array()[i] - a.array()[i]);
    ref += a.array()[i] * a.array()[i];
  }
  CHECK(std::abs(feature_change(a, b) - std::sqrt(diff) / (std::sqrt(ref) + 1e-8)) < 1e-6);
  CHECK_THROWS_AS(feature_change(a, TensorD(Shape{2, 3, 5, 4})), ShapeError);
  CHECK(feature_change(TensorD(Shape{1, 1, 2, 2}), TensorD(Shape{1, 1, 2, 2})) == 0.0);
}

TEST_CASE("pathway ordering is a pure function of the changes") {
  CHECK(pathway_ordering(0.1, 0.2, 0.3) == "M<P<K");
  CHECK(pathway_ordering(0.3, 0.2, 0.1) == "K<P<M");
  CHECK(pathway_ordering(0.2, 0.2, 0.2) == "M=P=K");
  CHECK(pathway_ordering(0.2, 0.1, 0.2) == "P<M=K");
}

TEST_CASE("an identity-only sweep reports zeros") {
  const CvsNetF model(tiny_bias_free());
  const TensorF img = oracle::random_tensor<float>(Shape{1, 3, 12, 12}, 70, 0, 1);
  const ChangeReport r = run_sweep(model, img, StimulusSweep::brightness({1.0}), all_taps());
  REQUIRE(r.metrics.size() == 11);
  for (const auto& row : r.metrics) {
    REQUIRE(row.size() == 1);
    CHECK(row[0] == 0.0);
  }
  CHECK(r.baseline_metrics == std::vector<double>{0.0});
  const ChangeReport h = run_sweep(model, img, StimulusSweep::hue({0.0}), {"lgn.k"});
  CHECK(h.metrics[0][0] == 0.0);
}

TEST_CASE("bias-free models change by exactly one minus the factor") {
  for (const char* preset : {"tiny", "cifar"}) {
    ModelConfig cfg = ModelConfig::preset(preset);
    cfg.conv_bias = false;
    const CvsNetF model(cfg);
    const Index r = cfg.input_resolution;
    const TensorF img = oracle::random_tensor<float>(Shape{1, 3, r, r}, 71, 0, 1);
    const std::vector<double> betas{1.0, 0.8, 0.6, 0.4};
    const ChangeReport rep = run_sweep(model, img, StimulusSweep::brightness(betas), all_taps());
    for (std::size_t t = 0; t < rep.taps.size(); ++t)
      for (std::size_t v = 0; v < betas.size(); ++v) {
        INFO(preset, " ", rep.taps[t], " beta ", betas[v]);
        CHECK(std::abs(rep.metrics[t][v] - (1 - betas[v])) < 1e-5);
      }
    CHECK(rep.ordering == "M=P=K");
    CHECK(rep.expected_ordering == "M<P<K");
    CHECK_FALSE(rep.ordering_matches_expected);
  }
}

TEST_CASE("reports and exported files are deterministic") {
  const CvsNetF model(tiny_bias_free());
  const TensorF img = oracle::random_tensor<float>(Shape{1, 3, 12, 12}, 72, 0, 1);
  const fs::path a = scratch_dir("a");
  const fs::path b = scratch_dir("b");
  const ChangeReport ra = run_sweep(model, img, StimulusSweep::hue(), all_taps(), a.string());
  const ChangeReport rb = run_sweep(model, img, StimulusSweep::hue(), all_taps(), b.string());
  CHECK(ra.to_json() == rb.to_json());
  CHECK_FALSE(ra.images.empty());
  for (const std::string& rel : ra.images) {
    INFO(rel);
    REQUIRE(fs::exists(a / rel));
    CHECK(read_file_bytes((a / rel).string()) == read_file_bytes((b / rel).string()));
    CHECK(read_pnm((a / rel).string()).height > 0);
  }
  const auto j = nlohmann::json::parse(ra.to_json());
  for (const char* key : {"kind", "values", "taps", "metrics", "pathways", "ordering", "baseline", "images"})
    CHECK_MESSAGE(j.contains(key), key);
  CHECK(j["ordering"] == pathway_ordering(ra.m_change, ra.p_change, ra.k_change));
}

TEST_CASE("unknown taps are rejected with the valid list") {
  const CvsNetF model(tiny_bias_free());
  const TensorF img(Shape{1, 3, 12, 12});
  try {
    run_sweep(model, img, StimulusSweep::brightness(), {"lgn.x"});
    FAIL("expected an ArgumentError");
  } catch (const ArgumentError& e) {
    CHECK(std::string(e.what()).find("lgn.m") != std::string::npos);
  }
}

TEST_CASE("feature map quantization") {
  TensorD t(Shape{1, 1, 2, 2});
  t.array() << 0, 1, 1, 0;
  const Image8 img = feature_map_image(t);
  CHECK(img.height == 2);
  for (Index c = 0; c < 3; ++c) {
    CHECK(img.at(c, 0, 0) == 0);
    CHECK(img.at(c, 0, 1) == 255);
    CHECK(img.at(c, 1, 0) == 255);
    CHECK(img.at(c, 1, 1) == 0);
  }
  const Image8 flat = feature_map_image(TensorD::constant(Shape{1, 4, 3, 3}, -2.5));
  for (std::uint8_t v : flat.chw) CHECK(v == 128);

  // channel mean of a two-channel map
  TensorD two(Shape{1, 2, 1, 3});
  two.array() << 0, 2, 4, 2, 2, 2;
  const Image8 mean = feature_map_image(two);
  CHECK(mean.at(0, 0, 0) == 0);
  CHECK(mean.at(0, 0, 1) == 128);
  CHECK(mean.at(0, 0, 2) == 255);

  const fs::path dir = scratch_dir("ppm");
  const TensorD r = oracle::random_tensor<double>(Shape{1, 5, 7, 9}, 80);
  const Image8 written = export_feature_map(r, (dir / "map.ppm").string());
  CHECK(read_pnm((dir / "map.ppm").string()) == written);
  const Image8 grid = export_channel_grid(r, (dir / "grid.ppm").string(), 3);
  CHECK(grid.width == 3 * 9 + 2);
  CHECK(grid.height == 2 * 7 + 1);
  CHECK(read_pnm((dir / "grid.ppm").string()) == grid);
  CHECK_THROWS_AS(feature_map_image(TensorD(Shape{2, 1, 2, 2})), ShapeError);
  CHECK_THROWS_AS(export_feature_map(r, (dir / "map.ppm" / "x.ppm").string()), IoError);
}

}  // TEST_SUITE
}  // namespace cvsnet
