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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "cvsnet/checkpoint.hpp"
#include "cvsnet/train.hpp"
#include "doctest.h"
#include "oracles.hpp"

namespace cvsnet {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cvsnet_test_training" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Image8 pattern_image(std::uint64_t seed) {
  Rng rng(seed);
  Image8 img;
  img.height = img.width = 32;
  img.chw.resize(3 * 32 * 32);
  for (auto& b : img.chw) b = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

ModelConfig tiny_model(Index classes) {
  ModelConfig cfg = ModelConfig::preset("tiny");
  cfg.head.classes = classes;
  return cfg;
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.warmup_epochs = 1;
  cfg.batch_size = 8;
  cfg.base_lr = 3e-3;
  cfg.seed = 21;
  return cfg;
}

TensorD logits_rows(const std::vector<std::vector<double>>& rows) {
  TensorD t(Shape{Index(rows.size()), Index(rows[0].size()), 1, 1});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) t(Index(i), Index(k), 0, 0) = rows[i][k];
  return t;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("cifar records decode exactly") {
  Image8 white;
  white.height = white.width = 32;
  white.chw.assign(3 * 32 * 32, 255);
  Dataset ds;
  decode_cifar_records(encode_cifar_record(7, white), "fixture", ds);
  REQUIRE(ds.size() == 1);
  CHECK(ds.labels[0] == 7);
  const Index idx = 0;
  const Batch<double> b = load_batch<double>(ds, std::span<const Index>(&idx, 1), 32);
  CHECK((b.images.array() == 1.0).all());

  std::vector<std::uint8_t> bytes;
  std::vector<Image8> images;
  for (int i = 0; i < 4; ++i) {
    images.push_back(pattern_image(100 + i));
    const auto rec = encode_cifar_record(i * 3 % 10, images.back());
    CHECK(rec.size() == kCifarRecordBytes);
    CHECK(rec[0] == i * 3 % 10);
    CHECK(rec[1 + 1024 + 5] == images.back().at(1, 0, 5));
    bytes.insert(bytes.end(), rec.begin(), rec.end());
  }
  Dataset many;
  decode_cifar_records(bytes, "fixture", many);
  REQUIRE(many.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(many.images[std::size_t(i)] == images[std::size_t(i)]);
    CHECK(many.labels[std::size_t(i)] == i * 3 % 10);
  }
  const std::vector<Index> all{0, 1, 2, 3};
  const Batch<float> fb = load_batch<float>(many, all, 32);
  for (Index n = 0; n < 4; ++n)
    for (Index c = 0; c < 3; ++c)
      for (Index y = 0; y < 32; ++y)
        for (Index x = 0; x < 32; ++x)
          CHECK(fb.images(n, c, y, x) == float(many.images[std::size_t(n)].at(c, y, x)) / 255.0f);
}

TEST_CASE("malformed cifar data reports the byte offset") {
  std::vector<std::uint8_t> bytes = encode_cifar_record(1, pattern_image(1));
  bytes.push_back(0);
  Dataset ds;
  try {
    decode_cifar_records(bytes, "bad.bin", ds);
    FAIL("expected an IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("byte offset 3073") != std::string::npos);
  }
  std::vector<std::uint8_t> two = encode_cifar_record(1, pattern_image(1));
  std::vector<std::uint8_t> second = encode_cifar_record(2, pattern_image(2));
  second[0] = 12;
  two.insert(two.end(), second.begin(), second.end());
  try {
    decode_cifar_records(two, "bad.bin", ds);
    FAIL("expected an IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("byte offset 3073") != std::string::npos);
  }
}

TEST_CASE("cifar directories round trip through the loader") {
  const Dataset train_set = synthetic_dataset(12, 10, 32, 5);
  const Dataset val_set = synthetic_dataset(6, 10, 32, 6);
  const fs::path dir = scratch_dir("cifar");
  write_cifar_dataset(train_set, val_set, dir.string());
  const Dataset tr = load_dataset({DatasetKind::kCifar10Binary, dir.string(), Split::kTrain});
  const Dataset va = load_dataset({DatasetKind::kCifar10Binary, dir.string(), Split::kVal});
  CHECK(tr.images == train_set.images);
  CHECK(tr.labels == train_set.labels);
  CHECK(va.images == val_set.images);
  CHECK(tr.num_classes() == 10);
  CHECK_THROWS_AS(load_dataset({DatasetKind::kCifar10Binary, (dir / "nope").string(), Split::kTrain}),
                  IoError);
}

TEST_CASE("augmentation toggles, determinism and flips") {
  const TensorF x = oracle::random_tensor<float>(Shape{3, 3, 8, 8}, 7, 0, 1);
  AugmentOptions off;
  off.enabled = false;
  CHECK(oracle::bitwise_equal(augment(x, off, 1, 0, 0), x));

  const AugmentOptions on;
  CHECK(oracle::bitwise_equal(augment(x, on, 1, 2, 5), augment(x, on, 1, 2, 5)));
  CHECK_FALSE(oracle::bitwise_equal(augment(x, on, 1, 2, 5), augment(x, on, 1, 3, 5)));

  AugmentOptions flip_only;
  flip_only.flip_probability = 1.0;
  flip_only.crop_padding = 0;
  const TensorF once = augment(x, flip_only, 9, 0, 0);
  CHECK(oracle::bitwise_equal(once, flip_horizontal(x)));
  CHECK(oracle::bitwise_equal(augment(once, flip_only, 9, 4, 0), x));
  CHECK(oracle::bitwise_equal(flip_horizontal(flip_horizontal(x)), x));
  CHECK(once(1, 2, 3, 0) == x(1, 2, 3, 7));

  // a sample's view depends only on its own index
  const Dataset ds = synthetic_dataset(6, 3, 12, 8);
  const std::vector<Index> ab{1, 4};
  const std::vector<Index> b{4};
  const Batch<float> pair = load_augmented_batch<float>(ds, ab, 12, on, 3, 1);
  const Batch<float> single = load_augmented_batch<float>(ds, b, 12, on, 3, 1);
  for (Index c = 0; c < 3; ++c) CHECK(pair.images.plane(1, c) == single.images.plane(0, c));
}

TEST_CASE("epoch permutations are seeded permutations") {
  const std::vector<Index> p = epoch_permutation(50, 4, 0);
  std::vector<Index> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  std::vector<Index> iota(50);
  std::iota(iota.begin(), iota.end(), 0);
  CHECK(sorted == iota);
  CHECK(p == epoch_permutation(50, 4, 0));
  CHECK(p != epoch_permutation(50, 4, 1));
}

TEST_CASE("smoothed cross entropy") {
  const std::vector<int> labels{0, 2, 4};
  const VarD uniform(TensorD::constant(Shape{3, 5, 1, 1}, 0.7));
  CHECK(smoothed_cross_entropy(uniform, std::span<const int>(labels), 0.0).value().array()[0] ==
        doctest::Approx(std::log(5.0)).epsilon(1e-14));

  TensorD confident = TensorD::constant(Shape{3, 5, 1, 1}, -50.0);
  for (std::size_t i = 0; i < labels.size(); ++i) confident(Index(i), labels[i], 0, 0) = 50.0;
  CHECK(smoothed_cross_entropy(VarD(confident), std::span<const int>(labels), 0.0).value().array()[0] <
        1e-40);

  const TensorD z = oracle::random_tensor<double>(Shape{3, 5, 1, 1}, 9, -3, 3);
  for (double eps : {0.0, 0.1, 0.4}) {
    double total = 0;
    for (Index n = 0; n < 3; ++n) {
      double mx = -1e300;
      for (Index k = 0; k < 5; ++k) mx = std::max(mx, z(n, k, 0, 0));
      double se = 0;
      for (Index k = 0; k < 5; ++k) se += std::exp(z(n, k, 0, 0) - mx);
      for (Index k = 0; k < 5; ++k) {
        const double q = k == labels[std::size_t(n)] ? 1 - eps : eps / 4;
        total -= q * (z(n, k, 0, 0) - mx - std::log(se));
      }
    }
    const double got = smoothed_cross_entropy(VarD(z), std::span<const int>(labels), eps).value().array()[0];
    CHECK(std::abs(got - total / 3) < 1e-6);
  }
  const std::vector<int> bad{0, 5, 1};
  CHECK_THROWS_AS(smoothed_cross_entropy(VarD(z), std::span<const int>(bad), 0.1), ArgumentError);
}

TEST_CASE("top-k counting follows the tie-break rule") {
  // ties rank the lower class first
  const TensorD flat = TensorD::constant(Shape{4, 10, 1, 1}, 0.0);
  const std::vector<int> labels{0, 3, 0, 9};
  EvalResult acc;
  accumulate_topk(flat, std::span<const int>(labels), acc);
  CHECK(acc.top1_hits == 2);
  CHECK(acc.top5_hits == 3);

  // hand-counted: 6 classes, 5 samples
  const TensorD z = logits_rows({{0.1, 0.9, 0.3, 0.2, 0.0, 0.5},    // label 1: rank 0
                                 {0.9, 0.1, 0.3, 0.2, 0.0, 0.5},    // label 4: rank 5
                                 {0.2, 0.2, 0.2, 0.9, 0.2, 0.2},    // label 2: rank 3
                                 {0.3, 0.1, 0.1, 0.1, 0.1, 0.1},    // label 0: rank 0
                                 {0.6, 0.5, 0.4, 0.3, 0.2, 0.1}});  // label 5: rank 5
  const std::vector<int> y{1, 4, 2, 0, 5};
  EvalResult hand;
  accumulate_topk(z, std::span<const int>(y), hand);
  CHECK(hand.count == 5);
  CHECK(hand.top1_hits == 2);
  CHECK(hand.top5_hits == 3);
  CHECK(hand.top1() == doctest::Approx(0.4));
  CHECK(hand.top5() == doctest::Approx(0.6));
  CHECK(label_rank(&z.array()[0], 6, 1) == 0);
}

TEST_CASE("evaluate on constant and perfect models") {
  CvsNetF model(tiny_model(10));
  for (Var<float>* v : {&model.head().classifier.weight, &model.head().classifier.bias})
    v->mutable_value().set_zero();
  const Dataset ds = synthetic_dataset(40, 10, 12, 3);
  const EvalResult r = evaluate(model, ds, 16);
  const double class0 =
      double(std::count(ds.labels.begin(), ds.labels.end(), 0)) / double(ds.size());
  CHECK(r.count == 40);
  CHECK(r.top1() == doctest::Approx(class0));
  CHECK(r.top5() >= r.top1());
  CHECK(evaluate(model, ds, 16, 7).count == 7);
  CHECK_THROWS_AS(evaluate(model, Dataset{}, 16), ArgumentError);

  EvalResult perfect;
  TensorF z(Shape{Index(ds.size()), 10, 1, 1});
  for (Index i = 0; i < ds.size(); ++i) z(i, ds.labels[std::size_t(i)], 0, 0) = 1.0f;
  accumulate_topk(z, std::span<const int>(ds.labels), perfect);
  CHECK(perfect.top1() == 1.0);
  CHECK(perfect.top5() == 1.0);
}

TEST_CASE("top-5 never falls below top-1") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const TensorD z = oracle::random_tensor<double>(Shape{8, 7, 1, 1}, 300 + trial);
    std::vector<int> y(8);
    for (auto& v : y) v = int(rng.below(7));
    EvalResult acc;
    accumulate_topk(z, std::span<const int>(y), acc);
    CHECK(acc.top5_hits >= acc.top1_hits);
  }
}

TEST_CASE("zero epochs leave the model unchanged") {
  CvsNetF model(tiny_model(3));
  const CvsNetF reference(tiny_model(3));
  TrainConfig cfg = quick_config();
  cfg.epochs = 0;
  cfg.warmup_epochs = 0;
  const TrainResult r = train(model, synthetic_dataset(8, 3, 12, 1), nullptr, cfg);
  CHECK(r.log.empty());
  for (std::size_t i = 0; i < model.parameters().size(); ++i)
    CHECK(oracle::bitwise_equal(model.parameters()[i].var.value(), reference.parameters()[i].var.value()));
}

TEST_CASE("train config validation") {
  TrainConfig cfg = quick_config();
  cfg.warmup_epochs = cfg.epochs;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = quick_config();
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = quick_config();
  CHECK_NOTHROW(cfg.validate());
  CHECK(TrainConfig::from_json_value(cfg.to_json_value()).to_json_value() == cfg.to_json_value());
}

TEST_CASE("the overfit fixture reaches full train accuracy") {
  ModelConfig mcfg = tiny_model(2);
  mcfg.seed = 1;
  CvsNetF model(mcfg);
  const Dataset ds = synthetic_dataset(32, 2, 12, 17);
  ParameterSet<float>& params = model.parameters();
  AdamW<float> opt(params, AdamWOptions{3e-3, 0.0});
  std::vector<double> losses;
  const Batch<float> all = [&] {
    std::vector<Index> idx(32);
    std::iota(idx.begin(), idx.end(), 0);
    return load_batch<float>(ds, idx, 12);
  }();
  int first_perfect = -1;
  for (int step = 0; step < 200; ++step) {
    params.zero_grad();
    const VarF loss = smoothed_cross_entropy(model.forward(all.images).logits,
                                             std::span<const int>(all.labels), 0.0);
    losses.push_back(loss.value().array()[0]);
    backward(loss);
    opt.step();
    if (first_perfect < 0 && evaluate(model, ds, 32).top1() == 1.0) first_perfect = step + 1;
  }
  CHECK(first_perfect > 0);
  CHECK(evaluate(model, ds, 32).top1() == 1.0);
  // medians over consecutive 50-step windows never rise
  for (std::size_t start = 50; start + 50 <= losses.size(); start += 50) {
    const std::vector<double> prev(losses.begin() + long(start) - 50, losses.begin() + long(start));
    const std::vector<double> next(losses.begin() + long(start), losses.begin() + long(start) + 50);
    CHECK(median(next) <= median(prev));
  }
  CHECK(losses.back() < losses.front());
}

TEST_CASE("training is reproducible and writes its artifacts") {
  const Dataset tr = synthetic_dataset(24, 3, 12, 2);
  const Dataset va = synthetic_dataset(9, 3, 12, 3);
  const TrainConfig cfg = quick_config();
  std::vector<std::string> logs;
  std::vector<std::vector<std::uint8_t>> ckpts;
  for (const char* run : {"run_a", "run_b"}) {
    CvsNetF model(tiny_model(3));
    const fs::path dir = scratch_dir(run);
    const TrainResult r = train(model, tr, &va, cfg, TrainOutputs{dir.string()});
    REQUIRE(r.log.size() == 2);
    CHECK(r.log[0].lr < r.log[1].lr + 1e-12);
    CHECK(r.log[0].steps == 3);
    CHECK(r.log[0].has_val);
    CHECK(r.best_epoch >= 0);
    std::ifstream in(dir / "metrics.jsonl");
    logs.emplace_back(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    CHECK(fs::exists(dir / "epoch_000.ckpt"));
    CHECK(fs::exists(dir / "best.ckpt"));
    ckpts.push_back(read_file_bytes((dir / "epoch_001.ckpt").string()));
    const CvsNetF reloaded = load_checkpoint<float>((dir / "epoch_001.ckpt").string());
    for (std::size_t i = 0; i < model.parameters().size(); ++i)
      CHECK(oracle::bitwise_equal(model.parameters()[i].var.value(),
                                  reloaded.parameters()[i].var.value()));
  }
  CHECK(logs[0] == logs[1]);
  CHECK(std::count(logs[0].begin(), logs[0].end(), '\n') == 2);
  CHECK(ckpts[0] == ckpts[1]);
  const auto line = nlohmann::json::parse(logs[0].substr(0, logs[0].find('\n')));
  for (const char* key : {"epoch", "lr", "train_loss", "train_top1", "train_top5", "val_top1", "val_top5"})
    CHECK_MESSAGE(line.contains(key), key);
}

TEST_CASE("a non-finite parameter aborts training with its name") {
  CvsNetF model(tiny_model(3));
  model.head().classifier.weight.mutable_value().array()[0] = std::nanf("");
  CHECK(first_non_finite<float>(model, nullptr) == "parameter head.classifier.weight");
  CHECK_THROWS_AS(train(model, synthetic_dataset(8, 3, 12, 1), nullptr, quick_config()),
                  NonFiniteError);
}

}  // TEST_SUITE
}  // namespace cvsnet
