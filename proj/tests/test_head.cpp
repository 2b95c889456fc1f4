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

#include "cvsnet/head.hpp"
#include "cvsnet/ops.hpp"
#include "doctest.h"
#include "oracles.hpp"

namespace cvsnet {
namespace {

using oracle::Matrix;

TensorD naive_layer_norm(const TensorD& x, const TensorD& gamma, const TensorD& beta, double eps) {
  const Shape s = x.shape();
  TensorD out(s);
  for (Index n = 0; n < s.n; ++n)
    for (Index i = 0; i < s.h; ++i)
      for (Index j = 0; j < s.w; ++j) {
        double mu = 0;
        for (Index c = 0; c < s.c; ++c) mu += x(n, c, i, j);
        mu /= double(s.c);
        double var = 0;
        for (Index c = 0; c < s.c; ++c) var += (x(n, c, i, j) - mu) * (x(n, c, i, j) - mu);
        var /= double(s.c);
        for (Index c = 0; c < s.c; ++c)
          out(n, c, i, j) =
              (x(n, c, i, j) - mu) / std::sqrt(var + eps) * gamma.array()[c] + beta.array()[c];
      }
  return out;
}

Matrix as_matrix(const TensorD& t, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows * cols; ++i) m.v[std::size_t(i)] = t.array()[i];
  return m;
}

double act(double v, Activation a) { return a == Activation::kGelu ? oracle::gelu(v) : std::tanh(v); }

/// Dense oracle: per (n, c) the token vector goes through W2 σ(W1 u + b1) + b2,
/// per (n, position) the channel vector through fc2 σ(fc1 v + b) + b.
TensorD naive_mix(const MixerBlock<double>& b, const TensorD& x) {
  const Shape s = x.shape();
  const Index t = s.plane();
  const Index th = b.spec.token_hidden;
  const Index c = s.c;
  const Index ch = b.spec.channel_hidden;
  const Matrix w1 = as_matrix(b.token_w1.value(), th, t);
  const Matrix w2 = as_matrix(b.token_w2.value(), t, th);
  const Matrix f1 = as_matrix(b.channel_fc1.weight.value(), ch, c);
  const Matrix f2 = as_matrix(b.channel_fc2.weight.value(), c, ch);
  const TensorD ln1 = naive_layer_norm(x, b.token_norm_gamma.value(), b.token_norm_beta.value(), 1e-5);
  TensorD y = x;
  for (Index n = 0; n < s.n; ++n)
    for (Index ci = 0; ci < c; ++ci) {
      Matrix u(t, 1);
      for (Index p = 0; p < t; ++p) u(p, 0) = ln1(n, ci, p / s.w, p % s.w);
      Matrix h = matmul(w1, u);
      for (Index k = 0; k < th; ++k) h(k, 0) = act(h(k, 0) + b.token_b1.value().array()[k], b.spec.activation);
      const Matrix o = matmul(w2, h);
      for (Index p = 0; p < t; ++p) y(n, ci, p / s.w, p % s.w) += o(p, 0) + b.token_b2.value().array()[p];
    }
  const TensorD ln2 = naive_layer_norm(y, b.channel_norm_gamma.value(), b.channel_norm_beta.value(), 1e-5);
  TensorD out = y;
  for (Index n = 0; n < s.n; ++n)
    for (Index p = 0; p < t; ++p) {
      Matrix v(c, 1);
      for (Index ci = 0; ci < c; ++ci) v(ci, 0) = ln2(n, ci, p / s.w, p % s.w);
      Matrix h = matmul(f1, v);
      for (Index k = 0; k < ch; ++k)
        h(k, 0) = act(h(k, 0) + b.channel_fc1.bias.value().array()[k], b.spec.activation);
      const Matrix o = matmul(f2, h);
      for (Index ci = 0; ci < c; ++ci)
        out(n, ci, p / s.w, p % s.w) += o(ci, 0) + b.channel_fc2.bias.value().array()[ci];
    }
  return out;
}

template <typename S>
StriateOutputs<S> random_outputs(Index n, Index c, Index side, std::uint64_t seed) {
  auto r = [&](std::uint64_t k) { return Var<S>(oracle::random_tensor<S>(Shape{n, c, side, side}, seed + k, 0, 2)); };
  return {r(0), r(1), r(2), r(3), r(4), r(5)};
}

template <typename S>
StriateOutputs<S> batch_select(const StriateOutputs<S>& s, const std::vector<Index>& rows) {
  auto pick = [&](const Var<S>& v) {
    const Shape sh = v.shape();
    Tensor<S> out(Shape{Index(rows.size()), sh.c, sh.h, sh.w});
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (Index c = 0; c < sh.c; ++c) out.plane(Index(r), c) = v.value().plane(rows[r], c);
    return Var<S>(std::move(out));
  };
  return {pick(s.m_orient), pick(s.m_direction), pick(s.pib_orient),
          pick(s.pib_direction), pick(s.blob_direction), pick(s.blob_conv)};
}

HeadConfig small_head(Index classes) {
  HeadConfig cfg;
  cfg.classes = classes;
  return cfg;
}

}  // namespace

TEST_SUITE("abstract_head") {

TEST_CASE("mixer geometry follows the expansion factors") {
  const MixerBlockSpec s = HeadConfig{}.mixer_spec(49, 16);
  CHECK(s.token_hidden == 25);
  CHECK(s.channel_hidden == 32);
  CHECK(HeadConfig{}.mixer_spec(1, 3).token_hidden == 1);
  HeadConfig bad;
  bad.classes = 0;
  CHECK_THROWS_AS(bad.validate(), ShapeError);
  CHECK(parse_activation("tanh") == Activation::kTanh);
  CHECK_THROWS_AS(parse_activation("relu"), ArgumentError);
}

TEST_CASE("a mixer with zeroed output projections is the identity") {
  Rng rng(1);
  MixerBlock<double> block(HeadConfig{}.mixer_spec(12, 5), 1e-5, rng);
  block.zero_output_projections();
  const TensorD x = oracle::random_tensor<double>(Shape{2, 5, 3, 4}, 2);
  CHECK(oracle::bitwise_equal(group_mix(block, VarD(x)).value(), x));
}

TEST_CASE("group mixing preserves shape and matches the dense oracle") {
  for (Activation a : {Activation::kGelu, Activation::kTanh}) {
    Rng rng(3);
    HeadConfig cfg;
    cfg.activation = a;
    const MixerBlock<double> block(cfg.mixer_spec(20, 6), 1e-5, rng);
    const TensorD x = oracle::random_tensor<double>(Shape{2, 6, 4, 5}, 4, -2, 2);
    const VarD y = group_mix(block, VarD(x));
    CHECK(y.shape() == x.shape());
    CHECK(oracle::max_abs_diff(y.value(), naive_mix(block, x)) < 1e-10);
  }
  Rng rng(5);
  const MixerBlock<float> block(HeadConfig{}.mixer_spec(20, 6), 1e-5, rng);
  CHECK_THROWS_AS(group_mix(block, VarF(TensorF(Shape{1, 6, 4, 4}))), ShapeError);
  CHECK_THROWS_AS(group_mix(block, VarF(TensorF(Shape{1, 5, 4, 5}))), ShapeError);
}

TEST_CASE("halving six groups of sixteen gives forty-eight channels") {
  Rng rng(6);
  std::vector<Conv2d<float>> halvers;
  std::vector<VarF> groups;
  for (int g = 0; g < 6; ++g) {
    halvers.push_back(pointwise_linear<float>(16, halved_channels(16), true, rng));
    groups.emplace_back(oracle::random_tensor<float>(Shape{2, 16, 7, 7}, 7 + g));
  }
  const VarF out = halve_and_concat(std::span<const Conv2d<float>>(halvers), std::span<const VarF>(groups));
  CHECK(out.shape() == Shape{2, 48, 7, 7});
  CHECK(halved_channels(1) == 1);
  CHECK(halved_channels(7) == 3);

  groups[2] = VarF(TensorF(Shape{2, 16, 6, 7}));
  CHECK_THROWS_AS(
      halve_and_concat(std::span<const Conv2d<float>>(halvers), std::span<const VarF>(groups)),
      ShapeError);
}

TEST_CASE("halving selects a known half when built to") {
  // each halver picks the even channels of its group
  std::vector<Conv2d<double>> halvers;
  std::vector<VarD> groups;
  for (int g = 0; g < 6; ++g) {
    Conv2d<double> h;
    h.spec = ConvSpec{4, 2, 1, 1, 1, 0, 0, 1, false};
    TensorD w(h.spec.weight_shape());
    w(0, 0, 0, 0) = 1;
    w(1, 2, 0, 0) = 1;
    h.weight = VarD(w);
    halvers.push_back(h);
    groups.emplace_back(oracle::random_tensor<double>(Shape{1, 4, 3, 3}, 20 + g));
  }
  const VarD out = halve_and_concat(std::span<const Conv2d<double>>(halvers), std::span<const VarD>(groups));
  std::vector<TensorD> expected;
  for (const VarD& g : groups) expected.push_back(oracle::naive_select(g.value(), {0, 2}));
  CHECK(oracle::bitwise_equal(out.value(), oracle::naive_concat(expected)));

  std::vector<VarD> zeros(6, VarD(TensorD(Shape{1, 4, 3, 3})));
  CHECK((halve_and_concat(std::span<const Conv2d<double>>(halvers), std::span<const VarD>(zeros))
             .value()
             .array() == 0.0)
            .all());
}

TEST_CASE("head logits match the composed oracle") {
  Rng rng(30);
  const AbstractHead<double> head(small_head(7), {4, 4, 6, 6, 2, 2}, 9, rng);
  CHECK(head.total_channels() == 12);
  const StriateOutputs<double> s = random_outputs<double>(2, 4, 3, 31);
  // groups are fed individually so the channel counts can differ
  StriateOutputs<double> in = s;
  in.pib_orient = VarD(oracle::random_tensor<double>(Shape{2, 6, 3, 3}, 40, 0, 2));
  in.pib_direction = VarD(oracle::random_tensor<double>(Shape{2, 6, 3, 3}, 41, 0, 2));
  in.blob_direction = VarD(oracle::random_tensor<double>(Shape{2, 2, 3, 3}, 42, 0, 2));
  in.blob_conv = VarD(oracle::random_tensor<double>(Shape{2, 2, 3, 3}, 43, 0, 2));

  std::vector<TensorD> halves;
  const auto groups = in.as_array();
  for (std::size_t g = 0; g < 6; ++g) {
    const TensorD mixed = naive_mix(head.group_mixers[g], groups[g].value());
    const TensorD hb = head.halvers[g].bias.value();
    halves.push_back(oracle::naive_conv(mixed, head.halvers[g].weight.value(), &hb, head.halvers[g].spec));
  }
  TensorD total = naive_mix(head.global_mixer, oracle::naive_concat(halves));
  total = naive_layer_norm(total, head.final_norm_gamma.value(), head.final_norm_beta.value(), 1e-5);
  TensorD pooled(Shape{2, 12, 1, 1});
  for (Index n = 0; n < 2; ++n)
    for (Index c = 0; c < 12; ++c) pooled(n, c, 0, 0) = total.plane(n, c).sum() / 9.0;
  const TensorD cb = head.classifier.bias.value();
  const TensorD ref = oracle::naive_conv(pooled, head.classifier.weight.value(), &cb, head.classifier.spec);

  const VarD logits = head(in);
  CHECK(logits.shape() == Shape{2, 7, 1, 1});
  CHECK(oracle::max_abs_diff(logits.value(), ref) < 1e-10);

  in.blob_conv = VarD();
  CHECK_THROWS_AS(head(in), ShapeError);
}

TEST_CASE("head is equivariant to batch permutation") {
  Rng rng(50);
  const AbstractHead<float> head(small_head(10), {8, 8, 8, 8, 8, 8}, 16, rng);
  const StriateOutputs<float> s = random_outputs<float>(4, 8, 4, 51);
  const TensorF full = head(s).value();
  CHECK(full.shape() == Shape{4, 10, 1, 1});
  const std::vector<Index> perm{2, 0, 3, 1};
  const TensorF permuted = head(batch_select(s, perm)).value();
  for (std::size_t r = 0; r < perm.size(); ++r) {
    for (Index k = 0; k < 10; ++k) {
      CHECK(std::abs(permuted(Index(r), k, 0, 0) - full(perm[r], k, 0, 0)) < 1e-6);
    }
  }
  const TensorF single = head(batch_select(s, {3})).value();
  for (Index k = 0; k < 10; ++k) CHECK(std::abs(single(0, k, 0, 0) - full(3, k, 0, 0)) < 1e-6);
}

TEST_CASE("every head parameter receives gradient") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const AbstractHead<double> head(small_head(5), {4, 4, 4, 4, 4, 4}, 4, rng);
    ParameterSet<double> params;
    head.collect(params, "head");
    params.zero_grad();
    const StriateOutputs<double> s = random_outputs<double>(3, 4, 2, 100 + seed);
    const std::vector<int> labels{0, 3, 1};
    backward(smoothed_cross_entropy(head(s), std::span<const int>(labels), 0.1));
    for (const auto& p : params) {
      INFO(p.name, " seed ", seed);
      CHECK(p.var.has_grad());
      CHECK((p.var.grad().array() != 0.0).any());
      CHECK(p.var.grad().array().isFinite().all());
    }
  }
}

}  // TEST_SUITE
}  // namespace cvsnet
