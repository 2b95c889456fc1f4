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

#include "cvsnet/lgn.hpp"
#include "cvsnet/ops.hpp"
#include "doctest.h"
#include "oracles.hpp"

namespace cvsnet {
namespace {

ChannelPartition outer_layout(Index p, Index nmp, Index m) {
  ChannelPartition part;
  part.append("P", p).append("NMP", nmp).append("M", m);
  return part;
}

LgnConfig small_lgn() {
  LgnConfig cfg;
  cfg.m_kernel = 5;
  cfg.stride = 2;
  return cfg;
}

}  // namespace

TEST_SUITE("lgn_block") {

TEST_CASE("default configuration expands channels by 2m, 2p, 2k") {
  Rng rng(1);
  const ChannelPartition part = outer_layout(16, 16, 8);
  const Lgn<float> lgn(LgnConfig{}, part, false, rng);
  const PathwayBundle<float> b = lgn(VarF(TensorF(Shape{1, 40, 56, 56})), part);
  CHECK(b.m.shape() == Shape{1, 16, 28, 28});
  CHECK(b.p.shape() == Shape{1, 64, 28, 28});
  CHECK(b.k.shape() == Shape{1, 32, 28, 28});
  CHECK((b.m.value().array() == 0.0f).all());
  CHECK((b.p.value().array() == 0.0f).all());
  CHECK((b.k.value().array() == 0.0f).all());
}

TEST_CASE("channel counts are exact multiples for every multiplier") {
  Rng rng(2);
  for (Index m = 1; m <= 3; ++m) {
    for (Index p = 1; p <= 3; ++p) {
      LgnConfig cfg = small_lgn();
      cfg.m_expand = m;
      cfg.p_expand = p;
      cfg.k_expand = 4 - p;
      const ChannelPartition part = outer_layout(4, 6, 2);
      const Lgn<float> lgn(cfg, part, false, rng);
      const PathwayBundle<float> b = lgn(VarF(TensorF(Shape{1, 12, 8, 8})), part);
      CHECK(b.m.shape().c == 2 * m * 2);
      CHECK(b.p.shape().c == 2 * p * 4);
      CHECK(b.k.shape().c == 2 * (4 - p) * 6);
    }
  }
}

TEST_CASE("P pathway equals shuffle then group-2 conv") {
  Rng rng(3);
  const ChannelPartition part = outer_layout(8, 4, 2);
  Lgn<double> lgn(small_lgn(), part, true, rng);
  const TensorD x = oracle::random_tensor<double>(Shape{2, 14, 9, 9}, 4);
  const TensorD p_in = oracle::naive_slice(x, 0, 8);
  const TensorD shuffled = oracle::naive_select(p_in, {0, 4, 1, 5, 2, 6, 3, 7});
  TensorD bias = lgn.p_conv.bias.value();
  bias.array() = oracle::random_tensor<double>(bias.shape(), 5).array();
  lgn.p_conv.bias.mutable_value() = bias;
  const TensorD ref = oracle::naive_relu(
      oracle::naive_conv(shuffled, lgn.p_conv.weight.value(), &bias, lgn.p_conv.spec));
  const PathwayBundle<double> b = lgn(VarD(x), part);
  CHECK(lgn.p_conv.spec.groups == 2);
  CHECK(oracle::max_abs_diff(b.p.value(), ref) < 1e-12);
}

TEST_CASE("K pathway splits NMP into a depthwise and an ungrouped half") {
  Rng rng(6);
  const ChannelPartition part = outer_layout(4, 6, 2);
  const Lgn<double> lgn(small_lgn(), part, false, rng);
  CHECK(lgn.k_color_conv.spec.groups == 3);
  CHECK(lgn.k_color_conv.spec.in_channels == 3);
  CHECK(lgn.k_grey_conv.spec.groups == 1);
  const TensorD x = oracle::random_tensor<double>(Shape{1, 12, 8, 8}, 7);
  const TensorD ref = oracle::naive_concat<double>(
      {oracle::naive_relu(oracle::naive_conv(oracle::naive_slice(x, 4, 3),
                                             lgn.k_color_conv.weight.value(), nullptr,
                                             lgn.k_color_conv.spec)),
       oracle::naive_relu(oracle::naive_conv(oracle::naive_slice(x, 7, 3),
                                             lgn.k_grey_conv.weight.value(), nullptr,
                                             lgn.k_grey_conv.spec))});
  CHECK(oracle::max_abs_diff(lgn(VarD(x), part).k.value(), ref) < 1e-12);
  const TensorD m_ref = oracle::naive_relu(oracle::naive_conv(
      oracle::naive_slice(x, 10, 2), lgn.m_conv.weight.value(), nullptr, lgn.m_conv.spec));
  CHECK(oracle::max_abs_diff(lgn(VarD(x), part).m.value(), m_ref) < 1e-12);
}

TEST_CASE("pathways depend only on their own input partition") {
  Rng rng(8);
  const ChannelPartition part = outer_layout(4, 4, 2);
  const Lgn<double> lgn(small_lgn(), part, false, rng);
  const TensorD x = oracle::random_tensor<double>(Shape{1, 10, 8, 8}, 9);
  struct Route {
    const char* member;
    const char* own;
  };
  for (const Route route : {Route{"m", "M"}, Route{"p", "P"}, Route{"k", "NMP"}}) {
    VarD in(x, true);
    const PathwayBundle<double> b = lgn(in, part);
    const VarD& out = route.member[0] == 'm' ? b.m : route.member[0] == 'p' ? b.p : b.k;
    backward(weighted_sum(out, oracle::random_tensor<double>(out.shape(), 10)));
    for (const ChannelRange& r : part.ranges()) {
      const TensorD g = oracle::naive_slice(in.grad(), r.begin, r.count);
      const bool zero = (g.array() == 0.0).all();
      INFO(route.member, " vs ", r.name);
      CHECK(zero == (r.name != route.own));
    }
  }
}

TEST_CASE("the shuffle is not degenerate") {
  Rng rng(11);
  const ChannelPartition part = outer_layout(8, 4, 2);
  Lgn<float> lgn(small_lgn(), part, false, rng);
  const TensorF x = oracle::random_tensor<float>(Shape{1, 14, 8, 8}, 12);
  const TensorF with = lgn(VarF(x), part).p.value();
  lgn.use_shuffle = false;
  const TensorF without = lgn(VarF(x), part).p.value();
  CHECK_FALSE(oracle::bitwise_equal(with, without));
}

TEST_CASE("lgn rejects bad partitions") {
  Rng rng(13);
  ChannelPartition missing;
  missing.append("P", 4).append("M", 2);
  CHECK_THROWS_AS(Lgn<float>(LgnConfig{}, missing, false, rng), ShapeError);
  CHECK_THROWS_AS(Lgn<float>(LgnConfig{}, outer_layout(3, 4, 2), false, rng), ShapeError);
  const ChannelPartition part = outer_layout(4, 4, 2);
  const Lgn<float> lgn(small_lgn(), part, false, rng);
  CHECK_THROWS_AS(lgn(VarF(TensorF(Shape{1, 9, 8, 8})), part), ShapeError);
  CHECK_THROWS_AS(lgn(VarF(TensorF(Shape{1, 10, 8, 8})), outer_layout(2, 6, 2)), ShapeError);
}

TEST_CASE("pathway ratio report") {
  const auto r = pathway_ratio_report(LgnConfig{}, outer_layout(16, 16, 8));
  CHECK(r.m_channels == 16);
  CHECK(r.p_channels == 64);
  CHECK(r.k_channels == 32);
  CHECK(r.p_share == doctest::Approx(64.0 / 112.0));
  CHECK_FALSE(r.near_biological);

  LgnConfig wide;
  wide.p_expand = 16;
  CHECK(pathway_ratio_report(wide, outer_layout(16, 16, 8)).p_share > 0.85);

  LgnConfig unit;
  const auto d = pathway_ratio_report(unit, outer_layout(2, 2, 1));
  CHECK(d.m_share + d.p_share + d.k_share == 1.0);
}

}  // TEST_SUITE
}  // namespace cvsnet
