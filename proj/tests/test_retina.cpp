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

#include "cvsnet/ops.hpp"
#include "cvsnet/retina.hpp"
#include "doctest.h"
#include "oracles.hpp"

namespace cvsnet {
namespace {

// Values k/64 so every sum and product below is exact in double.
TensorD dyadic_tensor(const Shape& shape, std::uint64_t seed, int lo = -64, int hi = 64) {
  Rng rng(seed);
  TensorD t(shape);
  for (Index i = 0; i < t.size(); ++i) {
    t.array()[i] = static_cast<double>(lo + static_cast<int>(rng.below(hi - lo + 1))) / 64.0;
  }
  return t;
}

// Copies `small` (k×k) into the centre of every (big×big) kernel plane.
void embed_centered(const TensorD& small, TensorD& big) {
  big.set_zero();
  const Index off = (big.shape().h - small.shape().h) / 2;
  for (Index o = 0; o < big.shape().n; ++o)
    for (Index c = 0; c < big.shape().c; ++c)
      for (Index i = 0; i < small.shape().h; ++i)
        for (Index j = 0; j < small.shape().w; ++j)
          big(o, c, i + off, j + off) = small(o, c, i, j);
}

// Interior: output pixels whose receptive field of size `k` never reaches padding.
bool interior_is_zero(const TensorD& t, Index k, Index stride, Index in_size) {
  const Index pad = (k - 1) / 2;
  for (Index n = 0; n < t.shape().n; ++n)
    for (Index c = 0; c < t.shape().c; ++c)
      for (Index i = 0; i < t.shape().h; ++i)
        for (Index j = 0; j < t.shape().w; ++j) {
          const Index y0 = i * stride - pad, x0 = j * stride - pad;
          if (y0 < 0 || x0 < 0 || y0 + k > in_size || x0 + k > in_size) continue;
          if (t(n, c, i, j) != 0.0) return false;
        }
  return true;
}

bool has_normalization(const std::vector<std::string>& ops) {
  for (const auto& op : ops) {
    if (op.find("norm") != std::string::npos) return true;
  }
  return false;
}

RetinaConfig small_retina() {
  RetinaConfig cfg;
  cfg.units_per_cell_type = 2;
  cfg.inner_stride = 1;
  cfg.outer_stride = 2;
  return cfg;
}

}  // namespace

TEST_SUITE("retina_blocks") {

TEST_CASE("to_grey sums the three planes") {
  TensorD px(Shape{1, 3, 1, 1});
  px.array() << 0.1, 0.2, 0.3;
  CHECK(to_grey(VarD(px)).value().array()[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK((to_grey(VarD(TensorD(Shape{2, 3, 4, 4}))).value().array() == 0.0).all());

  const TensorD x = oracle::random_tensor<double>(Shape{2, 3, 5, 6}, 1, 0, 1);
  const TensorD g = to_grey(VarD(x)).value();
  CHECK(g.shape() == Shape{2, 1, 5, 6});
  for (Index n = 0; n < 2; ++n)
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 6; ++j) CHECK(g(n, 0, i, j) == x(n, 0, i, j) + x(n, 1, i, j) + x(n, 2, i, j));
  CHECK_THROWS_AS(to_grey(VarD(TensorD(Shape{1, 4, 2, 2}))), ShapeError);
}

TEST_CASE("to_yellow sums red and green") {
  TensorD px(Shape{1, 3, 1, 1});
  px.array() << 0.2, 0.4, 0.9;
  CHECK(to_yellow(VarD(px)).value().array()[0] == doctest::Approx(0.6).epsilon(1e-15));
  TensorD blue(Shape{1, 3, 3, 3});
  blue.plane(0, 2).setConstant(1.0);
  CHECK((to_yellow(VarD(blue)).value().array() == 0.0).all());

  const TensorD x = oracle::random_tensor<double>(Shape{1, 3, 4, 4}, 2, 0, 1);
  const TensorD y = to_yellow(VarD(x)).value();
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) CHECK(y(0, 0, i, j) == x(0, 0, i, j) + x(0, 1, i, j));
  CHECK_THROWS_AS(to_yellow(VarD(TensorD(Shape{1, 1, 2, 2}))), ShapeError);
}

TEST_CASE("balanced center-surround nulls a uniform input") {
  Rng rng(3);
  CenterSurround<double> cs(1, 1, 1, 3, 7, 1, {1.0}, {-1.0}, rng);
  cs.test_linear = true;
  cs.center.weight.mutable_value().array().setConstant(1.0);  // sum 9
  TensorD& sw = cs.surround.weight.mutable_value();
  sw.set_zero();
  for (Index i = 0; i < 7; ++i)
    for (Index j = 0; j < 7; ++j)
      if (i == 0 || j == 0 || i == 6 || j == 6) sw(0, 0, i, j) = 0.375;  // 24 · 0.375 = 9
  const TensorD x = TensorD::constant(Shape{1, 1, 12, 12}, 0.5);
  const TensorD y = cs(VarD(x)).value();
  CHECK(interior_is_zero(y, 7, 1, 12));
  CHECK(y(0, 0, 0, 0) != 0.0);  // the border sees padding
}

TEST_CASE("balanced center-surround rejects an additive offset") {
  Rng rng(4);
  CenterSurround<double> cs(1, 1, 1, 3, 7, 1, {2.0}, {-0.5}, rng);
  cs.test_linear = true;
  // 2 · sum(center) = 0.5 · sum(surround)
  cs.center.weight.mutable_value().array().setConstant(0.25);    // sum 2.25
  TensorD& sw = cs.surround.weight.mutable_value();
  sw.set_zero();
  sw(0, 0, 0, 0) = 4.5;
  sw(0, 0, 6, 6) = 4.5;  // sum 9
  const TensorD x = dyadic_tensor(Shape{1, 1, 11, 11}, 5);
  TensorD shifted(x.shape(), x.array() + 0.75);
  const TensorD a = cs(VarD(x)).value();
  const TensorD b = cs(VarD(shifted)).value();
  TensorD diff(a.shape(), b.array() - a.array());
  CHECK(interior_is_zero(diff, 7, 1, 11));
}

TEST_CASE("center-surround zero input and compositional oracle") {
  Rng rng(6);
  CenterSurround<double> cs(2, 4, 2, 3, 7, 2, {1.0, 1.0, -0.3, -0.3}, {-0.3, -0.3, 1.0, 1.0}, rng);
  CHECK((cs(VarD(TensorD(Shape{1, 2, 9, 9}))).value().array() == 0.0).all());

  const TensorD x = oracle::random_tensor<double>(Shape{2, 2, 9, 9}, 7);
  const TensorD c = oracle::naive_conv(x, cs.center.weight.value(), nullptr, cs.center.spec);
  const TensorD s = oracle::naive_conv(x, cs.surround.weight.value(), nullptr, cs.surround.spec);
  const TensorD ref = oracle::naive_add(oracle::naive_scaled_relu(c, {1, 1, -0.3, -0.3}),
                                        oracle::naive_scaled_relu(s, {-0.3, -0.3, 1, 1}));
  CHECK(oracle::max_abs_diff(cs(VarD(x)).value(), ref) < 1e-12);
}

TEST_CASE("center-surround invariants are enforced") {
  Rng rng(8);
  CHECK_THROWS_AS(CenterSurround<double>(1, 1, 1, 3, 3, 1, {1.0}, {-1.0}, rng), ShapeError);
  CHECK_THROWS_AS(CenterSurround<double>(1, 1, 1, 3, 7, 1, {1.0}, {1.0}, rng), ShapeError);
  CHECK_THROWS_AS(CenterSurround<double>(1, 2, 1, 3, 7, 1, {1.0}, {-1.0}, rng), ShapeError);
}

TEST_CASE("inner plexiform default geometry") {
  Rng rng(9);
  InnerPlexiform<float> inner(RetinaConfig{}, rng);
  const VarF y = inner(VarF(TensorF(Shape{1, 3, 224, 224})));
  CHECK(y.shape() == Shape{1, 32, 112, 112});
  CHECK((y.value().array() == 0.0f).all());
  const ChannelPartition p = inner.partition();
  CHECK(p.total() == 32);
  CHECK(p.at("grey").begin == 24);
  CHECK_THROWS_AS(inner(VarF(TensorF(Shape{1, 1, 8, 8}))), ShapeError);
}

TEST_CASE("swapping red and green leaves blue and grey channels untouched") {
  Rng rng(10);
  InnerPlexiform<float> inner(small_retina(), rng);
  const TensorF x = oracle::random_tensor<float>(Shape{1, 3, 10, 10}, 11, 0, 1);
  TensorF swapped = x;
  swapped.plane(0, 0) = x.plane(0, 1);
  swapped.plane(0, 1) = x.plane(0, 0);
  const TensorF a = inner(VarF(x)).value();
  const TensorF b = inner(VarF(swapped)).value();
  const ChannelPartition p = inner.partition();
  for (const char* group : {"B", "grey"}) {
    const ChannelRange r = p.at(group);
    CHECK(oracle::bitwise_equal(oracle::naive_slice(a, r.begin, r.count),
                                oracle::naive_slice(b, r.begin, r.count)));
  }
  const ChannelRange r = p.at("R");
  CHECK_FALSE(oracle::bitwise_equal(oracle::naive_slice(a, r.begin, r.count),
                                    oracle::naive_slice(b, r.begin, r.count)));
}

TEST_CASE("inner plexiform keeps colour planes isolated") {
  Rng rng(12);
  InnerPlexiform<double> inner(small_retina(), rng);
  const ChannelPartition p = inner.partition();
  const TensorD x = oracle::random_tensor<double>(Shape{1, 3, 8, 8}, 13, 0, 1);
  const char* groups[] = {"R", "G", "B"};
  for (Index plane = 0; plane < 3; ++plane) {
    const ChannelRange r = p.at(groups[plane]);
    for (Index c = r.begin; c < r.begin + r.count; ++c) {
      VarD in(x, true);
      const VarD y = inner(in);
      TensorD onehot(y.shape());
      for (Index i = 0; i < y.shape().plane(); ++i) onehot.plane_data(0, c)[i] = 1.0;
      backward(weighted_sum(y, onehot));
      for (Index other = 0; other < 3; ++other) {
        const bool zero = (in.grad().plane(0, other).array() == 0.0).all();
        if (other == plane) {
          CHECK_FALSE(zero);
        } else {
          CHECK(zero);
        }
      }
    }
  }
}

TEST_CASE("plexiform graphs contain no normalization node") {
  Rng rng(14);
  InnerPlexiform<float> inner(RetinaConfig{}, rng);
  OuterPlexiform<float> outer(RetinaConfig{}, rng);
  const VarF x(oracle::random_tensor<float>(Shape{1, 3, 32, 32}, 15, 0, 1));
  const VarF a = inner(x);
  const ChannelPartition p = inner.partition();
  const VarF b = outer(slice_channels(a, 0, p.at("grey").begin), slice_channels(a, p.at("grey").begin, p.at("grey").count));
  const auto inner_ops = graph_ops(a);
  const auto outer_ops = graph_ops(b);
  CHECK(inner_ops.size() > 5);
  CHECK(outer_ops.size() > inner_ops.size());
  CHECK_FALSE(has_normalization(inner_ops));
  CHECK_FALSE(has_normalization(outer_ops));
}

TEST_CASE("light-giving branches keep their polarity") {
  Rng rng(16);
  InnerPlexiform<double> inner(small_retina(), rng);
  const TensorD x = oracle::random_tensor<double>(Shape{1, 3, 9, 9}, 17, 0, 1);
  const CenterSurround<double>& cs = inner.color;
  const VarD c = scaled_relu(cs.center(VarD(x)), std::span<const double>(cs.center_gains));
  const VarD s = scaled_relu(cs.surround(VarD(x)), std::span<const double>(cs.surround_gains));
  const Index units = inner.cfg.units_per_cell_type;
  for (Index plane = 0; plane < 3; ++plane) {
    for (Index u = 0; u < units; ++u) {
      const Index giving = plane * 2 * units + u;
      const Index extracting = giving + units;
      CHECK((c.value().plane(0, giving).array() >= 0.0).all());
      CHECK((s.value().plane(0, giving).array() <= 0.0).all());
      CHECK((c.value().plane(0, extracting).array() <= 0.0).all());
      CHECK((s.value().plane(0, extracting).array() >= 0.0).all());
    }
  }
}

TEST_CASE("opponent unit nulls equal opponents") {
  Rng rng(18);
  OpponentUnit<double> unit(ColorPlane::kR, ColorPlane::kG, RetinaConfig{}, rng);
  unit.cells.test_linear = true;
  unit.cells.surround_gains = {-1.0};
  const TensorD k = dyadic_tensor(Shape{1, 1, 3, 3}, 19);
  unit.cells.center.weight.mutable_value() = k;
  embed_centered(k, unit.cells.surround.weight.mutable_value());
  TensorD x = dyadic_tensor(Shape{2, 3, 10, 10}, 20, 0, 64);
  for (Index n = 0; n < 2; ++n) x.plane(n, 1) = x.plane(n, 0);
  CHECK(interior_is_zero(opponent_forward(unit, VarD(x)).value(), 7, 1, 10));

  // with the default inhibitory gain, a surround of centre/0.3 balances up to rounding
  OpponentUnit<double> damped(ColorPlane::kR, ColorPlane::kG, RetinaConfig{}, rng);
  damped.cells.test_linear = true;
  damped.cells.center.weight.mutable_value() = k;
  embed_centered(k, damped.cells.surround.weight.mutable_value());
  damped.cells.surround.weight.mutable_value().array() /= 0.3;
  CHECK(opponent_forward(damped, VarD(x)).value().array().abs().maxCoeff() < 1e-12);
}

TEST_CASE("opponent unit on pure red is a positive constant inside") {
  Rng rng(21);
  OpponentUnit<double> unit(ColorPlane::kR, ColorPlane::kG, RetinaConfig{}, rng);
  unit.cells.test_linear = true;
  unit.cells.center.weight.mutable_value().array() =
      unit.cells.center.weight.value().array().abs() + 0.01;
  TensorD red(Shape{1, 3, 12, 12});
  red.plane(0, 0).setConstant(1.0);
  const TensorD y = opponent_forward(unit, VarD(red)).value();
  const double inside = y(0, 0, 5, 5);
  CHECK(inside > 0.0);
  for (Index i = 3; i < 9; ++i)
    for (Index j = 3; j < 9; ++j) CHECK(y(0, 0, i, j) == doctest::Approx(inside).epsilon(1e-12));
}

TEST_CASE("opponent unit matches the compositional oracle") {
  Rng rng(22);
  for (auto [plus, minus] : {std::pair{ColorPlane::kR, ColorPlane::kG},
                             std::pair{ColorPlane::kB, ColorPlane::kY}}) {
    OpponentUnit<double> unit(plus, minus, RetinaConfig{}, rng);
    const TensorD x = oracle::random_tensor<double>(Shape{1, 3, 9, 9}, 23, 0, 1);
    auto plane = [&](ColorPlane p) {
      if (p == ColorPlane::kY) {
        return oracle::naive_add(oracle::naive_slice(x, 0, 1), oracle::naive_slice(x, 1, 1));
      }
      return oracle::naive_slice(x, static_cast<Index>(p), 1);
    };
    const TensorD c =
        oracle::naive_conv(plane(plus), unit.cells.center.weight.value(), nullptr, unit.cells.center.spec);
    const TensorD s = oracle::naive_conv(plane(minus), unit.cells.surround.weight.value(), nullptr,
                                         unit.cells.surround.spec);
    const TensorD ref =
        oracle::naive_add(oracle::naive_scaled_relu(c, {1.0}), oracle::naive_scaled_relu(s, {-0.3}));
    CHECK(oracle::max_abs_diff(opponent_forward(unit, VarD(x)).value(), ref) < 1e-12);
  }
  CHECK_THROWS_AS(OpponentUnit<double>(ColorPlane::kR, ColorPlane::kR, RetinaConfig{}, rng),
                  ArgumentError);
}

TEST_CASE("outer plexiform default geometry and zero case") {
  Rng rng(24);
  OuterPlexiform<float> outer(RetinaConfig{}, rng);
  const VarF y = outer(VarF(TensorF(Shape{1, 24, 112, 112})), VarF(TensorF(Shape{1, 8, 112, 112})));
  CHECK(y.shape() == Shape{1, 40, 56, 56});
  CHECK((y.value().array() == 0.0f).all());
  const ChannelPartition p = outer.partition();
  CHECK(p.at("P").count == 16);
  CHECK(p.at("NMP").count == 16);
  CHECK(p.at("M").count == 8);
  CHECK_THROWS_AS(outer(VarF(TensorF(Shape{1, 20, 8, 8})), VarF(TensorF(Shape{1, 8, 8, 8}))),
                  ShapeError);
  CHECK_THROWS_AS(outer(VarF(TensorF(Shape{1, 24, 8, 8})), VarF(TensorF(Shape{1, 8, 4, 4}))),
                  ShapeError);
}

TEST_CASE("P cells null identical red- and green-derived channels") {
  Rng rng(25);
  const RetinaConfig cfg = small_retina();
  OuterPlexiform<double> outer(cfg, rng);
  outer.p_cells.test_linear = true;
  for (auto& g : outer.p_cells.surround_gains) g = -1.0;
  const TensorD k = dyadic_tensor(outer.p_cells.center.weight.shape(), 26);
  outer.p_cells.center.weight.mutable_value() = k;
  embed_centered(k, outer.p_cells.surround.weight.mutable_value());

  const Index per = 2 * cfg.units_per_cell_type;
  TensorD rgb = dyadic_tensor(Shape{1, 3 * per, 12, 12}, 27, 0, 64);
  for (Index c = 0; c < per; ++c) rgb.plane(0, per + c) = rgb.plane(0, c);
  const TensorD grey = dyadic_tensor(Shape{1, per, 12, 12}, 28, 0, 64);
  const TensorD y = outer(VarD(rgb), VarD(grey)).value();
  const ChannelRange P = outer.partition().at("P");
  CHECK(interior_is_zero(oracle::naive_slice(y, P.begin, P.count), 7, cfg.outer_stride, 12));
  const ChannelRange M = outer.partition().at("M");
  CHECK(oracle::naive_slice(y, M.begin, M.count).array().abs().maxCoeff() > 0.0);
}

TEST_CASE("P cells pair red and green units of the same polarity and index") {
  Rng rng(29);
  OuterPlexiform<double> outer(small_retina(), rng);
  const auto plus = outer.p_plus_indices();
  const auto minus = outer.p_minus_indices();
  const Index per = 4;
  REQUIRE(plus.size() == 2 * per);
  for (Index i = 0; i < per; ++i) {
    CHECK(plus[i] == i);
    CHECK(minus[i] == per + i);
    CHECK(plus[per + i] == per + i);
    CHECK(minus[per + i] == i);
  }
}

}  // TEST_SUITE
}  // namespace cvsnet
