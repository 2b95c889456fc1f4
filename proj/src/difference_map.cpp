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

#include "cvsnet/difference_map.hpp"

namespace cvsnet {

namespace {

void check_shift(const Shape& s, Direction d, Index k) {
  const Offset o = unit_offset(d);
  CVSNET_CHECK(k >= 1, ArgumentError, "difference_map: shift k must be positive, got ", k);
  if (o.dj != 0) {
    CVSNET_CHECK(k < s.w, ArgumentError, "difference_map: shift ", k, " must be below width ", s.w,
                 " for direction ", direction_name(d));
  }
  if (o.di != 0) {
    CVSNET_CHECK(k < s.h, ArgumentError, "difference_map: shift ", k, " must be below height ",
                 s.h, " for direction ", direction_name(d));
  }
}

// out += sign · (shift(a) − a), plane by plane.
template <typename Scalar>
void apply_difference(const Tensor<Scalar>& a, Direction d, Index k, Tensor<Scalar>& out) {
  const Shape s = a.shape();
  const Offset o = unit_offset(d);
  const Index H = s.h, W = s.w;
  const Index di = ((o.di * k) % H + H) % H;
  const Index dj = ((o.dj * k) % W + W) % W;
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      const Scalar* src = a.plane_data(n, c);
      Scalar* dst = out.plane_data(n, c);
      for (Index i = 0; i < H; ++i) {
        const Scalar* shifted_row = src + ((i + di) % H) * W;
        const Scalar* row = src + i * W;
        Scalar* out_row = dst + i * W;
        for (Index j = 0; j < W; ++j) {
          const Index jj = j + dj < W ? j + dj : j + dj - W;
          out_row[j] += shifted_row[jj] - row[j];
        }
      }
    }
  }
}

}  // namespace

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::kRight: return "right";
    case Direction::kLeft: return "left";
    case Direction::kUp: return "up";
    case Direction::kDown: return "down";
    case Direction::kUpRight: return "up_right";
    case Direction::kUpLeft: return "up_left";
    case Direction::kDownRight: return "down_right";
    case Direction::kDownLeft: return "down_left";
  }
  return "unknown";
}

template <typename Scalar>
Tensor<Scalar> difference_map(const Tensor<Scalar>& a, Direction d, Index k) {
  check_shift(a.shape(), d, k);
  Tensor<Scalar> out(a.shape());
  apply_difference(a, d, k, out);
  return out;
}

template <typename Scalar>
Var<Scalar> difference_map(const Var<Scalar>& a, Direction d, Index k) {
  Tensor<Scalar> out = difference_map(a.value(), d, k);
  return record<Scalar>("difference_map", std::move(out), {a},
                        [d, k](const Tensor<Scalar>& g, const auto&,
                               std::span<Tensor<Scalar>* const> grads) {
                          if (grads[0]) apply_difference(g, opposite(d), k, *grads[0]);
                        });
}

template Tensor<float> difference_map(const Tensor<float>&, Direction, Index);
template Tensor<double> difference_map(const Tensor<double>&, Direction, Index);
template Var<float> difference_map(const Var<float>&, Direction, Index);
template Var<double> difference_map(const Var<double>&, Direction, Index);

}  // namespace cvsnet
