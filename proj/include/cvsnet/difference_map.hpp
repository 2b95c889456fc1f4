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

#ifndef CVSNET_DIFFERENCE_MAP_HPP_
#define CVSNET_DIFFERENCE_MAP_HPP_

#include <array>
#include <string_view>

#include "cvsnet/autograd.hpp"

namespace cvsnet {

enum class Direction { kRight, kLeft, kUp, kDown, kUpRight, kUpLeft, kDownRight, kDownLeft };

inline constexpr std::array<Direction, 8> kComplexDirections = {
    Direction::kRight,   Direction::kLeft,     Direction::kUp,        Direction::kDown,
    Direction::kUpRight, Direction::kUpLeft,   Direction::kDownRight, Direction::kDownLeft};
inline constexpr std::array<Direction, 4> kSimpleDirections = {Direction::kRight, Direction::kLeft,
                                                               Direction::kUp, Direction::kDown};

/// Unit (row, col) step of a direction; rows grow downwards.
struct Offset {
  int di;
  int dj;
};
constexpr Offset unit_offset(Direction d) {
  switch (d) {
    case Direction::kRight: return {0, 1};
    case Direction::kLeft: return {0, -1};
    case Direction::kUp: return {-1, 0};
    case Direction::kDown: return {1, 0};
    case Direction::kUpRight: return {-1, 1};
    case Direction::kUpLeft: return {-1, -1};
    case Direction::kDownRight: return {1, 1};
    case Direction::kDownLeft: return {1, -1};
  }
  return {0, 0};
}

constexpr Direction opposite(Direction d) {
  switch (d) {
    case Direction::kRight: return Direction::kLeft;
    case Direction::kLeft: return Direction::kRight;
    case Direction::kUp: return Direction::kDown;
    case Direction::kDown: return Direction::kUp;
    case Direction::kUpRight: return Direction::kDownLeft;
    case Direction::kUpLeft: return Direction::kDownRight;
    case Direction::kDownRight: return Direction::kUpLeft;
    case Direction::kDownLeft: return Direction::kUpRight;
  }
  return d;
}

std::string_view direction_name(Direction d);

/// Cyclic shift-and-subtract on every plane:
///   out[i][j] = a[(i + k·di) mod H][(j + k·dj) mod W] − a[i][j].
/// Requires 1 ≤ k < W when the direction moves horizontally and 1 ≤ k < H
/// when it moves vertically. The adjoint is the opposite-direction shift minus
/// identity, which is what backward applies.
template <typename Scalar>
Var<Scalar> difference_map(const Var<Scalar>& a, Direction d, Index k = 1);

/// Forward only, on a raw tensor.
template <typename Scalar>
Tensor<Scalar> difference_map(const Tensor<Scalar>& a, Direction d, Index k = 1);

}  // namespace cvsnet

#endif  // CVSNET_DIFFERENCE_MAP_HPP_
