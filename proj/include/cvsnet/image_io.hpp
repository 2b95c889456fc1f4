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

#ifndef CVSNET_IMAGE_IO_HPP_
#define CVSNET_IMAGE_IO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "cvsnet/tensor.hpp"

namespace cvsnet {

/// 8-bit RGB image stored planar (channel, row, column).
struct Image8 {
  Index height = 0;
  Index width = 0;
  std::vector<std::uint8_t> chw;

  std::uint8_t at(Index c, Index y, Index x) const { return chw[(c * height + y) * width + x]; }
  friend bool operator==(const Image8&, const Image8&) = default;
};

/// Binary P6 (RGB) or P5 (grey, replicated to RGB), maxval ≤ 255.
Image8 read_pnm(const std::string& path);
/// Binary P6 with maxval 255.
void write_ppm(const std::string& path, const Image8& image);
Image8 read_png(const std::string& path);
/// Dispatches on the extension (.png, .ppm, .pnm, .pgm).
Image8 read_image(const std::string& path);

/// (1, 3, h, w) tensor with values v / 255.
template <typename Scalar>
Tensor<Scalar> image_to_tensor(const Image8& image);

}  // namespace cvsnet

#endif  // CVSNET_IMAGE_IO_HPP_
