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

#include "cvsnet/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>

namespace cvsnet {

namespace {

// Next whitespace-separated header token, skipping '#' comments.
std::string pnm_token(std::istream& in, const std::string& path) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  CVSNET_CHECK(!tok.empty(), IoError, "'", path, "': truncated PNM header");
  return tok;
}

Index pnm_number(std::istream& in, const std::string& path, const char* what) {
  const std::string tok = pnm_token(in, path);
  CVSNET_CHECK(!tok.empty() && std::all_of(tok.begin(), tok.end(), ::isdigit), IoError, "'", path,
               "': bad PNM ", what, " '", tok, "'");
  return std::stoll(tok);
}

}  // namespace

Image8 read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  CVSNET_CHECK(in.good(), IoError, "cannot open '", path, "'");
  const std::string magic = pnm_token(in, path);
  CVSNET_CHECK(magic == "P6" || magic == "P5", IoError, "'", path,
               "': only binary P6/P5 images are supported, got '", magic, "'");
  Image8 img;
  img.width = pnm_number(in, path, "width");
  img.height = pnm_number(in, path, "height");
  const Index maxval = pnm_number(in, path, "maxval");
  CVSNET_CHECK(img.width > 0 && img.height > 0 && maxval > 0 && maxval <= 255, IoError, "'", path,
               "': unsupported PNM geometry ", img.width, "x", img.height, " maxval ", maxval);
  const Index channels = magic == "P6" ? 3 : 1;
  const Index plane = img.width * img.height;
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(plane * channels));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  CVSNET_CHECK(in.gcount() == static_cast<std::streamsize>(raw.size()), IoError, "'", path,
               "': truncated pixel data");
  img.chw.resize(static_cast<std::size_t>(3 * plane));
  for (Index i = 0; i < plane; ++i) {
    for (Index c = 0; c < 3; ++c) {
      const Index src = channels == 3 ? i * 3 + c : i;
      std::uint32_t v = raw[src];
      if (maxval != 255) v = static_cast<std::uint32_t>((v * 255 + maxval / 2) / maxval);
      img.chw[c * plane + i] = static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

void write_ppm(const std::string& path, const Image8& image) {
  const Index plane = image.width * image.height;
  CVSNET_CHECK(plane > 0 && static_cast<Index>(image.chw.size()) == 3 * plane, ArgumentError,
               "write_ppm: image buffer does not match ", image.width, "x", image.height);
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  CVSNET_CHECK(!ec, IoError, "cannot create directory for '", path, "': ", ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  CVSNET_CHECK(out.good(), IoError, "cannot open '", path, "' for writing");
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(3 * plane));
  for (Index i = 0; i < plane; ++i) {
    for (Index c = 0; c < 3; ++c) raw[i * 3 + c] = image.chw[c * plane + i];
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  CVSNET_CHECK(out.good(), IoError, "write to '", path, "' failed");
}

Image8 read_png(const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  CVSNET_CHECK(png_image_begin_read_from_file(&png, path.c_str()) != 0, IoError, "'", path,
               "': ", png.message);
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(png));
  if (png_image_finish_read(&png, nullptr, raw.data(), 0, nullptr) == 0) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw IoError(detail::concat("'", path, "': ", msg));
  }
  Image8 img;
  img.width = png.width;
  img.height = png.height;
  const Index plane = img.width * img.height;
  img.chw.resize(static_cast<std::size_t>(3 * plane));
  for (Index i = 0; i < plane; ++i) {
    for (Index c = 0; c < 3; ++c) img.chw[c * plane + i] = raw[i * 3 + c];
  }
  return img;
}

Image8 read_image(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm" || ext == ".pnm" || ext == ".pgm") return read_pnm(path);
  throw IoError(detail::concat("'", path, "': unsupported image type '", ext, "'"));
}

template <typename Scalar>
Tensor<Scalar> image_to_tensor(const Image8& image) {
  Tensor<Scalar> t(Shape{1, 3, image.height, image.width});
  for (Index i = 0; i < t.size(); ++i) {
    t.array()[i] = static_cast<Scalar>(image.chw[i]) / Scalar(255);
  }
  return t;
}

template Tensor<float> image_to_tensor(const Image8&);
template Tensor<double> image_to_tensor(const Image8&);

}  // namespace cvsnet
