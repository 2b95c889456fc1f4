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

#include "cvsnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "cvsnet/checkpoint.hpp"

namespace cvsnet {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;
constexpr std::array<const char*, 10> kCifarClasses = {
    "airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship", "truck"};

template <typename Scalar>
void pad_crop_flip(const Image8& img, Index r, const AugmentOptions& opts, Rng& rng, Scalar* dst) {
  const Index pad = opts.crop_padding;
  const Index dy = pad > 0 ? static_cast<Index>(rng.below(2 * pad + 1)) - pad : 0;
  const Index dx = pad > 0 ? static_cast<Index>(rng.below(2 * pad + 1)) - pad : 0;
  const bool flip = rng.bernoulli(opts.flip_probability);
  for (Index c = 0; c < 3; ++c) {
    for (Index y = 0; y < r; ++y) {
      for (Index x = 0; x < r; ++x) {
        const Index sy = y + dy;
        const Index sx0 = x + dx;
        const Index sx = flip ? (r - 1 - x) + dx : sx0;
        Scalar v = 0;
        if (sy >= 0 && sy < img.height && sx >= 0 && sx < img.width) {
          v = static_cast<Scalar>(img.at(c, sy, sx)) / Scalar(255);
        }
        dst[(c * r + y) * r + x] = v;
      }
    }
  }
}

template <typename Scalar>
void random_resized_crop(const Image8& img, Index r, const AugmentOptions& opts, Rng& rng,
                         Scalar* dst) {
  const double area = static_cast<double>(img.height * img.width);
  double ch = img.height, cw = img.width, y0 = 0, x0 = 0;
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * rng.uniform(opts.min_area, 1.0);
    const double ratio = std::exp(rng.uniform(-opts.max_log_aspect, opts.max_log_aspect));
    const double w = std::sqrt(target * ratio);
    const double h = std::sqrt(target / ratio);
    if (w <= img.width && h <= img.height) {
      cw = w;
      ch = h;
      y0 = rng.uniform(0.0, img.height - h);
      x0 = rng.uniform(0.0, img.width - w);
      break;
    }
  }
  const bool flip = rng.bernoulli(opts.flip_probability);
  resize_crop(img, y0, x0, ch, cw, r, dst);
  if (flip) {
    for (Index c = 0; c < 3; ++c) {
      for (Index y = 0; y < r; ++y) std::reverse(dst + (c * r + y) * r, dst + (c * r + y + 1) * r);
    }
  }
}

}  // namespace

DatasetKind parse_dataset_kind(const std::string& s) {
  if (s == "cifar10_binary" || s == "cifar10") return DatasetKind::kCifar10Binary;
  if (s == "image_folder") return DatasetKind::kImageFolder;
  throw ArgumentError("unknown dataset kind '" + s + "' (expected cifar10_binary or image_folder)");
}

const char* dataset_kind_name(DatasetKind k) {
  return k == DatasetKind::kCifar10Binary ? "cifar10_binary" : "image_folder";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val" || s == "test") return Split::kVal;
  throw ArgumentError("unknown split '" + s + "' (expected train or val)");
}

const char* split_name(Split s) { return s == Split::kTrain ? "train" : "val"; }

Dataset Dataset::head(Index n) const {
  Dataset d;
  d.kind = kind;
  d.class_names = class_names;
  const Index m = std::min(n, size());
  d.images.assign(images.begin(), images.begin() + m);
  d.labels.assign(labels.begin(), labels.begin() + m);
  return d;
}

void decode_cifar_records(std::span<const std::uint8_t> bytes, const std::string& origin,
                          Dataset& out) {
  CVSNET_CHECK(bytes.size() % kCifarRecordBytes == 0, IoError, "'", origin,
               "': malformed CIFAR-10 record at byte offset ",
               bytes.size() - bytes.size() % kCifarRecordBytes, " (file size ", bytes.size(),
               " is not a multiple of ", kCifarRecordBytes, ")");
  const Index plane = kCifarSide * kCifarSide;
  for (std::size_t off = 0; off < bytes.size(); off += kCifarRecordBytes) {
    const int label = bytes[off];
    CVSNET_CHECK(label < 10, IoError, "'", origin, "': malformed CIFAR-10 record at byte offset ",
                 off, " (label ", label, ")");
    Image8 img;
    img.height = img.width = kCifarSide;
    img.chw.assign(bytes.begin() + static_cast<std::ptrdiff_t>(off + 1),
                   bytes.begin() + static_cast<std::ptrdiff_t>(off + 1 + 3 * plane));
    out.images.push_back(std::move(img));
    out.labels.push_back(label);
  }
}

std::vector<std::uint8_t> encode_cifar_record(int label, const Image8& image) {
  CVSNET_CHECK(label >= 0 && label < 10, ArgumentError, "CIFAR-10 label ", label,
               " is out of range");
  CVSNET_CHECK(image.height == kCifarSide && image.width == kCifarSide, ArgumentError,
               "CIFAR-10 records hold 32x32 images, got ", image.height, "x", image.width);
  std::vector<std::uint8_t> rec;
  rec.reserve(kCifarRecordBytes);
  rec.push_back(static_cast<std::uint8_t>(label));
  rec.insert(rec.end(), image.chw.begin(), image.chw.end());
  return rec;
}

std::vector<std::string> cifar10_files(Split split) {
  if (split == Split::kVal) return {"test_batch.bin"};
  return {"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin", "data_batch_4.bin",
          "data_batch_5.bin"};
}

Dataset load_dataset(const DatasetSource& src) {
  Dataset ds;
  ds.kind = src.kind;
  if (src.kind == DatasetKind::kCifar10Binary) {
    fs::path root(src.root);
    if (!fs::exists(root / "test_batch.bin") && fs::exists(root / "cifar-10-batches-bin")) {
      root /= "cifar-10-batches-bin";
    }
    for (const auto& name : cifar10_files(src.split)) {
      const fs::path file = root / name;
      CVSNET_CHECK(fs::exists(file), IoError, "CIFAR-10 file '", file.string(), "' not found");
      const std::vector<std::uint8_t> bytes = read_file_bytes(file.string());
      decode_cifar_records(bytes, file.string(), ds);
    }
    ds.class_names.assign(kCifarClasses.begin(), kCifarClasses.end());
    return ds;
  }
  fs::path root(src.root);
  CVSNET_CHECK(fs::is_directory(root), IoError, "image folder '", src.root, "' not found");
  if (fs::is_directory(root / split_name(src.split))) {
    root /= split_name(src.split);
  } else if (src.split == Split::kVal && fs::is_directory(root / "test")) {
    root /= "test";
  }
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) ds.class_names.push_back(entry.path().filename().string());
  }
  std::sort(ds.class_names.begin(), ds.class_names.end());
  CVSNET_CHECK(!ds.class_names.empty(), IoError, "image folder '", root.string(),
               "' has no class subdirectories");
  for (std::size_t k = 0; k < ds.class_names.size(); ++k) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(root / ds.class_names[k])) {
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
      if (entry.is_regular_file() && (ext == ".png" || ext == ".ppm" || ext == ".pnm")) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      ds.images.push_back(read_image(f.string()));
      ds.labels.push_back(static_cast<int>(k));
    }
  }
  return ds;
}

template <typename Scalar>
void resize_crop(const Image8& image, double y0, double x0, double ch, double cw, Index out,
                 Scalar* dst) {
  const double sy = ch / static_cast<double>(out);
  const double sx = cw / static_cast<double>(out);
  for (Index y = 0; y < out; ++y) {
    const double fy = std::clamp(y0 + (y + 0.5) * sy - 0.5, 0.0, double(image.height - 1));
    const Index iy = static_cast<Index>(fy);
    const Index iy1 = std::min(iy + 1, image.height - 1);
    const double wy = fy - iy;
    for (Index x = 0; x < out; ++x) {
      const double fx = std::clamp(x0 + (x + 0.5) * sx - 0.5, 0.0, double(image.width - 1));
      const Index ix = static_cast<Index>(fx);
      const Index ix1 = std::min(ix + 1, image.width - 1);
      const double wx = fx - ix;
      for (Index c = 0; c < 3; ++c) {
        const double top = image.at(c, iy, ix) * (1 - wx) + image.at(c, iy, ix1) * wx;
        const double bottom = image.at(c, iy1, ix) * (1 - wx) + image.at(c, iy1, ix1) * wx;
        dst[(c * out + y) * out + x] = static_cast<Scalar>((top * (1 - wy) + bottom * wy) / 255.0);
      }
    }
  }
}

template <typename Scalar>
Batch<Scalar> load_batch(const Dataset& ds, std::span<const Index> indices, Index resolution) {
  CVSNET_CHECK(!indices.empty(), ArgumentError, "load_batch: empty index list");
  Batch<Scalar> b;
  b.images = Tensor<Scalar>(Shape{static_cast<Index>(indices.size()), 3, resolution, resolution});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Index idx = indices[i];
    CVSNET_CHECK(idx >= 0 && idx < ds.size(), ArgumentError, "load_batch: index ", idx,
                 " outside dataset of ", ds.size());
    const Image8& img = ds.images[idx];
    Scalar* dst = b.images.plane_data(static_cast<Index>(i), 0);
    if (img.height == resolution && img.width == resolution) {
      for (Index k = 0; k < 3 * resolution * resolution; ++k) {
        dst[k] = static_cast<Scalar>(img.chw[k]) / Scalar(255);
      }
    } else {
      resize_crop(img, 0.0, 0.0, double(img.height), double(img.width), resolution, dst);
    }
    b.labels.push_back(ds.labels[idx]);
  }
  return b;
}

template <typename Scalar>
Batch<Scalar> load_augmented_batch(const Dataset& ds, std::span<const Index> indices,
                                   Index resolution, const AugmentOptions& opts,
                                   std::uint64_t seed, std::uint64_t epoch) {
  if (!opts.enabled) return load_batch<Scalar>(ds, indices, resolution);
  CVSNET_CHECK(!indices.empty(), ArgumentError, "load_batch: empty index list");
  Batch<Scalar> b;
  b.images = Tensor<Scalar>(Shape{static_cast<Index>(indices.size()), 3, resolution, resolution});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Index idx = indices[i];
    CVSNET_CHECK(idx >= 0 && idx < ds.size(), ArgumentError, "load_batch: index ", idx,
                 " outside dataset of ", ds.size());
    const Image8& img = ds.images[idx];
    Rng rng = Rng::derive(seed, {epoch, static_cast<std::uint64_t>(idx)});
    Scalar* dst = b.images.plane_data(static_cast<Index>(i), 0);
    if (img.height == resolution && img.width == resolution) {
      pad_crop_flip(img, resolution, opts, rng, dst);
    } else {
      random_resized_crop(img, resolution, opts, rng, dst);
    }
    b.labels.push_back(ds.labels[idx]);
  }
  return b;
}

template <typename Scalar>
Tensor<Scalar> augment(const Tensor<Scalar>& images, const AugmentOptions& opts,
                       std::uint64_t seed, std::uint64_t epoch, std::uint64_t index_base) {
  if (!opts.enabled) return images;
  const Shape s = images.shape();
  CVSNET_CHECK(s.c == 3, ShapeError, "augment: expected RGB images, got ", s);
  Tensor<Scalar> out(s);
  const Index pad = opts.crop_padding;
  for (Index n = 0; n < s.n; ++n) {
    Rng rng = Rng::derive(seed, {epoch, index_base + static_cast<std::uint64_t>(n)});
    const Index dy = pad > 0 ? static_cast<Index>(rng.below(2 * pad + 1)) - pad : 0;
    const Index dx = pad > 0 ? static_cast<Index>(rng.below(2 * pad + 1)) - pad : 0;
    const bool flip = rng.bernoulli(opts.flip_probability);
    for (Index c = 0; c < 3; ++c) {
      for (Index y = 0; y < s.h; ++y) {
        for (Index x = 0; x < s.w; ++x) {
          const Index sy = y + dy;
          const Index sx = (flip ? s.w - 1 - x : x) + dx;
          out(n, c, y, x) =
              (sy >= 0 && sy < s.h && sx >= 0 && sx < s.w) ? images(n, c, sy, sx) : Scalar(0);
        }
      }
    }
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> flip_horizontal(const Tensor<Scalar>& images) {
  const Shape s = images.shape();
  Tensor<Scalar> out(s);
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      for (Index y = 0; y < s.h; ++y) {
        for (Index x = 0; x < s.w; ++x) out(n, c, y, x) = images(n, c, y, s.w - 1 - x);
      }
    }
  }
  return out;
}

std::vector<Index> epoch_permutation(Index n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[i] = i;
  Rng rng = Rng::derive(seed, {kShuffleStream, epoch});
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

Dataset synthetic_dataset(Index samples, Index classes, Index side, std::uint64_t seed) {
  CVSNET_CHECK(samples > 0 && classes > 0 && side > 0, ArgumentError,
               "synthetic_dataset: sizes must be positive");
  Dataset ds;
  for (Index k = 0; k < classes; ++k) ds.class_names.push_back("class" + std::to_string(k));
  const double pi = std::numbers::pi;
  for (Index i = 0; i < samples; ++i) {
    const Index k = i % classes;
    Rng rng = Rng::derive(seed, {static_cast<std::uint64_t>(i)});
    const double theta = pi * static_cast<double>(k) / static_cast<double>(classes);
    const double phase = rng.uniform(0.0, 2 * pi);
    const double freq = 2 * pi / 6.0;
    Image8 img;
    img.height = img.width = side;
    img.chw.resize(static_cast<std::size_t>(3 * side * side));
    for (Index c = 0; c < 3; ++c) {
      const double tint = std::cos(2 * pi * (double(k) / double(classes) + double(c) / 3.0));
      for (Index y = 0; y < side; ++y) {
        for (Index x = 0; x < side; ++x) {
          const double stripe = std::sin(freq * (x * std::cos(theta) + y * std::sin(theta)) + phase);
          double v = 0.5 + 0.2 * tint + 0.2 * stripe + rng.uniform(-0.1, 0.1);
          v = std::clamp(v, 0.0, 1.0);
          img.chw[(c * side + y) * side + x] = static_cast<std::uint8_t>(std::lround(v * 255));
        }
      }
    }
    ds.images.push_back(std::move(img));
    ds.labels.push_back(static_cast<int>(k));
  }
  return ds;
}

void write_cifar_dataset(const Dataset& train, const Dataset& val, const std::string& root) {
  fs::create_directories(root);
  const auto files = cifar10_files(Split::kTrain);
  const std::size_t per = (train.images.size() + files.size() - 1) / files.size();
  for (std::size_t f = 0; f < files.size(); ++f) {
    std::vector<std::uint8_t> bytes;
    for (std::size_t i = f * per; i < std::min(train.images.size(), (f + 1) * per); ++i) {
      const auto rec = encode_cifar_record(train.labels[i], train.images[i]);
      bytes.insert(bytes.end(), rec.begin(), rec.end());
    }
    write_file_bytes((fs::path(root) / files[f]).string(), bytes);
  }
  std::vector<std::uint8_t> bytes;
  for (std::size_t i = 0; i < val.images.size(); ++i) {
    const auto rec = encode_cifar_record(val.labels[i], val.images[i]);
    bytes.insert(bytes.end(), rec.begin(), rec.end());
  }
  write_file_bytes((fs::path(root) / "test_batch.bin").string(), bytes);
}

#define CVSNET_INSTANTIATE_DATASET(S)                                                         \
  template void resize_crop(const Image8&, double, double, double, double, Index, S*);        \
  template Batch<S> load_batch(const Dataset&, std::span<const Index>, Index);                \
  template Batch<S> load_augmented_batch(const Dataset&, std::span<const Index>, Index,       \
                                         const AugmentOptions&, std::uint64_t, std::uint64_t); \
  template Tensor<S> augment(const Tensor<S>&, const AugmentOptions&, std::uint64_t,          \
                             std::uint64_t, std::uint64_t);                                   \
  template Tensor<S> flip_horizontal(const Tensor<S>&);

CVSNET_INSTANTIATE_DATASET(float)
CVSNET_INSTANTIATE_DATASET(double)

#undef CVSNET_INSTANTIATE_DATASET

}  // namespace cvsnet
