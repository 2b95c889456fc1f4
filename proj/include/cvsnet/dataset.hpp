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

// Image datasets held in memory as 8-bit images, batch assembly and
// per-sample augmentation.
//
// CIFAR-10 binary: data_batch_1.bin … data_batch_5.bin (train) and
// test_batch.bin (val), each a run of 3073-byte records: one label byte, then
// 1024 R, 1024 G and 1024 B bytes in row-major order.
// Image folder: root/<split>/<class>/<image>.{png,ppm} when root/<split>
// exists, otherwise root/<class>/<image>; classes are sorted by name.

#ifndef CVSNET_DATASET_HPP_
#define CVSNET_DATASET_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cvsnet/image_io.hpp"
#include "cvsnet/rng.hpp"

namespace cvsnet {

enum class DatasetKind { kCifar10Binary, kImageFolder };
enum class Split { kTrain, kVal };

DatasetKind parse_dataset_kind(const std::string& s);
const char* dataset_kind_name(DatasetKind k);
Split parse_split(const std::string& s);
const char* split_name(Split s);

struct DatasetSource {
  DatasetKind kind = DatasetKind::kCifar10Binary;
  std::string root;
  Split split = Split::kTrain;
};

inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr Index kCifarSide = 32;

struct Dataset {
  DatasetKind kind = DatasetKind::kCifar10Binary;
  std::vector<Image8> images;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  Index size() const { return static_cast<Index>(images.size()); }
  Index num_classes() const { return static_cast<Index>(class_names.size()); }
  /// First `n` samples (deterministic subset).
  Dataset head(Index n) const;
};

/// Decodes consecutive CIFAR-10 records. `origin` names the source in errors.
void decode_cifar_records(std::span<const std::uint8_t> bytes, const std::string& origin,
                          Dataset& out);
/// One record for the given label and planar RGB pixels.
std::vector<std::uint8_t> encode_cifar_record(int label, const Image8& image);

std::vector<std::string> cifar10_files(Split split);
Dataset load_dataset(const DatasetSource& src);

struct AugmentOptions {
  bool enabled = true;
  double flip_probability = 0.5;
  Index crop_padding = 4;            // zero padding before the random crop
  double min_area = 0.35;            // random resized crop, image folders
  double max_log_aspect = 0.28768;   // ln(4/3)
};

template <typename Scalar>
struct Batch {
  Tensor<Scalar> images;  // (n, 3, r, r), values in [0, 1]
  std::vector<int> labels;
};

/// Decodes the listed samples at resolution r without augmentation; images
/// of another size are resized bilinearly.
template <typename Scalar>
Batch<Scalar> load_batch(const Dataset& ds, std::span<const Index> indices, Index resolution);

/// Training view: pad-and-crop (square images at the target resolution) or
/// random resized crop (anything else), then a random horizontal flip. The
/// random stream of sample i depends only on (seed, epoch, indices[i]).
template <typename Scalar>
Batch<Scalar> load_augmented_batch(const Dataset& ds, std::span<const Index> indices,
                                   Index resolution, const AugmentOptions& opts,
                                   std::uint64_t seed, std::uint64_t epoch);

/// Pad-and-crop plus flip on already decoded images; sample i uses
/// (seed, epoch, index_base + i).
template <typename Scalar>
Tensor<Scalar> augment(const Tensor<Scalar>& images, const AugmentOptions& opts,
                       std::uint64_t seed, std::uint64_t epoch, std::uint64_t index_base);

template <typename Scalar>
Tensor<Scalar> flip_horizontal(const Tensor<Scalar>& images);

/// Bilinear resize of a crop [y0, y0+ch) × [x0, x0+cw) to out×out, sampling
/// at pixel centres.
template <typename Scalar>
void resize_crop(const Image8& image, double y0, double x0, double ch, double cw, Index out,
                 Scalar* dst);

/// Fisher–Yates permutation of 0..n-1 drawn from (seed, epoch).
std::vector<Index> epoch_permutation(Index n, std::uint64_t seed, std::uint64_t epoch);

/// A class-separable synthetic dataset: each class has its own colour and
/// stripe orientation plus per-sample noise. Used by tests and smoke runs.
Dataset synthetic_dataset(Index samples, Index classes, Index side, std::uint64_t seed);

/// Writes `ds` (32×32 images) as CIFAR-10 binary files under `root`.
void write_cifar_dataset(const Dataset& train, const Dataset& val, const std::string& root);

}  // namespace cvsnet

#endif  // CVSNET_DATASET_HPP_
