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

// Binary checkpoint, all integers little-endian:
//
//   "CVSC"  u32 version  u64 file_size
//   u32 config_len  config (canonical JSON)
//   u32 tensor_count
//   per tensor: u32 name_len  name  u8 dtype (1 = f32, 2 = f64)  u8 rank
//               u64 dims[rank]  raw values
//   u32 crc32 of every preceding byte

#ifndef CVSNET_CHECKPOINT_HPP_
#define CVSNET_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "cvsnet/model.hpp"

namespace cvsnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public Error {
 public:
  using Error::Error;
};
/// Truncated file, bad magic or malformed table.
class CorruptCheckpointError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class ChecksumError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
/// Config or tensor table does not fit the requested model.
class CheckpointConfigError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

enum class DType : std::uint8_t { kF32 = 1, kF64 = 2 };

struct StoredTensor {
  std::string name;
  DType dtype = DType::kF32;
  std::vector<std::uint64_t> dims;
  std::vector<std::uint8_t> bytes;  // little-endian values
};

struct CheckpointData {
  std::uint32_t version = kCheckpointVersion;
  std::string config_json;
  std::vector<StoredTensor> tensors;
};

std::vector<std::uint8_t> encode_checkpoint(const CheckpointData& data);
/// Validates size, magic, version and checksum, then parses the table.
CheckpointData decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file_bytes(const std::string& path);

template <typename Scalar>
CheckpointData checkpoint_data(const CvsNet<Scalar>& model);

template <typename Scalar>
void save_checkpoint(const CvsNet<Scalar>& model, const std::string& path);

/// Builds the model from the embedded config and fills every parameter.
template <typename Scalar>
CvsNet<Scalar> load_checkpoint(const std::string& path);

/// Loads parameters into an existing model; the stored config must match the
/// model's apart from name and seed.
template <typename Scalar>
void load_parameters(CvsNet<Scalar>& model, const std::string& path);

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size);

}  // namespace cvsnet

#endif  // CVSNET_CHECKPOINT_HPP_
