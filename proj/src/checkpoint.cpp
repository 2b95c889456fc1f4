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

#include "cvsnet/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

namespace cvsnet {

namespace {

constexpr char kMagic[4] = {'C', 'V', 'S', 'C'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 8;
constexpr std::size_t kCrcBytes = 4;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  const std::uint8_t* take(std::size_t n, const char* what) {
    CVSNET_CHECK(n <= size_ - pos_, CorruptCheckpointError, "checkpoint truncated reading ", what,
                 " at byte ", pos_);
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  template <typename U>
  U uint(const char* what) {
    const std::uint8_t* p = take(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
    return v;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == size_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::size_t dtype_size(DType d) { return d == DType::kF32 ? 4 : 8; }

template <typename Scalar>
constexpr DType dtype_of() {
  return sizeof(Scalar) == 4 ? DType::kF32 : DType::kF64;
}

template <typename Scalar>
std::vector<std::uint8_t> to_le_bytes(const Tensor<Scalar>& t) {
  using Bits = std::conditional_t<sizeof(Scalar) == 4, std::uint32_t, std::uint64_t>;
  Writer w;
  w.out.reserve(static_cast<std::size_t>(t.size()) * sizeof(Scalar));
  for (Index i = 0; i < t.size(); ++i) {
    Bits b;
    std::memcpy(&b, &t.data()[i], sizeof(Scalar));
    w.uint(b);
  }
  return std::move(w.out);
}

template <typename Scalar>
void from_le_bytes(const std::vector<std::uint8_t>& bytes, Tensor<Scalar>& t) {
  using Bits = std::conditional_t<sizeof(Scalar) == 4, std::uint32_t, std::uint64_t>;
  Reader r(bytes.data(), bytes.size());
  for (Index i = 0; i < t.size(); ++i) {
    const Bits b = r.uint<Bits>("tensor value");
    std::memcpy(&t.data()[i], &b, sizeof(Scalar));
  }
}

bool compatible(const ModelConfig& a, const ModelConfig& b) {
  ModelConfig x = a, y = b;
  x.name = y.name;
  x.seed = y.seed;
  return x == y;
}

template <typename Scalar>
void fill_parameters(CvsNet<Scalar>& model, const CheckpointData& data) {
  std::map<std::string, const StoredTensor*> by_name;
  for (const auto& t : data.tensors) {
    CVSNET_CHECK(by_name.emplace(t.name, &t).second, CorruptCheckpointError,
                 "checkpoint lists tensor '", t.name, "' twice");
  }
  CVSNET_CHECK(by_name.size() == model.parameters().size(), CheckpointConfigError,
               "checkpoint holds ", by_name.size(), " tensors, model has ",
               model.parameters().size(), " parameters");
  // Validate everything before touching the model.
  for (const auto& p : model.parameters()) {
    auto it = by_name.find(p.name);
    CVSNET_CHECK(it != by_name.end(), CheckpointConfigError, "checkpoint lacks parameter '",
                 p.name, "'");
    const StoredTensor& t = *it->second;
    CVSNET_CHECK(t.dtype == dtype_of<Scalar>(), CheckpointConfigError, "parameter '", p.name,
                 "' stored as ", t.dtype == DType::kF32 ? "f32" : "f64", ", model uses ",
                 sizeof(Scalar) == 4 ? "f32" : "f64");
    const Shape s = p.var.shape();
    const std::vector<std::uint64_t> dims = {static_cast<std::uint64_t>(s.n),
                                             static_cast<std::uint64_t>(s.c),
                                             static_cast<std::uint64_t>(s.h),
                                             static_cast<std::uint64_t>(s.w)};
    CVSNET_CHECK(t.dims == dims, CheckpointConfigError, "parameter '", p.name,
                 "' has stored shape of rank ", t.dims.size(), " not matching ", s);
  }
  for (auto& p : model.parameters()) {
    Tensor<Scalar> value(p.var.shape());
    from_le_bytes(by_name.at(p.name)->bytes, value);
    p.var.mutable_value() = std::move(value);
  }
}

}  // namespace

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (size > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_checkpoint(const CheckpointData& data) {
  Writer w;
  w.bytes(kMagic, 4);
  w.uint<std::uint32_t>(data.version);
  w.uint<std::uint64_t>(0);  // file size, patched below
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(data.config_json.size()));
  w.bytes(data.config_json.data(), data.config_json.size());
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(data.tensors.size()));
  for (const auto& t : data.tensors) {
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(t.dtype));
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(t.dims.size()));
    for (std::uint64_t d : t.dims) w.uint<std::uint64_t>(d);
    w.bytes(t.bytes.data(), t.bytes.size());
  }
  const std::uint64_t total = w.out.size() + kCrcBytes;
  for (std::size_t i = 0; i < 8; ++i) w.out[8 + i] = static_cast<std::uint8_t>(total >> (8 * i));
  w.uint<std::uint32_t>(crc32_of(w.out.data(), w.out.size()));
  return std::move(w.out);
}

CheckpointData decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  CVSNET_CHECK(bytes.size() >= kHeaderBytes + kCrcBytes, CorruptCheckpointError,
               "checkpoint truncated: ", bytes.size(), " bytes");
  CVSNET_CHECK(std::memcmp(bytes.data(), kMagic, 4) == 0, CorruptCheckpointError,
               "not a checkpoint (bad magic)");
  Reader header(bytes.data(), kHeaderBytes);
  header.take(4, "magic");
  CheckpointData data;
  data.version = header.uint<std::uint32_t>("version");
  CVSNET_CHECK(data.version == kCheckpointVersion, CheckpointVersionError,
               "checkpoint format version ", data.version, " is not supported (expected ",
               kCheckpointVersion, ")");
  const std::uint64_t declared = header.uint<std::uint64_t>("file size");
  CVSNET_CHECK(declared == bytes.size(), CorruptCheckpointError, "checkpoint truncated or padded: ",
               bytes.size(), " bytes, header declares ", declared);
  const std::size_t body = bytes.size() - kCrcBytes;
  Reader tail(bytes.data() + body, kCrcBytes);
  const std::uint32_t stored = tail.uint<std::uint32_t>("checksum");
  CVSNET_CHECK(stored == crc32_of(bytes.data(), body), ChecksumError,
               "checkpoint checksum mismatch");

  Reader r(bytes.data(), body);
  r.take(kHeaderBytes, "header");
  const std::uint32_t config_len = r.uint<std::uint32_t>("config length");
  const std::uint8_t* cfg = r.take(config_len, "config");
  data.config_json.assign(reinterpret_cast<const char*>(cfg), config_len);
  const std::uint32_t count = r.uint<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    StoredTensor t;
    const std::uint32_t name_len = r.uint<std::uint32_t>("tensor name length");
    const std::uint8_t* name = r.take(name_len, "tensor name");
    t.name.assign(reinterpret_cast<const char*>(name), name_len);
    const std::uint8_t code = r.uint<std::uint8_t>("dtype");
    CVSNET_CHECK(code == 1 || code == 2, CorruptCheckpointError, "tensor '", t.name,
                 "' has unknown dtype code ", int(code));
    t.dtype = static_cast<DType>(code);
    const std::uint8_t rank = r.uint<std::uint8_t>("rank");
    std::uint64_t numel = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      t.dims.push_back(r.uint<std::uint64_t>("dims"));
      CVSNET_CHECK(t.dims.back() <= body, CorruptCheckpointError, "tensor '", t.name,
                   "' has an implausible dimension");
      numel *= t.dims.back();
      CVSNET_CHECK(numel <= body, CorruptCheckpointError, "tensor '", t.name,
                   "' is larger than the file");
    }
    const std::uint8_t* values = r.take(numel * dtype_size(t.dtype), "tensor values");
    t.bytes.assign(values, values + numel * dtype_size(t.dtype));
    data.tensors.push_back(std::move(t));
  }
  CVSNET_CHECK(r.done(), CorruptCheckpointError, "checkpoint has ", body - r.pos(),
               " trailing bytes after the tensor table");
  return data;
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    CVSNET_CHECK(out.good(), IoError, "cannot open '", tmp, "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    CVSNET_CHECK(out.good(), IoError, "write to '", tmp, "' failed");
  }
  std::filesystem::rename(tmp, target);
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  CVSNET_CHECK(in.good(), IoError, "cannot open '", path, "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

template <typename Scalar>
CheckpointData checkpoint_data(const CvsNet<Scalar>& model) {
  CheckpointData data;
  data.config_json = model.config().to_json();
  for (const auto& p : model.parameters()) {
    StoredTensor t;
    t.name = p.name;
    t.dtype = dtype_of<Scalar>();
    const Shape s = p.var.shape();
    t.dims = {static_cast<std::uint64_t>(s.n), static_cast<std::uint64_t>(s.c),
              static_cast<std::uint64_t>(s.h), static_cast<std::uint64_t>(s.w)};
    t.bytes = to_le_bytes(p.var.value());
    data.tensors.push_back(std::move(t));
  }
  return data;
}

template <typename Scalar>
void save_checkpoint(const CvsNet<Scalar>& model, const std::string& path) {
  write_file_bytes(path, encode_checkpoint(checkpoint_data(model)));
}

template <typename Scalar>
CvsNet<Scalar> load_checkpoint(const std::string& path) {
  const CheckpointData data = decode_checkpoint(read_file_bytes(path));
  ModelConfig cfg;
  try {
    cfg = ModelConfig::from_json(data.config_json);
  } catch (const Error& e) {
    throw CheckpointConfigError(detail::concat("checkpoint config rejected: ", e.what()));
  }
  CvsNet<Scalar> model(cfg);
  fill_parameters(model, data);
  return model;
}

template <typename Scalar>
void load_parameters(CvsNet<Scalar>& model, const std::string& path) {
  const CheckpointData data = decode_checkpoint(read_file_bytes(path));
  ModelConfig stored;
  try {
    stored = ModelConfig::from_json(data.config_json);
  } catch (const Error& e) {
    throw CheckpointConfigError(detail::concat("checkpoint config rejected: ", e.what()));
  }
  CVSNET_CHECK(compatible(stored, model.config()), CheckpointConfigError,
               "checkpoint config does not match the model: ", data.config_json);
  fill_parameters(model, data);
}

template CheckpointData checkpoint_data(const CvsNet<float>&);
template CheckpointData checkpoint_data(const CvsNet<double>&);
template void save_checkpoint(const CvsNet<float>&, const std::string&);
template void save_checkpoint(const CvsNet<double>&, const std::string&);
template CvsNet<float> load_checkpoint(const std::string&);
template CvsNet<double> load_checkpoint(const std::string&);
template void load_parameters(CvsNet<float>&, const std::string&);
template void load_parameters(CvsNet<double>&, const std::string&);

}  // namespace cvsnet
