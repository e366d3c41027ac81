// Copyright 2026 The MCSE Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Layout (host byte order, no padding):
//   "MCSECKPT"  u32 version  u64 config_hash  u64 step  f64 dev_metric
//   i64 d  i64 d_s  i64 d_v  i64 V
//   per tensor in ParamSet::tensor_names() order: u64 count, count x f64

#include <cstring>
#include <fstream>
#include <iterator>

#include "mcse/runner.hpp"

namespace mcse {
namespace {

constexpr char kMagic[8] = {'M', 'C', 'S', 'E', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <typename T>
  void put(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::vector<char> take() { return std::move(bytes_); }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<char>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T v;
    get_raw(&v, sizeof(T));
    return v;
  }
  void get_raw(void* out, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw DataError("checkpoint is truncated");
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

ModelParams Checkpoint::model() const {
  return ModelParams{dims, params, ParamSet::zeros(dims)};
}

std::vector<char> serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.put_raw(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(ckpt.format_version);
  w.put<std::uint64_t>(ckpt.config_hash);
  w.put<std::uint64_t>(ckpt.step);
  w.put<double>(ckpt.dev_metric);
  for (Index d : {ckpt.dims.embed_dim, ckpt.dims.shared_dim, ckpt.dims.image_dim, ckpt.dims.vocab_size}) {
    w.put<std::int64_t>(static_cast<std::int64_t>(d));
  }
  for (auto t : ckpt.params.tensors()) {
    w.put<std::uint64_t>(t.size());
    w.put_raw(t.data(), t.size_bytes());
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::vector<char>& bytes) {
  Reader r(bytes);
  char magic[sizeof(kMagic)];
  r.get_raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw DataError("not a checkpoint file (bad magic)");
  Checkpoint ckpt;
  ckpt.format_version = r.get<std::uint32_t>();
  if (ckpt.format_version != kCheckpointVersion) {
    throw DataError("checkpoint format version " + std::to_string(ckpt.format_version) +
                    " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  ckpt.config_hash = r.get<std::uint64_t>();
  ckpt.step = r.get<std::uint64_t>();
  ckpt.dev_metric = r.get<double>();
  ckpt.dims.embed_dim = r.get<std::int64_t>();
  ckpt.dims.shared_dim = r.get<std::int64_t>();
  ckpt.dims.image_dim = r.get<std::int64_t>();
  ckpt.dims.vocab_size = r.get<std::int64_t>();
  ckpt.params = ParamSet::zeros(ckpt.dims);
  for (auto t : ckpt.params.tensors()) {
    const auto count = r.get<std::uint64_t>();
    if (count != t.size()) throw DataError("checkpoint tensor size does not match its dimensions");
    r.get_raw(t.data(), t.size_bytes());
  }
  if (!r.at_end()) throw DataError("checkpoint has trailing bytes");
  if (!ckpt.params.all_finite()) throw DataError("checkpoint contains non-finite parameters");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace mcse
