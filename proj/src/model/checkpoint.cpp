// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cutmixsl/model/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "cutmixsl/errors.hpp"

namespace cutmixsl::model {

namespace {

constexpr char kMagic[8] = {'C', 'M', 'S', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw IngestionError("checkpoint: truncated at offset " + std::to_string(pos_));
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    for (float v : t.values()) put<float>(out, v);
  }
  return out;
}

std::vector<StoredTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.str(8) != std::string(kMagic, 8)) throw IngestionError("checkpoint: bad magic at offset 0");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw IngestionError("checkpoint: unsupported version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  std::vector<StoredTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    StoredTensor s;
    s.name = r.str(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    for (std::uint32_t d = 0; d < rank; ++d) s.shape.push_back(static_cast<std::size_t>(r.get<std::uint64_t>()));
    s.values.resize(tensor::numel(s.shape));
    for (auto& v : s.values) v = r.get<float>();
    out.push_back(std::move(s));
  }
  if (!r.done()) throw IngestionError("checkpoint: trailing bytes at offset " + std::to_string(r.offset()));
  return out;
}

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
  const auto bytes = encode_checkpoint(tensors);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IngestionError("checkpoint: cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IngestionError("checkpoint: write failed for " + path);
}

std::vector<StoredTensor> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IngestionError("checkpoint: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const IngestionError& e) {
    throw IngestionError(path + ": " + e.what());
  }
}

void assign(const std::vector<StoredTensor>& stored, const std::vector<NamedTensor>& params) {
  std::map<std::string, const StoredTensor*> by_name;
  for (const auto& s : stored) by_name[s.name] = &s;
  for (const auto& [name, t] : params) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw IngestionError("checkpoint: missing tensor " + name);
    if (it->second->shape != t.shape()) {
      throw DimensionError("checkpoint: " + name + " stored " + tensor::shape_string(it->second->shape) +
                           " but parameter is " + tensor::shape_string(t.shape()));
    }
    auto dst = Tensor(t).mutable_values();
    std::copy(it->second->values.begin(), it->second->values.end(), dst.begin());
  }
}

}  // namespace cutmixsl::model
