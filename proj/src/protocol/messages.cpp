// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cutmixsl/protocol/messages.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <string>

#include "cutmixsl/errors.hpp"

namespace cutmixsl::protocol {

namespace {

class Writer {
 public:
  template <typename T>
  void put(T v) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
  }
  void floats(const float* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) put<float>(p[i]);
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  template <typename T>
  T get() {
    if (bytes_.size() - pos_ < sizeof(T)) {
      throw ProtocolError("message: truncated at offset " + std::to_string(pos_));
    }
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
  }
  void floats(float* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) p[i] = get<float>();
  }
  void finish() const {
    if (pos_ != bytes_.size()) throw ProtocolError("message: trailing bytes at offset " + std::to_string(pos_));
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint16_t u16(std::size_t v, const char* what) {
  if (v > 0xffff) throw ProtocolError(std::string("message: ") + what + " exceeds 16 bits");
  return static_cast<std::uint16_t>(v);
}

std::uint32_t u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw ProtocolError(std::string("message: ") + what + " exceeds 32 bits");
  return static_cast<std::uint32_t>(v);
}

std::size_t mask_bytes(std::size_t m) { return m <= 64 ? 8 : (m + 7) / 8; }

void put_grid_header(Writer& w, const mixer::TokenGrid& g) {
  w.put<std::uint32_t>(u32(g.batch, "batch"));
  w.put<std::uint16_t>(u16(g.tokens, "M"));
  w.put<std::uint16_t>(u16(g.dim, "d_m"));
}

}  // namespace

void check_invariants(const Message& msg) {
  const auto* up = std::get_if<UploadCutSmashed>(&msg);
  if (!up) return;
  const auto& g = up->cut.tokens;
  if (up->cut.mask.size() != g.tokens) {
    throw ProtocolError("upload from client " + std::to_string(up->client_id) + ": mask length mismatch");
  }
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t j = 0; j < g.tokens; ++j) {
      if (up->cut.mask.bits[j]) continue;
      const float* row = g.row(b, j);
      for (std::size_t c = 0; c < g.dim; ++c) {
        if (row[c] != 0.0f) {
          throw ProtocolError("upload from client " + std::to_string(up->client_id) + ": nonzero row " +
                              std::to_string(j) + " outside the mask");
        }
      }
    }
  }
  if (up->label.size() != g.batch * up->num_classes) {
    throw ProtocolError("upload from client " + std::to_string(up->client_id) + ": label size mismatch");
  }
}

std::vector<std::uint8_t> encode(const Message& msg) {
  Writer w;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SequenceAssignment>) {
          const std::size_t len = m.mask.size();
          w.put<std::uint8_t>(static_cast<std::uint8_t>(Tag::kSequenceAssignment));
          w.put<std::uint8_t>(0);
          w.put<std::uint16_t>(u16(len, "M"));
          w.put<std::uint32_t>(m.client_id);
          if (len <= 64) {
            w.put<std::uint64_t>(m.mask.to_u64());
          } else {
            for (std::size_t byte = 0; byte < mask_bytes(len); ++byte) {
              std::uint8_t v = 0;
              for (std::size_t bit = 0; bit < 8 && byte * 8 + bit < len; ++bit) {
                v |= static_cast<std::uint8_t>((m.mask.bits[byte * 8 + bit] & 1u) << bit);
              }
              w.put<std::uint8_t>(v);
            }
          }
        } else if constexpr (std::is_same_v<T, UploadCutSmashed>) {
          check_invariants(msg);
          const auto& g = m.cut.tokens;
          w.put<std::uint8_t>(static_cast<std::uint8_t>(Tag::kUploadCutSmashed));
          w.put<std::uint8_t>(m.num_classes > 0 ? 1 : 0);
          w.put<std::uint16_t>(u16(m.num_classes, "num_classes"));
          w.put<std::uint32_t>(m.client_id);
          put_grid_header(w, g);
          for (std::size_t b = 0; b < g.batch; ++b) {
            for (std::size_t j = 0; j < g.tokens; ++j) {
              if (m.cut.mask.bits[j]) w.floats(g.row(b, j), g.dim);
            }
          }
          w.floats(m.label.data(), m.label.size());
        } else if constexpr (std::is_same_v<T, ServerBatch>) {
          const auto& g = m.cutmix.tokens;
          const auto& grp = m.cutmix.group;
          w.put<std::uint8_t>(static_cast<std::uint8_t>(Tag::kServerBatch));
          w.put<std::uint8_t>(m.shuffled ? 1 : 0);
          w.put<std::uint16_t>(u16(m.cutmix.num_classes, "num_classes"));
          w.put<std::uint32_t>(m.group_id);
          put_grid_header(w, g);
          w.put<std::uint16_t>(u16(grp.members.size(), "k"));
          for (std::size_t i = 0; i < grp.members.size(); ++i) {
            w.put<std::uint32_t>(grp.members[i]);
            w.put<std::uint16_t>(u16(i < grp.allocation.k() ? grp.allocation.counts[i] : 0, "a_i"));
          }
          w.floats(g.values.data(), g.values.size());
          w.floats(m.cutmix.soft_label.data(), m.cutmix.soft_label.size());
        } else {
          w.put<std::uint8_t>(static_cast<std::uint8_t>(Tag::kGradientDown));
          w.put<std::uint8_t>(static_cast<std::uint8_t>(m.target));
          w.put<std::uint16_t>(0);
          w.put<std::uint32_t>(m.id);
          put_grid_header(w, m.grad);
          w.floats(m.grad.values.data(), m.grad.values.size());
        }
      },
      msg);
  return std::move(w.out);
}

Message decode(std::span<const std::uint8_t> bytes, const std::map<std::uint32_t, mixer::PatchMask>& masks) {
  Reader r(bytes);
  const auto tag = static_cast<Tag>(r.get<std::uint8_t>());
  switch (tag) {
    case Tag::kSequenceAssignment: {
      r.get<std::uint8_t>();
      const std::size_t len = r.get<std::uint16_t>();
      SequenceAssignment m;
      m.client_id = r.get<std::uint32_t>();
      if (len <= 64) {
        m.mask = mixer::PatchMask::from_u64(r.get<std::uint64_t>(), len);
      } else {
        m.mask = mixer::PatchMask::empty(len);
        for (std::size_t byte = 0; byte < mask_bytes(len); ++byte) {
          const auto v = r.get<std::uint8_t>();
          for (std::size_t bit = 0; bit < 8 && byte * 8 + bit < len; ++bit) m.mask.bits[byte * 8 + bit] = (v >> bit) & 1u;
        }
      }
      r.finish();
      return m;
    }
    case Tag::kUploadCutSmashed: {
      r.get<std::uint8_t>();
      UploadCutSmashed m;
      m.num_classes = r.get<std::uint16_t>();
      m.client_id = r.get<std::uint32_t>();
      const std::size_t batch = r.get<std::uint32_t>(), len = r.get<std::uint16_t>(), dim = r.get<std::uint16_t>();
      // A client without an assigned sequence sends its full grid.
      const auto it = masks.find(m.client_id);
      m.cut.mask = it == masks.end() ? mixer::PatchMask::full(len) : it->second;
      if (m.cut.mask.size() != len) {
        throw ProtocolError("upload from client " + std::to_string(m.client_id) + ": M disagrees with its mask");
      }
      m.cut.client_id = m.client_id;
      m.cut.tokens = mixer::TokenGrid::zeros(batch, len, dim);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < len; ++j) {
          if (m.cut.mask.bits[j]) r.floats(m.cut.tokens.row(b, j), dim);
        }
      }
      m.label.resize(batch * m.num_classes);
      r.floats(m.label.data(), m.label.size());
      r.finish();
      return m;
    }
    case Tag::kServerBatch: {
      ServerBatch m;
      m.shuffled = r.get<std::uint8_t>() & 1u;
      m.cutmix.num_classes = r.get<std::uint16_t>();
      m.group_id = r.get<std::uint32_t>();
      const std::size_t batch = r.get<std::uint32_t>(), len = r.get<std::uint16_t>(), dim = r.get<std::uint16_t>();
      const std::size_t k = r.get<std::uint16_t>();
      for (std::size_t i = 0; i < k; ++i) {
        m.cutmix.group.members.push_back(r.get<std::uint32_t>());
        m.cutmix.group.allocation.counts.push_back(r.get<std::uint16_t>());
      }
      m.cutmix.tokens = mixer::TokenGrid::zeros(batch, len, dim);
      r.floats(m.cutmix.tokens.values.data(), m.cutmix.tokens.values.size());
      m.cutmix.soft_label.resize(batch * m.cutmix.num_classes);
      r.floats(m.cutmix.soft_label.data(), m.cutmix.soft_label.size());
      r.finish();
      return m;
    }
    case Tag::kGradientDown: {
      GradientDown m;
      m.target = static_cast<GradientTarget>(r.get<std::uint8_t>());
      r.get<std::uint16_t>();
      m.id = r.get<std::uint32_t>();
      const std::size_t batch = r.get<std::uint32_t>(), len = r.get<std::uint16_t>(), dim = r.get<std::uint16_t>();
      m.grad = mixer::TokenGrid::zeros(batch, len, dim);
      r.floats(m.grad.values.data(), m.grad.values.size());
      r.finish();
      return m;
    }
  }
  throw ProtocolError("message: unknown tag " + std::to_string(static_cast<int>(tag)));
}

std::size_t payload_meter(const Message& msg) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SequenceAssignment>) {
          return mask_bytes(m.mask.size());
        } else if constexpr (std::is_same_v<T, UploadCutSmashed>) {
          const auto& g = m.cut.tokens;
          return kUploadHeaderBytes + m.cut.mask.popcount() * g.dim * 4 * g.batch + m.label.size() * 4;
        } else if constexpr (std::is_same_v<T, ServerBatch>) {
          return 16 + 2 + m.cutmix.group.members.size() * 6 + m.cutmix.tokens.values.size() * 4 +
                 m.cutmix.soft_label.size() * 4;
        } else {
          return 16 + m.grad.values.size() * 4;
        }
      },
      msg);
}

std::size_t activation_bytes(const Message& msg) {
  const auto* up = std::get_if<UploadCutSmashed>(&msg);
  if (!up) return 0;
  return up->cut.mask.popcount() * up->cut.tokens.dim * 4 * up->cut.tokens.batch;
}

}  // namespace cutmixsl::protocol
