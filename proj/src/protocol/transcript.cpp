// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cutmixsl/protocol/transcript.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <iterator>
#include <map>

#include "cutmixsl/errors.hpp"
#include "cutmixsl/tensor/ops.hpp"

namespace cutmixsl::protocol {

namespace {

constexpr char kMagic[8] = {'C', 'M', 'S', 'L', 'T', 'R', 'N', 'S'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get(const std::uint8_t* p) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  T v;
  std::memcpy(&v, raw, sizeof(T));
  return v;
}

}  // namespace

TranscriptWriter::TranscriptWriter(const std::string& path) : keep_in_memory_(path.empty()) {
  if (path.empty()) return;
  file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*file_) throw IngestionError("transcript: cannot open " + path + " for writing");
  file_->write(kMagic, 8);
  std::vector<std::uint8_t> version;
  put<std::uint32_t>(version, 1);
  file_->write(reinterpret_cast<const char*>(version.data()), 4);
}

void TranscriptWriter::add(RecordKind kind, std::vector<std::uint8_t> payload) {
  if (file_) {
    std::vector<std::uint8_t> head{static_cast<std::uint8_t>(kind)};
    put<std::uint32_t>(head, static_cast<std::uint32_t>(payload.size()));
    file_->write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
    file_->write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  }
  if (keep_in_memory_) records_.push_back({kind, std::move(payload)});
}

void TranscriptWriter::preamble(const std::string& text) {
  add(RecordKind::kPreamble, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void TranscriptWriter::round_begin(std::uint64_t round, std::uint32_t groups) {
  std::vector<std::uint8_t> p;
  put<std::uint64_t>(p, round);
  put<std::uint32_t>(p, groups);
  add(RecordKind::kRoundBegin, std::move(p));
}

void TranscriptWriter::message(const Message& msg) { add(RecordKind::kMessage, encode(msg)); }

void TranscriptWriter::server_step(double lr) {
  std::vector<std::uint8_t> p;
  put<double>(p, lr);
  add(RecordKind::kServerStep, std::move(p));
}

void TranscriptWriter::flush() {
  if (file_) file_->flush();
}

std::vector<Record> read_transcript(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IngestionError("transcript: cannot open " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw IngestionError("transcript: " + path + " has a bad header at offset 0");
  }
  if (get<std::uint32_t>(bytes.data() + 8) != 1) throw IngestionError("transcript: unsupported version");
  std::vector<Record> out;
  std::size_t pos = 12;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 5) throw IngestionError("transcript: truncated record at offset " + std::to_string(pos));
    const auto kind = static_cast<RecordKind>(bytes[pos]);
    const auto len = get<std::uint32_t>(bytes.data() + pos + 1);
    if (bytes.size() - pos - 5 < len) {
      throw IngestionError("transcript: truncated record at offset " + std::to_string(pos));
    }
    out.push_back({kind, std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(pos + 5),
                                                   bytes.begin() + static_cast<std::ptrdiff_t>(pos + 5 + len))});
    pos += 5 + len;
  }
  return out;
}

namespace {

// Tracks assigned masks so uploads can be decoded.
Message decode_tracked(const Record& r, std::map<std::uint32_t, mixer::PatchMask>& masks) {
  auto msg = decode(r.payload, masks);
  if (const auto* seq = std::get_if<SequenceAssignment>(&msg)) masks[seq->client_id] = seq->mask;
  return msg;
}

}  // namespace

TranscriptSummary summarize(const std::vector<Record>& records) {
  TranscriptSummary s;
  std::map<std::uint32_t, mixer::PatchMask> masks;
  for (const auto& r : records) {
    switch (r.kind) {
      case RecordKind::kPreamble:
        s.preamble.assign(r.payload.begin(), r.payload.end());
        break;
      case RecordKind::kRoundBegin:
        ++s.rounds;
        break;
      case RecordKind::kServerStep:
        ++s.server_steps;
        break;
      case RecordKind::kMessage: {
        const auto msg = decode_tracked(r, masks);
        if (std::holds_alternative<UploadCutSmashed>(msg)) {
          ++s.uploads;
          s.upload_bytes += payload_meter(msg);
        } else if (std::holds_alternative<SequenceAssignment>(msg)) {
          s.sequence_bytes += payload_meter(msg);
        }
        break;
      }
    }
  }
  return s;
}

ReplayResult replay_server(const std::vector<Record>& records, const model::ModelConfig& config,
                           model::ServerSegment& server, const model::AdamWConfig& optimizer) {
  model::AdamW opt(server.named_parameters(), optimizer);
  opt.zero_grad();
  ReplayResult result;
  std::map<std::uint32_t, mixer::PatchMask> masks;
  std::map<std::uint32_t, ServerBatch> batches;
  for (const auto& r : records) {
    if (r.kind == RecordKind::kServerStep) {
      opt.step(get<double>(r.payload.data()));
      opt.zero_grad();
      ++result.server_steps;
      continue;
    }
    if (r.kind != RecordKind::kMessage) continue;
    auto msg = decode_tracked(r, masks);
    if (auto* sb = std::get_if<ServerBatch>(&msg)) {
      batches[sb->group_id] = std::move(*sb);
      continue;
    }
    const auto* gd = std::get_if<GradientDown>(&msg);
    if (!gd || gd->target != GradientTarget::kGroup) continue;
    const auto it = batches.find(gd->id);
    if (it == batches.end()) throw ProtocolError("replay: gradient for unknown group " + std::to_string(gd->id));
    const auto& cm = it->second.cutmix;
    auto tokens = tensor::Tensor::from_values({cm.tokens.batch, cm.tokens.tokens, cm.tokens.dim}, cm.tokens.values, true);
    const auto loss = tensor::cross_entropy(model::server_forward(config, server, tokens), cm.soft_label);
    tensor::backward(loss);
    ++result.gradients_checked;
    const auto g = tokens.grad();
    if (g.size() != gd->grad.values.size() ||
        std::memcmp(g.data(), gd->grad.values.data(), g.size() * sizeof(float)) != 0) {
      ++result.mismatches;
    }
  }
  return result;
}

}  // namespace cutmixsl::protocol
