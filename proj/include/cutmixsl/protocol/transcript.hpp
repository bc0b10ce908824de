// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "cutmixsl/model/optimizer.hpp"
#include "cutmixsl/model/vit.hpp"
#include "cutmixsl/protocol/messages.hpp"

namespace cutmixsl::protocol {

// File layout: magic "CMSLTRNS", u32 version 1, then records of
//   u8 kind, u32 payload length, payload
// kinds:
//   1 preamble     UTF-8 text (the experiment config as JSON)
//   2 round begin  u64 round index, u32 group count
//   3 message      encoded Message (see messages.hpp)
//   4 server step  f64 learning rate
// Server gradients are accumulated from every group GradientDown since the
// previous server step; the step applies them and zeroes them.

enum class RecordKind : std::uint8_t { kPreamble = 1, kRoundBegin = 2, kMessage = 3, kServerStep = 4 };

struct Record {
  RecordKind kind;
  std::vector<std::uint8_t> payload;
};

class TranscriptWriter {
 public:
  /// Empty path: records are kept in memory only.
  explicit TranscriptWriter(const std::string& path = "");

  void preamble(const std::string& text);
  void round_begin(std::uint64_t round, std::uint32_t groups);
  void message(const Message& msg);
  void server_step(double lr);

  const std::vector<Record>& records() const { return records_; }
  void flush();

 private:
  void add(RecordKind kind, std::vector<std::uint8_t> payload);

  std::unique_ptr<std::ofstream> file_;
  std::vector<Record> records_;
  bool keep_in_memory_;
};

std::vector<Record> read_transcript(const std::string& path);

struct TranscriptSummary {
  std::size_t rounds = 0;
  std::size_t server_steps = 0;
  std::size_t uploads = 0;
  std::size_t upload_bytes = 0;
  std::size_t sequence_bytes = 0;
  std::string preamble;
};

TranscriptSummary summarize(const std::vector<Record>& records);

struct ReplayResult {
  std::size_t server_steps = 0;
  std::size_t gradients_checked = 0;
  std::size_t mismatches = 0;
};

/// Re-runs the server from `server` (its initial parameters, updated in
/// place) over the recorded server batches and steps, comparing each
/// recomputed group gradient bitwise against the transcript.
ReplayResult replay_server(const std::vector<Record>& records, const model::ModelConfig& config,
                           model::ServerSegment& server, const model::AdamWConfig& optimizer);

}  // namespace cutmixsl::protocol
