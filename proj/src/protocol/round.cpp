// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cutmixsl/protocol/round.hpp"

#include <algorithm>
#include <chrono>
#include <map>

#include "cutmixsl/errors.hpp"
#include "cutmixsl/tensor/ops.hpp"

namespace cutmixsl::protocol {

using mixer::TokenGrid;
using tensor::Tensor;

SystemState SystemState::create(const model::ModelConfig& config, std::size_t n_clients, std::uint64_t seed,
                                const model::AdamWConfig& optimizer, double keep_ratio, mixer::CutoutMode mask_mode) {
  if (n_clients == 0) throw ContractError("system: need at least one client");
  auto [client, server] = model::init_parameters(config, seed);
  model::AdamW server_opt(server.named_parameters(), optimizer);
  SystemState state{config, {}, std::move(server), std::move(server_opt), 0, nullptr};
  for (std::size_t i = 0; i < n_clients; ++i) {
    auto seg = client.clone();
    model::AdamW opt(seg.named_parameters(), optimizer);
    std::optional<mixer::CutoutMasker> cutout;
    if (keep_ratio < 1.0) cutout.emplace(keep_ratio, mask_mode, Rng(seed, Stream::kMasks, (1ull << 48) + i));
    state.clients.push_back({static_cast<std::uint32_t>(i), std::move(seg), std::move(opt), std::move(cutout)});
  }
  return state;
}

namespace {

TokenGrid grid_of(const Tensor& t) {
  return {t.dim(0), t.dim(1), t.dim(2), std::vector<float>(t.values().begin(), t.values().end())};
}

std::uint64_t substream(std::uint64_t round, std::size_t index) { return (round << 16) + index; }

struct ClientForward {
  Tensor smashed;  // [b, M, d] with graph
  mixer::PatchMask mask;
  std::optional<TokenGrid> grad;
};

}  // namespace

RoundMetrics run_round(SystemState& state, const std::vector<ClientBatch>& batches, const RoundOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const auto& cfg = state.config;
  const std::size_t n = state.clients.size(), m = cfg.tokens();
  if (batches.size() != n) throw ContractError("run_round: one batch per client required");
  for (std::size_t i = 1; i < n; ++i) {
    if (batches[i].batch != batches[0].batch) throw ProtocolError("run_round: client " + std::to_string(i) +
                                                                  " batch size differs");
  }
  const std::uint64_t seed = options.seed, round = state.round;
  TranscriptWriter* log = state.transcript;
  RoundMetrics metrics;
  metrics.round = round;
  metrics.client_bytes.assign(n, 0);
  metrics.client_activation_bytes.assign(n, 0);

  // Mixer: groups and sequences.
  std::vector<std::uint32_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = state.clients[i].id;
  Rng group_rng(seed, Stream::kGrouping, round);
  auto groups = form_groups(ids, options.k_way, group_rng);
  if (log) log->round_begin(round, static_cast<std::uint32_t>(groups.size()));
  std::map<std::uint32_t, mixer::PatchMask> assigned;
  std::vector<bool> cutout_group(groups.size(), false);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& grp = groups[g];
    Rng alloc_rng(seed, Stream::kAllocations, substream(round, g));
    Rng mask_rng(seed, Stream::kMasks, substream(round, g));
    auto& first = state.clients[grp.members[0]];
    if (grp.k() == 1 && first.cutout) {
      grp.mask_set.masks = {first.cutout->next(m)};
      grp.allocation.counts = {static_cast<std::uint32_t>(grp.mask_set.masks[0].popcount())};
      cutout_group[g] = true;
    } else {
      assign_sequences(grp, options.alpha, m, alloc_rng, mask_rng);
      grp.mask_set.validate(m);
    }
    if (grp.k() == 1 && !cutout_group[g]) continue;  // plain SL: no sequence to send
    for (std::size_t i = 0; i < grp.k(); ++i) {
      const SequenceAssignment seq{grp.members[i], grp.mask_set.masks[i]};
      assigned[seq.client_id] = seq.mask;
      metrics.sequence_bytes += payload_meter(seq);
      if (log) log->message(seq);
    }
  }

  // Clients: forward and cut.
  std::vector<ClientForward> fwd(n);
  for (auto& c : state.clients) c.optimizer.zero_grad();
  state.server_optimizer.zero_grad();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t i = 0; i < groups[g].k(); ++i) fwd[groups[g].members[i]].mask = groups[g].mask_set.masks[i];
  }
  std::vector<std::optional<UploadCutSmashed>> uploads(n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto& b = batches[c];
    if (b.labels.size() != b.batch * cfg.num_classes) {
      throw ProtocolError("client " + std::to_string(c) + ": label block has " + std::to_string(b.labels.size()) +
                          " entries");
    }
    fwd[c].smashed = model::client_forward(cfg, state.clients[c].segment, b.images, b.batch);
    if (fwd[c].mask.popcount() == 0) continue;  // a_i = 0 sends nothing
    auto cut = mixer::cut(grid_of(fwd[c].smashed), fwd[c].mask, static_cast<std::uint32_t>(c));
    std::vector<float> label = b.labels;
    if (options.sigma_x > 0.0 || options.sigma_y > 0.0) {
      Rng noise(seed, Stream::kNoise, substream(round, c));
      cut = mixer::cut(mixer::add_gaussian_noise(cut.tokens, options.sigma_x, noise), cut.mask, cut.client_id);
      label = mixer::add_label_noise(label, cfg.num_classes, options.sigma_y, noise);
    }
    UploadCutSmashed up{static_cast<std::uint32_t>(c), std::move(cut), cfg.num_classes, std::move(label)};
    // encode() enforces the zero-row invariant before anything is metered.
    std::vector<std::uint8_t> wire;
    try {
      wire = encode(up);
    } catch (const ProtocolError& e) {
      throw ProtocolError(std::string("round aborted: ") + e.what());
    }
    metrics.client_bytes[c] += payload_meter(up);
    metrics.client_activation_bytes[c] += activation_bytes(up);
    if (log) log->message(up);
    uploads[c] = std::get<UploadCutSmashed>(decode(wire, assigned));
  }

  // Mixer and server, group by group.
  double loss_sum = 0.0;
  std::size_t passes = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& grp = groups[g];
    mixer::CutMixBatch mixed;
    if (grp.k() == 1) {
      const auto c = grp.members[0];
      if (!uploads[c]) throw ProtocolError("round aborted: client " + std::to_string(c) + " sent no data");
      mixed.tokens = uploads[c]->cut.tokens;
      mixed.num_classes = cfg.num_classes;
      mixed.soft_label = uploads[c]->label;
      mixed.group = grp;
    } else {
      std::vector<mixer::CutSmashed> parts;
      std::vector<std::vector<float>> labels;
      mixer::MixAllocation sent;
      for (std::size_t i = 0; i < grp.k(); ++i) {
        const auto c = grp.members[i];
        if (!uploads[c]) continue;
        parts.push_back(uploads[c]->cut);
        labels.push_back(uploads[c]->label);
        sent.counts.push_back(grp.allocation.counts[i]);
      }
      mixed = mixer::cutmix_assemble(parts, labels, sent, m);
      mixed.group = grp;
    }
    std::vector<std::vector<std::uint32_t>> perms;
    if (options.shuffle) {
      Rng shuffle_rng(seed, Stream::kShuffles, substream(round, g));
      auto sh = mixer::shuffle_tokens(mixed, shuffle_rng);
      mixed = std::move(sh.batch);
      perms = std::move(sh.permutations);
    }
    const auto group_id = static_cast<std::uint32_t>(g);
    if (log) log->message(ServerBatch{group_id, options.shuffle, mixed});

    const std::size_t server_passes = options.stepping == ServerStepping::kPerMember ? grp.k() : 1;
    for (std::size_t pass = 0; pass < server_passes; ++pass) {
      auto tokens = Tensor::from_values({mixed.tokens.batch, m, cfg.d_m}, mixed.tokens.values, true);
      const auto loss = tensor::cross_entropy(model::server_forward(cfg, state.server, tokens), mixed.soft_label);
      tensor::backward(loss);
      if (options.on_server_backward) options.on_server_backward(state.server, mixed);
      loss_sum += loss.item_f64();
      ++passes;
      TokenGrid grad{mixed.tokens.batch, m, cfg.d_m, std::vector<float>(tokens.grad().begin(), tokens.grad().end())};
      if (log) log->message(GradientDown{GradientTarget::kGroup, group_id, grad});
      if (options.stepping != ServerStepping::kSummed) {
        state.server_optimizer.step(options.server_lr);
        state.server_optimizer.zero_grad();
        ++metrics.server_updates;
        if (log) log->server_step(options.server_lr);
      }
      if (options.shuffle) grad = mixer::unshuffle_tokens(grad, perms);
      auto routed = route_gradients(grp, grad, options.gradient_mode);
      for (std::size_t i = 0; i < grp.k(); ++i) {
        if (server_passes > 1 && i != pass) continue;
        if (log) log->message(routed[i]);
        fwd[grp.members[i]].grad = std::move(routed[i].grad);
      }
    }
  }
  if (options.stepping == ServerStepping::kSummed) {
    state.server_optimizer.step(options.server_lr);
    state.server_optimizer.zero_grad();
    ++metrics.server_updates;
    if (log) log->server_step(options.server_lr);
  }

  // Clients: backward of the downloaded gradient, then step.
  for (std::size_t c = 0; c < n; ++c) {
    auto& f = fwd[c];
    if (!f.grad) throw ProtocolError("round aborted: client " + std::to_string(c) + " received no gradient");
    if (options.gradient_mode == GradientMode::kUnicast) {
      tensor::backward(tensor::mask_rows(f.smashed, f.mask.bits), f.grad->values);
    } else {
      tensor::backward(f.smashed, f.grad->values);
    }
    state.clients[c].optimizer.step(options.client_lr);
  }

  if (options.fedavg) {
    std::vector<model::ClientSegment> segs;
    for (const auto& c : state.clients) segs.push_back(c.segment);
    const auto avg = fedavg_client_segments(segs);
    for (auto& c : state.clients) assign_segment(avg, c.segment);
  }

  for (auto v : metrics.client_bytes) metrics.total_bytes += v;
  metrics.train_loss = passes ? loss_sum / static_cast<double>(passes) : 0.0;
  metrics.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (log) log->flush();
  ++state.round;
  return metrics;
}

double evaluate_accuracy(const model::ModelConfig& config, const model::ClientSegment& client,
                         const model::ServerSegment& server, const data::Dataset& dataset, std::size_t batch) {
  if (dataset.size() == 0) return 0.0;
  tensor::NoGradGuard no_grad;
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < dataset.size(); begin += batch) {
    const std::size_t b = std::min(batch, dataset.size() - begin);
    const auto images = std::span<const float>(dataset.images).subspan(begin * dataset.image_size(), b * dataset.image_size());
    const auto logits = model::server_forward(config, server, model::client_forward(config, client, images, b));
    const auto v = logits.values();
    for (std::size_t i = 0; i < b; ++i) {
      const auto row = v.subspan(i * config.num_classes, config.num_classes);
      const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      correct += best == dataset.labels[begin + i];
    }
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

}  // namespace cutmixsl::protocol
