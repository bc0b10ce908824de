// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cutmixsl/runner/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "cutmixsl/errors.hpp"
#include "cutmixsl/model/checkpoint.hpp"

namespace cutmixsl::runner {

namespace {

// Substreams of Stream::kData owned by the runner; the synthetic generator
// uses the low ones.
constexpr std::uint64_t kSubsetStream = 1ull << 50;
constexpr std::uint64_t kPartitionStream = (1ull << 50) + 1;
constexpr std::uint64_t kEpochStream = 2ull << 48;

std::string fmt(const char* spec, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

data::Dataset take(const data::Dataset& ds, std::size_t count, Rng rng) {
  if (count == 0 || count >= ds.size()) return ds;
  auto order = rng.permutation(ds.size());
  std::vector<std::size_t> idx(order.begin(), order.begin() + count);
  return data::subset(ds, idx);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << text;
}

}  // namespace

LoadedData load_data(const ExperimentConfig& config) {
  LoadedData out;
  if (config.data.kind == "synthetic") {
    auto spec = config.data.synthetic;
    spec.num_samples = config.data.train_samples;
    out.train = data::make_synthetic(spec, 0);
    spec.num_samples = config.data.test_samples;
    out.test = data::make_synthetic(spec, 1);
  } else {
    std::string dir = config.data.path;
    if (dir.empty()) {
      const char* env = std::getenv("CUTMIXSL_DATA_DIR");
      if (env) dir = env;
    }
    if (dir.empty()) throw ContractError("cifar10 needs --data-dir or CUTMIXSL_DATA_DIR");
    auto split = data::load_cifar10(dir, false);
    out.train = take(split.train, config.data.train_samples, Rng(config.seed, Stream::kData, kSubsetStream));
    out.test = take(split.test, config.data.test_samples, Rng(config.seed, Stream::kData, kSubsetStream + 2));
  }
  if (config.data.standardize) {
    const auto stats = data::channel_stats(out.train);
    data::standardize(out.train, stats);
    data::standardize(out.test, stats);
  }
  return out;
}

std::string metrics_csv_header(std::size_t n_clients) {
  std::string h = "# metrics_version=" + std::to_string(kMetricsVersion) + "\nround,epoch";
  for (std::size_t i = 0; i < n_clients; ++i) h += ",client_" + std::to_string(i) + "_bytes";
  return h + ",total_bytes,server_updates,loss,acc\n";
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  return run_experiment(config, load_data(config));
}

ExperimentResult run_experiment(const ExperimentConfig& config, const LoadedData& data) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto model = config.model_config();
  if (data.train.num_classes != model.num_classes || data.train.channels != model.channels ||
      data.train.height != model.image_size) {
    throw ContractError("dataset geometry does not match the model profile");
  }

  Rng part_rng(config.seed, Stream::kData, kPartitionStream);
  const auto part = data::partition(data.train, config.n_clients, config.partition, config.dirichlet_mu, part_rng);
  std::size_t max_local = 0;
  for (const auto& c : part.clients) max_local = std::max(max_local, c.size());
  const std::size_t rounds_per_epoch = (max_local + config.batch_size - 1) / config.batch_size;
  const std::size_t total_rounds = rounds_per_epoch * config.epochs;

  auto state = protocol::SystemState::create(model, config.n_clients, config.seed, config.optimizer,
                                             config.keep_ratio, config.mask_mode);
  std::unique_ptr<protocol::TranscriptWriter> transcript;
  if (!config.transcript.empty()) {
    transcript = std::make_unique<protocol::TranscriptWriter>(config.transcript);
    transcript->preamble(to_json(config).dump());
    state.transcript = transcript.get();
  }

  protocol::RoundOptions opts;
  opts.k_way = config.resolved_k_way();
  opts.alpha = method_mixes(config.method) ? config.alpha : mixer::kAlphaInfinity;
  opts.shuffle = config.shuffle;
  opts.gradient_mode = config.gradient_mode;
  opts.stepping = config.stepping();
  opts.sigma_x = config.sigma_x;
  opts.sigma_y = config.sigma_y;
  opts.seed = config.seed;

  ExperimentResult result;
  result.model = model;
  result.csv = metrics_csv_header(config.n_clients);
  const std::size_t px = data.train.image_size(), classes = model.num_classes;
  std::vector<std::vector<std::size_t>> order(config.n_clients);
  std::size_t global = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t c = 0; c < config.n_clients; ++c) {
      order[c] = part.clients[c];
      Rng rng(config.seed, Stream::kData, kEpochStream + (epoch << 16) + c);
      rng.shuffle(std::span<std::size_t>(order[c]));
    }
    for (std::size_t r = 0; r < rounds_per_epoch; ++r, ++global) {
      std::vector<protocol::ClientBatch> batches(config.n_clients);
      for (std::size_t c = 0; c < config.n_clients; ++c) {
        auto& b = batches[c];
        const auto& local = order[c];
        if (local.empty()) throw ContractError("client " + std::to_string(c) + " holds no samples");
        b.batch = config.batch_size;
        b.images.resize(b.batch * px);
        b.labels.assign(b.batch * classes, 0.0f);
        for (std::size_t s = 0; s < b.batch; ++s) {
          const std::size_t idx = local[(r * config.batch_size + s) % local.size()];
          const auto img = data.train.image(idx);
          std::copy(img.begin(), img.end(), b.images.begin() + s * px);
          b.labels[s * classes + data.train.labels[idx]] = 1.0f;
        }
      }
      const std::size_t warmup = config.warmup_epochs * rounds_per_epoch;
      const double lr = model::warmup_cosine(config.optimizer.lr, global, warmup, total_rounds);
      opts.server_lr = opts.client_lr = lr;
      const bool last_in_epoch = r + 1 == rounds_per_epoch;
      opts.fedavg = config.resolved_fedavg() &&
                    (config.fedavg_every == 0 ? last_in_epoch : (global + 1) % config.fedavg_every == 0);

      auto metrics = protocol::run_round(state, batches, opts);

      const bool final_round = global + 1 == total_rounds;
      const bool eval_epoch = config.eval_every > 0 && (epoch + 1) % config.eval_every == 0;
      if (last_in_epoch && (eval_epoch || final_round)) {
        double acc = 0.0;
        if (opts.fedavg) {
          acc = protocol::evaluate_accuracy(model, state.clients[0].segment, state.server, data.test);
        } else {
          for (const auto& c : state.clients) {
            acc += protocol::evaluate_accuracy(model, c.segment, state.server, data.test);
          }
          acc /= static_cast<double>(state.clients.size());
        }
        metrics.eval_accuracy = acc;
        result.epoch_accuracy.push_back(acc);
        result.best_accuracy = std::max(result.best_accuracy, acc);
        result.final_accuracy = acc;
      }

      std::string row = std::to_string(metrics.round) + "," + std::to_string(epoch);
      for (auto bytes : metrics.client_bytes) row += "," + std::to_string(bytes);
      row += "," + std::to_string(metrics.total_bytes) + "," + std::to_string(metrics.server_updates) + "," +
             fmt("%.9g", metrics.train_loss) + "," + (metrics.eval_accuracy ? fmt("%.6f", *metrics.eval_accuracy) : "");
      result.csv += row + "\n";

      result.total_bytes += metrics.total_bytes;
      for (auto a : metrics.client_activation_bytes) result.activation_bytes += a;
      result.sequence_bytes += metrics.sequence_bytes;
      result.server_updates += metrics.server_updates;
      result.rounds.push_back(std::move(metrics));
      result.round_epoch.push_back(epoch);
    }
  }
  if (transcript) transcript->flush();

  result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.client = state.clients[0].segment.clone();
  result.server = state.server.clone();
  result.summary = {{"metrics_version", kMetricsVersion},
                    {"method", method_name(config.method)},
                    {"best_accuracy", result.best_accuracy},
                    {"final_accuracy", result.final_accuracy},
                    {"epoch_accuracy", result.epoch_accuracy},
                    {"total_uplink_bytes", result.total_bytes},
                    {"activation_bytes", result.activation_bytes},
                    {"sequence_bytes", result.sequence_bytes},
                    {"server_updates", result.server_updates},
                    {"rounds", result.rounds.size()},
                    {"rounds_per_epoch", rounds_per_epoch},
                    {"wall_time_s", result.wall_time_s},
                    {"config", to_json(config)}};

  if (!config.output.empty()) {
    std::filesystem::create_directories(config.output);
    write_file(std::filesystem::path(config.output) / "metrics.csv", result.csv);
    write_file(std::filesystem::path(config.output) / "summary.json", result.summary.dump(2) + "\n");
    auto params = result.client.named_parameters();
    for (auto& p : result.server.named_parameters()) params.push_back(std::move(p));
    model::save_checkpoint((std::filesystem::path(config.output) / "model.ckpt").string(), params);
  }
  return result;
}

}  // namespace cutmixsl::runner
