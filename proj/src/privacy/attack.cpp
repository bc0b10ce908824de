// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cutmixsl/privacy/attack.hpp"

#include <algorithm>
#include <cmath>

#include "cutmixsl/errors.hpp"
#include "cutmixsl/mixer/mixer.hpp"
#include "cutmixsl/model/optimizer.hpp"
#include "cutmixsl/tensor/ops.hpp"

namespace cutmixsl::privacy {

namespace {

using tensor::Tensor;

// Substreams of Stream::kAttack.
constexpr std::uint64_t kSubsetStream = 0;
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kOrderStream = 2;
// make_attack_set(stream) uses 16 + 4 stream + {0 partners, 1 masks, 2 mix, 3 noise}.
std::uint64_t set_stream(std::uint64_t stream, std::uint64_t purpose) { return 16 + 4 * stream + purpose; }

constexpr std::size_t kForwardChunk = 256;

struct Names {
  Representation r;
  const char* name;
};
constexpr Names kNames[] = {
    {Representation::kSmashed, "smashed"},           {Representation::kCutSmashed, "cutsmashed"},
    {Representation::kMixup, "mixup"},               {Representation::kPatchCutMix, "patch_cutmix"},
    {Representation::kShuffledCutMix, "shuffled_cutmix"}, {Representation::kRaw, "raw"},
    {Representation::kZero, "zero"},
};

bool is_mixed(Representation r) {
  return r == Representation::kMixup || r == Representation::kPatchCutMix || r == Representation::kShuffledCutMix;
}

// Copies patch j (all channels) of `src` into `dst`.
void copy_patch(const model::ModelConfig& cfg, const float* src, float* dst, std::size_t j) {
  const std::size_t grid = cfg.image_size / cfg.patch_size;
  const std::size_t y0 = (j / grid) * cfg.patch_size, x0 = (j % grid) * cfg.patch_size;
  for (std::size_t c = 0; c < cfg.channels; ++c) {
    for (std::size_t y = y0; y < y0 + cfg.patch_size; ++y) {
      const std::size_t off = (c * cfg.image_size + y) * cfg.image_size + x0;
      std::copy(src + off, src + off + cfg.patch_size, dst + off);
    }
  }
}

mixer::TokenGrid smash_all(const model::ModelConfig& cfg, const model::ClientSegment& client,
                           const data::Dataset& ds) {
  tensor::NoGradGuard guard;
  const std::size_t per = ds.image_size();
  auto grid = mixer::TokenGrid::zeros(ds.size(), cfg.tokens(), cfg.d_m);
  for (std::size_t begin = 0; begin < ds.size(); begin += kForwardChunk) {
    const std::size_t n = std::min(kForwardChunk, ds.size() - begin);
    const auto out = model::client_forward(
        cfg, client, std::span<const float>(ds.images.data() + begin * per, n * per), n);
    std::copy(out.values().begin(), out.values().end(), grid.values.begin() + begin * cfg.tokens() * cfg.d_m);
  }
  return grid;
}

struct Layer {
  Tensor weight, bias;
};

std::vector<Layer> make_decoder(const AttackConfig& cfg, std::size_t in, std::size_t out,
                                std::span<const float> target_mean) {
  Rng rng(cfg.seed, Stream::kAttack, kInitStream);
  std::vector<Layer> layers;
  std::size_t fan_in = in;
  for (std::size_t l = 0; l <= cfg.decoder_depth; ++l) {
    const bool last = l == cfg.decoder_depth;
    const std::size_t width = last ? out : cfg.decoder_width;
    const double std = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<float> w(width * fan_in);
    for (auto& v : w) v = static_cast<float>(std * rng.normal());
    std::vector<float> b(width, 0.0f);
    if (last) {
      std::fill(w.begin(), w.end(), 0.0f);
      std::copy(target_mean.begin(), target_mean.end(), b.begin());
    }
    layers.push_back({Tensor::from_values({width, fan_in}, std::move(w), true),
                      Tensor::from_values({width}, std::move(b), true)});
    fan_in = width;
  }
  return layers;
}

Tensor decode(const std::vector<Layer>& layers, const Tensor& x) {
  Tensor h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    h = tensor::linear(h, layers[l].weight, layers[l].bias);
    if (l + 1 < layers.size()) h = tensor::gelu(h);
  }
  return h;
}

std::vector<float> rows(const std::vector<float>& src, std::size_t dim, std::span<const std::size_t> idx) {
  std::vector<float> out(idx.size() * dim);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::copy_n(src.begin() + idx[r] * dim, dim, out.begin() + r * dim);
  }
  return out;
}

}  // namespace

std::string representation_name(Representation r) {
  for (const auto& n : kNames) {
    if (n.r == r) return n.name;
  }
  return "unknown";
}

Representation parse_representation(const std::string& name) {
  for (const auto& n : kNames) {
    if (name == n.name) return n.r;
  }
  throw ContractError("unknown representation '" + name + "'");
}

std::string target_name(AttackTarget t) { return t == AttackTarget::kFirstClient ? "first_client" : "mixed_image"; }

AttackTarget parse_target(const std::string& name) {
  if (name == "first_client") return AttackTarget::kFirstClient;
  if (name == "mixed_image") return AttackTarget::kMixedImage;
  throw ContractError("unknown attack target '" + name + "'");
}

void AttackConfig::validate() const {
  if (!(train_fraction > 0.0) || train_fraction > 1.0) {
    throw ContractError("attack train fraction must lie in (0, 1], got " + std::to_string(train_fraction));
  }
  if (decoder_depth > 0 && decoder_width == 0) throw ContractError("attack decoder width must be positive");
  if (epochs == 0 || batch_size == 0) throw ContractError("attack epochs and batch size must be positive");
  if (!(keep_ratio > 0.0) || keep_ratio > 1.0) throw ContractError("attack keep ratio must lie in (0, 1]");
  if (!(mix_alpha > 0.0)) throw ContractError("attack mix alpha must be positive");
  if (sigma_x < 0.0) throw ContractError("attack sigma_x must be non-negative");
}

AttackSet make_attack_set(const AttackConfig& config, const model::ModelConfig& model,
                          const model::ClientSegment& client, const data::Dataset& ds, std::uint64_t stream) {
  model.validate();
  if (ds.channels != model.channels || ds.height != model.image_size || ds.width != model.image_size) {
    throw DimensionError("attack dataset images do not match the model geometry");
  }
  const std::size_t n = ds.size(), m = model.tokens(), d = model.d_m, px = ds.image_size();
  AttackSet set;
  set.samples = n;
  set.target_dim = px;
  set.targets = ds.images;

  if (config.representation == Representation::kRaw) {
    set.input_dim = px;
    set.inputs = ds.images;
  } else if (config.representation == Representation::kZero) {
    set.input_dim = m * d;
    set.inputs.assign(n * m * d, 0.0f);
  } else {
    set.input_dim = m * d;
    auto smashed = smash_all(model, client, ds);
    set.inputs.assign(n * m * d, 0.0f);

    std::vector<std::uint32_t> partner(n);
    if (is_mixed(config.representation)) {
      if (n < 2) throw ContractError("mixed attack representations need at least two samples");
      Rng prng(config.seed, Stream::kAttack, set_stream(stream, 0));
      for (std::size_t i = 0; i < n; ++i) {
        auto j = static_cast<std::uint32_t>(prng.below(n - 1));
        partner[i] = j >= i ? j + 1 : j;
      }
    }
    Rng mask_rng(config.seed, Stream::kAttack, set_stream(stream, 1));
    Rng mix_rng(config.seed, Stream::kAttack, set_stream(stream, 2));
    mixer::CutoutMasker masker(config.keep_ratio, mixer::CutoutMode::kPerIteration, mask_rng);

    for (std::size_t i = 0; i < n; ++i) {
      float* in = set.inputs.data() + i * m * d;
      const float* own = smashed.row(i, 0);
      float* target = set.targets.data() + i * px;
      switch (config.representation) {
        case Representation::kSmashed:
          std::copy_n(own, m * d, in);
          break;
        case Representation::kCutSmashed: {
          const auto mask = masker.next(m);
          for (std::size_t j = 0; j < m; ++j) {
            if (mask.bits[j]) std::copy_n(own + j * d, d, in + j * d);
          }
          break;
        }
        case Representation::kMixup: {
          const double g1 = mix_rng.gamma(config.mix_alpha), g2 = mix_rng.gamma(config.mix_alpha);
          const double lambda = g1 / (g1 + g2);
          const float* other = smashed.row(partner[i], 0);
          for (std::size_t e = 0; e < m * d; ++e) {
            in[e] = static_cast<float>(lambda * own[e] + (1.0 - lambda) * other[e]);
          }
          if (config.target == AttackTarget::kMixedImage) {
            const auto a = ds.image(i), b = ds.image(partner[i]);
            for (std::size_t e = 0; e < px; ++e) target[e] = static_cast<float>(lambda * a[e] + (1.0 - lambda) * b[e]);
          }
          break;
        }
        case Representation::kPatchCutMix:
        case Representation::kShuffledCutMix: {
          const auto alloc = mixer::sample_mixing_counts(2, config.mix_alpha, m, mix_rng);
          const auto masks = mixer::generate_mask_set(alloc, m, mix_rng);
          const float* other = smashed.row(partner[i], 0);
          std::vector<std::uint32_t> order(m);
          for (std::size_t j = 0; j < m; ++j) order[j] = static_cast<std::uint32_t>(j);
          if (config.representation == Representation::kShuffledCutMix) order = mix_rng.permutation(m);
          for (std::size_t j = 0; j < m; ++j) {
            const std::size_t src = order[j];
            std::copy_n((masks.masks[0].bits[src] ? own : other) + src * d, d, in + j * d);
          }
          if (config.target == AttackTarget::kMixedImage) {
            const float* b = ds.images.data() + partner[i] * px;
            for (std::size_t j = 0; j < m; ++j) {
              if (!masks.masks[0].bits[j]) copy_patch(model, b, target, j);
            }
          }
          break;
        }
        default:
          break;
      }
    }
  }

  if (config.sigma_x > 0.0) {
    Rng noise(config.seed, Stream::kAttack, set_stream(stream, 3));
    for (auto& v : set.inputs) v += static_cast<float>(config.sigma_x * noise.normal());
  }
  return set;
}

AttackReport run_attack(const AttackConfig& config, const AttackSnapshot& snapshot) {
  config.validate();
  const auto train_full = make_attack_set(config, snapshot.config, snapshot.client, snapshot.train, 0);
  const auto test = make_attack_set(config, snapshot.config, snapshot.client, snapshot.test, 1);
  if (test.samples == 0) throw ContractError("attack test split is empty");

  // Fraction of the train split, chosen without replacement.
  Rng subset_rng(config.seed, Stream::kAttack, kSubsetStream);
  auto order = subset_rng.permutation(train_full.samples);
  const auto n_train = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(config.train_fraction * static_cast<double>(train_full.samples) + 0.5)));
  std::vector<std::size_t> chosen(order.begin(), order.begin() + std::min(n_train, order.size()));
  const std::size_t in_dim = train_full.input_dim, out_dim = train_full.target_dim;
  const auto x_train = rows(train_full.inputs, in_dim, chosen);
  const auto y_train = rows(train_full.targets, out_dim, chosen);

  // One input scale for all features, fitted on the train inputs.
  double sq = 0.0;
  for (float v : x_train) sq += static_cast<double>(v) * v;
  const double rms = std::sqrt(sq / static_cast<double>(std::max<std::size_t>(1, x_train.size())));
  const float input_scale = rms > 0.0 ? static_cast<float>(1.0 / rms) : 1.0f;

  std::vector<float> target_mean(out_dim, 0.0f);
  for (std::size_t r = 0; r < chosen.size(); ++r) {
    for (std::size_t e = 0; e < out_dim; ++e) target_mean[e] += y_train[r * out_dim + e];
  }
  for (auto& v : target_mean) v /= static_cast<float>(chosen.size());

  auto layers = make_decoder(config, in_dim, out_dim, target_mean);
  std::vector<model::NamedTensor> params;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    params.emplace_back("decoder." + std::to_string(l) + ".weight", layers[l].weight);
    params.emplace_back("decoder." + std::to_string(l) + ".bias", layers[l].bias);
  }
  model::AdamWConfig adam;
  adam.lr = config.lr;
  adam.weight_decay = config.weight_decay;
  model::AdamW optimizer(params, adam);

  Rng order_rng(config.seed, Stream::kAttack, kOrderStream);
  std::vector<std::size_t> idx(chosen.size());
  AttackReport report;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t r = 0; r < idx.size(); ++r) idx[r] = r;
    order_rng.shuffle(std::span<std::size_t>(idx));
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < idx.size(); begin += config.batch_size) {
      const std::size_t b = std::min(config.batch_size, idx.size() - begin);
      const std::span<const std::size_t> batch(idx.data() + begin, b);
      auto x = rows(x_train, in_dim, batch);
      for (auto& v : x) v *= input_scale;
      const auto y = rows(y_train, out_dim, batch);
      optimizer.zero_grad();
      const auto loss = tensor::mse_loss(decode(layers, Tensor::from_values({b, in_dim}, std::move(x))), y);
      tensor::backward(loss);
      optimizer.step(config.lr);
      epoch_loss += loss.item_f64() * static_cast<double>(b);
    }
    report.final_train_mse = epoch_loss / static_cast<double>(idx.size());
  }

  // Held-out MSE and the constant-predictor floor.
  tensor::NoGradGuard guard;
  double sse = 0.0;
  for (std::size_t begin = 0; begin < test.samples; begin += kForwardChunk) {
    const std::size_t b = std::min(kForwardChunk, test.samples - begin);
    std::vector<float> x(test.inputs.begin() + begin * in_dim, test.inputs.begin() + (begin + b) * in_dim);
    for (auto& v : x) v *= input_scale;
    const auto pred = decode(layers, Tensor::from_values({b, in_dim}, std::move(x)));
    const auto p = pred.values();
    for (std::size_t e = 0; e < b * out_dim; ++e) {
      const double diff = static_cast<double>(p[e]) - test.targets[begin * out_dim + e];
      sse += diff * diff;
    }
  }
  double var = 0.0;
  for (std::size_t e = 0; e < out_dim; ++e) {
    double mean = 0.0, m2 = 0.0;
    for (std::size_t r = 0; r < test.samples; ++r) mean += test.targets[r * out_dim + e];
    mean /= static_cast<double>(test.samples);
    for (std::size_t r = 0; r < test.samples; ++r) {
      const double diff = test.targets[r * out_dim + e] - mean;
      m2 += diff * diff;
    }
    var += m2 / static_cast<double>(test.samples);
  }

  report.representation = representation_name(config.representation);
  report.test_mse = sse / static_cast<double>(test.samples * out_dim);
  report.train_samples = chosen.size();
  report.test_samples = test.samples;
  report.target_variance = var / static_cast<double>(out_dim);
  report.relative_mse = report.target_variance > 0.0 ? report.test_mse / report.target_variance : 0.0;
  report.decoder = "mlp";
  report.config = config;
  return report;
}

nlohmann::json to_json(const AttackConfig& c) {
  return {{"representation", representation_name(c.representation)},
          {"train_fraction", c.train_fraction},
          {"decoder_width", c.decoder_width},
          {"decoder_depth", c.decoder_depth},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"keep_ratio", c.keep_ratio},
          {"mix_alpha", c.mix_alpha},
          {"sigma_x", c.sigma_x},
          {"target", target_name(c.target)},
          {"seed", c.seed}};
}

AttackConfig attack_config_from_json(const nlohmann::json& j) {
  AttackConfig c;
  if (j.contains("representation")) c.representation = parse_representation(j.at("representation").get<std::string>());
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  c.decoder_width = j.value("decoder_width", c.decoder_width);
  c.decoder_depth = j.value("decoder_depth", c.decoder_depth);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.keep_ratio = j.value("keep_ratio", c.keep_ratio);
  c.mix_alpha = j.value("mix_alpha", c.mix_alpha);
  c.sigma_x = j.value("sigma_x", c.sigma_x);
  if (j.contains("target")) c.target = parse_target(j.at("target").get<std::string>());
  c.seed = j.value("seed", c.seed);
  return c;
}

nlohmann::json to_json(const AttackReport& r) {
  return {{"representation", r.representation},
          {"test_mse", r.test_mse},
          {"train_samples", r.train_samples},
          {"test_samples", r.test_samples},
          {"target_variance", r.target_variance},
          {"relative_mse", r.relative_mse},
          {"final_train_mse", r.final_train_mse},
          {"decoder", r.decoder},
          {"config", to_json(r.config)}};
}

}  // namespace cutmixsl::privacy
