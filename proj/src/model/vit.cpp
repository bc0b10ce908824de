// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cutmixsl/model/vit.hpp"

#include <cmath>

#include "cutmixsl/errors.hpp"
#include "cutmixsl/rng.hpp"
#include "cutmixsl/tensor/ops.hpp"

namespace cutmixsl::model {

using namespace tensor;

std::size_t ModelConfig::tokens() const {
  const std::size_t side = image_size / patch_size;
  return side * side;
}

void ModelConfig::validate() const {
  if (image_size == 0 || patch_size == 0 || channels == 0 || d_m == 0 || heads == 0 || mlp_ratio == 0 ||
      num_classes == 0) {
    throw ContractError("model config: sizes must be positive");
  }
  if (image_size % patch_size != 0) {
    throw ContractError("model config: patch_size " + std::to_string(patch_size) + " does not divide image_size " +
                        std::to_string(image_size));
  }
  if (d_m % heads != 0) {
    throw ContractError("model config: heads " + std::to_string(heads) + " does not divide d_m " +
                        std::to_string(d_m));
  }
}

ModelConfig ModelConfig::paper() { return ModelConfig{}; }

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.d_m = 32;
  c.depth = 2;
  c.heads = 2;
  return c;
}

namespace {

Tensor trunc_normal(Shape shape, std::uint64_t seed, std::uint64_t substream) {
  Rng rng(seed, Stream::kInit, substream);
  std::vector<float> v(numel(shape));
  for (auto& x : v) {
    double z = rng.normal();
    while (std::abs(z) > 2.0) z = rng.normal();
    x = static_cast<float>(0.02 * z);
  }
  return Tensor::from_values(std::move(shape), std::move(v), true);
}

Tensor zeros(Shape shape) { return Tensor::zeros(std::move(shape), true); }
Tensor ones(Shape shape) { return Tensor::full(std::move(shape), 1.0f, true); }

Tensor copy(const Tensor& t) { return t.clone(true); }

std::vector<Tensor> values_of(const std::vector<NamedTensor>& named) {
  std::vector<Tensor> out;
  out.reserve(named.size());
  for (const auto& [_, t] : named) out.push_back(t);
  return out;
}

}  // namespace

std::vector<NamedTensor> ClientSegment::named_parameters() const {
  return {{"client.patch_embed.weight", patch_embed_weight},
          {"client.patch_embed.bias", patch_embed_bias},
          {"client.pos_embed", positional_embedding}};
}

std::vector<Tensor> ClientSegment::parameters() const { return values_of(named_parameters()); }

ClientSegment ClientSegment::clone() const {
  return {copy(patch_embed_weight), copy(patch_embed_bias), copy(positional_embedding)};
}

std::vector<NamedTensor> ServerSegment::named_parameters() const {
  std::vector<NamedTensor> out{{"server.class_token", class_token}};
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    const std::string p = "server.blocks." + std::to_string(i) + ".";
    out.emplace_back(p + "ln1.weight", b.ln1_weight);
    out.emplace_back(p + "ln1.bias", b.ln1_bias);
    out.emplace_back(p + "attn.qkv.weight", b.qkv_weight);
    out.emplace_back(p + "attn.qkv.bias", b.qkv_bias);
    out.emplace_back(p + "attn.proj.weight", b.proj_weight);
    out.emplace_back(p + "attn.proj.bias", b.proj_bias);
    out.emplace_back(p + "ln2.weight", b.ln2_weight);
    out.emplace_back(p + "ln2.bias", b.ln2_bias);
    out.emplace_back(p + "mlp.fc1.weight", b.fc1_weight);
    out.emplace_back(p + "mlp.fc1.bias", b.fc1_bias);
    out.emplace_back(p + "mlp.fc2.weight", b.fc2_weight);
    out.emplace_back(p + "mlp.fc2.bias", b.fc2_bias);
  }
  out.emplace_back("server.norm.weight", norm_weight);
  out.emplace_back("server.norm.bias", norm_bias);
  out.emplace_back("server.head.weight", head_weight);
  out.emplace_back("server.head.bias", head_bias);
  return out;
}

std::vector<Tensor> ServerSegment::parameters() const { return values_of(named_parameters()); }

ServerSegment ServerSegment::clone() const {
  ServerSegment s;
  for (const auto& b : blocks) {
    s.blocks.push_back({copy(b.ln1_weight), copy(b.ln1_bias), copy(b.qkv_weight), copy(b.qkv_bias),
                        copy(b.proj_weight), copy(b.proj_bias), copy(b.ln2_weight), copy(b.ln2_bias),
                        copy(b.fc1_weight), copy(b.fc1_bias), copy(b.fc2_weight), copy(b.fc2_bias)});
  }
  s.class_token = copy(class_token);
  s.norm_weight = copy(norm_weight);
  s.norm_bias = copy(norm_bias);
  s.head_weight = copy(head_weight);
  s.head_bias = copy(head_bias);
  return s;
}

std::pair<ClientSegment, ServerSegment> init_parameters(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t d = config.d_m, hidden = config.mlp_ratio * config.d_m;
  std::uint64_t sub = 0;
  ClientSegment client{trunc_normal({d, config.patch_pixels()}, seed, sub++), zeros({d}),
                       zeros({config.tokens(), d})};
  ServerSegment server;
  server.class_token = trunc_normal({1, d}, seed, sub++);
  for (std::size_t i = 0; i < config.depth; ++i) {
    TransformerBlock b;
    b.ln1_weight = ones({d});
    b.ln1_bias = zeros({d});
    b.qkv_weight = trunc_normal({3 * d, d}, seed, sub++);
    b.qkv_bias = zeros({3 * d});
    b.proj_weight = trunc_normal({d, d}, seed, sub++);
    b.proj_bias = zeros({d});
    b.ln2_weight = ones({d});
    b.ln2_bias = zeros({d});
    b.fc1_weight = trunc_normal({hidden, d}, seed, sub++);
    b.fc1_bias = zeros({hidden});
    b.fc2_weight = trunc_normal({d, hidden}, seed, sub++);
    b.fc2_bias = zeros({d});
    server.blocks.push_back(std::move(b));
  }
  server.norm_weight = ones({d});
  server.norm_bias = zeros({d});
  server.head_weight = trunc_normal({config.num_classes, d}, seed, sub++);
  server.head_bias = zeros({config.num_classes});
  return {std::move(client), std::move(server)};
}

Tensor extract_patches(const ModelConfig& config, std::span<const float> images, std::size_t batch) {
  const std::size_t c = config.channels, s = config.image_size, p = config.patch_size;
  if (images.size() != batch * config.image_pixels()) {
    throw DimensionError("client_forward: expected " + std::to_string(batch) + " images of " +
                         std::to_string(c) + "x" + std::to_string(s) + "x" + std::to_string(s) + ", got " +
                         std::to_string(images.size()) + " values");
  }
  const std::size_t grid = s / p, m = config.tokens(), pp = config.patch_pixels();
  std::vector<float> out(batch * m * pp);
  float* dst = out.data();
  for (std::size_t b = 0; b < batch; ++b) {
    const float* img = images.data() + b * config.image_pixels();
    for (std::size_t gy = 0; gy < grid; ++gy) {
      for (std::size_t gx = 0; gx < grid; ++gx) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          for (std::size_t y = 0; y < p; ++y) {
            const float* row = img + (ch * s + gy * p + y) * s + gx * p;
            for (std::size_t x = 0; x < p; ++x) *dst++ = row[x];
          }
        }
      }
    }
  }
  return Tensor::from_values({batch, m, pp}, std::move(out));
}

Tensor client_forward(const ModelConfig& config, const ClientSegment& seg, std::span<const float> images,
                      std::size_t batch) {
  if (seg.patch_embed_weight.dim(1) != config.patch_pixels() || seg.positional_embedding.dim(0) != config.tokens()) {
    throw DimensionError("client_forward: segment does not match config");
  }
  const Tensor patches = extract_patches(config, images, batch);
  return add_rows(linear(patches, seg.patch_embed_weight, seg.patch_embed_bias), seg.positional_embedding);
}

namespace {

Tensor block_forward(const TransformerBlock& blk, const Tensor& x, std::size_t batch, std::size_t tokens,
                     std::size_t heads, std::size_t d) {
  const Tensor h = layer_norm(x, blk.ln1_weight, blk.ln1_bias);
  const Tensor qkv = linear(h, blk.qkv_weight, blk.qkv_bias);
  const Tensor q = split_heads(qkv, batch, tokens, heads, 0, 3);
  const Tensor k = split_heads(qkv, batch, tokens, heads, 1, 3);
  const Tensor v = split_heads(qkv, batch, tokens, heads, 2, 3);
  const float inv = 1.0f / std::sqrt(static_cast<float>(d / heads));
  const Tensor att = softmax(scale(bmm(q, k, true), inv));
  const Tensor mixed = merge_heads(bmm(att, v), batch, heads);
  const Tensor x1 = add(x, linear(mixed, blk.proj_weight, blk.proj_bias));
  const Tensor h2 = layer_norm(x1, blk.ln2_weight, blk.ln2_bias);
  return add(x1, linear(gelu(linear(h2, blk.fc1_weight, blk.fc1_bias)), blk.fc2_weight, blk.fc2_bias));
}

}  // namespace

Tensor server_forward(const ModelConfig& config, const ServerSegment& seg, const Tensor& tokens) {
  const std::size_t d = seg.class_token.dim(1);
  if (tokens.rank() != 3 || tokens.dim(2) != d) {
    throw DimensionError("server_forward: tokens " + shape_string(tokens.shape()) + " do not match d_m " +
                         std::to_string(d));
  }
  const std::size_t batch = tokens.dim(0), m = tokens.dim(1), t = m + 1;
  // Interleave the class row in front of every sample as row 0.
  const Tensor stacked = concat({reshape(tokens, {batch * m, d}), seg.class_token});
  std::vector<std::uint32_t> order;
  order.reserve(batch * t);
  for (std::size_t b = 0; b < batch; ++b) {
    order.push_back(static_cast<std::uint32_t>(batch * m));
    for (std::size_t j = 0; j < m; ++j) order.push_back(static_cast<std::uint32_t>(b * m + j));
  }
  Tensor x = gather_rows(stacked, order);
  for (const auto& blk : seg.blocks) x = block_forward(blk, x, batch, t, config.heads, d);
  std::vector<std::uint32_t> cls(batch);
  for (std::size_t b = 0; b < batch; ++b) cls[b] = static_cast<std::uint32_t>(b * t);
  const Tensor pooled = layer_norm(gather_rows(x, cls), seg.norm_weight, seg.norm_bias);
  return linear(pooled, seg.head_weight, seg.head_bias);
}

bool decays(const std::string& name, const Tensor& t) {
  return t.rank() == 2 && name.size() > 7 && name.compare(name.size() - 7, 7, ".weight") == 0;
}

}  // namespace cutmixsl::model
