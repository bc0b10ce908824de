// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "cutmixsl/data/dataset.hpp"
#include "cutmixsl/errors.hpp"

namespace cutmixsl::data {

namespace {

void add_bumps(std::vector<double>& field, const SyntheticSpec& spec, Rng& rng) {
  const std::size_t s = spec.image_size, plane = s * s;
  for (std::size_t b = 0; b < spec.variation_blobs; ++b) {
    const double cx = rng.uniform() * s, cy = rng.uniform() * s;
    const double radius = s * (0.1 + 0.15 * rng.uniform());
    for (std::size_t ch = 0; ch < spec.channels; ++ch) {
      const double amp = spec.variation * rng.normal();
      for (std::size_t y = 0; y < s; ++y) {
        for (std::size_t x = 0; x < s; ++x) {
          const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
          field[ch * plane + y * s + x] += amp * std::exp(-(dx * dx + dy * dy) / (2 * radius * radius));
        }
      }
    }
  }
}

}  // namespace

std::vector<std::vector<float>> synthetic_class_means(const SyntheticSpec& spec) {
  if (spec.classes == 0 || spec.image_size == 0 || spec.channels == 0) {
    throw ContractError("make_synthetic: sizes must be positive");
  }
  const std::size_t s = spec.image_size, plane = s * s, n = spec.channels * plane;
  if (spec.classes > n) throw ContractError("make_synthetic: more classes than pixels");
  Rng rng(spec.seed, Stream::kData, 0);
  std::vector<std::vector<double>> basis;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    std::vector<double> u(n, 0.0);
    for (std::size_t b = 0; b < std::max<std::size_t>(spec.blobs, 1); ++b) {
      const double cx = rng.uniform() * s, cy = rng.uniform() * s;
      const double radius = s * (0.125 + 0.125 * rng.uniform());
      for (std::size_t ch = 0; ch < spec.channels; ++ch) {
        const double amp = rng.normal();
        for (std::size_t y = 0; y < s; ++y) {
          for (std::size_t x = 0; x < s; ++x) {
            const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            u[ch * plane + y * s + x] += amp * std::exp(-(dx * dx + dy * dy) / (2 * radius * radius));
          }
        }
      }
    }
    // Gram-Schmidt so every pair of class means sits at the same distance.
    for (const auto& q : basis) {
      double d = 0;
      for (std::size_t e = 0; e < n; ++e) d += u[e] * q[e];
      for (std::size_t e = 0; e < n; ++e) u[e] -= d * q[e];
    }
    double norm = 0;
    for (double v : u) norm += v * v;
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      u.assign(n, 0.0);
      u[basis.size()] = 1.0;
      norm = 1.0;
    }
    for (auto& v : u) v /= norm;
    basis.push_back(std::move(u));
  }
  std::vector<std::vector<float>> means;
  if (spec.classes == 1) {
    means.emplace_back(n, 0.5f);
    return means;
  }
  // Orthonormal directions r_c: |r_a - r_b| = sqrt(2) * radius.
  const double radius = spec.separation * spec.noise / std::sqrt(2.0);
  for (const auto& u : basis) {
    std::vector<float> m(n);
    for (std::size_t e = 0; e < n; ++e) m[e] = static_cast<float>(0.5 + radius * u[e]);
    means.push_back(std::move(m));
  }
  return means;
}

Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t sample_stream) {
  const auto means = synthetic_class_means(spec);
  Dataset ds;
  ds.channels = spec.channels;
  ds.height = ds.width = spec.image_size;
  ds.num_classes = spec.classes;
  ds.labels.resize(spec.num_samples);
  for (std::size_t i = 0; i < spec.num_samples; ++i) ds.labels[i] = static_cast<std::uint32_t>(i % spec.classes);
  Rng rng(spec.seed, Stream::kData, 1 + sample_stream);
  rng.shuffle(std::span<std::uint32_t>(ds.labels));
  ds.images.resize(spec.num_samples * ds.image_size());
  for (std::size_t i = 0; i < spec.num_samples; ++i) {
    const auto& m = means[ds.labels[i]];
    float* dst = ds.images.data() + i * ds.image_size();
    std::vector<double> field(m.begin(), m.end());
    if (spec.variation > 0.0) add_bumps(field, spec, rng);
    for (std::size_t e = 0; e < m.size(); ++e) {
      dst[e] = std::clamp(static_cast<float>(field[e] + spec.noise * rng.normal()), 0.0f, 1.0f);
    }
  }
  return ds;
}

}  // namespace cutmixsl::data
