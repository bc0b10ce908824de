// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cutmixsl/rng.hpp"

namespace cutmixsl::data {

struct Dataset {
  std::size_t channels = 3;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t num_classes = 10;
  std::vector<float> images;  // N x C x H x W
  std::vector<std::uint32_t> labels;
  /// "unit" for [0, 1] pixels, "standardized" after per-channel standardization.
  std::string normalization = "unit";

  std::size_t size() const { return labels.size(); }
  std::size_t image_size() const { return channels * height * width; }
  std::span<const float> image(std::size_t i) const;
  std::vector<std::size_t> class_histogram() const;
  /// Throws IngestionError on out-of-range labels, non-finite pixels or size mismatch.
  void validate() const;
};

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

/// Per-channel mean and standard deviation over all samples.
struct ChannelStats {
  std::vector<double> mean, stddev;
};
ChannelStats channel_stats(const Dataset& ds);
void standardize(Dataset& ds, const ChannelStats& stats);

// CIFAR-10 binary format: records of 1 label byte + 3072 pixel bytes
// (1024 R, 1024 G, 1024 B, each row-major 32x32).
inline constexpr std::size_t kCifarRecordBytes = 3073;

Dataset decode_cifar_batch(const std::vector<std::uint8_t>& bytes, const std::string& name);
Dataset read_cifar_batch(const std::string& path);
/// Inverse of decode_cifar_batch for [0, 1] data (pixels rounded to bytes).
std::vector<std::uint8_t> encode_cifar_batch(const Dataset& ds);
void write_cifar_batch(const std::string& path, const Dataset& ds);

struct CifarSplit {
  Dataset train;
  Dataset test;
};

/// Reads data_batch_1..5.bin and test_batch.bin from `dir`.
CifarSplit load_cifar10(const std::string& dir, bool standardize_channels = false);

struct SyntheticSpec {
  std::size_t num_samples = 1000;
  std::size_t classes = 10;
  std::size_t image_size = 32;
  std::size_t channels = 3;
  /// Euclidean distance between class means in units of `noise`.
  double separation = 5.0;
  /// Per-pixel Gaussian noise std.
  double noise = 0.1;
  /// Gaussian bumps summed into each class pattern.
  std::size_t blobs = 3;
  /// Per-sample smooth content: `variation_blobs` bumps at random places with
  /// per-channel amplitudes of std `variation`. Zero draws nothing.
  double variation = 0.0;
  std::size_t variation_blobs = 4;
  std::uint64_t seed = 0;
};

/// Class-conditional Gaussian images around smooth per-class blob patterns
/// on a 0.5 gray base, clipped to [0, 1]. Labels cycle through the classes
/// in a shuffled order. The class patterns depend on the seed only, so train
/// and test sets drawn with different `sample_stream` share them.
Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t sample_stream = 0);

/// The per-class mean images used by make_synthetic (before noise, unclipped).
std::vector<std::vector<float>> synthetic_class_means(const SyntheticSpec& spec);

struct Partition {
  std::vector<std::vector<std::size_t>> clients;
};

enum class PartitionMode { kIid, kDirichlet };

/// iid: shuffled indices dealt into n contiguous blocks whose sizes differ by
/// at most one. dirichlet: per class, proportions q ~ Dir(mu 1_n) split the
/// shuffled class indices at the cumulative boundaries floor(N_c sum q).
Partition partition(const Dataset& ds, std::size_t n_clients, PartitionMode mode, double mu, Rng& rng);

}  // namespace cutmixsl::data
