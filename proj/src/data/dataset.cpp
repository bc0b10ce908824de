// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "cutmixsl/data/dataset.hpp"
#include "cutmixsl/errors.hpp"

namespace cutmixsl::data {

std::span<const float> Dataset::image(std::size_t i) const {
  return std::span<const float>(images).subspan(i * image_size(), image_size());
}

std::vector<std::size_t> Dataset::class_histogram() const {
  std::vector<std::size_t> h(num_classes, 0);
  for (auto l : labels) {
    if (l < num_classes) ++h[l];
  }
  return h;
}

void Dataset::validate() const {
  if (images.size() != labels.size() * image_size()) {
    throw IngestionError("dataset: " + std::to_string(images.size()) + " pixel values for " +
                         std::to_string(labels.size()) + " samples");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      throw IngestionError("dataset: sample " + std::to_string(i) + " has label " + std::to_string(labels[i]) +
                           " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!std::isfinite(images[i])) throw IngestionError("dataset: non-finite pixel at " + std::to_string(i));
  }
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out = ds;
  out.images.clear();
  out.labels.clear();
  out.images.reserve(indices.size() * ds.image_size());
  for (auto i : indices) {
    const auto img = ds.image(i);
    out.images.insert(out.images.end(), img.begin(), img.end());
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

ChannelStats channel_stats(const Dataset& ds) {
  ChannelStats st{std::vector<double>(ds.channels, 0.0), std::vector<double>(ds.channels, 0.0)};
  const std::size_t plane = ds.height * ds.width;
  const double count = static_cast<double>(ds.size() * plane);
  if (count == 0) return st;
  for (std::size_t c = 0; c < ds.channels; ++c) {
    double s = 0, s2 = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const float* p = ds.images.data() + i * ds.image_size() + c * plane;
      for (std::size_t e = 0; e < plane; ++e) {
        s += p[e];
        s2 += static_cast<double>(p[e]) * p[e];
      }
    }
    st.mean[c] = s / count;
    st.stddev[c] = std::sqrt(std::max(0.0, s2 / count - st.mean[c] * st.mean[c]));
  }
  return st;
}

void standardize(Dataset& ds, const ChannelStats& stats) {
  const std::size_t plane = ds.height * ds.width;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t c = 0; c < ds.channels; ++c) {
      float* p = ds.images.data() + i * ds.image_size() + c * plane;
      const double sd = stats.stddev[c] > 0 ? stats.stddev[c] : 1.0;
      for (std::size_t e = 0; e < plane; ++e) p[e] = static_cast<float>((p[e] - stats.mean[c]) / sd);
    }
  }
  ds.normalization = "standardized";
}

}  // namespace cutmixsl::data
