// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "cutmixsl/errors.hpp"
#include "cutmixsl/protocol/protocol.hpp"

namespace cutmixsl::protocol {

model::ClientSegment fedavg_client_segments(const std::vector<model::ClientSegment>& segments,
                                            const std::optional<std::vector<double>>& weights) {
  if (segments.empty()) throw ContractError("fedavg: no segments");
  if (weights && weights->size() != segments.size()) throw ContractError("fedavg: weight count mismatch");
  double total = 0.0;
  for (std::size_t s = 0; s < segments.size(); ++s) total += weights ? (*weights)[s] : 1.0;
  if (!(total > 0.0)) throw ContractError("fedavg: weights sum to zero");

  model::ClientSegment out = segments[0].clone();
  const auto dst = out.named_parameters();
  for (std::size_t p = 0; p < dst.size(); ++p) {
    const auto& shape = dst[p].second.shape();
    std::vector<double> acc(dst[p].second.numel(), 0.0);
    for (std::size_t s = 0; s < segments.size(); ++s) {
      const auto src = segments[s].named_parameters()[p].second;
      if (src.shape() != shape) {
        throw DimensionError("fedavg: " + dst[p].first + " has shape " + tensor::shape_string(src.shape()) +
                             " in segment " + std::to_string(s));
      }
      const double w = weights ? (*weights)[s] : 1.0;
      const auto v = src.values();
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * v[i];
    }
    auto values = tensor::Tensor(dst[p].second).mutable_values();
    for (std::size_t i = 0; i < acc.size(); ++i) values[i] = static_cast<float>(acc[i] / total);
  }
  return out;
}

void assign_segment(const model::ClientSegment& from, model::ClientSegment& to) {
  const auto src = from.named_parameters();
  const auto dst = to.named_parameters();
  for (std::size_t p = 0; p < src.size(); ++p) {
    if (src[p].second.shape() != dst[p].second.shape()) throw DimensionError("assign_segment: shape mismatch");
    const auto v = src[p].second.values();
    auto d = tensor::Tensor(dst[p].second).mutable_values();
    std::copy(v.begin(), v.end(), d.begin());
  }
}

}  // namespace cutmixsl::protocol
