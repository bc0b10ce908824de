// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "cutmixsl/errors.hpp"
#include "cutmixsl/mixer/mixer.hpp"

namespace cutmixsl::mixer {

MixAllocation sample_mixing_counts(std::size_t k, double alpha, std::size_t m, Rng& rng) {
  if (k == 0) throw ContractError("sample_mixing_counts: k must be >= 1");
  if (m == 0) throw ContractError("sample_mixing_counts: M must be >= 1");
  if (!(alpha > 0.0)) throw ContractError("sample_mixing_counts: alpha must be positive");
  MixAllocation out;
  out.counts.assign(k, 0);
  if (k == 1) {
    out.counts[0] = static_cast<std::uint32_t>(m);
    return out;
  }
  if (std::isinf(alpha)) {
    for (std::size_t i = 0; i < k; ++i) out.counts[i] = static_cast<std::uint32_t>(m / k + (i < m % k ? 1 : 0));
    return out;
  }
  std::vector<double> g(k);
  double total = 0.0;
  for (auto& x : g) {
    x = rng.gamma(alpha);
    total += x;
  }
  std::uint64_t remaining = m;
  double mass_left = 1.0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const double p = g[i] / total;
    const double cond = mass_left > 0.0 ? std::min(1.0, p / mass_left) : 1.0;
    const auto a = rng.binomial(remaining, cond);
    out.counts[i] = static_cast<std::uint32_t>(a);
    remaining -= a;
    mass_left -= p;
  }
  out.counts[k - 1] = static_cast<std::uint32_t>(remaining);
  return out;
}

}  // namespace cutmixsl::mixer
