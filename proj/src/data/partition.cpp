// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cutmixsl/data/dataset.hpp"
#include "cutmixsl/errors.hpp"

namespace cutmixsl::data {

Partition partition(const Dataset& ds, std::size_t n_clients, PartitionMode mode, double mu, Rng& rng) {
  if (n_clients == 0) throw ContractError("partition: n_clients must be >= 1");
  if (n_clients > ds.size()) {
    throw ContractError("partition: " + std::to_string(n_clients) + " clients for " + std::to_string(ds.size()) +
                        " samples");
  }
  Partition out;
  out.clients.resize(n_clients);
  if (mode == PartitionMode::kIid) {
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(idx));
    const std::size_t base = idx.size() / n_clients, extra = idx.size() % n_clients;
    std::size_t next = 0;
    for (std::size_t c = 0; c < n_clients; ++c) {
      const std::size_t take = base + (c < extra ? 1 : 0);
      out.clients[c].assign(idx.begin() + static_cast<std::ptrdiff_t>(next),
                            idx.begin() + static_cast<std::ptrdiff_t>(next + take));
      next += take;
    }
    return out;
  }
  if (!(mu > 0.0)) throw ContractError("partition: dirichlet concentration must be positive");
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
  for (auto& members : by_class) {
    rng.shuffle(std::span<std::size_t>(members));
    std::vector<double> q(n_clients);
    double total = 0;
    for (auto& v : q) {
      v = std::isinf(mu) ? 1.0 : rng.gamma(mu);
      total += v;
    }
    if (total <= 0.0) {
      q.assign(n_clients, 1.0);
      total = static_cast<double>(n_clients);
    }
    double cum = 0;
    std::size_t begin = 0;
    for (std::size_t c = 0; c < n_clients; ++c) {
      cum += q[c] / total;
      const std::size_t end = c + 1 == n_clients
                                  ? members.size()
                                  : std::min(members.size(), static_cast<std::size_t>(std::floor(cum * members.size())));
      for (std::size_t e = begin; e < end; ++e) out.clients[c].push_back(members[e]);
      begin = std::max(begin, end);
    }
  }
  return out;
}

}  // namespace cutmixsl::data
