// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <vector>

#include "cutmixsl/kernels/kernels.hpp"

namespace cutmixsl::kernels {

namespace {

void gemm_nn_scalar(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b,
                    float* c, bool accumulate) {
  thread_local std::vector<float> row;
  row.assign(n, 0.0f);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(row.begin(), row.end(), 0.0f);
    const float* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = ai[p];
      const float* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * bp[j];
    }
    float* ci = c + i * n;
    if (accumulate) {
      for (std::size_t j = 0; j < n; ++j) ci[j] += row[j];
    } else {
      for (std::size_t j = 0; j < n; ++j) ci[j] = row[j];
    }
  }
}

float dot_scalar(const float* x, const float* y, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

float sum_scalar(const float* x, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void axpy_scalar(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add_scalar(const float* x, const float* y, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void mul_scalar(const float* x, const float* y, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void scale_scalar(float alpha, const float* x, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Backend::kScalar, gemm_nn_scalar, dot_scalar, sum_scalar,
                                 axpy_scalar,      add_scalar,     mul_scalar, scale_scalar};
  return table;
}

}  // namespace cutmixsl::kernels
