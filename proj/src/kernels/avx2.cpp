// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2 -mfma. Nothing in this file may run before dispatch
// has confirmed CPU support.

#include <immintrin.h>

#include <algorithm>
#include <cstdint>

#include "cutmixsl/kernels/kernels.hpp"

namespace cutmixsl::kernels {

namespace {

alignas(32) const std::int32_t kMaskTable[16] = {-1, -1, -1, -1, -1, -1, -1, -1,
                                                 0,  0,  0,  0,  0,  0,  0,  0};

// First `lanes` lanes enabled, lanes in [0, 8].
inline __m256i lane_mask(std::size_t lanes) {
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(kMaskTable + 8 - lanes));
}

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  const __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

// R rows of a times a panel of b that is `width` <= 16 columns wide.
template <int R>
void micro_kernel(std::size_t k, const float* a, std::size_t lda, const float* b, std::size_t ldb,
                  float* c, std::size_t ldc, std::size_t width, bool accumulate) {
  __m256 acc0[R];
  __m256 acc1[R];
  for (int r = 0; r < R; ++r) {
    acc0[r] = _mm256_setzero_ps();
    acc1[r] = _mm256_setzero_ps();
  }
  if (width == 16) {
    for (std::size_t p = 0; p < k; ++p) {
      const __m256 b0 = _mm256_loadu_ps(b + p * ldb);
      const __m256 b1 = _mm256_loadu_ps(b + p * ldb + 8);
      for (int r = 0; r < R; ++r) {
        const __m256 av = _mm256_broadcast_ss(a + r * lda + p);
        acc0[r] = _mm256_fmadd_ps(av, b0, acc0[r]);
        acc1[r] = _mm256_fmadd_ps(av, b1, acc1[r]);
      }
    }
  } else {
    const std::size_t w0 = std::min<std::size_t>(width, 8);
    const std::size_t w1 = width > 8 ? width - 8 : 0;
    const __m256i m0 = lane_mask(w0);
    const __m256i m1 = lane_mask(w1);
    for (std::size_t p = 0; p < k; ++p) {
      const __m256 b0 = _mm256_maskload_ps(b + p * ldb, m0);
      const __m256 b1 = w1 ? _mm256_maskload_ps(b + p * ldb + 8, m1) : _mm256_setzero_ps();
      for (int r = 0; r < R; ++r) {
        const __m256 av = _mm256_broadcast_ss(a + r * lda + p);
        acc0[r] = _mm256_fmadd_ps(av, b0, acc0[r]);
        acc1[r] = _mm256_fmadd_ps(av, b1, acc1[r]);
      }
    }
  }
  const std::size_t w0 = std::min<std::size_t>(width, 8);
  const std::size_t w1 = width > 8 ? width - 8 : 0;
  const __m256i m0 = lane_mask(w0);
  const __m256i m1 = lane_mask(w1);
  for (int r = 0; r < R; ++r) {
    float* cr = c + r * ldc;
    __m256 v0 = acc0[r];
    __m256 v1 = acc1[r];
    if (accumulate) {
      v0 = _mm256_add_ps(_mm256_maskload_ps(cr, m0), v0);
      if (w1) v1 = _mm256_add_ps(_mm256_maskload_ps(cr + 8, m1), v1);
    }
    _mm256_maskstore_ps(cr, m0, v0);
    if (w1) _mm256_maskstore_ps(cr + 8, m1, v1);
  }
}

void gemm_nn_avx2(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b,
                  float* c, bool accumulate) {
  for (std::size_t i0 = 0; i0 < m; i0 += 4) {
    const std::size_t rows = std::min<std::size_t>(4, m - i0);
    const float* ai = a + i0 * k;
    float* ci = c + i0 * n;
    for (std::size_t j0 = 0; j0 < n; j0 += 16) {
      const std::size_t width = std::min<std::size_t>(16, n - j0);
      switch (rows) {
        case 4: micro_kernel<4>(k, ai, k, b + j0, n, ci + j0, n, width, accumulate); break;
        case 3: micro_kernel<3>(k, ai, k, b + j0, n, ci + j0, n, width, accumulate); break;
        case 2: micro_kernel<2>(k, ai, k, b + j0, n, ci + j0, n, width, accumulate); break;
        default: micro_kernel<1>(k, ai, k, b + j0, n, ci + j0, n, width, accumulate); break;
      }
    }
  }
}

float dot_avx2(const float* x, const float* y, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc);
  float total = hsum(acc);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

float sum_avx2(const float* x, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(_mm256_loadu_ps(x + i), acc);
  float total = hsum(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

void axpy_avx2(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_avx2(const float* x, const float* y, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void mul_avx2(const float* x, const float* y, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void scale_avx2(float alpha, const float* x, float* out, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) out[i] = alpha * x[i];
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{Backend::kAvx2, gemm_nn_avx2, dot_avx2, sum_avx2,
                                 axpy_avx2,      add_avx2,     mul_avx2, scale_avx2};
  return &table;
}

}  // namespace cutmixsl::kernels
