// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

namespace cutmixsl::kernels {

enum class Backend { kScalar, kAvx2 };

std::string_view backend_name(Backend backend);

/// Dense float32 primitives. All matrices are row-major and contiguous.
///
/// Every backend computes gemm_nn(c[i][j]) as a left-to-right sum over k that
/// starts from zero and is added to c afterwards when accumulating, so the
/// variants differ only in per-step rounding (FMA vs. separate multiply-add).
/// Reductions (dot, sum) may reassociate.
struct KernelTable {
  Backend backend;
  // c[m x n] (+)= a[m x k] * b[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b,
                  float* c, bool accumulate);
  float (*dot)(const float* x, const float* y, std::size_t n);
  float (*sum)(const float* x, std::size_t n);
  // y += alpha * x
  void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
  // out = x + y
  void (*add)(const float* x, const float* y, float* out, std::size_t n);
  // out = x * y
  void (*mul)(const float* x, const float* y, float* out, std::size_t n);
  // out = alpha * x
  void (*scale)(float alpha, const float* x, float* out, std::size_t n);
};

const KernelTable& scalar_table();
/// Null when the binary was built without the AVX2 variant.
const KernelTable* avx2_table();

bool backend_available(Backend backend);

/// Kernels in use. The initial choice is the best backend the CPU supports,
/// unless CUTMIXSL_KERNELS=scalar is set in the environment.
const KernelTable& active();
void select_backend(Backend backend);

enum class Trans { kNo, kYes };

/// c[m x n] (+)= op(a) * op(b) where op(a) is m x k and op(b) is k x n.
/// Transposed operands are repacked before the gemm_nn call.
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const float* a,
          const float* b, float* c, bool accumulate);

}  // namespace cutmixsl::kernels
