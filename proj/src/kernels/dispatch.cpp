// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "cutmixsl/kernels/kernels.hpp"

namespace cutmixsl::kernels {

#ifndef CUTMIXSL_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const char* forced = std::getenv("CUTMIXSL_KERNELS");
  if (forced && std::strcmp(forced, "scalar") == 0) return &scalar_table();
  if (backend_available(Backend::kAvx2)) return avx2_table();
  return &scalar_table();
}

const KernelTable*& current() {
  static const KernelTable* table = initial_table();
  return table;
}

void transpose_into(const float* src, std::size_t rows, std::size_t cols, std::vector<float>& dst) {
  dst.resize(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
  }
}

}  // namespace

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::kScalar: return "scalar";
    case Backend::kAvx2: return "avx2";
  }
  return "unknown";
}

bool backend_available(Backend backend) {
  if (backend == Backend::kScalar) return true;
  return avx2_table() != nullptr && cpu_has_avx2();
}

const KernelTable& active() { return *current(); }

void select_backend(Backend backend) {
  if (!backend_available(backend)) {
    throw std::runtime_error("kernel backend not available: " + std::string(backend_name(backend)));
  }
  current() = backend == Backend::kAvx2 ? avx2_table() : &scalar_table();
}

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const float* a,
          const float* b, float* c, bool accumulate) {
  thread_local std::vector<float> a_packed;
  thread_local std::vector<float> b_packed;
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(float));
    return;
  }
  const float* ap = a;
  const float* bp = b;
  if (ta == Trans::kYes) {
    // a is stored k x m
    transpose_into(a, k, m, a_packed);
    ap = a_packed.data();
  }
  if (tb == Trans::kYes) {
    // b is stored n x k
    transpose_into(b, n, k, b_packed);
    bp = b_packed.data();
  }
  active().gemm_nn(m, n, k, ap, bp, c, accumulate);
}

}  // namespace cutmixsl::kernels
