// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

// Scalar reference vs. SIMD variants. The reference is the oracle; the
// vector paths must agree within float rounding on every shape class
// (full 4x16 blocks, row tails, column tails, degenerate k).

#include <cmath>

#include "cutmixsl/kernels/kernels.hpp"
#include "doctest.h"
#include "test_util.hpp"

namespace k = cutmixsl::kernels;

namespace {

// Plain triple loop in double: independent of both backends.
std::vector<float> naive_gemm(std::size_t m, std::size_t n, std::size_t kk, const std::vector<float>& a,
                              const std::vector<float>& b) {
  std::vector<float> c(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0;
      for (std::size_t p = 0; p < kk; ++p) acc += static_cast<double>(a[i * kk + p]) * b[p * n + j];
      c[i * n + j] = static_cast<float>(acc);
    }
  }
  return c;
}

std::vector<const k::KernelTable*> tables() {
  std::vector<const k::KernelTable*> t{&k::scalar_table()};
  if (k::backend_available(k::Backend::kAvx2)) t.push_back(k::avx2_table());
  return t;
}

}  // namespace

TEST_CASE("gemm_nn variants agree with the double-precision oracle") {
  const std::size_t shapes[][3] = {{1, 1, 1}, {4, 16, 8}, {5, 17, 3}, {3, 7, 33}, {9, 40, 12}, {16, 48, 192},
                                   {2, 8, 0}, {7, 1, 5}};
  for (const auto* table : tables()) {
    CAPTURE(k::backend_name(table->backend));
    for (const auto& s : shapes) {
      const std::size_t m = s[0], n = s[1], kk = s[2];
      const auto a = cutmixsl::testing::random_values(m * kk, 1 + m);
      const auto b = cutmixsl::testing::random_values(kk * n, 2 + n);
      const auto expect = naive_gemm(m, n, kk, a, b);
      std::vector<float> c(m * n, 123.0f);
      table->gemm_nn(m, n, kk, a.data(), b.data(), c.data(), false);
      for (std::size_t i = 0; i < c.size(); ++i) {
        REQUIRE(std::abs(c[i] - expect[i]) <= 1e-5f * (1.0f + static_cast<float>(kk)));
      }
      std::vector<float> acc(m * n, 0.5f);
      table->gemm_nn(m, n, kk, a.data(), b.data(), acc.data(), true);
      for (std::size_t i = 0; i < acc.size(); ++i) {
        REQUIRE(std::abs(acc[i] - (expect[i] + 0.5f)) <= 1e-5f * (1.0f + static_cast<float>(kk)));
      }
    }
  }
}

TEST_CASE("avx2 gemm matches the scalar reference kernel") {
  if (!k::backend_available(k::Backend::kAvx2)) return;
  for (std::size_t trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + trial % 11, n = 1 + (trial * 7) % 37, kk = 1 + (trial * 5) % 29;
    const auto a = cutmixsl::testing::random_values(m * kk, 100 + trial);
    const auto b = cutmixsl::testing::random_values(kk * n, 200 + trial);
    std::vector<float> ref(m * n), vec(m * n);
    k::scalar_table().gemm_nn(m, n, kk, a.data(), b.data(), ref.data(), false);
    k::avx2_table()->gemm_nn(m, n, kk, a.data(), b.data(), vec.data(), false);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      REQUIRE(std::abs(ref[i] - vec[i]) <= 2e-6f * (1.0f + std::abs(ref[i])) * static_cast<float>(kk));
    }
  }
}

TEST_CASE("elementwise and reduction variants agree") {
  for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 31u, 1000u}) {
    const auto x = cutmixsl::testing::random_values(n, 10 + n);
    const auto y = cutmixsl::testing::random_values(n, 20 + n);
    double dot_ref = 0, sum_ref = 0;
    for (std::size_t i = 0; i < n; ++i) {
      dot_ref += static_cast<double>(x[i]) * y[i];
      sum_ref += x[i];
    }
    for (const auto* table : tables()) {
      CAPTURE(k::backend_name(table->backend));
      CHECK(std::abs(table->dot(x.data(), y.data(), n) - dot_ref) < 1e-4 * (1 + n));
      CHECK(std::abs(table->sum(x.data(), n) - sum_ref) < 1e-4 * (1 + n));
      std::vector<float> out(n), axpy(y);
      table->add(x.data(), y.data(), out.data(), n);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(out[i] == x[i] + y[i]);
      table->mul(x.data(), y.data(), out.data(), n);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(out[i] == x[i] * y[i]);
      table->scale(0.25f, x.data(), out.data(), n);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(out[i] == 0.25f * x[i]);
      table->axpy(-1.5f, x.data(), axpy.data(), n);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(std::abs(axpy[i] - (y[i] - 1.5f * x[i])) < 1e-6f);
    }
  }
}

TEST_CASE("transposed gemm wrapper") {
  // a stored k x m (transposed), b stored n x k (transposed)
  const std::size_t m = 5, n = 6, kk = 4;
  const auto at = cutmixsl::testing::random_values(kk * m, 31);
  const auto bt = cutmixsl::testing::random_values(n * kk, 32);
  std::vector<float> a(m * kk), b(kk * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < kk; ++p) a[i * kk + p] = at[p * m + i];
  for (std::size_t p = 0; p < kk; ++p)
    for (std::size_t j = 0; j < n; ++j) b[p * n + j] = bt[j * kk + p];
  const auto expect = naive_gemm(m, n, kk, a, b);
  std::vector<float> c(m * n);
  k::gemm(k::Trans::kYes, k::Trans::kYes, m, n, kk, at.data(), bt.data(), c.data(), false);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(c[i] - expect[i]) < 1e-5f);
}

TEST_CASE("backend selection") {
  const auto original = k::active().backend;
  k::select_backend(k::Backend::kScalar);
  CHECK(k::active().backend == k::Backend::kScalar);
  if (k::backend_available(k::Backend::kAvx2)) {
    k::select_backend(k::Backend::kAvx2);
    CHECK(k::active().backend == k::Backend::kAvx2);
  } else {
    CHECK_THROWS(k::select_backend(k::Backend::kAvx2));
  }
  k::select_backend(original);
}
