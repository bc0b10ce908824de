// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cutmixsl/tensor/tensor.hpp"

namespace cutmixsl::tensor {

// Unless stated otherwise, a tensor of rank >= 2 is treated as a matrix whose
// rows are all leading dimensions flattened and whose columns are the last
// dimension. Shape mismatches throw DimensionError; there is no implicit
// broadcasting beyond add_rows.

/// [n, k] x [k, m] -> [n, m]
Tensor matmul(const Tensor& a, const Tensor& b);

/// x[..., in] * weight[out, in]^T + bias[out] -> [..., out]. bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Batched product over the first axis: [g, n, k] x [g, k, m] -> [g, n, m], or
/// [g, n, k] x [g, m, k]^T when transpose_b.
Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b = false);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float factor);

/// Adds rows of `b` periodically: out row r = x row r + b row (r mod rows(b)).
/// b is [cols] (a bias) or [p, cols] where rows(x) is a multiple of p.
Tensor add_rows(const Tensor& x, const Tensor& b);

/// Multiplies row r of x by row_mask[r mod row_mask.size()]; the row-level
/// cut used for token masking.
Tensor mask_rows(const Tensor& x, std::span<const std::uint8_t> row_mask);

/// Tanh-approximated GELU.
Tensor gelu(const Tensor& x);

/// Per-row normalization over the last axis with affine gamma/beta [cols].
/// gamma/beta may be undefined for the bare normalization.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = 1e-6f);

/// Softmax over the last axis.
Tensor softmax(const Tensor& x);

/// 2-D transpose.
Tensor transpose(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);

/// Concatenates along the first axis; trailing dimensions must agree.
Tensor concat(const std::vector<Tensor>& parts);

/// Rows [begin, end) along the first axis.
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);

/// out row i = x row indices[i] (matrix view). Indices may repeat.
Tensor gather_rows(const Tensor& x, std::span<const std::uint32_t> indices);

/// [b*t, parts*h*dh] -> [b*h, t, dh] taking column block `part`.
Tensor split_heads(const Tensor& x, std::size_t batch, std::size_t tokens, std::size_t heads,
                   std::size_t part, std::size_t parts);

/// [b*h, t, dh] -> [b*t, h*dh]
Tensor merge_heads(const Tensor& x, std::size_t batch, std::size_t heads);

/// Scalar mean of all elements.
Tensor mean(const Tensor& x);
/// Scalar sum of all elements.
Tensor sum(const Tensor& x);

/// Mean over the batch of -sum_c y[b,c] log softmax(logits)[b,c]. `targets`
/// holds soft (possibly mixed) label rows and receives no gradient.
Tensor cross_entropy(const Tensor& logits, std::span<const float> targets);

/// Mean over all elements of (pred - target)^2. `target` receives no gradient.
Tensor mse_loss(const Tensor& pred, std::span<const float> target);

}  // namespace cutmixsl::tensor
