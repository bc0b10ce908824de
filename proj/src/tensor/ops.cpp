// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cutmixsl/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <numbers>

#include "cutmixsl/errors.hpp"
#include "cutmixsl/kernels/kernels.hpp"

namespace cutmixsl::tensor {

namespace {

using detail::Node;
using kernels::Trans;

struct MatrixView {
  std::size_t rows;
  std::size_t cols;
};

MatrixView as_matrix(const Tensor& t) {
  const auto& s = t.shape();
  if (s.empty()) return {1, 1};
  const std::size_t cols = s.back();
  return {cols == 0 ? 0 : t.numel() / cols, cols};
}

Tensor record(Shape shape, std::vector<float> value, const char* op, std::initializer_list<Tensor> inputs,
              std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) needs = needs || (in.defined() && in.requires_grad());
  }
  if (needs) {
    node->requires_grad = true;
    for (const auto& in : inputs) {
      if (in.defined()) node->parents.push_back(in.handle());
    }
    node->backward = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

Tensor record_list(Shape shape, std::vector<float> value, const char* op, const std::vector<Tensor>& inputs,
                   std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    for (const auto& in : inputs) node->parents.push_back(in.handle());
    node->backward = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

// Grad buffer of a parent, or null when that parent takes no gradient.
float* parent_grad(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  if (!p.requires_grad) return nullptr;
  return p.ensure_grad().data();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
  }
}

Tensor with_exact(Tensor t, double exact) {
  const_cast<Node*>(t.node())->exact = exact;
  return t;
}

constexpr float kGeluC = 0.7978845608028654f;  // sqrt(2 / pi)
constexpr float kGeluA = 0.044715f;

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions disagree " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  std::vector<float> out(n * m);
  kernels::gemm(Trans::kNo, Trans::kNo, n, m, k, a.values().data(), b.values().data(), out.data(), false);
  return record({n, m}, std::move(out), "matmul", {a, b}, [n, k, m](Node& self) {
    const float* g = self.grad.data();
    const Node& na = *self.parents[0];
    const Node& nb = *self.parents[1];
    if (float* da = parent_grad(self, 0)) {
      kernels::gemm(Trans::kNo, Trans::kYes, n, k, m, g, nb.value.data(), da, true);
    }
    if (float* db = parent_grad(self, 1)) {
      kernels::gemm(Trans::kYes, Trans::kNo, k, m, n, na.value.data(), g, db, true);
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(weight, 2, "linear");
  const auto [rows, in] = as_matrix(x);
  const std::size_t out_dim = weight.dim(0);
  if (x.rank() < 1 || weight.dim(1) != in) {
    throw DimensionError("linear: input " + shape_string(x.shape()) + " vs weight " +
                         shape_string(weight.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && bias.numel() != out_dim) {
    throw DimensionError("linear: bias " + shape_string(bias.shape()) + " vs out dim " + std::to_string(out_dim));
  }
  std::vector<float> out(rows * out_dim);
  kernels::gemm(Trans::kNo, Trans::kYes, rows, out_dim, in, x.values().data(), weight.values().data(),
                out.data(), false);
  if (has_bias) {
    const auto& k = kernels::active();
    const float* bv = bias.values().data();
    for (std::size_t r = 0; r < rows; ++r) k.add(out.data() + r * out_dim, bv, out.data() + r * out_dim, out_dim);
  }
  Shape shape = x.shape();
  shape.back() = out_dim;
  return record(std::move(shape), std::move(out), "linear", {x, weight, bias},
                [rows, in, out_dim, has_bias](Node& self) {
                  const float* g = self.grad.data();
                  const Node& nx = *self.parents[0];
                  const Node& nw = *self.parents[1];
                  if (float* dx = parent_grad(self, 0)) {
                    kernels::gemm(Trans::kNo, Trans::kNo, rows, in, out_dim, g, nw.value.data(), dx, true);
                  }
                  if (float* dw = parent_grad(self, 1)) {
                    kernels::gemm(Trans::kYes, Trans::kNo, out_dim, in, rows, g, nx.value.data(), dw, true);
                  }
                  if (has_bias) {
                    if (float* db = parent_grad(self, 2)) {
                      const auto& k = kernels::active();
                      for (std::size_t r = 0; r < rows; ++r) k.add(db, g + r * out_dim, db, out_dim);
                    }
                  }
                });
}

Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b) {
  require_rank(a, 3, "bmm");
  require_rank(b, 3, "bmm");
  const std::size_t groups = a.dim(0), n = a.dim(1), k = a.dim(2);
  const std::size_t m = transpose_b ? b.dim(1) : b.dim(2);
  const std::size_t bk = transpose_b ? b.dim(2) : b.dim(1);
  if (b.dim(0) != groups || bk != k) {
    throw DimensionError("bmm: " + shape_string(a.shape()) + " x " + shape_string(b.shape()) +
                         (transpose_b ? "^T" : ""));
  }
  std::vector<float> out(groups * n * m);
  const float* av = a.values().data();
  const float* bv = b.values().data();
  for (std::size_t gi = 0; gi < groups; ++gi) {
    kernels::gemm(Trans::kNo, transpose_b ? Trans::kYes : Trans::kNo, n, m, k, av + gi * n * k,
                  bv + gi * k * m, out.data() + gi * n * m, false);
  }
  return record({groups, n, m}, std::move(out), "bmm", {a, b}, [groups, n, k, m, transpose_b](Node& self) {
    const float* g = self.grad.data();
    const float* av = self.parents[0]->value.data();
    const float* bv = self.parents[1]->value.data();
    float* da = parent_grad(self, 0);
    float* db = parent_grad(self, 1);
    for (std::size_t gi = 0; gi < groups; ++gi) {
      const float* gg = g + gi * n * m;
      const float* ag = av + gi * n * k;
      const float* bg = bv + gi * k * m;
      if (da) {
        kernels::gemm(Trans::kNo, transpose_b ? Trans::kNo : Trans::kYes, n, k, m, gg, bg, da + gi * n * k, true);
      }
      if (db) {
        if (transpose_b) {
          kernels::gemm(Trans::kYes, Trans::kNo, m, k, n, gg, ag, db + gi * k * m, true);
        } else {
          kernels::gemm(Trans::kYes, Trans::kNo, k, m, n, ag, gg, db + gi * k * m, true);
        }
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<float> out(a.numel());
  kernels::active().add(a.values().data(), b.values().data(), out.data(), out.size());
  return record(a.shape(), std::move(out), "add", {a, b}, [](Node& self) {
    const auto& k = kernels::active();
    const std::size_t n = self.grad.size();
    for (std::size_t i = 0; i < 2; ++i) {
      if (float* d = parent_grad(self, i)) k.add(d, self.grad.data(), d, n);
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<float> out(a.numel());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return record(a.shape(), std::move(out), "sub", {a, b}, [](Node& self) {
    const auto& k = kernels::active();
    const std::size_t n = self.grad.size();
    if (float* d = parent_grad(self, 0)) k.add(d, self.grad.data(), d, n);
    if (float* d = parent_grad(self, 1)) k.axpy(-1.0f, self.grad.data(), d, n);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<float> out(a.numel());
  kernels::active().mul(a.values().data(), b.values().data(), out.data(), out.size());
  return record(a.shape(), std::move(out), "mul", {a, b}, [](Node& self) {
    const std::size_t n = self.grad.size();
    const float* g = self.grad.data();
    const float* av = self.parents[0]->value.data();
    const float* bv = self.parents[1]->value.data();
    if (float* da = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < n; ++i) da[i] += g[i] * bv[i];
    }
    if (float* db = parent_grad(self, 1)) {
      for (std::size_t i = 0; i < n; ++i) db[i] += g[i] * av[i];
    }
  });
}

Tensor scale(const Tensor& a, float factor) {
  std::vector<float> out(a.numel());
  kernels::active().scale(factor, a.values().data(), out.data(), out.size());
  return record(a.shape(), std::move(out), "scale", {a}, [factor](Node& self) {
    if (float* d = parent_grad(self, 0)) kernels::active().axpy(factor, self.grad.data(), d, self.grad.size());
  });
}

Tensor add_rows(const Tensor& x, const Tensor& b) {
  const auto [rows, cols] = as_matrix(x);
  const std::size_t period = (b.rank() == 1) ? 1 : as_matrix(b).rows;
  if (b.shape().back() != cols || b.numel() != period * cols || period == 0 || rows % period != 0) {
    throw DimensionError("add_rows: " + shape_string(x.shape()) + " + " + shape_string(b.shape()));
  }
  std::vector<float> out(x.numel());
  const auto& k = kernels::active();
  const float* xv = x.values().data();
  const float* bv = b.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    k.add(xv + r * cols, bv + (r % period) * cols, out.data() + r * cols, cols);
  }
  return record(x.shape(), std::move(out), "add_rows", {x, b}, [rows, cols, period](Node& self) {
    const auto& k = kernels::active();
    const float* g = self.grad.data();
    if (float* dx = parent_grad(self, 0)) k.add(dx, g, dx, rows * cols);
    if (float* db = parent_grad(self, 1)) {
      for (std::size_t r = 0; r < rows; ++r) {
        float* dst = db + (r % period) * cols;
        k.add(dst, g + r * cols, dst, cols);
      }
    }
  });
}

Tensor mask_rows(const Tensor& x, std::span<const std::uint8_t> row_mask) {
  const auto [rows, cols] = as_matrix(x);
  if (row_mask.empty() || rows % row_mask.size() != 0) {
    throw DimensionError("mask_rows: mask length " + std::to_string(row_mask.size()) + " vs " +
                         std::to_string(rows) + " rows");
  }
  std::vector<std::uint8_t> mask(row_mask.begin(), row_mask.end());
  std::vector<float> out(x.numel(), 0.0f);
  const float* xv = x.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    if (mask[r % mask.size()]) std::copy_n(xv + r * cols, cols, out.data() + r * cols);
  }
  return record(x.shape(), std::move(out), "mask_rows", {x}, [rows, cols, mask = std::move(mask)](Node& self) {
    float* dx = parent_grad(self, 0);
    if (!dx) return;
    const auto& k = kernels::active();
    for (std::size_t r = 0; r < rows; ++r) {
      if (mask[r % mask.size()]) k.add(dx + r * cols, self.grad.data() + r * cols, dx + r * cols, cols);
    }
  });
}

Tensor gelu(const Tensor& x) {
  const auto xv = x.values();
  std::vector<float> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const float v = xv[i];
    const float t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
    out[i] = 0.5f * v * (1.0f + t);
  }
  return record(x.shape(), std::move(out), "gelu", {x}, [](Node& self) {
    float* dx = parent_grad(self, 0);
    if (!dx) return;
    const float* xv = self.parents[0]->value.data();
    const float* g = self.grad.data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const float v = xv[i];
      const float t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
      const float dt = (1.0f - t * t) * kGeluC * (1.0f + 3.0f * kGeluA * v * v);
      dx[i] += g[i] * (0.5f * (1.0f + t) + 0.5f * v * dt);
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  const auto [rows, cols] = as_matrix(x);
  if (cols == 0) throw DimensionError("layer_norm: empty last axis");
  const bool affine = gamma.defined();
  if (affine && (gamma.numel() != cols || !beta.defined() || beta.numel() != cols)) {
    throw DimensionError("layer_norm: affine parameters must have " + std::to_string(cols) + " elements");
  }
  std::vector<float> xhat(x.numel());
  std::vector<float> rstd(rows);
  const float* xv = x.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const float* row = xv + r * cols;
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += row[c];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = row[c] - mu;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    const double inv = 1.0 / std::sqrt(var + eps);
    rstd[r] = static_cast<float>(inv);
    for (std::size_t c = 0; c < cols; ++c) xhat[r * cols + c] = static_cast<float>((row[c] - mu) * inv);
  }
  std::vector<float> out(xhat);
  if (affine) {
    const float* gv = gamma.values().data();
    const float* bv = beta.values().data();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = xhat[r * cols + c] * gv[c] + bv[c];
    }
  }
  return record(x.shape(), std::move(out), "layer_norm", {x, gamma, beta},
                [rows, cols, affine, xhat = std::move(xhat), rstd = std::move(rstd)](Node& self) {
                  const float* g = self.grad.data();
                  const float* gv = affine ? self.parents[1]->value.data() : nullptr;
                  if (affine) {
                    float* dgamma = parent_grad(self, 1);
                    float* dbeta = parent_grad(self, 2);
                    for (std::size_t r = 0; r < rows; ++r) {
                      for (std::size_t c = 0; c < cols; ++c) {
                        const std::size_t i = r * cols + c;
                        if (dgamma) dgamma[c] += g[i] * xhat[i];
                        if (dbeta) dbeta[c] += g[i];
                      }
                    }
                  }
                  float* dx = parent_grad(self, 0);
                  if (!dx) return;
                  std::vector<float> dxhat(cols);
                  for (std::size_t r = 0; r < rows; ++r) {
                    double mean_d = 0.0;
                    double mean_dx = 0.0;
                    for (std::size_t c = 0; c < cols; ++c) {
                      const std::size_t i = r * cols + c;
                      dxhat[c] = affine ? g[i] * gv[c] : g[i];
                      mean_d += dxhat[c];
                      mean_dx += static_cast<double>(dxhat[c]) * xhat[i];
                    }
                    mean_d /= static_cast<double>(cols);
                    mean_dx /= static_cast<double>(cols);
                    for (std::size_t c = 0; c < cols; ++c) {
                      const std::size_t i = r * cols + c;
                      dx[i] += static_cast<float>(rstd[r] * (dxhat[c] - mean_d - xhat[i] * mean_dx));
                    }
                  }
                });
}

Tensor softmax(const Tensor& x) {
  if (x.rank() == 0 || x.shape().back() == 0) throw DimensionError("softmax: empty axis");
  const auto [rows, cols] = as_matrix(x);
  std::vector<float> out(x.numel());
  const float* xv = x.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const float* row = xv + r * cols;
    const float mx = *std::max_element(row, row + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const float e = std::exp(row[c] - mx);
      out[r * cols + c] = e;
      total += e;
    }
    const float inv = static_cast<float>(1.0 / total);
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] *= inv;
  }
  return record(x.shape(), std::move(out), "softmax", {x}, [rows, cols](Node& self) {
    float* dx = parent_grad(self, 0);
    if (!dx) return;
    const float* y = self.value.data();
    const float* g = self.grad.data();
    for (std::size_t r = 0; r < rows; ++r) {
      double dotp = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dotp += static_cast<double>(g[r * cols + c]) * y[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        dx[i] += y[i] * static_cast<float>(g[i] - dotp);
      }
    }
  });
}

Tensor transpose(const Tensor& x) {
  require_rank(x, 2, "transpose");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  std::vector<float> out(x.numel());
  const float* xv = x.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = xv[r * cols + c];
  }
  return record({cols, rows}, std::move(out), "transpose", {x}, [rows, cols](Node& self) {
    float* dx = parent_grad(self, 0);
    if (!dx) return;
    const float* g = self.grad.data();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) dx[r * cols + c] += g[c * rows + r];
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_string(x.shape()) + " -> " + shape_string(shape));
  }
  std::vector<float> out(x.values().begin(), x.values().end());
  return record(std::move(shape), std::move(out), "reshape", {x}, [](Node& self) {
    if (float* dx = parent_grad(self, 0)) kernels::active().add(dx, self.grad.data(), dx, self.grad.size());
  });
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  std::size_t first = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.rank() == 0 || Shape(p.shape().begin() + 1, p.shape().end()) != tail) {
      throw DimensionError("concat: trailing shape mismatch " + shape_string(p.shape()) + " vs " +
                           shape_string(parts[0].shape()));
    }
    offsets.push_back(first);
    first += p.dim(0);
  }
  const std::size_t row = numel(tail);
  std::vector<float> out;
  out.reserve(first * row);
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  Shape shape{first};
  shape.insert(shape.end(), tail.begin(), tail.end());
  return record_list(std::move(shape), std::move(out), "concat", parts, [row, offsets](Node& self) {
    const auto& k = kernels::active();
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      if (float* d = parent_grad(self, i)) {
        k.add(d, self.grad.data() + offsets[i] * row, d, self.parents[i]->value.size());
      }
    }
  });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  if (x.rank() == 0 || begin > end || end > x.dim(0)) {
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) + ") of " +
                         shape_string(x.shape()));
  }
  const std::size_t row = x.dim(0) == 0 ? 0 : x.numel() / x.dim(0);
  std::vector<float> out(x.values().begin() + begin * row, x.values().begin() + end * row);
  Shape shape = x.shape();
  shape[0] = end - begin;
  return record(std::move(shape), std::move(out), "slice_rows", {x}, [row, begin](Node& self) {
    if (float* dx = parent_grad(self, 0)) {
      kernels::active().add(dx + begin * row, self.grad.data(), dx + begin * row, self.grad.size());
    }
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::uint32_t> indices) {
  const auto [rows, cols] = as_matrix(x);
  std::vector<std::uint32_t> idx(indices.begin(), indices.end());
  std::vector<float> out(idx.size() * cols);
  const float* xv = x.values().data();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= rows) throw DimensionError("gather_rows: index " + std::to_string(idx[i]) + " out of range");
    std::copy_n(xv + idx[i] * cols, cols, out.data() + i * cols);
  }
  Shape shape{idx.size(), cols};
  return record(std::move(shape), std::move(out), "gather_rows", {x}, [cols, idx = std::move(idx)](Node& self) {
    float* dx = parent_grad(self, 0);
    if (!dx) return;
    const auto& k = kernels::active();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      k.add(dx + idx[i] * cols, self.grad.data() + i * cols, dx + idx[i] * cols, cols);
    }
  });
}

Tensor split_heads(const Tensor& x, std::size_t batch, std::size_t tokens, std::size_t heads, std::size_t part,
                   std::size_t parts) {
  require_rank(x, 2, "split_heads");
  const std::size_t cols = x.dim(1);
  if (x.dim(0) != batch * tokens || heads == 0 || parts == 0 || part >= parts || cols % (parts * heads) != 0) {
    throw DimensionError("split_heads: bad layout for " + shape_string(x.shape()));
  }
  const std::size_t hd = cols / (parts * heads);
  const std::size_t base = part * heads * hd;
  std::vector<float> out(batch * heads * tokens * hd);
  const float* xv = x.values().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t t = 0; t < tokens; ++t) {
        std::copy_n(xv + (b * tokens + t) * cols + base + h * hd, hd, out.data() + ((b * heads + h) * tokens + t) * hd);
      }
    }
  }
  return record({batch * heads, tokens, hd}, std::move(out), "split_heads", {x},
                [batch, tokens, heads, hd, base, cols](Node& self) {
                  float* dx = parent_grad(self, 0);
                  if (!dx) return;
                  const auto& k = kernels::active();
                  const float* g = self.grad.data();
                  for (std::size_t b = 0; b < batch; ++b) {
                    for (std::size_t h = 0; h < heads; ++h) {
                      for (std::size_t t = 0; t < tokens; ++t) {
                        float* dst = dx + (b * tokens + t) * cols + base + h * hd;
                        k.add(dst, g + ((b * heads + h) * tokens + t) * hd, dst, hd);
                      }
                    }
                  }
                });
}

Tensor merge_heads(const Tensor& x, std::size_t batch, std::size_t heads) {
  require_rank(x, 3, "merge_heads");
  if (heads == 0 || x.dim(0) != batch * heads) throw DimensionError("merge_heads: bad layout " + shape_string(x.shape()));
  const std::size_t tokens = x.dim(1), hd = x.dim(2);
  const std::size_t cols = heads * hd;
  std::vector<float> out(x.numel());
  const float* xv = x.values().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t t = 0; t < tokens; ++t) {
        std::copy_n(xv + ((b * heads + h) * tokens + t) * hd, hd, out.data() + (b * tokens + t) * cols + h * hd);
      }
    }
  }
  return record({batch * tokens, cols}, std::move(out), "merge_heads", {x},
                [batch, tokens, heads, hd, cols](Node& self) {
                  float* dx = parent_grad(self, 0);
                  if (!dx) return;
                  const auto& k = kernels::active();
                  const float* g = self.grad.data();
                  for (std::size_t b = 0; b < batch; ++b) {
                    for (std::size_t h = 0; h < heads; ++h) {
                      for (std::size_t t = 0; t < tokens; ++t) {
                        float* dst = dx + ((b * heads + h) * tokens + t) * hd;
                        k.add(dst, g + (b * tokens + t) * cols + h * hd, dst, hd);
                      }
                    }
                  }
                });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (float v : x.values()) total += v;
  return with_exact(record({1}, {static_cast<float>(total)}, "sum", {x}, [](Node& self) {
    float* dx = parent_grad(self, 0);
    if (!dx) return;
    const float g = self.grad[0];
    const std::size_t n = self.parents[0]->value.size();
    for (std::size_t i = 0; i < n; ++i) dx[i] += g;
  }), total);
}

Tensor mean(const Tensor& x) {
  const std::size_t n = x.numel();
  if (n == 0) throw DimensionError("mean: empty tensor");
  double total = 0.0;
  for (float v : x.values()) total += v;
  const double avg = total / static_cast<double>(n);
  return with_exact(record({1}, {static_cast<float>(avg)}, "mean", {x}, [n](Node& self) {
    float* dx = parent_grad(self, 0);
    if (!dx) return;
    const float g = self.grad[0] / static_cast<float>(n);
    for (std::size_t i = 0; i < n; ++i) dx[i] += g;
  }), avg);
}

Tensor cross_entropy(const Tensor& logits, std::span<const float> targets) {
  require_rank(logits, 2, "cross_entropy");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (classes == 0 || batch == 0) throw DimensionError("cross_entropy: empty logits");
  if (targets.size() != batch * classes) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                         shape_string(logits.shape()));
  }
  std::vector<float> probs(batch * classes);
  std::vector<float> target_mass(batch);
  const float* z = logits.values().data();
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const float* row = z + b * classes;
    const float mx = *std::max_element(row, row + classes);
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) total += std::exp(static_cast<double>(row[c]) - mx);
    const double log_total = std::log(total);
    double mass = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      const double logp = static_cast<double>(row[c]) - mx - log_total;
      probs[b * classes + c] = static_cast<float>(std::exp(logp));
      const double y = targets[b * classes + c];
      mass += y;
      if (y != 0.0) loss -= y * logp;
    }
    target_mass[b] = static_cast<float>(mass);
  }
  loss /= static_cast<double>(batch);
  std::vector<float> y(targets.begin(), targets.end());
  return with_exact(record({1}, {static_cast<float>(loss)}, "cross_entropy", {logits},
                [batch, classes, probs = std::move(probs), target_mass = std::move(target_mass),
                 y = std::move(y)](Node& self) {
                  float* dz = parent_grad(self, 0);
                  if (!dz) return;
                  const float g = self.grad[0] / static_cast<float>(batch);
                  for (std::size_t b = 0; b < batch; ++b) {
                    for (std::size_t c = 0; c < classes; ++c) {
                      const std::size_t i = b * classes + c;
                      dz[i] += g * (probs[i] * target_mass[b] - y[i]);
                    }
                  }
                }), loss);
}

Tensor mse_loss(const Tensor& pred, std::span<const float> target) {
  const std::size_t n = pred.numel();
  if (target.size() != n || n == 0) {
    throw DimensionError("mse_loss: " + std::to_string(target.size()) + " targets for " + shape_string(pred.shape()));
  }
  const float* p = pred.values().data();
  std::vector<float> diff(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = p[i] - target[i];
    total += static_cast<double>(diff[i]) * diff[i];
  }
  const double avg = total / static_cast<double>(n);
  return with_exact(record({1}, {static_cast<float>(avg)}, "mse_loss", {pred},
                [n, diff = std::move(diff)](Node& self) {
                  float* dp = parent_grad(self, 0);
                  if (!dp) return;
                  const float g = 2.0f * self.grad[0] / static_cast<float>(n);
                  kernels::active().axpy(g, diff.data(), dp, n);
                }), avg);
}

}  // namespace cutmixsl::tensor
