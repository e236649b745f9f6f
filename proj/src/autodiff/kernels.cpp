/* Copyright 2026 The NMIL Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "nmil/autodiff/kernels.hpp"

#include <cmath>

#include <Eigen/Core>

#include "nmil/common/error.hpp"

namespace nmil::ad::kernels {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

std::size_t pick(std::size_t extent, std::size_t i) {
  return extent == 1 ? 0 : i;
}

template <typename F>
Tensor elementwise(const Tensor& a, const Tensor& b, F f) {
  Tensor out(broadcast_shape(a, b));
  const std::size_t rows = out.rows();
  const std::size_t cols = out.cols();
  const std::size_t ar = a.rows(), ac = a.cols();
  const std::size_t br = b.rows(), bc = b.cols();
  if (a.shape() == b.shape()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out[r * cols + c] = f(a[pick(ar, r) * ac + pick(ac, c)],
                            b[pick(br, r) * bc + pick(bc, c)]);
    }
  }
  return out;
}

template <typename F>
Tensor unary(Tensor x, F f) {
  for (double& v : x.storage()) v = f(v);
  return x;
}

template <typename Reduce>
Tensor reduce(const Tensor& x, Axis axis, Reduce r) {
  const Groups g = groups(x, axis);
  Tensor out(reduced_shape(x, axis));
  for (std::size_t k = 0; k < g.count; ++k) {
    out[k] = r(x, k * g.group_stride, g.length, g.elem_stride);
  }
  return out;
}

}  // namespace

Tensor::Shape broadcast_shape(const Tensor& a, const Tensor& b) {
  auto join = [&](std::size_t x, std::size_t y) -> std::size_t {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw ShapeError("cannot broadcast " + a.shape_string() + " with " +
                     b.shape_string());
  };
  const std::size_t rows = join(a.rows(), b.rows());
  const std::size_t cols = join(a.cols(), b.cols());
  if (a.rank() == 1 && b.rank() == 1) return {rows};
  return {rows, cols};
}

Groups groups(const Tensor& x, Axis axis) {
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  switch (axis) {
    case Axis::k0:
      return {cols, rows, 1, cols};
    case Axis::k1:
      return {rows, cols, cols, 1};
    case Axis::kAll:
      break;
  }
  return {1, x.size(), 0, 1};
}

Tensor::Shape reduced_shape(const Tensor& x, Axis axis) {
  switch (axis) {
    case Axis::k0:
      if (x.rank() == 1) return {1};
      return {1, x.cols()};
    case Axis::k1:
      if (x.rank() == 1) return {x.rows()};
      return {x.rows(), 1};
    case Axis::kAll:
      break;
  }
  return {1};
}

Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_a,
              bool transpose_b) {
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t ka = transpose_a ? a.rows() : a.cols();
  const std::size_t kb = transpose_b ? b.cols() : b.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  if (ka != kb) {
    throw ShapeError("matmul inner extents differ: " + a.shape_string() +
                     (transpose_a ? "^T" : "") + " x " + b.shape_string() +
                     (transpose_b ? "^T" : ""));
  }
  Tensor out({m, n});
  ConstMap am(a.data().data(), static_cast<Eigen::Index>(a.rows()),
              static_cast<Eigen::Index>(a.cols()));
  ConstMap bm(b.data().data(), static_cast<Eigen::Index>(b.rows()),
              static_cast<Eigen::Index>(b.cols()));
  MutMap om(out.data().data(), static_cast<Eigen::Index>(m),
            static_cast<Eigen::Index>(n));
  if (!transpose_a && !transpose_b) {
    om.noalias() = am * bm;
  } else if (transpose_a && !transpose_b) {
    om.noalias() = am.transpose() * bm;
  } else if (!transpose_a && transpose_b) {
    om.noalias() = am * bm.transpose();
  } else {
    om.noalias() = am.transpose() * bm.transpose();
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, [](double x, double y) { return x + y; });
}

Tensor multiply(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, [](double x, double y) { return x * y; });
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor tanh(Tensor x) {
  return unary(std::move(x), [](double v) { return std::tanh(v); });
}

Tensor sigmoid(Tensor x) {
  return unary(std::move(x), [](double v) { return sigmoid(v); });
}

Tensor exp(Tensor x) {
  return unary(std::move(x), [](double v) { return std::exp(v); });
}

Tensor log(Tensor x) {
  return unary(std::move(x), [](double v) { return std::log(v); });
}

Tensor softmax(const Tensor& x, Axis axis) {
  const Groups g = groups(x, axis);
  Tensor out(x.shape());
  for (std::size_t k = 0; k < g.count; ++k) {
    const std::size_t base = k * g.group_stride;
    double peak = x[base];
    for (std::size_t e = 1; e < g.length; ++e) {
      peak = std::max(peak, x[base + e * g.elem_stride]);
    }
    double total = 0.0;
    for (std::size_t e = 0; e < g.length; ++e) {
      const std::size_t i = base + e * g.elem_stride;
      out[i] = std::exp(x[i] - peak);
      total += out[i];
    }
    for (std::size_t e = 0; e < g.length; ++e) {
      out[base + e * g.elem_stride] /= total;
    }
  }
  return out;
}

Tensor l2_normalize(const Tensor& x, Axis axis) {
  const Groups g = groups(x, axis);
  Tensor out(x.shape());
  for (std::size_t k = 0; k < g.count; ++k) {
    const std::size_t base = k * g.group_stride;
    double sq = 0.0;
    for (std::size_t e = 0; e < g.length; ++e) {
      const double v = x[base + e * g.elem_stride];
      sq += v * v;
    }
    const double norm = std::sqrt(sq + kL2Epsilon * kL2Epsilon);
    for (std::size_t e = 0; e < g.length; ++e) {
      const std::size_t i = base + e * g.elem_stride;
      out[i] = x[i] / norm;
    }
  }
  return out;
}

Tensor concat(const std::vector<const Tensor*>& parts, Axis axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  if (axis == Axis::kAll) throw ShapeError("concat requires axis k0 or k1");
  bool all_rank1 = true;
  for (const Tensor* p : parts) all_rank1 = all_rank1 && p->rank() == 1;
  if (axis == Axis::k0) {
    const std::size_t cols = parts.front()->cols();
    std::size_t rows = 0;
    for (const Tensor* p : parts) {
      if (p->cols() != cols) {
        throw ShapeError("concat along rows needs equal column counts, got " +
                         parts.front()->shape_string() + " and " +
                         p->shape_string());
      }
      rows += p->rows();
    }
    Tensor out(all_rank1 ? Tensor::Shape{rows} : Tensor::Shape{rows, cols});
    std::size_t offset = 0;
    for (const Tensor* p : parts) {
      std::copy(p->data().begin(), p->data().end(),
                out.data().begin() + static_cast<std::ptrdiff_t>(offset));
      offset += p->size();
    }
    return out;
  }
  const std::size_t rows = parts.front()->rows();
  std::size_t cols = 0;
  for (const Tensor* p : parts) {
    if (p->rows() != rows) {
      throw ShapeError("concat along columns needs equal row counts, got " +
                       parts.front()->shape_string() + " and " +
                       p->shape_string());
    }
    cols += p->cols();
  }
  Tensor out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t c0 = 0;
    for (const Tensor* p : parts) {
      const std::size_t pc = p->cols();
      for (std::size_t c = 0; c < pc; ++c) {
        out[r * cols + c0 + c] = (*p)[r * pc + c];
      }
      c0 += pc;
    }
  }
  return out;
}

Tensor reduce_sum(const Tensor& x, Axis axis) {
  return reduce(x, axis,
                [](const Tensor& t, std::size_t base, std::size_t len,
                   std::size_t stride) {
                  double s = 0.0;
                  for (std::size_t e = 0; e < len; ++e) s += t[base + e * stride];
                  return s;
                });
}

Tensor reduce_mean(const Tensor& x, Axis axis) {
  const std::size_t len = groups(x, axis).length;
  Tensor out = reduce_sum(x, axis);
  for (double& v : out.storage()) v /= static_cast<double>(len);
  return out;
}

Tensor reduce_max(const Tensor& x, Axis axis) {
  return reduce(x, axis,
                [](const Tensor& t, std::size_t base, std::size_t len,
                   std::size_t stride) {
                  double m = t[base];
                  for (std::size_t e = 1; e < len; ++e) {
                    m = std::max(m, t[base + e * stride]);
                  }
                  return m;
                });
}

}  // namespace nmil::ad::kernels
