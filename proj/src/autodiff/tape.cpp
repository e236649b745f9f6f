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

#include "nmil/autodiff/tape.hpp"

#include <cmath>
#include <stdexcept>

#include "nmil/autodiff/kernels.hpp"
#include "nmil/common/error.hpp"

namespace nmil::ad {
namespace {

// Sums `grad` (shaped like the broadcast result) down to `target` extents.
Tensor unbroadcast(const Tensor& grad, const Tensor& target) {
  if (grad.shape() == target.shape()) return grad;
  Tensor out(target.shape());
  const std::size_t tr = target.rows(), tc = target.cols();
  const std::size_t gr = grad.rows(), gc = grad.cols();
  for (std::size_t r = 0; r < gr; ++r) {
    for (std::size_t c = 0; c < gc; ++c) {
      out[(tr == 1 ? 0 : r) * tc + (tc == 1 ? 0 : c)] += grad[r * gc + c];
    }
  }
  return out;
}

void accumulate(std::vector<Tensor>& grads, std::uint32_t id, Tensor g) {
  Tensor& slot = grads[id];
  if (slot.empty()) {
    slot = std::move(g);
    return;
  }
  for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += g[i];
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kConstant: return "constant";
    case Op::kMatMul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kMultiply: return "multiply";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSoftmax: return "softmax";
    case Op::kL2Normalize: return "l2_normalize";
    case Op::kConcat: return "concat";
    case Op::kReduceSum: return "reduce_sum";
    case Op::kReduceMean: return "reduce_mean";
    case Op::kReduceMax: return "reduce_max";
  }
  return "unknown";
}

Var Tape::push(Node node) {
  for (std::uint32_t p : node.parents) {
    node.requires_grad = node.requires_grad || nodes_[p].requires_grad;
  }
  nodes_.push_back(std::move(node));
  forward_done_ = false;
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::check_var(Var v) const {
  if (v.id >= nodes_.size()) {
    throw std::invalid_argument("variable " + std::to_string(v.id) +
                                " is not recorded on this tape");
  }
}

Var Tape::input(std::string name, bool differentiable) {
  for (const Node& n : nodes_) {
    if (n.op == Op::kInput && n.name == name) {
      throw std::invalid_argument("duplicate tape input '" + name + "'");
    }
  }
  Node n;
  n.op = Op::kInput;
  n.name = std::move(name);
  n.requires_grad = differentiable;
  return push(std::move(n));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = Op::kConstant;
  n.constant = std::move(value);
  return push(std::move(n));
}

namespace {

template <typename... V>
std::vector<std::uint32_t> ids(V... v) {
  return {v.id...};
}

}  // namespace

Var Tape::matmul(Var a, Var b, bool transpose_a, bool transpose_b) {
  check_var(a);
  check_var(b);
  Node n;
  n.op = Op::kMatMul;
  n.parents = ids(a, b);
  n.transpose_a = transpose_a;
  n.transpose_b = transpose_b;
  return push(std::move(n));
}

#define NMIL_BINARY(fn, kind)     \
  Var Tape::fn(Var a, Var b) {    \
    check_var(a);                 \
    check_var(b);                 \
    Node n;                       \
    n.op = kind;                  \
    n.parents = ids(a, b);        \
    return push(std::move(n));    \
  }

#define NMIL_UNARY(fn, kind)      \
  Var Tape::fn(Var x) {           \
    check_var(x);                 \
    Node n;                       \
    n.op = kind;                  \
    n.parents = ids(x);           \
    return push(std::move(n));    \
  }

#define NMIL_AXIS(fn, kind)       \
  Var Tape::fn(Var x, Axis axis) { \
    check_var(x);                 \
    Node n;                       \
    n.op = kind;                  \
    n.parents = ids(x);           \
    n.axis = axis;                \
    return push(std::move(n));    \
  }

NMIL_BINARY(add, Op::kAdd)
NMIL_BINARY(multiply, Op::kMultiply)
NMIL_UNARY(tanh, Op::kTanh)
NMIL_UNARY(sigmoid, Op::kSigmoid)
NMIL_UNARY(exp, Op::kExp)
NMIL_UNARY(log, Op::kLog)
NMIL_AXIS(softmax, Op::kSoftmax)
NMIL_AXIS(l2_normalize, Op::kL2Normalize)
NMIL_AXIS(reduce_sum, Op::kReduceSum)
NMIL_AXIS(reduce_mean, Op::kReduceMean)
NMIL_AXIS(reduce_max, Op::kReduceMax)

#undef NMIL_BINARY
#undef NMIL_UNARY
#undef NMIL_AXIS

Var Tape::concat(const std::vector<Var>& parts, Axis axis) {
  if (parts.empty()) throw std::invalid_argument("concat of zero variables");
  Node n;
  n.op = Op::kConcat;
  n.axis = axis;
  for (Var p : parts) {
    check_var(p);
    n.parents.push_back(p.id);
  }
  return push(std::move(n));
}

void Tape::set_output(Var v) {
  check_var(v);
  output_ = v.id;
  has_output_ = true;
}

Var Tape::output() const {
  if (nodes_.empty()) throw std::logic_error("empty tape has no output");
  return Var{has_output_ ? output_
                         : static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Tape::value(Var v) const {
  check_var(v);
  if (!forward_done_) {
    throw std::logic_error("tape value requested before forward()");
  }
  return values_[v.id];
}

std::vector<std::string> Tape::parameter_names() const {
  std::vector<std::string> names;
  for (const Node& n : nodes_) {
    if (n.op == Op::kInput && n.requires_grad) names.push_back(n.name);
  }
  return names;
}

void Tape::evaluate(std::uint32_t id, const TensorMap& inputs) {
  const Node& n = nodes_[id];
  auto arg = [&](std::size_t k) -> const Tensor& {
    return values_[n.parents[k]];
  };
  switch (n.op) {
    case Op::kInput: {
      auto it = inputs.find(n.name);
      if (it == inputs.end()) {
        throw ShapeError("missing input '" + n.name + "'");
      }
      values_[id] = it->second;
      break;
    }
    case Op::kConstant:
      values_[id] = n.constant;
      break;
    case Op::kMatMul:
      values_[id] = kernels::matmul(arg(0), arg(1), n.transpose_a,
                                    n.transpose_b);
      break;
    case Op::kAdd:
      values_[id] = kernels::add(arg(0), arg(1));
      break;
    case Op::kMultiply:
      values_[id] = kernels::multiply(arg(0), arg(1));
      break;
    case Op::kTanh:
      values_[id] = kernels::tanh(arg(0));
      break;
    case Op::kSigmoid:
      values_[id] = kernels::sigmoid(arg(0));
      break;
    case Op::kExp:
      values_[id] = kernels::exp(arg(0));
      break;
    case Op::kLog:
      values_[id] = kernels::log(arg(0));
      break;
    case Op::kSoftmax:
      values_[id] = kernels::softmax(arg(0), n.axis);
      break;
    case Op::kL2Normalize:
      values_[id] = kernels::l2_normalize(arg(0), n.axis);
      break;
    case Op::kConcat: {
      std::vector<const Tensor*> parts;
      parts.reserve(n.parents.size());
      for (std::uint32_t p : n.parents) parts.push_back(&values_[p]);
      values_[id] = kernels::concat(parts, n.axis);
      break;
    }
    case Op::kReduceSum:
      values_[id] = kernels::reduce_sum(arg(0), n.axis);
      break;
    case Op::kReduceMean:
      values_[id] = kernels::reduce_mean(arg(0), n.axis);
      break;
    case Op::kReduceMax:
      values_[id] = kernels::reduce_max(arg(0), n.axis);
      break;
  }
}

const Tensor& Tape::forward(const TensorMap& inputs) {
  if (nodes_.empty()) throw std::logic_error("forward() on an empty tape");
  forward_done_ = false;
  values_.assign(nodes_.size(), Tensor());
  for (std::uint32_t id = 0; id < nodes_.size(); ++id) {
    const std::string where = "node " + std::to_string(id) + " (" +
                              std::string(op_name(nodes_[id].op)) +
                              (nodes_[id].name.empty()
                                   ? ""
                                   : " '" + nodes_[id].name + "'") +
                              ")";
    try {
      evaluate(id, inputs);
    } catch (const ShapeError& e) {
      throw ShapeError(where + ": " + e.what());
    } catch (const NumericError& e) {
      throw NumericError(where + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ShapeError(where + ": " + e.what());
    }
    if (!values_[id].all_finite()) {
      throw NumericError(where + ": non-finite value");
    }
  }
  forward_done_ = true;
  return values_[output().id];
}

void Tape::propagate(std::uint32_t id, std::vector<Tensor>& grads) const {
  const Node& n = nodes_[id];
  const Tensor& g = grads[id];
  const Tensor& y = values_[id];
  auto wants = [&](std::size_t k) {
    return nodes_[n.parents[k]].requires_grad;
  };
  auto arg = [&](std::size_t k) -> const Tensor& {
    return values_[n.parents[k]];
  };
  switch (n.op) {
    case Op::kInput:
    case Op::kConstant:
      return;
    case Op::kMatMul: {
      const Tensor& a = arg(0);
      const Tensor& b = arg(1);
      if (wants(0)) {
        Tensor ga = n.transpose_a
                        ? kernels::matmul(b, g, n.transpose_b, true)
                        : kernels::matmul(g, b, false, !n.transpose_b);
        accumulate(grads, n.parents[0], Tensor(a.shape(), std::move(ga.storage())));
      }
      if (wants(1)) {
        Tensor gb = n.transpose_b
                        ? kernels::matmul(g, a, true, n.transpose_a)
                        : kernels::matmul(a, g, !n.transpose_a, false);
        accumulate(grads, n.parents[1], Tensor(b.shape(), std::move(gb.storage())));
      }
      return;
    }
    case Op::kAdd:
      for (std::size_t k = 0; k < 2; ++k) {
        if (wants(k)) accumulate(grads, n.parents[k], unbroadcast(g, arg(k)));
      }
      return;
    case Op::kMultiply:
      for (std::size_t k = 0; k < 2; ++k) {
        if (wants(k)) {
          accumulate(grads, n.parents[k],
                     unbroadcast(kernels::multiply(g, arg(1 - k)), arg(k)));
        }
      }
      return;
    case Op::kTanh: {
      Tensor dx(y.shape());
      for (std::size_t i = 0; i < y.size(); ++i) dx[i] = g[i] * (1.0 - y[i] * y[i]);
      accumulate(grads, n.parents[0], std::move(dx));
      return;
    }
    case Op::kSigmoid: {
      Tensor dx(y.shape());
      for (std::size_t i = 0; i < y.size(); ++i) dx[i] = g[i] * y[i] * (1.0 - y[i]);
      accumulate(grads, n.parents[0], std::move(dx));
      return;
    }
    case Op::kExp: {
      Tensor dx(y.shape());
      for (std::size_t i = 0; i < y.size(); ++i) dx[i] = g[i] * y[i];
      accumulate(grads, n.parents[0], std::move(dx));
      return;
    }
    case Op::kLog: {
      const Tensor& x = arg(0);
      Tensor dx(y.shape());
      for (std::size_t i = 0; i < y.size(); ++i) dx[i] = g[i] / x[i];
      accumulate(grads, n.parents[0], std::move(dx));
      return;
    }
    case Op::kSoftmax: {
      const kernels::Groups gr = kernels::groups(y, n.axis);
      Tensor dx(y.shape());
      for (std::size_t k = 0; k < gr.count; ++k) {
        const std::size_t base = k * gr.group_stride;
        double dot = 0.0;
        for (std::size_t e = 0; e < gr.length; ++e) {
          const std::size_t i = base + e * gr.elem_stride;
          dot += g[i] * y[i];
        }
        for (std::size_t e = 0; e < gr.length; ++e) {
          const std::size_t i = base + e * gr.elem_stride;
          dx[i] = y[i] * (g[i] - dot);
        }
      }
      accumulate(grads, n.parents[0], std::move(dx));
      return;
    }
    case Op::kL2Normalize: {
      const Tensor& x = arg(0);
      const kernels::Groups gr = kernels::groups(y, n.axis);
      Tensor dx(y.shape());
      for (std::size_t k = 0; k < gr.count; ++k) {
        const std::size_t base = k * gr.group_stride;
        double sq = 0.0, dot = 0.0;
        for (std::size_t e = 0; e < gr.length; ++e) {
          const std::size_t i = base + e * gr.elem_stride;
          sq += x[i] * x[i];
          dot += g[i] * y[i];
        }
        const double norm =
            std::sqrt(sq + kernels::kL2Epsilon * kernels::kL2Epsilon);
        for (std::size_t e = 0; e < gr.length; ++e) {
          const std::size_t i = base + e * gr.elem_stride;
          dx[i] = (g[i] - y[i] * dot) / norm;
        }
      }
      accumulate(grads, n.parents[0], std::move(dx));
      return;
    }
    case Op::kConcat: {
      std::size_t offset = 0;  // rows (k0) or columns (k1) consumed so far
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        const Tensor& part = arg(k);
        if (wants(k)) {
          Tensor dp(part.shape());
          if (n.axis == Axis::k0) {
            for (std::size_t i = 0; i < part.size(); ++i) {
              dp[i] = g[offset * part.cols() + i];
            }
          } else {
            const std::size_t gc = g.cols();
            for (std::size_t r = 0; r < part.rows(); ++r) {
              for (std::size_t c = 0; c < part.cols(); ++c) {
                dp[r * part.cols() + c] = g[r * gc + offset + c];
              }
            }
          }
          accumulate(grads, n.parents[k], std::move(dp));
        }
        offset += n.axis == Axis::k0 ? part.rows() : part.cols();
      }
      return;
    }
    case Op::kReduceSum:
    case Op::kReduceMean:
    case Op::kReduceMax: {
      const Tensor& x = arg(0);
      const kernels::Groups gr = kernels::groups(x, n.axis);
      Tensor dx(x.shape());
      for (std::size_t k = 0; k < gr.count; ++k) {
        const std::size_t base = k * gr.group_stride;
        if (n.op == Op::kReduceMax) {
          std::size_t best = base;
          for (std::size_t e = 1; e < gr.length; ++e) {
            const std::size_t i = base + e * gr.elem_stride;
            if (x[i] > x[best]) best = i;
          }
          dx[best] = g[k];
          continue;
        }
        const double share =
            n.op == Op::kReduceMean ? g[k] / static_cast<double>(gr.length)
                                    : g[k];
        for (std::size_t e = 0; e < gr.length; ++e) {
          dx[base + e * gr.elem_stride] = share;
        }
      }
      accumulate(grads, n.parents[0], std::move(dx));
      return;
    }
  }
}

Gradients Tape::backward(double seed) {
  if (!forward_done_) {
    throw std::logic_error("backward() called before forward()");
  }
  const std::uint32_t out = output().id;
  std::vector<Tensor> grads(nodes_.size());
  grads[out] = Tensor(values_[out].shape(), seed);
  for (std::uint32_t id = out + 1; id-- > 0;) {
    if (grads[id].empty() || !nodes_[id].requires_grad) continue;
    propagate(id, grads);
  }
  Gradients result;
  for (std::uint32_t id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (n.op != Op::kInput || !n.requires_grad) continue;
    result.emplace(n.name, grads[id].empty() ? Tensor(values_[id].shape(), 0.0)
                                             : std::move(grads[id]));
  }
  return result;
}

}  // namespace nmil::ad
