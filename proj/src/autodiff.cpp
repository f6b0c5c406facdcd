// Copyright 2026 The ttslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ttslab/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ttslab/errors.hpp"

namespace ttslab::ad {

namespace {

thread_local bool t_grad_enabled = true;
thread_local const std::unordered_set<const Node*>* t_needed = nullptr;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw UsageError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

template <class F>
Tensor map_unary(const Tensor& x, F f) {
  Tensor out(x.shape());
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <class F>
Tensor map_binary(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.shape());
  auto pa = a.data();
  auto pb = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i) dst[i] = f(pa[i], pb[i]);
  return out;
}

Var zeros_like(const Var& x) { return constant(Tensor(x.shape())); }

std::vector<std::int64_t> strides_of(const Shape& shape) {
  std::vector<std::int64_t> s(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) s[i] = s[i + 1] * shape[i + 1];
  return s;
}

int norm_axis(int axis, int ndim) {
  if (axis < 0) axis += ndim;
  if (axis < 0 || axis >= ndim) throw UsageError("axis out of range");
  return axis;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw UsageError("negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_numel(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (static_cast<std::int64_t>(data_.size()) != shape_numel(shape_)) {
    throw UsageError("tensor data size " + std::to_string(data_.size()) + " does not match shape " +
                     shape_str(shape_));
  }
}

std::int64_t Tensor::dim(int axis) const { return shape_[static_cast<std::size_t>(norm_axis(axis, ndim()))]; }

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel()) {
    throw UsageError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Var / graph bookkeeping

bool Node::input_needs_grad(std::size_t i) const {
  const Var& in = inputs[i];
  if (!in.requires_grad()) return false;
  return t_needed == nullptr || t_needed->count(in.node()) > 0;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

double Var::item() const {
  if (numel() != 1) throw UsageError("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

void Var::set_requires_grad(bool on) {
  if (!node_->inputs.empty()) throw UsageError("set_requires_grad on a non-leaf");
  node_->requires_grad = on;
}

Var Var::from_node(std::shared_ptr<Node> node) {
  Var v;
  v.node_ = std::move(node);
  return v;
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

bool grad_enabled() { return t_grad_enabled; }

Var make_result(Tensor value, std::vector<Var> inputs, BackwardFn fn, const char* op) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = op;
  if (t_grad_enabled) {
    bool any = std::any_of(inputs.begin(), inputs.end(), [](const Var& v) { return v.requires_grad(); });
    if (any) {
      node->requires_grad = true;
      node->inputs = std::move(inputs);
      node->backward = std::move(fn);
    }
  }
  return Var::from_node(std::move(node));
}

std::vector<Var> grad(const Var& output, const std::vector<Var>& inputs, bool create_graph,
                      const Var& seed) {
  std::vector<Var> result;
  result.reserve(inputs.size());
  if (!output.requires_grad()) {
    for (const auto& in : inputs) result.push_back(zeros_like(in));
    return result;
  }

  // Post-order DFS: inputs before the nodes that consume them.
  std::vector<Var> order;
  std::unordered_set<const Node*> visited;
  std::vector<std::pair<Var, std::size_t>> stack;
  stack.emplace_back(output, 0);
  visited.insert(output.node());
  while (!stack.empty()) {
    auto& [v, next] = stack.back();
    const auto& ins = v.node()->inputs;
    if (next < ins.size()) {
      const Var& child = ins[next++];
      if (child.requires_grad() && visited.insert(child.node()).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(v);
      stack.pop_back();
    }
  }

  std::unordered_set<const Node*> targets;
  for (const auto& in : inputs) targets.insert(in.node());
  std::unordered_set<const Node*> needed;
  for (const auto& v : order) {
    bool need = targets.count(v.node()) > 0;
    for (const auto& in : v.node()->inputs) need = need || needed.count(in.node()) > 0;
    if (need) needed.insert(v.node());
  }

  std::optional<NoGradGuard> no_grad;
  if (!create_graph) no_grad.emplace();
  const auto* saved_needed = t_needed;
  t_needed = &needed;

  std::unordered_map<const Node*, Var> grads;
  grads[output.node()] = seed.defined() ? seed : constant(Tensor(output.shape(), 1.0));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Node* n = it->node();
    auto found = grads.find(n);
    if (found == grads.end() || !n->backward || needed.count(n) == 0) continue;
    Var g = found->second;
    std::vector<Var> in_grads = n->backward(*n, *it, g);
    for (std::size_t i = 0; i < in_grads.size(); ++i) {
      if (!in_grads[i].defined() || !n->input_needs_grad(i)) continue;
      const Node* child = n->inputs[i].node();
      auto slot = grads.find(child);
      if (slot == grads.end()) {
        grads.emplace(child, in_grads[i]);
      } else {
        slot->second = add(slot->second, in_grads[i]);
      }
    }
  }
  t_needed = saved_needed;

  for (const auto& in : inputs) {
    auto found = grads.find(in.node());
    result.push_back(found == grads.end() ? zeros_like(in) : found->second);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Elementwise

Var constant(Tensor t) { return Var(std::move(t), false); }

Var detach(const Var& x) { return constant(x.value()); }

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return make_result(map_binary(a.value(), b.value(), std::plus<>()), {a, b},
                     [](const Node&, const Var&, const Var& g) { return std::vector<Var>{g, g}; }, "add");
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return make_result(map_binary(a.value(), b.value(), std::minus<>()), {a, b},
                     [](const Node& self, const Var&, const Var& g) {
                       return std::vector<Var>{g, self.input_needs_grad(1) ? neg(g) : Var()};
                     },
                     "sub");
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  return make_result(map_binary(a.value(), b.value(), std::multiplies<>()), {a, b},
                     [](const Node& self, const Var&, const Var& g) {
                       const Var& x = self.inputs[0];
                       const Var& y = self.inputs[1];
                       return std::vector<Var>{self.input_needs_grad(0) ? mul(g, y) : Var(),
                                               self.input_needs_grad(1) ? mul(g, x) : Var()};
                     },
                     "mul");
}

Var div(const Var& a, const Var& b) {
  require_same_shape(a, b, "div");
  return make_result(map_binary(a.value(), b.value(), std::divides<>()), {a, b},
                     [](const Node& self, const Var& out, const Var& g) {
                       const Var& y = self.inputs[1];
                       return std::vector<Var>{self.input_needs_grad(0) ? div(g, y) : Var(),
                                               self.input_needs_grad(1) ? neg(div(mul(g, out), y)) : Var()};
                     },
                     "div");
}

Var neg(const Var& x) {
  return make_result(map_unary(x.value(), [](double v) { return -v; }), {x},
                     [](const Node&, const Var&, const Var& g) { return std::vector<Var>{neg(g)}; }, "neg");
}

Var scale(const Var& x, double c) {
  return make_result(map_unary(x.value(), [c](double v) { return v * c; }), {x},
                     [c](const Node&, const Var&, const Var& g) { return std::vector<Var>{scale(g, c)}; },
                     "scale");
}

Var add_scalar(const Var& x, double c) {
  return make_result(map_unary(x.value(), [c](double v) { return v + c; }), {x},
                     [](const Node&, const Var&, const Var& g) { return std::vector<Var>{g}; }, "add_scalar");
}

Var exp(const Var& x) {
  return make_result(map_unary(x.value(), [](double v) { return std::exp(v); }), {x},
                     [](const Node&, const Var& out, const Var& g) { return std::vector<Var>{mul(g, out)}; },
                     "exp");
}

Var log(const Var& x) {
  return make_result(map_unary(x.value(), [](double v) { return std::log(v); }), {x},
                     [](const Node& self, const Var&, const Var& g) {
                       return std::vector<Var>{div(g, self.inputs[0])};
                     },
                     "log");
}

Var sqrt(const Var& x) {
  return make_result(map_unary(x.value(), [](double v) { return std::sqrt(v); }), {x},
                     [](const Node&, const Var& out, const Var& g) {
                       return std::vector<Var>{scale(div(g, out), 0.5)};
                     },
                     "sqrt");
}

Var tanh(const Var& x) {
  return make_result(map_unary(x.value(), [](double v) { return std::tanh(v); }), {x},
                     [](const Node&, const Var& out, const Var& g) {
                       return std::vector<Var>{mul(g, 1.0 - square(out))};
                     },
                     "tanh");
}

Var sigmoid(const Var& x) {
  return make_result(map_unary(x.value(),
                               [](double v) {
                                 return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
                               }),
                     {x},
                     [](const Node&, const Var& out, const Var& g) {
                       return std::vector<Var>{mul(g, mul(out, 1.0 - out))};
                     },
                     "sigmoid");
}

Var erf(const Var& x) {
  return make_result(map_unary(x.value(), [](double v) { return std::erf(v); }), {x},
                     [](const Node& self, const Var&, const Var& g) {
                       const double c = 2.0 / std::sqrt(std::numbers::pi);
                       return std::vector<Var>{mul(g, scale(exp(neg(square(self.inputs[0]))), c))};
                     },
                     "erf");
}

Var relu(const Var& x) {
  return make_result(map_unary(x.value(), [](double v) { return v > 0 ? v : 0.0; }), {x},
                     [](const Node& self, const Var&, const Var& g) {
                       Var mask = constant(map_unary(self.inputs[0].value(), [](double v) { return v > 0 ? 1.0 : 0.0; }));
                       return std::vector<Var>{mul(g, mask)};
                     },
                     "relu");
}

Var square(const Var& x) {
  return make_result(map_unary(x.value(), [](double v) { return v * v; }), {x},
                     [](const Node& self, const Var&, const Var& g) {
                       return std::vector<Var>{scale(mul(g, self.inputs[0]), 2.0)};
                     },
                     "square");
}

Var gelu(const Var& x) { return mul(scale(x, 0.5), 1.0 + erf(scale(x, 1.0 / std::numbers::sqrt2))); }

// ---------------------------------------------------------------------------
// Matrix product

Var matmul(const Var& a, const Var& b, bool ta, bool tb) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() < 2 || sa.size() != sb.size()) {
    throw UsageError("matmul: operands must have equal rank >= 2, got " + shape_str(sa) + " and " + shape_str(sb));
  }
  const std::size_t r = sa.size();
  for (std::size_t i = 0; i + 2 < r; ++i) {
    if (sa[i] != sb[i]) throw UsageError("matmul: batch dims differ " + shape_str(sa) + " vs " + shape_str(sb));
  }
  const std::int64_t ra = sa[r - 2], ca = sa[r - 1], rb = sb[r - 2], cb = sb[r - 1];
  const std::int64_t n = ta ? ca : ra;
  const std::int64_t k = ta ? ra : ca;
  const std::int64_t kb = tb ? cb : rb;
  const std::int64_t m = tb ? rb : cb;
  if (k != kb) throw UsageError("matmul: inner dims differ " + shape_str(sa) + " vs " + shape_str(sb));

  Shape out_shape(sa.begin(), sa.end() - 2);
  out_shape.push_back(n);
  out_shape.push_back(m);
  Tensor out(out_shape);
  const std::int64_t batch = shape_numel(Shape(sa.begin(), sa.end() - 2));
  const double* pa = a.value().data().data();
  const double* pb = b.value().data().data();
  double* pc = out.data().data();
  for (std::int64_t i = 0; i < batch; ++i) {
    Eigen::Map<const RowMat> A(pa + i * ra * ca, ra, ca);
    Eigen::Map<const RowMat> B(pb + i * rb * cb, rb, cb);
    Eigen::Map<RowMat> C(pc + i * n * m, n, m);
    // Small products skip the blocked GEMM path and its scratch allocations.
    const bool small = n * m * k <= 32 * 32 * 32;
    if (!ta && !tb) {
      if (small) C.noalias() = A.lazyProduct(B); else C.noalias() = A * B;
    } else if (ta && !tb) {
      if (small) C.noalias() = A.transpose().lazyProduct(B); else C.noalias() = A.transpose() * B;
    } else if (!ta && tb) {
      if (small) C.noalias() = A.lazyProduct(B.transpose()); else C.noalias() = A * B.transpose();
    } else {
      if (small) C.noalias() = A.transpose().lazyProduct(B.transpose()); else C.noalias() = A.transpose() * B.transpose();
    }
  }

  return make_result(std::move(out), {a, b},
                     [ta, tb](const Node& self, const Var&, const Var& g) {
                       const Var& x = self.inputs[0];
                       const Var& y = self.inputs[1];
                       Var gx, gy;
                       if (self.input_needs_grad(0)) gx = ta ? matmul(y, g, tb, true) : matmul(g, y, false, !tb);
                       if (self.input_needs_grad(1)) gy = tb ? matmul(g, x, true, ta) : matmul(x, g, !ta, false);
                       return std::vector<Var>{gx, gy};
                     },
                     "matmul");
}

// ---------------------------------------------------------------------------
// Reductions and broadcasts

Var sum_all(const Var& x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return make_result(Tensor::scalar(s), {x},
                     [](const Node& self, const Var&, const Var& g) {
                       return std::vector<Var>{expand_scalar(g, self.inputs[0].shape())};
                     },
                     "sum_all");
}

Var mean_all(const Var& x) {
  if (x.numel() == 0) throw UsageError("mean of empty tensor");
  return scale(sum_all(x), 1.0 / static_cast<double>(x.numel()));
}

Var expand_scalar(const Var& s, const Shape& shape) {
  if (s.numel() != 1) throw UsageError("expand_scalar: expected one element");
  return make_result(Tensor(shape, s.value()[0]), {s},
                     [](const Node& self, const Var&, const Var& g) {
                       return std::vector<Var>{reshape(sum_all(g), self.inputs[0].shape())};
                     },
                     "expand_scalar");
}

Var sum_rows(const Var& x) {
  if (x.value().ndim() < 1) throw UsageError("sum_rows on scalar");
  const std::int64_t m = x.dim(-1);
  const std::int64_t rows = m == 0 ? 0 : x.numel() / m;
  Tensor out(Shape{m});
  auto src = x.value().data();
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t j = 0; j < m; ++j) out[j] += src[r * m + j];
  return make_result(std::move(out), {x},
                     [](const Node& self, const Var&, const Var& g) {
                       return std::vector<Var>{expand_rows(g, self.inputs[0].shape())};
                     },
                     "sum_rows");
}

Var expand_rows(const Var& v, const Shape& shape) {
  if (v.value().ndim() != 1 || shape.empty() || shape.back() != v.dim(0)) {
    throw UsageError("expand_rows: cannot tile " + shape_str(v.shape()) + " into " + shape_str(shape));
  }
  Tensor out(shape);
  const std::int64_t m = v.dim(0);
  auto src = v.value().data();
  auto dst = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) dst[i] = src[i % m];
  return make_result(std::move(out), {v},
                     [](const Node&, const Var&, const Var& g) { return std::vector<Var>{sum_rows(g)}; },
                     "expand_rows");
}

Var sum_last(const Var& x) {
  if (x.value().ndim() < 1) throw UsageError("sum_last on scalar");
  const std::int64_t m = x.dim(-1);
  Shape out_shape(x.shape().begin(), x.shape().end() - 1);
  Tensor out(out_shape);
  auto src = x.value().data();
  for (std::int64_t r = 0; r < out.numel(); ++r) {
    double s = 0.0;
    for (std::int64_t j = 0; j < m; ++j) s += src[r * m + j];
    out[r] = s;
  }
  return make_result(std::move(out), {x},
                     [m](const Node&, const Var&, const Var& g) { return std::vector<Var>{expand_last(g, m)}; },
                     "sum_last");
}

Var expand_last(const Var& v, std::int64_t n) {
  Shape out_shape = v.shape();
  out_shape.push_back(n);
  Tensor out(out_shape);
  auto src = v.value().data();
  auto dst = out.data();
  for (std::int64_t r = 0; r < v.numel(); ++r)
    for (std::int64_t j = 0; j < n; ++j) dst[r * n + j] = src[r];
  return make_result(std::move(out), {v},
                     [](const Node&, const Var&, const Var& g) { return std::vector<Var>{sum_last(g)}; },
                     "expand_last");
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return make_result(std::move(out), {x},
                     [](const Node& self, const Var&, const Var& g) {
                       return std::vector<Var>{reshape(g, self.inputs[0].shape())};
                     },
                     "reshape");
}

// ---------------------------------------------------------------------------
// Index-driven linear maps

Var gather(const Var& x, IndexList idx, Shape out_shape) {
  if (static_cast<std::int64_t>(idx->size()) != shape_numel(out_shape)) {
    throw UsageError("gather: index count does not match output shape " + shape_str(out_shape));
  }
  Tensor out(std::move(out_shape));
  auto src = x.value().data();
  auto dst = out.data();
  const auto& ix = *idx;
  const auto n = static_cast<std::int64_t>(src.size());
  for (std::size_t i = 0; i < ix.size(); ++i) {
    if (ix[i] >= n) throw UsageError("gather: index out of range");
    dst[i] = ix[i] < 0 ? 0.0 : src[static_cast<std::size_t>(ix[i])];
  }
  return make_result(std::move(out), {x},
                     [idx](const Node& self, const Var&, const Var& g) {
                       return std::vector<Var>{scatter_add(g, idx, self.inputs[0].shape())};
                     },
                     "gather");
}

Var scatter_add(const Var& x, IndexList idx, Shape out_shape) {
  if (static_cast<std::int64_t>(idx->size()) != x.numel()) {
    throw UsageError("scatter_add: index count does not match input");
  }
  Tensor out(std::move(out_shape));
  auto src = x.value().data();
  auto dst = out.data();
  const auto& ix = *idx;
  const auto n = out.numel();
  for (std::size_t i = 0; i < ix.size(); ++i) {
    if (ix[i] < 0) continue;
    if (ix[i] >= n) throw UsageError("scatter_add: index out of range");
    dst[static_cast<std::size_t>(ix[i])] += src[i];
  }
  return make_result(std::move(out), {x},
                     [idx](const Node& self, const Var&, const Var& g) {
                       return std::vector<Var>{gather(g, idx, self.inputs[0].shape())};
                     },
                     "scatter_add");
}

Var permute(const Var& x, const std::vector<int>& perm) {
  const Shape& in = x.shape();
  if (perm.size() != in.size()) throw UsageError("permute: rank mismatch");
  Shape out_shape(in.size());
  for (std::size_t k = 0; k < perm.size(); ++k) out_shape[k] = in[static_cast<std::size_t>(perm[k])];
  const auto in_strides = strides_of(in);
  auto idx = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(x.numel()));
  std::vector<std::int64_t> counter(in.size(), 0);
  for (std::int64_t flat = 0; flat < x.numel(); ++flat) {
    std::int64_t src = 0;
    for (std::size_t k = 0; k < perm.size(); ++k) src += counter[k] * in_strides[static_cast<std::size_t>(perm[k])];
    (*idx)[static_cast<std::size_t>(flat)] = src;
    for (int k = static_cast<int>(out_shape.size()) - 1; k >= 0; --k) {
      if (++counter[k] < out_shape[k]) break;
      counter[k] = 0;
    }
  }
  return gather(x, std::move(idx), out_shape);
}

namespace {

// Flat positions of the block [start, end) along `axis` inside `shape`.
std::shared_ptr<std::vector<std::int64_t>> block_indices(const Shape& shape, int axis, std::int64_t start,
                                                         std::int64_t end) {
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::int64_t len = shape[static_cast<std::size_t>(axis)];
  auto idx = std::make_shared<std::vector<std::int64_t>>();
  idx->reserve(static_cast<std::size_t>(outer * (end - start) * inner));
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t a = start; a < end; ++a)
      for (std::int64_t i = 0; i < inner; ++i) idx->push_back((o * len + a) * inner + i);
  return idx;
}

}  // namespace

Var slice(const Var& x, int axis, std::int64_t start, std::int64_t end) {
  axis = norm_axis(axis, x.value().ndim());
  const std::int64_t len = x.shape()[static_cast<std::size_t>(axis)];
  if (start < 0 || end > len || start > end) throw UsageError("slice: range out of bounds");
  Shape out_shape = x.shape();
  out_shape[static_cast<std::size_t>(axis)] = end - start;
  return gather(x, block_indices(x.shape(), axis, start, end), out_shape);
}

Var concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) throw UsageError("concat of nothing");
  const int nd = parts[0].value().ndim();
  axis = norm_axis(axis, nd);
  Shape out_shape = parts[0].shape();
  out_shape[static_cast<std::size_t>(axis)] = 0;
  for (const auto& p : parts) {
    Shape s = p.shape();
    if (static_cast<int>(s.size()) != nd) throw UsageError("concat: rank mismatch");
    for (int i = 0; i < nd; ++i) {
      if (i != axis && s[static_cast<std::size_t>(i)] != out_shape[static_cast<std::size_t>(i)]) {
        throw UsageError("concat: shape mismatch " + shape_str(s) + " vs " + shape_str(parts[0].shape()));
      }
    }
    out_shape[static_cast<std::size_t>(axis)] += s[static_cast<std::size_t>(axis)];
  }
  Var total;
  std::int64_t offset = 0;
  for (const auto& p : parts) {
    const std::int64_t len = p.shape()[static_cast<std::size_t>(axis)];
    Var placed = scatter_add(p, block_indices(out_shape, axis, offset, offset + len), out_shape);
    total = total.defined() ? add(total, placed) : placed;
    offset += len;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Composite normalizations

Var normalize_last(const Var& x, double eps) {
  const std::int64_t m = x.dim(-1);
  const double inv_m = 1.0 / static_cast<double>(m);
  Var mean = scale(sum_last(x), inv_m);
  Var centered = x - expand_last(mean, m);
  Var var = scale(sum_last(square(centered)), inv_m);
  Var inv_std = div(constant(Tensor(var.shape(), 1.0)), sqrt(var + eps));
  return centered * expand_last(inv_std, m);
}

namespace {

Tensor row_max(const Tensor& x) {
  const std::int64_t m = x.dim(-1);
  Tensor out(Shape(x.shape().begin(), x.shape().end() - 1));
  auto src = x.data();
  for (std::int64_t r = 0; r < out.numel(); ++r) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < m; ++j) best = std::max(best, src[r * m + j]);
    out[r] = best;
  }
  return out;
}

}  // namespace

Var log_softmax_last(const Var& x) {
  const std::int64_t m = x.dim(-1);
  Var shifted = x - expand_last(constant(row_max(x.value())), m);
  Var lse = log(sum_last(exp(shifted)));
  return shifted - expand_last(lse, m);
}

Var softmax_last(const Var& x) {
  const std::int64_t m = x.dim(-1);
  Var e = exp(x - expand_last(constant(row_max(x.value())), m));
  return e / expand_last(sum_last(e), m);
}

}  // namespace ttslab::ad
