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

// Small reverse-mode automatic differentiation engine.
//
// Every backward rule is written in terms of the same differentiable
// operations used in the forward pass, so gradients can themselves be
// differentiated (`grad(..., create_graph = true)`). The critic gradient
// penalty relies on this.
//
// Values are stored as double. Shapes are row-major; a scalar has an empty
// shape and one element.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ttslab::ad {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(Shape{}, v); }

  const Shape& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  /// Size of axis `axis`; negative values count from the back.
  std::int64_t dim(int axis) const;
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  Tensor reshaped(Shape shape) const;
  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

class Var;
struct Node;

using IndexList = std::shared_ptr<const std::vector<std::int64_t>>;

/// Backward rule: receives the node being differentiated, the node's own
/// output as a Var and the incoming gradient. Returns one gradient per input
/// (an undefined Var for inputs that do not require grad).
using BackwardFn =
    std::function<std::vector<Var>(const Node& self, const Var& out, const Var& grad)>;

struct Node {
  Tensor value;
  bool requires_grad = false;
  std::vector<Var> inputs;
  BackwardFn backward;
  const char* op = "leaf";

  bool input_needs_grad(std::size_t i) const;
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor& value() const { return node_->value; }
  /// In-place access for optimizers; never mutate a value that is part of a
  /// live graph.
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::int64_t numel() const { return node_->value.numel(); }
  std::int64_t dim(int axis) const { return node_->value.dim(axis); }
  double item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on);

  const Node* node() const { return node_.get(); }

  static Var from_node(std::shared_ptr<Node> node);
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Disables graph recording for its lifetime (thread-local).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

Var make_result(Tensor value, std::vector<Var> inputs, BackwardFn fn, const char* op);

/// Gradients of `output` (any shape; seeded with ones, or `seed` when given)
/// with respect to each of `inputs`. Inputs not reached get zero tensors.
/// With `create_graph` the returned gradients are differentiable.
std::vector<Var> grad(const Var& output, const std::vector<Var>& inputs,
                      bool create_graph = false, const Var& seed = Var());

// ---------------------------------------------------------------------------
// Operations.

Var constant(Tensor t);
Var detach(const Var& x);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& x);
Var scale(const Var& x, double c);
Var add_scalar(const Var& x, double c);

Var exp(const Var& x);
Var log(const Var& x);
Var sqrt(const Var& x);
Var tanh(const Var& x);
Var sigmoid(const Var& x);
Var erf(const Var& x);
Var relu(const Var& x);
Var square(const Var& x);
/// Exact (erf-based) GELU.
Var gelu(const Var& x);

/// Batched matrix product over the last two axes. Leading axes of `a` and `b`
/// must match exactly. `ta`/`tb` transpose the corresponding operand.
Var matmul(const Var& a, const Var& b, bool ta = false, bool tb = false);

Var sum_all(const Var& x);
Var mean_all(const Var& x);
Var expand_scalar(const Var& s, const Shape& shape);

/// Views `x` as [rows, last] and sums over rows; result has shape [last].
Var sum_rows(const Var& x);
/// Inverse-shaped companion of sum_rows: tiles `v` ([last]) into `shape`.
Var expand_rows(const Var& v, const Shape& shape);
/// Sums over the last axis.
Var sum_last(const Var& x);
/// Appends an axis of length `n` by repetition.
Var expand_last(const Var& v, std::int64_t n);

Var reshape(const Var& x, Shape shape);

/// out[i] = x[idx[i]], or 0 where idx[i] < 0.
Var gather(const Var& x, IndexList idx, Shape out_shape);
/// out = zeros(out_shape); out[idx[i]] += x[i] for idx[i] >= 0.
Var scatter_add(const Var& x, IndexList idx, Shape out_shape);

Var permute(const Var& x, const std::vector<int>& perm);
Var slice(const Var& x, int axis, std::int64_t start, std::int64_t end);
Var concat(const std::vector<Var>& parts, int axis);

/// Mean-and-variance normalization over the last axis (no affine part).
Var normalize_last(const Var& x, double eps);
/// Row-wise log-softmax over the last axis.
Var log_softmax_last(const Var& x);
Var softmax_last(const Var& x);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& a) { return neg(a); }
inline Var operator*(const Var& a, double c) { return scale(a, c); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }
inline Var operator+(const Var& a, double c) { return add_scalar(a, c); }
inline Var operator+(double c, const Var& a) { return add_scalar(a, c); }
inline Var operator-(const Var& a, double c) { return add_scalar(a, -c); }
inline Var operator-(double c, const Var& a) { return add_scalar(neg(a), c); }

}  // namespace ttslab::ad
