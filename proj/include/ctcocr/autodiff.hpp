// Copyright 2026 The ctcocr Authors.
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

#pragma once

#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "ctcocr/tensor.hpp"

namespace ctcocr {

class Node;

// Propagates `self.grad` into the gradient buffers of `self.inputs`.
using BackwardFn = std::function<void(Node& self)>;

// One vertex of the computation graph. Inputs are held by shared ownership,
// so a graph lives exactly as long as something references its root.
class Node {
 public:
  Node() = default;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;
  // Unlinks inputs iteratively; the default would recurse once per node.
  ~Node();

  std::string_view op;
  Tensor value;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward_fn;
  bool requires_grad = false;

  bool has_grad() const { return !grad_.empty(); }
  const Tensor& grad() const { return grad_; }
  // Allocates a zero buffer shaped like `value` on first use.
  Tensor& grad_buffer();
  void clear_grad() { grad_ = Tensor(); }

 private:
  Tensor grad_;
};

// Handle to a graph node. Copies share the node.
class Var {
 public:
  Var() = default;

  // Leaf that never receives gradient (images, targets).
  static Var constant(Tensor value);
  // Leaf that accumulates gradient across backward passes until zero_grad().
  static Var parameter(Tensor value);

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }

  bool has_grad() const { return node_->has_grad(); }
  // Gradient accumulator; zeros if nothing has flowed in yet.
  const Tensor& grad() const { return node_->grad_buffer(); }
  void zero_grad() { node_->clear_grad(); }

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;

  friend Var make_op(std::string_view, Tensor, std::vector<Var>, BackwardFn);
};

// While alive, operations created on this thread record no backward
// closures, so graphs built for inference carry no gradient caches.
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

// Registers a new differentiable operation. `backward` is only kept (and
// only invoked) when at least one input requires gradient.
Var make_op(std::string_view op, Tensor value, std::vector<Var> inputs, BackwardFn backward);

// Reverse-mode sweep from a single-element root. Each reachable node that
// requires gradient is visited once, in reverse topological order, and
// parameter leaves accumulate into their gradient buffers.
void backward(const Var& root);

enum class Activation { kRelu, kTanh, kSigmoid };

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
// x[M x N] + bias[N] on every row.
Var add_row_bias(const Var& x, const Var& bias);
// x[C x H x W] + bias[C] on every channel plane.
Var add_channel_bias(const Var& x, const Var& bias);

// Cross-correlation (no kernel flip). input [Cin x H x W], kernels
// [Cout x Cin x kh x kw].
Var conv2d(const Var& input, const Var& kernels, int stride, int padding);
// Same, with a per-output-channel bias [Cout] folded into the product.
Var conv2d(const Var& input, const Var& kernels, const Var& bias, int stride, int padding);
// Gradient goes to the first maximum of each window in row-major order.
Var max_pool2d(const Var& input, int window, int stride);

Var activation(const Var& x, Activation kind);
inline Var relu(const Var& x) { return activation(x, Activation::kRelu); }
inline Var tanh(const Var& x) { return activation(x, Activation::kTanh); }
inline Var sigmoid(const Var& x) { return activation(x, Activation::kSigmoid); }

Var log_softmax_rows(const Var& x);
Var sum(const Var& x);

Var slice_rows(const Var& x, std::size_t begin, std::size_t end);
Var slice_cols(const Var& x, std::size_t begin, std::size_t end);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const Var& a, const Var& b);

// Whole-sequence GRU recurrence. `projected` holds the input contributions
// x_t * W_ih + b_ih for every step (T x 3H, gate order reset|update|new);
// `w_hh` is H x 3H and `b_hh` 3H. Returns hidden states T x H, row t being
// the state after consuming step t (steps are consumed from T-1 down to 0
// when `reverse`). The initial state is zero.
Var gru_sequence(const Var& projected, const Var& w_hh, const Var& b_hh, bool reverse);

// Output extent of a sliding window along one axis.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, int stride, int padding);

}  // namespace ctcocr
