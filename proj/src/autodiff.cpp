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

#include "ctcocr/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ctcocr/error.hpp"

namespace ctcocr {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

ConstMatrixMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatrixMap(t.raw(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MatrixMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatrixMap(t.raw(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + " shape mismatch: " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

void require_rank(const char* op, const Var& x, std::size_t rank) {
  if (x.value().rank() != rank) {
    throw ShapeError(std::string(op) + " expects rank " + std::to_string(rank) + ", got " +
                     to_string(x.shape()));
  }
}

Node& input(Node& self, std::size_t i) { return *self.inputs[i]; }

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct ConvGeometry {
  std::size_t in_channels, height, width;
  std::size_t out_channels, kernel_h, kernel_w;
  std::size_t out_h, out_w;
  int stride, padding;

  std::size_t patch() const { return in_channels * kernel_h * kernel_w; }
  std::size_t positions() const { return out_h * out_w; }
};

// Valid output-column range [lo, hi) for which x = ox*stride - pad + kj
// falls inside [0, width).
std::pair<std::size_t, std::size_t> valid_columns(const ConvGeometry& g, std::size_t kj) {
  const long offset = static_cast<long>(kj) - g.padding;
  long lo = 0;
  if (offset < 0) lo = (-offset + g.stride - 1) / g.stride;
  long hi = (static_cast<long>(g.width) - 1 - offset) / g.stride + 1;
  if (static_cast<long>(g.width) - 1 - offset < 0) hi = 0;
  lo = std::min<long>(lo, static_cast<long>(g.out_w));
  hi = std::clamp<long>(hi, lo, static_cast<long>(g.out_w));
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// Unfolds every receptive field into a column: [Cin*kh*kw x Ho*Wo].
Tensor im2col(const Tensor& input, const ConvGeometry& g) {
  Tensor cols({g.patch(), g.positions()}, 0.0);
  double* dst = cols.raw();
  const double* src = input.raw();
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
        const auto [lo, hi] = valid_columns(g, kj);
        const long x0 = static_cast<long>(kj) - g.padding;
        for (std::size_t oy = 0; oy < g.out_h; ++oy, dst += g.out_w) {
          const long y = static_cast<long>(oy) * g.stride - g.padding + static_cast<long>(ki);
          if (y < 0 || y >= static_cast<long>(g.height)) continue;
          const double* row = src + (c * g.height + static_cast<std::size_t>(y)) * g.width;
          for (std::size_t ox = lo; ox < hi; ++ox) {
            dst[ox] = row[static_cast<long>(ox) * g.stride + x0];
          }
        }
      }
    }
  }
  return cols;
}

void col2im_accumulate(const Tensor& cols, const ConvGeometry& g, Tensor& grad_input) {
  const double* src = cols.raw();
  double* dst = grad_input.raw();
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
        const auto [lo, hi] = valid_columns(g, kj);
        const long x0 = static_cast<long>(kj) - g.padding;
        for (std::size_t oy = 0; oy < g.out_h; ++oy, src += g.out_w) {
          const long y = static_cast<long>(oy) * g.stride - g.padding + static_cast<long>(ki);
          if (y < 0 || y >= static_cast<long>(g.height)) continue;
          double* row = dst + (c * g.height + static_cast<std::size_t>(y)) * g.width;
          for (std::size_t ox = lo; ox < hi; ++ox) {
            row[static_cast<long>(ox) * g.stride + x0] += src[ox];
          }
        }
      }
    }
  }
}

thread_local bool g_grad_enabled = true;

}  // namespace

Node::~Node() {
  std::vector<std::shared_ptr<Node>> pending = std::move(inputs);
  while (!pending.empty()) {
    std::shared_ptr<Node> node = std::move(pending.back());
    pending.pop_back();
    // Sole owner: adopt its inputs before it dies so its destructor has
    // nothing left to release.
    if (node && node.use_count() == 1) {
      for (auto& in : node->inputs) pending.push_back(std::move(in));
      node->inputs.clear();
    }
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor& Node::grad_buffer() {
  if (grad_.empty()) grad_ = Tensor(value.shape(), 0.0);
  return grad_;
}

Var Var::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->op = "constant";
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::parameter(Tensor value) {
  auto node = std::make_shared<Node>();
  node->op = "parameter";
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

Var make_op(std::string_view op, Tensor value, std::vector<Var> inputs, BackwardFn backward_fn) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->value = std::move(value);
  if (g_grad_enabled) {
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) {
      node->requires_grad = node->requires_grad || in.requires_grad();
      node->inputs.push_back(in.shared());
    }
  }
  if (node->requires_grad) {
    node->backward_fn = std::move(backward_fn);
  } else {
    // Nothing upstream needs gradient; drop the inputs so the graph can be freed early.
    node->inputs.clear();
  }
  return Var(std::move(node));
}

void backward(const Var& root) {
  if (!root) throw UsageError("backward on an empty variable");
  if (root.value().size() != 1) {
    throw UsageError("backward needs a scalar root, got shape " + to_string(root.shape()));
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order without recursion depth limits.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  visited.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer().fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && node->has_grad()) node->backward_fn(*node);
  }
}

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, int stride, int padding) {
  return (in + 2 * static_cast<std::size_t>(padding) - kernel) / static_cast<std::size_t>(stride) +
         1;
}

Var matmul(const Var& a, const Var& b) {
  Tensor out = matmul(a.value(), b.value());
  return make_op("matmul", std::move(out), {a, b}, [](Node& self) {
    Node& a = input(self, 0);
    Node& b = input(self, 1);
    const std::size_t m = a.value.dim(0), k = a.value.dim(1), n = b.value.dim(1);
    const auto g = as_matrix(self.grad(), m, n);
    if (a.requires_grad) {
      as_matrix(a.grad_buffer(), m, k).noalias() += g * as_matrix(b.value, k, n).transpose();
    }
    if (b.requires_grad) {
      as_matrix(b.grad_buffer(), k, n).noalias() += as_matrix(a.value, m, k).transpose() * g;
    }
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  Tensor out = a.value();
  out += b.value();
  return make_op("add", std::move(out), {a, b}, [](Node& self) {
    for (std::size_t i = 0; i < 2; ++i) {
      if (input(self, i).requires_grad) input(self, i).grad_buffer() += self.grad();
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return make_op("sub", std::move(out), {a, b}, [](Node& self) {
    if (input(self, 0).requires_grad) input(self, 0).grad_buffer() += self.grad();
    if (input(self, 1).requires_grad) {
      Tensor& gb = input(self, 1).grad_buffer();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= self.grad()[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_op("mul", std::move(out), {a, b}, [](Node& self) {
    Node& a = input(self, 0);
    Node& b = input(self, 1);
    const Tensor& g = self.grad();
    if (a.requires_grad) {
      Tensor& ga = a.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.value[i];
    }
    if (b.requires_grad) {
      Tensor& gb = b.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.value[i];
    }
  });
}

Var add_row_bias(const Var& x, const Var& bias) {
  require_rank("add_row_bias", x, 2);
  if (bias.value().size() != x.value().dim(1)) {
    throw ShapeError("add_row_bias: bias " + to_string(bias.shape()) + " does not match " +
                     to_string(x.shape()));
  }
  const std::size_t rows = x.value().dim(0), cols = x.value().dim(1);
  Tensor out = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) += bias.value()[c];
  }
  return make_op("add_row_bias", std::move(out), {x, bias}, [rows, cols](Node& self) {
    if (input(self, 0).requires_grad) input(self, 0).grad_buffer() += self.grad();
    if (input(self, 1).requires_grad) {
      Tensor& gb = input(self, 1).grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) gb[c] += self.grad().at(r, c);
      }
    }
  });
}

Var add_channel_bias(const Var& x, const Var& bias) {
  require_rank("add_channel_bias", x, 3);
  const std::size_t channels = x.value().dim(0);
  const std::size_t plane = x.value().dim(1) * x.value().dim(2);
  if (bias.value().size() != channels) {
    throw ShapeError("add_channel_bias: bias " + to_string(bias.shape()) + " does not match " +
                     to_string(x.shape()));
  }
  Tensor out = x.value();
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] += bias.value()[c];
  }
  return make_op("add_channel_bias", std::move(out), {x, bias}, [channels, plane](Node& self) {
    if (input(self, 0).requires_grad) input(self, 0).grad_buffer() += self.grad();
    if (input(self, 1).requires_grad) {
      Tensor& gb = input(self, 1).grad_buffer();
      for (std::size_t c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += self.grad()[c * plane + i];
        gb[c] += acc;
      }
    }
  });
}

namespace {

Var conv2d_impl(const Var& in, const Var& kernels, const Var* bias, int stride, int padding) {
  require_rank("conv2d input", in, 3);
  require_rank("conv2d kernels", kernels, 4);
  if (stride < 1 || padding < 0) {
    throw ShapeError("conv2d needs stride >= 1 and padding >= 0");
  }
  const Shape& xs = in.shape();
  const Shape& ks = kernels.shape();
  if (ks[1] != xs[0]) {
    throw ShapeError("conv2d channel mismatch: input " + to_string(xs) + ", kernels " +
                     to_string(ks));
  }
  if (bias && bias->value().size() != ks[0]) {
    throw ShapeError("conv2d bias " + to_string(bias->shape()) + " does not match kernels " +
                     to_string(ks));
  }
  const std::size_t padded_h = xs[1] + 2 * static_cast<std::size_t>(padding);
  const std::size_t padded_w = xs[2] + 2 * static_cast<std::size_t>(padding);
  if (ks[2] > padded_h || ks[3] > padded_w) {
    throw ShapeError("conv2d kernel " + to_string(ks) + " larger than padded input " +
                     to_string(xs) + " (padding " + std::to_string(padding) + ")");
  }
  ConvGeometry g{xs[0],
                 xs[1],
                 xs[2],
                 ks[0],
                 ks[2],
                 ks[3],
                 conv_output_extent(xs[1], ks[2], stride, padding),
                 conv_output_extent(xs[2], ks[3], stride, padding),
                 stride,
                 padding};

  Tensor cols = im2col(in.value(), g);
  Tensor out({g.out_channels, g.out_h, g.out_w});
  auto out_map = as_matrix(out, g.out_channels, g.positions());
  out_map.noalias() = as_matrix(kernels.value(), g.out_channels, g.patch()) *
                      as_matrix(cols, g.patch(), g.positions());
  std::vector<Var> inputs = {in, kernels};
  if (bias) {
    out_map.colwise() += Eigen::Map<const Eigen::VectorXd>(
        bias->value().raw(), static_cast<Eigen::Index>(g.out_channels));
    inputs.push_back(*bias);
  }

  return make_op("conv2d", std::move(out), std::move(inputs),
                 [g, cols = std::move(cols)](Node& self) {
                   Node& x = input(self, 0);
                   Node& k = input(self, 1);
                   const auto grad_out = as_matrix(self.grad(), g.out_channels, g.positions());
                   if (k.requires_grad) {
                     as_matrix(k.grad_buffer(), g.out_channels, g.patch()).noalias() +=
                         grad_out * as_matrix(cols, g.patch(), g.positions()).transpose();
                   }
                   if (self.inputs.size() > 2 && input(self, 2).requires_grad) {
                     Eigen::Map<Eigen::VectorXd>(input(self, 2).grad_buffer().raw(),
                                                 static_cast<Eigen::Index>(g.out_channels)) +=
                         grad_out.rowwise().sum();
                   }
                   if (x.requires_grad) {
                     Tensor grad_cols({g.patch(), g.positions()});
                     as_matrix(grad_cols, g.patch(), g.positions()).noalias() =
                         as_matrix(k.value, g.out_channels, g.patch()).transpose() * grad_out;
                     col2im_accumulate(grad_cols, g, x.grad_buffer());
                   }
                 });
}

}  // namespace

Var conv2d(const Var& in, const Var& kernels, int stride, int padding) {
  return conv2d_impl(in, kernels, nullptr, stride, padding);
}

Var conv2d(const Var& in, const Var& kernels, const Var& bias, int stride, int padding) {
  return conv2d_impl(in, kernels, &bias, stride, padding);
}

Var max_pool2d(const Var& in, int window, int stride) {
  require_rank("max_pool2d", in, 3);
  if (window < 1 || stride < 1) throw ShapeError("max_pool2d needs window, stride >= 1");
  const std::size_t channels = in.shape()[0], h = in.shape()[1], w = in.shape()[2];
  const auto win = static_cast<std::size_t>(window);
  if (win > h || win > w) {
    throw ShapeError("max_pool2d window " + std::to_string(window) + " exceeds input " +
                     to_string(in.shape()));
  }
  const std::size_t oh = conv_output_extent(h, win, stride, 0);
  const std::size_t ow = conv_output_extent(w, win, stride, 0);
  Tensor out({channels, oh, ow});
  std::vector<std::size_t> argmax(out.size());
  const Tensor& x = in.value();
  std::size_t o = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
        std::size_t best = (c * h + oy * stride) * w + ox * stride;
        for (std::size_t dy = 0; dy < win; ++dy) {
          for (std::size_t dx = 0; dx < win; ++dx) {
            const std::size_t idx = (c * h + oy * stride + dy) * w + ox * stride + dx;
            if (x[idx] > x[best]) best = idx;  // strict: first maximum wins
          }
        }
        argmax[o] = best;
        out[o] = x[best];
      }
    }
  }
  return make_op("max_pool2d", std::move(out), {in}, [argmax = std::move(argmax)](Node& self) {
    Tensor& gx = input(self, 0).grad_buffer();
    for (std::size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += self.grad()[i];
  });
}

Var activation(const Var& x, Activation kind) {
  Tensor out = x.value();
  switch (kind) {
    case Activation::kRelu:
      for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::kTanh:
      for (double& v : out.data()) v = std::tanh(v);
      break;
    case Activation::kSigmoid:
      for (double& v : out.data()) v = stable_sigmoid(v);
      break;
  }
  static constexpr std::string_view kNames[] = {"relu", "tanh", "sigmoid"};
  return make_op(kNames[static_cast<int>(kind)], std::move(out), {x}, [kind](Node& self) {
    Node& in = input(self, 0);
    Tensor& gx = in.grad_buffer();
    const Tensor& g = self.grad();
    const Tensor& y = self.value;
    switch (kind) {
      case Activation::kRelu:
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (in.value[i] > 0.0) gx[i] += g[i];
        }
        break;
      case Activation::kTanh:
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
      case Activation::kSigmoid:
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
    }
  });
}

Var log_softmax_rows(const Var& x) {
  require_rank("log_softmax_rows", x, 2);
  return make_op("log_softmax_rows", log_softmax_rows(x.value()), {x}, [](Node& self) {
    const std::size_t rows = self.value.dim(0), cols = self.value.dim(1);
    Tensor& gx = input(self, 0).grad_buffer();
    const Tensor& g = self.grad();
    for (std::size_t r = 0; r < rows; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < cols; ++c) total += g.at(r, c);
      for (std::size_t c = 0; c < cols; ++c) {
        gx.at(r, c) += g.at(r, c) - std::exp(self.value.at(r, c)) * total;
      }
    }
  });
}

Var sum(const Var& x) {
  double acc = 0.0;
  for (double v : x.value().data()) acc += v;
  return make_op("sum", Tensor::scalar(acc), {x}, [](Node& self) {
    const double g = self.grad()[0];
    for (double& v : input(self, 0).grad_buffer().data()) v += g;
  });
}

Var slice_rows(const Var& x, std::size_t begin, std::size_t end) {
  require_rank("slice_rows", x, 2);
  const std::size_t cols = x.shape()[1];
  if (begin >= end || end > x.shape()[0]) {
    throw ShapeError("slice_rows [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for " + to_string(x.shape()));
  }
  const auto first = x.value().data().begin() + static_cast<std::ptrdiff_t>(begin * cols);
  Tensor out({end - begin, cols},
             std::vector<double>(first, first + static_cast<std::ptrdiff_t>((end - begin) * cols)));
  return make_op("slice_rows", std::move(out), {x}, [begin, cols](Node& self) {
    Tensor& gx = input(self, 0).grad_buffer();
    const Tensor& g = self.grad();
    for (std::size_t i = 0; i < g.size(); ++i) gx[begin * cols + i] += g[i];
  });
}

Var slice_cols(const Var& x, std::size_t begin, std::size_t end) {
  require_rank("slice_cols", x, 2);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (begin >= end || end > cols) {
    throw ShapeError("slice_cols [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for " + to_string(x.shape()));
  }
  const std::size_t width = end - begin;
  Tensor out({rows, width});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < width; ++c) out.at(r, c) = x.value().at(r, begin + c);
  }
  return make_op("slice_cols", std::move(out), {x}, [begin, rows, width](Node& self) {
    Tensor& gx = input(self, 0).grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < width; ++c) gx.at(r, begin + c) += self.grad().at(r, c);
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows needs at least one part");
  const std::size_t cols = parts.front().shape().at(1);
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require_rank("concat_rows", p, 2);
    if (p.shape()[1] != cols) {
      throw ShapeError("concat_rows column mismatch: " + to_string(p.shape()) + " vs " +
                       to_string(parts.front().shape()));
    }
    rows += p.shape()[0];
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const auto& p : parts) data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  return make_op("concat_rows", Tensor({rows, cols}, std::move(data)), parts, [](Node& self) {
    std::size_t offset = 0;
    for (auto& part : self.inputs) {
      const std::size_t n = part->value.size();
      if (part->requires_grad) {
        Tensor& gp = part->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) gp[i] += self.grad()[offset + i];
      }
      offset += n;
    }
  });
}

Var concat_cols(const Var& a, const Var& b) {
  require_rank("concat_cols", a, 2);
  require_rank("concat_cols", b, 2);
  if (a.shape()[0] != b.shape()[0]) {
    throw ShapeError("concat_cols row mismatch: " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
  const std::size_t rows = a.shape()[0], ca = a.shape()[1], cb = b.shape()[1];
  Tensor out({rows, ca + cb});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < ca; ++c) out.at(r, c) = a.value().at(r, c);
    for (std::size_t c = 0; c < cb; ++c) out.at(r, ca + c) = b.value().at(r, c);
  }
  return make_op("concat_cols", std::move(out), {a, b}, [rows, ca, cb](Node& self) {
    Node& a = input(self, 0);
    Node& b = input(self, 1);
    for (std::size_t r = 0; r < rows; ++r) {
      if (a.requires_grad) {
        for (std::size_t c = 0; c < ca; ++c) a.grad_buffer().at(r, c) += self.grad().at(r, c);
      }
      if (b.requires_grad) {
        for (std::size_t c = 0; c < cb; ++c) b.grad_buffer().at(r, c) += self.grad().at(r, ca + c);
      }
    }
  });
}

}  // namespace ctcocr

namespace ctcocr {

Var gru_sequence(const Var& projected, const Var& w_hh, const Var& b_hh, bool reverse) {
  require_rank("gru_sequence inputs", projected, 2);
  require_rank("gru_sequence w_hh", w_hh, 2);
  const std::size_t steps = projected.shape()[0];
  const std::size_t hidden = w_hh.shape()[0];
  const std::size_t gates = 3 * hidden;
  if (projected.shape()[1] != gates || w_hh.shape()[1] != gates || b_hh.value().size() != gates) {
    throw ShapeError("gru_sequence shape mismatch: inputs " + to_string(projected.shape()) +
                     ", w_hh " + to_string(w_hh.shape()) + ", b_hh " + to_string(b_hh.shape()));
  }
  using Row = Eigen::Matrix<double, 1, Eigen::Dynamic>;
  const auto n_h = static_cast<Eigen::Index>(hidden);
  const auto W = as_matrix(w_hh.value(), hidden, gates);
  const Eigen::Map<const Row> bias(b_hh.value().raw(), static_cast<Eigen::Index>(gates));
  const auto X = as_matrix(projected.value(), steps, gates);

  // Per processed step: previous state, gate activations, and h*W_hn + b_hn.
  Tensor h_prev({steps, hidden}), reset({steps, hidden}), update({steps, hidden}),
      candidate({steps, hidden}), recurrent_new({steps, hidden});
  Tensor out({steps, hidden});
  Row h = Row::Zero(n_h);
  Row hg(static_cast<Eigen::Index>(gates));
  for (std::size_t i = 0; i < steps; ++i) {
    const std::size_t t = reverse ? steps - 1 - i : i;
    hg.noalias() = h * W;
    hg += bias;
    const auto x = X.row(static_cast<Eigen::Index>(t));
    for (std::size_t j = 0; j < hidden; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double r = stable_sigmoid(x(jj) + hg(jj));
      const double z = stable_sigmoid(x(n_h + jj) + hg(n_h + jj));
      const double n = std::tanh(x(2 * n_h + jj) + r * hg(2 * n_h + jj));
      h_prev.at(i, j) = h(jj);
      reset.at(i, j) = r;
      update.at(i, j) = z;
      candidate.at(i, j) = n;
      recurrent_new.at(i, j) = hg(2 * n_h + jj);
      h(jj) = n + z * (h(jj) - n);
      out.at(t, j) = h(jj);
    }
  }

  return make_op(
      "gru_sequence", std::move(out), {projected, w_hh, b_hh},
      [steps, hidden, gates, reverse, h_prev = std::move(h_prev), reset = std::move(reset),
       update = std::move(update), candidate = std::move(candidate),
       recurrent_new = std::move(recurrent_new)](Node& self) {
        Node& px = input(self, 0);
        Node& pw = input(self, 1);
        Node& pb = input(self, 2);
        const auto n_h = static_cast<Eigen::Index>(hidden);
        const auto W = as_matrix(pw.value, hidden, gates);
        // Gradient w.r.t. h*W_hh + b_hh for every processed step.
        Tensor d_rec({steps, gates});
        Tensor* d_x = px.requires_grad ? &px.grad_buffer() : nullptr;
        Row dh = Row::Zero(n_h);
        for (std::size_t i = steps; i-- > 0;) {
          const std::size_t t = reverse ? steps - 1 - i : i;
          for (std::size_t j = 0; j < hidden; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const double g = dh(jj) + self.grad().at(t, j);
            const double r = reset.at(i, j), z = update.at(i, j), n = candidate.at(i, j);
            const double dn = g * (1.0 - z);
            const double da_n = dn * (1.0 - n * n);
            const double da_z = g * (h_prev.at(i, j) - n) * z * (1.0 - z);
            const double da_r = da_n * recurrent_new.at(i, j) * r * (1.0 - r);
            d_rec.at(i, j) = da_r;
            d_rec.at(i, hidden + j) = da_z;
            d_rec.at(i, 2 * hidden + j) = da_n * r;
            if (d_x) {
              d_x->at(t, j) += da_r;
              d_x->at(t, hidden + j) += da_z;
              d_x->at(t, 2 * hidden + j) += da_n;
            }
            dh(jj) = g * z;
          }
          dh.noalias() += as_matrix(d_rec, steps, gates).row(static_cast<Eigen::Index>(i)) *
                          W.transpose();
        }
        if (pw.requires_grad) {
          as_matrix(pw.grad_buffer(), hidden, gates).noalias() +=
              as_matrix(h_prev, steps, hidden).transpose() * as_matrix(d_rec, steps, gates);
        }
        if (pb.requires_grad) {
          Eigen::Map<Row>(pb.grad_buffer().raw(), static_cast<Eigen::Index>(gates)) +=
              as_matrix(d_rec, steps, gates).colwise().sum();
        }
      });
}

}  // namespace ctcocr
