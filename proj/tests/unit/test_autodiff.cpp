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


#include <gtest/gtest.h>

#include <cmath>

#include "ctcocr/autodiff.hpp"
#include "ctcocr/error.hpp"
#include "test_support.hpp"

namespace ctcocr {
namespace {

using testing::gradient_check;
using testing::max_abs_diff;
using testing::random_tensor;
using testing::weighted_sum;

constexpr int kGradTrials = 20;
constexpr double kGradTol = 1e-4;

TEST(Tensor, MatmulMatchesNaiveLoops) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = rng.below(9) + 1, k = rng.below(9) + 1, n = rng.below(9) + 1;
    const Tensor a = random_tensor(rng, {m, k}), b = random_tensor(rng, {k, n});
    EXPECT_LE(max_abs_diff(matmul(a, b), testing::naive_matmul(a, b)), 1e-12);
  }
}

TEST(Tensor, MatmulRejectsMismatchedInner) {
  EXPECT_THROW(matmul(Tensor({2, 3}), Tensor({2, 3})), ShapeError);
}

TEST(Tensor, TransposeSwapsIndices) {
  const Tensor a = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  const Tensor t = transpose(a);
  ASSERT_EQ(t.shape(), (Shape{3, 2}));
  EXPECT_EQ(t.at(2, 1), 6.0);
  EXPECT_EQ(t.at(0, 1), 4.0);
}

TEST(Tensor, LogSoftmaxRowsNormalize) {
  Rng rng(2);
  for (double spread : {1.0, 50.0, 1000.0}) {
    const Tensor lp = log_softmax_rows(random_tensor(rng, {7, 11}, -spread, spread));
    ASSERT_TRUE(lp.all_finite());
    for (std::size_t r = 0; r < 7; ++r) {
      double mass = 0.0;
      for (std::size_t c = 0; c < 11; ++c) mass += std::exp(lp.at(r, c));
      EXPECT_NEAR(mass, 1.0, 1e-12);
    }
  }
}

TEST(Tensor, LogsumexpOfNegativeInfinities) {
  const std::vector<double> v = {-INFINITY, -INFINITY};
  EXPECT_EQ(logsumexp(v), -INFINITY);
  const std::vector<double> w = {std::log(0.25), std::log(0.75)};
  EXPECT_NEAR(logsumexp(w), 0.0, 1e-15);
}

TEST(Conv2d, MatchesNaiveLoopsOnRandomShapes) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t cin = rng.below(3) + 1, cout = rng.below(4) + 1;
    const std::size_t kh = rng.below(3) + 1, kw = rng.below(3) + 1;
    const int stride = rng.between(1, 2), pad = rng.between(0, 2);
    const std::size_t h = kh + rng.below(8), w = kw + rng.below(8);
    const Tensor x = random_tensor(rng, {cin, h, w});
    const Tensor k = random_tensor(rng, {cout, cin, kh, kw});
    const Tensor got = conv2d(Var::constant(x), Var::constant(k), stride, pad).value();
    const Tensor want = testing::naive_conv2d(x, k, stride, pad);
    ASSERT_EQ(got.shape(), want.shape());
    EXPECT_LE(max_abs_diff(got, want), 1e-12) << "trial " << trial;
  }
}

TEST(Conv2d, FusedBiasEqualsSeparateBias) {
  Rng rng(4);
  const Var x = Var::constant(random_tensor(rng, {2, 6, 7}));
  const Var k = Var::constant(random_tensor(rng, {3, 2, 3, 3}));
  const Var b = Var::constant(random_tensor(rng, {3}));
  const Tensor fused = conv2d(x, k, b, 1, 1).value();
  const Tensor separate = add_channel_bias(conv2d(x, k, 1, 1), b).value();
  EXPECT_LE(max_abs_diff(fused, separate), 1e-12);
}

TEST(MaxPool, MatchesNaiveLoopsOnRandomShapes) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int window = rng.between(1, 3), stride = rng.between(1, 3);
    const std::size_t c = rng.below(3) + 1;
    const std::size_t h = static_cast<std::size_t>(window) + rng.below(7);
    const std::size_t w = static_cast<std::size_t>(window) + rng.below(7);
    const Tensor x = random_tensor(rng, {c, h, w});
    const Tensor got = max_pool2d(Var::constant(x), window, stride).value();
    const Tensor want = testing::naive_max_pool(x, window, stride);
    ASSERT_EQ(got.shape(), want.shape());
    EXPECT_LE(max_abs_diff(got, want), 1e-12);
  }
}

TEST(MaxPool, TiesRouteGradientToFirstMaximum) {
  const Var x = Var::parameter(Tensor({1, 2, 2}, 1.0));
  backward(sum(max_pool2d(x, 2, 2)));
  EXPECT_EQ(x.grad()[0], 1.0);
  EXPECT_EQ(x.grad()[1], 0.0);
  EXPECT_EQ(x.grad()[2], 0.0);
  EXPECT_EQ(x.grad()[3], 0.0);
}

TEST(Autodiff, ElementwiseGradients) {
  Rng rng(6);
  for (int trial = 0; trial < kGradTrials; ++trial) {
    const Shape s = {rng.below(4) + 1, rng.below(4) + 1};
    const std::vector<Tensor> in = {random_tensor(rng, s), random_tensor(rng, s)};
    const auto seed = rng.next_u64();
    EXPECT_LE(gradient_check([&](const auto& v) { return weighted_sum(add(v[0], v[1]), seed); }, in), kGradTol);
    EXPECT_LE(gradient_check([&](const auto& v) { return weighted_sum(sub(v[0], v[1]), seed); }, in), kGradTol);
    EXPECT_LE(gradient_check([&](const auto& v) { return weighted_sum(mul(v[0], v[1]), seed); }, in), kGradTol);
  }
}

TEST(Autodiff, MatmulGradient) {
  Rng rng(7);
  for (int trial = 0; trial < kGradTrials; ++trial) {
    const std::size_t m = rng.below(4) + 1, k = rng.below(4) + 1, n = rng.below(4) + 1;
    const auto seed = rng.next_u64();
    EXPECT_LE(gradient_check([&](const auto& v) { return weighted_sum(matmul(v[0], v[1]), seed); },
                             {random_tensor(rng, {m, k}), random_tensor(rng, {k, n})}),
              kGradTol);
  }
}

TEST(Autodiff, BiasGradients) {
  Rng rng(8);
  for (int trial = 0; trial < kGradTrials; ++trial) {
    const std::size_t a = rng.below(4) + 1, b = rng.below(4) + 1, c = rng.below(4) + 1;
    const auto seed = rng.next_u64();
    EXPECT_LE(gradient_check([&](const auto& v) { return weighted_sum(add_row_bias(v[0], v[1]), seed); },
                             {random_tensor(rng, {a, b}), random_tensor(rng, {b})}),
              kGradTol);
    EXPECT_LE(gradient_check([&](const auto& v) { return weighted_sum(add_channel_bias(v[0], v[1]), seed); },
                             {random_tensor(rng, {a, b, c}), random_tensor(rng, {a})}),
              kGradTol);
  }
}

TEST(Autodiff, ActivationGradients) {
  Rng rng(9);
  for (int trial = 0; trial < kGradTrials; ++trial) {
    const Shape s = {rng.below(5) + 1, rng.below(5) + 1};
    // Keep relu inputs away from the kink.
    Tensor x = random_tensor(rng, s, -2.0, 2.0);
    for (double& v : x.data()) v += v >= 0 ? 0.05 : -0.05;
    const auto seed = rng.next_u64();
    for (Activation kind : {Activation::kRelu, Activation::kTanh, Activation::kSigmoid}) {
      EXPECT_LE(gradient_check([&](const auto& v) { return weighted_sum(activation(v[0], kind), seed); }, {x}),
                kGradTol);
    }
  }
}

TEST(Autodiff, LogSoftmaxGradient) {
  Rng rng(10);
  for (int trial = 0; trial < kGradTrials; ++trial) {
    const Shape s = {rng.below(5) + 1, rng.below(6) + 2};
    const auto seed = rng.next_u64();
    EXPECT_LE(gradient_check([&](const auto& v) { return weighted_sum(log_softmax_rows(v[0]), seed); },
                             {random_tensor(rng, s, -3.0, 3.0)}),
              kGradTol);
  }
}

TEST(Autodiff, ConvAndPoolGradients) {
  Rng rng(11);
  for (int trial = 0; trial < kGradTrials; ++trial) {
    const std::size_t cin = rng.below(2) + 1, cout = rng.below(3) + 1;
    const int stride = rng.between(1, 2), pad = rng.between(0, 1);
    const std::size_t h = 3 + rng.below(4), w = 3 + rng.below(4);
    const auto seed = rng.next_u64();
    const std::vector<Tensor> in = {random_tensor(rng, {cin, h, w}),
                                    random_tensor(rng, {cout, cin, 3, 3}),
                                    random_tensor(rng, {cout})};
    EXPECT_LE(gradient_check([&](const auto& v) { return weighted_sum(conv2d(v[0], v[1], stride, pad), seed); },
                             {in[0], in[1]}),
              kGradTol);
    EXPECT_LE(gradient_check([&](const auto& v) { return weighted_sum(conv2d(v[0], v[1], v[2], stride, pad), seed); },
                             in),
              kGradTol);
    EXPECT_LE(gradient_check([&](const auto& v) { return weighted_sum(max_pool2d(v[0], 2, stride), seed); },
                             {in[0]}),
              kGradTol);
  }
}

TEST(Autodiff, SliceAndConcatGradients) {
  Rng rng(12);
  for (int trial = 0; trial < kGradTrials; ++trial) {
    const std::size_t r = rng.below(4) + 2, c = rng.below(4) + 2;
    const auto seed = rng.next_u64();
    const Tensor x = random_tensor(rng, {r, c});
    EXPECT_LE(gradient_check([&](const auto& v) { return weighted_sum(slice_rows(v[0], 1, r), seed); }, {x}), kGradTol);
    EXPECT_LE(gradient_check([&](const auto& v) { return weighted_sum(slice_cols(v[0], 0, c - 1), seed); }, {x}), kGradTol);
    EXPECT_LE(gradient_check([&](const auto& v) { return weighted_sum(concat_rows({v[0], v[1], v[0]}), seed); },
                             {x, random_tensor(rng, {1, c})}),
              kGradTol);
    EXPECT_LE(gradient_check([&](const auto& v) { return weighted_sum(concat_cols(v[0], v[1]), seed); },
                             {x, random_tensor(rng, {r, 3})}),
              kGradTol);
  }
}

// The recurrence written with primitive ops, one step at a time.
Var composed_gru(const Var& projected, const Var& w_hh, const Var& b_hh, bool reverse) {
  const std::size_t steps = projected.shape()[0], hidden = w_hh.shape()[0];
  Var h = Var::constant(Tensor({1, hidden}));
  std::vector<Var> outs(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const std::size_t t = reverse ? steps - 1 - i : i;
    const Var x = slice_rows(projected, t, t + 1);
    const Var hg = add_row_bias(matmul(h, w_hh), b_hh);
    const Var r = sigmoid(add(slice_cols(x, 0, hidden), slice_cols(hg, 0, hidden)));
    const Var z = sigmoid(add(slice_cols(x, hidden, 2 * hidden), slice_cols(hg, hidden, 2 * hidden)));
    const Var n = tanh(add(slice_cols(x, 2 * hidden, 3 * hidden), mul(r, slice_cols(hg, 2 * hidden, 3 * hidden))));
    h = add(n, mul(z, sub(h, n)));
    outs[t] = h;
  }
  return concat_rows(outs);
}

TEST(Gru, FusedMatchesComposedOps) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t steps = rng.below(6) + 1, hidden = rng.below(4) + 1;
    const Var x = Var::constant(random_tensor(rng, {steps, 3 * hidden}, -2, 2));
    const Var w = Var::constant(random_tensor(rng, {hidden, 3 * hidden}));
    const Var b = Var::constant(random_tensor(rng, {3 * hidden}));
    for (bool reverse : {false, true}) {
      EXPECT_LE(max_abs_diff(gru_sequence(x, w, b, reverse).value(),
                             composed_gru(x, w, b, reverse).value()),
                1e-12);
    }
  }
}

TEST(Gru, GradientMatchesFiniteDifferences) {
  Rng rng(14);
  for (int trial = 0; trial < kGradTrials; ++trial) {
    const std::size_t steps = rng.below(5) + 1, hidden = rng.below(3) + 1;
    const bool reverse = trial % 2 == 1;
    const auto seed = rng.next_u64();
    EXPECT_LE(gradient_check(
                  [&](const auto& v) { return weighted_sum(gru_sequence(v[0], v[1], v[2], reverse), seed); },
                  {random_tensor(rng, {steps, 3 * hidden}, -2, 2),
                   random_tensor(rng, {hidden, 3 * hidden}), random_tensor(rng, {3 * hidden})}),
              kGradTol);
  }
}

TEST(Autodiff, SharedInputAccumulatesBothPaths) {
  const Var x = Var::parameter(Tensor::matrix({{1.5, -2.0}}));
  backward(sum(mul(x, x)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 3.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], -4.0);
}

TEST(Autodiff, RepeatedBackwardAccumulatesUntilZeroGrad) {
  Var x = Var::parameter(Tensor::matrix({{2.0}}));
  backward(sum(mul(x, x)));
  backward(sum(mul(x, x)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 8.0);
  x.zero_grad();
  EXPECT_DOUBLE_EQ(x.grad()[0], 0.0);
}

TEST(Autodiff, ConstantsReceiveNoGradient) {
  const Var c = Var::constant(Tensor::matrix({{2.0}}));
  const Var p = Var::parameter(Tensor::matrix({{3.0}}));
  backward(sum(mul(c, p)));
  EXPECT_FALSE(c.has_grad());
  EXPECT_DOUBLE_EQ(p.grad()[0], 2.0);
}

TEST(Autodiff, BackwardNeedsScalarRoot) {
  const Var p = Var::parameter(Tensor({2, 2}, 1.0));
  EXPECT_THROW(backward(p), UsageError);
  EXPECT_THROW(backward(Var()), UsageError);
}

TEST(Autodiff, NoGradGuardDropsBackwardClosures) {
  const Var p = Var::parameter(Tensor({2, 2}, 1.0));
  {
    NoGradGuard guard;
    EXPECT_FALSE(grad_enabled());
    const Var y = mul(p, p);
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_TRUE(grad_enabled());
  EXPECT_TRUE(mul(p, p).requires_grad());
}

TEST(Autodiff, DeepChainDoesNotOverflowStack) {
  Var x = Var::parameter(Tensor::matrix({{1.0}}));
  Var y = x;
  for (int i = 0; i < 200000; ++i) y = add(y, x);
  backward(sum(y));
  EXPECT_DOUBLE_EQ(x.grad()[0], 200001.0);
}

TEST(Autodiff, ShapeSweep) {
  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t c = rng.below(3) + 1, h = rng.below(10) + 4, w = rng.below(10) + 4;
    const std::size_t cout = rng.below(4) + 1;
    const int pad = rng.between(0, 1);
    const Var x = Var::constant(Tensor({c, h, w}));
    const Var y = conv2d(x, Var::constant(Tensor({cout, c, 3, 3})), 1, pad);
    EXPECT_EQ(y.shape(), (Shape{cout, h + 2 * pad - 2, w + 2 * pad - 2}));
    const Var p = max_pool2d(y, 2, 2);
    EXPECT_EQ(p.shape(), (Shape{cout, (h + 2 * pad - 2 - 2) / 2 + 1, (w + 2 * pad - 2 - 2) / 2 + 1}));
    EXPECT_EQ(conv_output_extent(h, 3, 1, pad), h + 2 * pad - 2);
  }
}

TEST(Autodiff, MismatchedShapesThrow) {
  const Var a = Var::constant(Tensor({2, 3}));
  EXPECT_THROW(add(a, Var::constant(Tensor({3, 2}))), ShapeError);
  EXPECT_THROW(add_row_bias(a, Var::constant(Tensor({2}))), ShapeError);
  EXPECT_THROW(slice_rows(a, 1, 3), ShapeError);
  EXPECT_THROW(max_pool2d(Var::constant(Tensor({1, 2, 2})), 3, 1), ShapeError);
}

}  // namespace
}  // namespace ctcocr
