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


// Shared generators and brute-force references for the unit tests.

#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ctcocr/autodiff.hpp"
#include "ctcocr/rng.hpp"
#include "ctcocr/tensor.hpp"

namespace ctcocr::testing {

inline Tensor random_tensor(Rng& rng, const Shape& shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (double& x : t.data()) x = rng.uniform(lo, hi);
  return t;
}

// Rows of a T x C matrix of log-probabilities drawn from random logits.
inline Tensor random_log_probs(Rng& rng, std::size_t frames, std::size_t classes,
                               double spread = 3.0) {
  return log_softmax_rows(random_tensor(rng, {frames, classes}, -spread, spread));
}

inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a.at(i, p) * b.at(p, j);
      c.at(i, j) = acc;
    }
  }
  return c;
}

inline Tensor naive_conv2d(const Tensor& in, const Tensor& k, int stride, int pad) {
  const long cin = static_cast<long>(in.dim(0)), h = static_cast<long>(in.dim(1)),
             w = static_cast<long>(in.dim(2));
  const long cout = static_cast<long>(k.dim(0)), kh = static_cast<long>(k.dim(2)),
             kw = static_cast<long>(k.dim(3));
  const long oh = (h + 2 * pad - kh) / stride + 1, ow = (w + 2 * pad - kw) / stride + 1;
  Tensor out({static_cast<std::size_t>(cout), static_cast<std::size_t>(oh),
              static_cast<std::size_t>(ow)});
  for (long o = 0; o < cout; ++o) {
    for (long y = 0; y < oh; ++y) {
      for (long x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (long c = 0; c < cin; ++c) {
          for (long i = 0; i < kh; ++i) {
            for (long j = 0; j < kw; ++j) {
              const long iy = y * stride - pad + i, ix = x * stride - pad + j;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += in[static_cast<std::size_t>((c * h + iy) * w + ix)] *
                     k[static_cast<std::size_t>(((o * cin + c) * kh + i) * kw + j)];
            }
          }
        }
        out[static_cast<std::size_t>((o * oh + y) * ow + x)] = acc;
      }
    }
  }
  return out;
}

inline Tensor naive_max_pool(const Tensor& in, int window, int stride) {
  const std::size_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
  const std::size_t oh = (h - static_cast<std::size_t>(window)) / static_cast<std::size_t>(stride) + 1;
  const std::size_t ow = (w - static_cast<std::size_t>(window)) / static_cast<std::size_t>(stride) + 1;
  Tensor out({c, oh, ow});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double best = -INFINITY;
        for (int i = 0; i < window; ++i) {
          for (int j = 0; j < window; ++j) {
            best = std::max(best, in.at(ch, y * static_cast<std::size_t>(stride) + static_cast<std::size_t>(i),
                                        x * static_cast<std::size_t>(stride) + static_cast<std::size_t>(j)));
          }
        }
        out.at(ch, y, x) = best;
      }
    }
  }
  return out;
}

// Brute-force CTC: walks every length-T path over C classes. Returns the
// probability mass of each collapsed label.
inline std::map<std::vector<int>, double> enumerate_ctc(const Tensor& probs, int blank) {
  const std::size_t frames = probs.dim(0), classes = probs.dim(1);
  std::map<std::vector<int>, double> mass;
  std::vector<std::size_t> path(frames, 0);
  while (true) {
    double p = 1.0;
    std::vector<int> label;
    int prev = -1;
    for (std::size_t t = 0; t < frames; ++t) {
      const int k = static_cast<int>(path[t]);
      p *= probs.at(t, path[t]);
      if (k != blank && k != prev) label.push_back(k);
      prev = k;
    }
    mass[label] += p;
    std::size_t t = 0;
    while (t < frames && ++path[t] == classes) path[t++] = 0;
    if (t == frames) break;
  }
  return mass;
}

inline Tensor exp_tensor(const Tensor& t) {
  Tensor out = t;
  for (double& x : out.data()) x = std::exp(x);
  return out;
}

// Central differences of a scalar function of one tensor.
inline Tensor numeric_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                               double eps) {
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + eps;
    const double up = f(probe);
    probe[i] = saved - eps;
    const double down = f(probe);
    probe[i] = saved;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

// Largest |a - n| / max(|a|, |n|, floor) over all entries.
inline double max_relative_error(const Tensor& analytic, const Tensor& numeric,
                                 double floor = 1e-3) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
  }
  return worst;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

// Builds the graph `build(leaves)` and checks each leaf's gradient against
// central differences. Returns the worst relative error.
inline double gradient_check(const std::function<Var(const std::vector<Var>&)>& build,
                             const std::vector<Tensor>& inputs, double eps = 1e-6) {
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(Var::parameter(t));
  backward(build(leaves));
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto f = [&](const Tensor& probe) {
      NoGradGuard no_grad;
      std::vector<Var> args;
      for (std::size_t j = 0; j < inputs.size(); ++j) {
        args.push_back(Var::constant(j == i ? probe : inputs[j]));
      }
      return build(args).value().item();
    };
    worst = std::max(worst,
                     max_relative_error(leaves[i].grad(), numeric_gradient(f, inputs[i], eps)));
  }
  return worst;
}

// Random weights turn any tensor-valued op into a scalar with a
// non-degenerate gradient.
inline Var weighted_sum(const Var& x, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(x, Var::constant(random_tensor(rng, x.shape()))));
}

}  // namespace ctcocr::testing
