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

#include <cstdint>
#include <span>
#include <vector>

#include "ctcocr/tensor.hpp"

namespace ctcocr {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global L2 norm bound applied before the update; <= 0 disables clipping.
  double clip_norm = 5.0;
};

struct AdamState {
  std::int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  bool empty() const { return m.empty(); }
  // Zero moments shaped like `params`.
  static AdamState zeros_like(std::span<const Tensor* const> params);
};

struct AdamStepReport {
  bool applied = false;   // false when a gradient was non-finite
  double grad_norm = 0.0;  // before clipping
  double clipped_norm = 0.0;
};

double global_norm(std::span<const Tensor> grads);
// Scales every tensor by clip_norm / norm when the global norm exceeds it.
// Returns the norm before scaling.
double clip_global_norm(std::span<Tensor> grads, double clip_norm);

// Clips `grads` in place, then applies one bias-corrected Adam update. A
// non-finite gradient leaves params and state untouched.
AdamStepReport adam_step(std::span<Tensor* const> params, std::span<Tensor> grads,
                         AdamState& state, const AdamConfig& config);

}  // namespace ctcocr
