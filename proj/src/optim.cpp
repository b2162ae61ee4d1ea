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


#include "ctcocr/optim.hpp"

#include <cmath>
#include <string>

#include "ctcocr/error.hpp"

namespace ctcocr {

AdamState AdamState::zeros_like(std::span<const Tensor* const> params) {
  AdamState state;
  for (const Tensor* p : params) {
    state.m.emplace_back(p->shape());
    state.v.emplace_back(p->shape());
  }
  return state;
}

double global_norm(std::span<const Tensor> grads) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double x : g.data()) sq += x * x;
  }
  return std::sqrt(sq);
}

double clip_global_norm(std::span<Tensor> grads, double clip_norm) {
  const double norm = global_norm(grads);
  if (clip_norm > 0.0 && norm > clip_norm) {
    const double scale = clip_norm / norm;
    for (auto& g : grads) g *= scale;
  }
  return norm;
}

AdamStepReport adam_step(std::span<Tensor* const> params, std::span<Tensor> grads,
                         AdamState& state, const AdamConfig& config) {
  if (params.size() != grads.size()) {
    throw ShapeError(std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (state.empty()) {
    std::vector<const Tensor*> view(params.begin(), params.end());
    state = AdamState::zeros_like(view);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("optimizer state does not match the parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i].shape() || state.m[i].shape() != grads[i].shape() ||
        state.v[i].shape() != grads[i].shape()) {
      throw ShapeError("parameter " + std::to_string(i) + " has shape " +
                       to_string(params[i]->shape()) + " but gradient " +
                       to_string(grads[i].shape()));
    }
  }

  AdamStepReport report;
  for (const auto& g : grads) {
    if (!g.all_finite()) {
      report.grad_norm = NAN;
      return report;
    }
  }
  report.grad_norm = clip_global_norm(grads, config.clip_norm);
  report.clipped_norm = global_norm(grads);

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i]->raw();
    double* m = state.m[i].raw();
    double* v = state.v[i].raw();
    const double* g = grads[i].raw();
    for (std::size_t j = 0, n = grads[i].size(); j < n; ++j) {
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
      p[j] -= config.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + config.epsilon);
    }
  }
  report.applied = true;
  return report;
}

}  // namespace ctcocr
