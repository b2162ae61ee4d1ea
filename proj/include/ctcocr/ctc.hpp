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

#include <map>
#include <span>

#include "ctcocr/alphabet.hpp"
#include "ctcocr/autodiff.hpp"
#include "ctcocr/tensor.hpp"

namespace ctcocr {

// Forward-backward output. `alpha[t, s]` is the log mass of path prefixes
// ending in extended-label state s at frame t (emission at t included);
// `beta[t, s]` is the log mass of the suffix after frame t given state s.
// The extended label interleaves blanks: length 2L+1.
struct CtcResult {
  double loss = 0.0;  // -log p(label | frames); +inf when no path exists
  double log_likelihood = 0.0;
  Tensor alpha;
  Tensor beta;

  bool feasible() const;
};

// Merge runs of identical symbols, then drop blanks. Elements must lie in
// [0, num_classes); num_classes defaults to blank + 1.
LabelSequence collapse(std::span<const int> path, int blank, int num_classes = 0);

// Fewest frames that can emit `label`: one per symbol plus a separating
// blank between each pair of equal neighbours.
std::size_t ctc_min_frames(const LabelSequence& label);

// `log_probs` is T x C with log-normalized rows. An infeasible label gives
// loss = +inf rather than an error.
CtcResult ctc_loss(const Tensor& log_probs, const LabelSequence& label, int blank);

// Gradient of the loss with respect to the pre-softmax logits whose
// log-softmax is `log_probs`: softmax - occupation posterior.
Tensor ctc_gradient(const Tensor& log_probs, const LabelSequence& label, int blank);

// Occupation posterior gamma[t, k] (rows sum to one for feasible labels).
Tensor ctc_posteriors(const Tensor& log_probs, const LabelSequence& label, int blank,
                      const CtcResult& result);

// Differentiable loss node over log-softmax outputs. The node's value may be
// +inf; calling backward through an infeasible node throws DomainError.
Var ctc_loss(const Var& log_probs, const LabelSequence& label, int blank);

// Best path: per-frame argmax (lowest index on ties), then collapse.
LabelSequence ctc_greedy_decode(const Tensor& log_probs, int blank);

// Prefix beam search keeping blank-ending and non-blank-ending mass per
// prefix. Ties between equally probable prefixes go to the lexicographically
// smaller index sequence.
LabelSequence ctc_beam_decode(const Tensor& log_probs, int blank, int beam_width);

// Brute-force reference: sums the probability of every length-T path that
// collapses to `label`. `probs` is in the probability domain. Limited to
// T <= 8 and at most 4 classes.
double ctc_oracle(const Tensor& probs, const LabelSequence& label, int blank);

// Same enumeration, returning the mass of every reachable label.
std::map<LabelSequence, double> ctc_oracle_distribution(const Tensor& probs, int blank);

inline constexpr std::size_t kOracleMaxFrames = 8;
inline constexpr std::size_t kOracleMaxClasses = 4;

}  // namespace ctcocr
