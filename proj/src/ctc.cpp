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

#include "ctcocr/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ctcocr/error.hpp"

namespace ctcocr {

namespace {

constexpr double kLogZero = -std::numeric_limits<double>::infinity();
constexpr double kRowNormTolerance = 1e-6;

double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

void check_frames(const Tensor& frames, int blank) {
  if (frames.rank() != 2) {
    throw ShapeError("CTC frames must be T x C, got " + to_string(frames.shape()));
  }
  if (blank < 0 || static_cast<std::size_t>(blank) >= frames.dim(1)) {
    throw DomainError("blank index " + std::to_string(blank) + " outside " +
                      std::to_string(frames.dim(1)) + " classes");
  }
}

void check_label(const LabelSequence& label, int blank, std::size_t classes) {
  for (std::size_t i = 0; i < label.size(); ++i) {
    const int k = label[i];
    if (k == blank) {
      throw DomainError("label position " + std::to_string(i) + " holds the blank index");
    }
    if (k < 0 || static_cast<std::size_t>(k) >= classes) {
      throw DomainError("label position " + std::to_string(i) + " has index " +
                        std::to_string(k) + " outside " + std::to_string(classes) + " classes");
    }
  }
}

void check_log_normalized(const Tensor& log_probs) {
  const std::size_t cols = log_probs.dim(1);
  for (std::size_t t = 0; t < log_probs.dim(0); ++t) {
    const double norm = logsumexp(log_probs.data().subspan(t * cols, cols));
    if (!(std::abs(norm) <= kRowNormTolerance)) {
      throw PreconditionError("frame " + std::to_string(t) +
                              " is not log-normalized (logsumexp = " + std::to_string(norm) + ")");
    }
  }
}

std::vector<int> extended_label(const LabelSequence& label, int blank) {
  std::vector<int> ext(2 * label.size() + 1, blank);
  for (std::size_t i = 0; i < label.size(); ++i) ext[2 * i + 1] = label[i];
  return ext;
}

// The skip transition s-2 -> s is allowed only into a non-blank state whose
// symbol differs from the one two states back.
bool can_skip(const std::vector<int>& ext, std::size_t s, int blank) {
  return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2];
}

}  // namespace

bool CtcResult::feasible() const { return std::isfinite(loss); }

LabelSequence collapse(std::span<const int> path, int blank, int num_classes) {
  if (num_classes <= 0) num_classes = blank + 1;
  LabelSequence out;
  int previous = -1;
  for (std::size_t t = 0; t < path.size(); ++t) {
    const int k = path[t];
    if (k < 0 || k >= num_classes) {
      throw DomainError("path element " + std::to_string(t) + " = " + std::to_string(k) +
                        " outside [0, " + std::to_string(num_classes) + ")");
    }
    if (k != previous && k != blank) out.push_back(k);
    previous = k;
  }
  return out;
}

std::size_t ctc_min_frames(const LabelSequence& label) {
  std::size_t frames = label.size();
  for (std::size_t i = 1; i < label.size(); ++i) {
    if (label[i] == label[i - 1]) ++frames;
  }
  return frames;
}

CtcResult ctc_loss(const Tensor& log_probs, const LabelSequence& label, int blank) {
  check_frames(log_probs, blank);
  check_label(label, blank, log_probs.dim(1));
  check_log_normalized(log_probs);

  const std::size_t frames = log_probs.dim(0);
  const std::vector<int> ext = extended_label(label, blank);
  const std::size_t states = ext.size();
  auto emit = [&](std::size_t t, std::size_t s) {
    return log_probs.at(t, static_cast<std::size_t>(ext[s]));
  };

  CtcResult result;
  result.alpha = Tensor({frames, states}, kLogZero);
  result.beta = Tensor({frames, states}, kLogZero);
  Tensor& alpha = result.alpha;
  Tensor& beta = result.beta;

  alpha.at(0, 0) = emit(0, 0);
  if (states > 1) alpha.at(0, 1) = emit(0, 1);
  for (std::size_t t = 1; t < frames; ++t) {
    for (std::size_t s = 0; s < states; ++s) {
      double acc = alpha.at(t - 1, s);
      if (s >= 1) acc = log_add(acc, alpha.at(t - 1, s - 1));
      if (can_skip(ext, s, blank)) acc = log_add(acc, alpha.at(t - 1, s - 2));
      alpha.at(t, s) = acc == kLogZero ? kLogZero : acc + emit(t, s);
    }
  }

  beta.at(frames - 1, states - 1) = 0.0;
  if (states > 1) beta.at(frames - 1, states - 2) = 0.0;
  for (std::size_t t = frames - 1; t-- > 0;) {
    for (std::size_t s = 0; s < states; ++s) {
      double acc = beta.at(t + 1, s) + emit(t + 1, s);
      if (s + 1 < states) acc = log_add(acc, beta.at(t + 1, s + 1) + emit(t + 1, s + 1));
      if (s + 2 < states && can_skip(ext, s + 2, blank)) {
        acc = log_add(acc, beta.at(t + 1, s + 2) + emit(t + 1, s + 2));
      }
      beta.at(t, s) = acc;
    }
  }

  double log_p = alpha.at(frames - 1, states - 1);
  if (states > 1) log_p = log_add(log_p, alpha.at(frames - 1, states - 2));
  result.log_likelihood = log_p;
  result.loss = log_p == kLogZero ? std::numeric_limits<double>::infinity() : std::max(0.0, -log_p);
  return result;
}

Tensor ctc_posteriors(const Tensor& log_probs, const LabelSequence& label, int blank,
                      const CtcResult& result) {
  if (!result.feasible()) {
    throw DomainError("CTC gradient is undefined: label of length " +
                      std::to_string(label.size()) + " is infeasible for " +
                      std::to_string(log_probs.dim(0)) + " frames");
  }
  const std::size_t frames = log_probs.dim(0);
  const std::size_t classes = log_probs.dim(1);
  const std::vector<int> ext = extended_label(label, blank);
  Tensor gamma({frames, classes}, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t s = 0; s < ext.size(); ++s) {
      const double joint = result.alpha.at(t, s) + result.beta.at(t, s);
      if (joint == kLogZero) continue;
      gamma.at(t, static_cast<std::size_t>(ext[s])) += std::exp(joint - result.log_likelihood);
    }
  }
  return gamma;
}

Tensor ctc_gradient(const Tensor& log_probs, const LabelSequence& label, int blank) {
  const CtcResult result = ctc_loss(log_probs, label, blank);
  Tensor grad = ctc_posteriors(log_probs, label, blank, result);
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = std::exp(log_probs[i]) - grad[i];
  return grad;
}

Var ctc_loss(const Var& log_probs, const LabelSequence& label, int blank) {
  CtcResult result = ctc_loss(log_probs.value(), label, blank);
  const double loss = result.loss;
  return make_op("ctc_loss", Tensor::scalar(loss), {log_probs},
                 [label, blank, result = std::move(result)](Node& self) {
                   Node& in = *self.inputs[0];
                   // d loss / d log_probs = -gamma; log_softmax's backward turns
                   // this into softmax - gamma for the logits.
                   const Tensor gamma = ctc_posteriors(in.value, label, blank, result);
                   const double g = self.grad()[0];
                   Tensor& gx = in.grad_buffer();
                   for (std::size_t i = 0; i < gx.size(); ++i) gx[i] -= g * gamma[i];
                 });
}

LabelSequence ctc_greedy_decode(const Tensor& log_probs, int blank) {
  check_frames(log_probs, blank);
  const std::size_t frames = log_probs.dim(0), classes = log_probs.dim(1);
  std::vector<int> path(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < classes; ++k) {
      if (log_probs.at(t, k) > log_probs.at(t, best)) best = k;
    }
    path[t] = static_cast<int>(best);
  }
  return collapse(path, blank, static_cast<int>(classes));
}

namespace {

struct PrefixMass {
  double blank = kLogZero;      // paths ending in blank
  double non_blank = kLogZero;  // paths ending in the prefix's last symbol
  double total() const { return log_add(blank, non_blank); }
};

using Beam = std::vector<std::pair<LabelSequence, PrefixMass>>;

// Higher mass first; lexicographically smaller label on ties.
bool better(const std::pair<LabelSequence, PrefixMass>& a,
            const std::pair<LabelSequence, PrefixMass>& b) {
  const double ta = a.second.total(), tb = b.second.total();
  if (ta != tb) return ta > tb;
  return a.first < b.first;
}

}  // namespace

LabelSequence ctc_beam_decode(const Tensor& log_probs, int blank, int beam_width) {
  check_frames(log_probs, blank);
  if (beam_width < 1) throw DomainError("beam width must be positive");
  const std::size_t frames = log_probs.dim(0), classes = log_probs.dim(1);

  Beam beam;
  beam.push_back({LabelSequence{}, PrefixMass{0.0, kLogZero}});
  for (std::size_t t = 0; t < frames; ++t) {
    std::map<LabelSequence, PrefixMass> next;
    const double p_blank = log_probs.at(t, static_cast<std::size_t>(blank));
    for (const auto& [prefix, mass] : beam) {
      PrefixMass& same = next[prefix];
      same.blank = log_add(same.blank, mass.total() + p_blank);
      if (!prefix.empty()) {
        // Repeating the last symbol without a blank stays on the same prefix.
        same.non_blank = log_add(
            same.non_blank,
            mass.non_blank + log_probs.at(t, static_cast<std::size_t>(prefix.back())));
      }
      for (std::size_t k = 0; k < classes; ++k) {
        const int symbol = static_cast<int>(k);
        if (symbol == blank) continue;
        const double p = log_probs.at(t, k);
        LabelSequence extended = prefix;
        extended.push_back(symbol);
        PrefixMass& target = next[extended];
        // A repeat needs an intervening blank to start a new symbol.
        const double source =
            (!prefix.empty() && prefix.back() == symbol) ? mass.blank : mass.total();
        target.non_blank = log_add(target.non_blank, source + p);
      }
    }
    beam.assign(next.begin(), next.end());
    std::stable_sort(beam.begin(), beam.end(), better);
    if (beam.size() > static_cast<std::size_t>(beam_width)) {
      beam.resize(static_cast<std::size_t>(beam_width));
    }
  }
  return beam.front().first;
}

namespace {

void check_oracle_size(const Tensor& probs, int blank) {
  check_frames(probs, blank);
  if (probs.dim(0) > kOracleMaxFrames || probs.dim(1) > kOracleMaxClasses) {
    throw UsageError("oracle instance too large: " + to_string(probs.shape()) + " (limit " +
                     std::to_string(kOracleMaxFrames) + " frames, " +
                     std::to_string(kOracleMaxClasses) + " classes)");
  }
}

// Calls visit(path, probability) for every one of the C^T paths.
template <typename Visit>
void enumerate_paths(const Tensor& probs, Visit&& visit) {
  const std::size_t frames = probs.dim(0), classes = probs.dim(1);
  std::vector<int> path(frames, 0);
  while (true) {
    double p = 1.0;
    for (std::size_t t = 0; t < frames; ++t) p *= probs.at(t, static_cast<std::size_t>(path[t]));
    visit(path, p);
    std::size_t t = 0;
    while (t < frames && ++path[t] == static_cast<int>(classes)) path[t++] = 0;
    if (t == frames) break;
  }
}

}  // namespace

double ctc_oracle(const Tensor& probs, const LabelSequence& label, int blank) {
  check_oracle_size(probs, blank);
  check_label(label, blank, probs.dim(1));
  const int classes = static_cast<int>(probs.dim(1));
  double total = 0.0;
  enumerate_paths(probs, [&](const std::vector<int>& path, double p) {
    if (collapse(path, blank, classes) == label) total += p;
  });
  return total;
}

std::map<LabelSequence, double> ctc_oracle_distribution(const Tensor& probs, int blank) {
  check_oracle_size(probs, blank);
  const int classes = static_cast<int>(probs.dim(1));
  std::map<LabelSequence, double> mass;
  enumerate_paths(probs, [&](const std::vector<int>& path, double p) {
    mass[collapse(path, blank, classes)] += p;
  });
  return mass;
}

}  // namespace ctcocr
