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
#include <string>
#include <vector>

#include "ctcocr/autodiff.hpp"
#include "ctcocr/tensor.hpp"

namespace ctcocr {

// Grayscale image as a Tensor of shape {height, width}, values in [0, 1].
using ImageTensor = Tensor;

enum class RnnKind { kSimple, kGru };

std::string to_string(RnnKind kind);
RnnKind parse_rnn_kind(const std::string& text);

// conv (kernel x kernel, stride 1, "same" padding) -> relu -> max-pool.
struct ConvBlock {
  int out_channels = 32;
  int kernel = 3;
  int pool = 2;

  friend bool operator==(const ConvBlock&, const ConvBlock&) = default;
};

struct ModelConfig {
  int input_height = 50;
  int input_width = 200;
  std::vector<ConvBlock> conv_blocks = {{32, 3, 2}, {64, 3, 2}};
  int rnn_hidden = 128;
  RnnKind rnn_kind = RnnKind::kGru;
  bool bidirectional = true;
  int alphabet_size = 19;

  int num_classes() const { return alphabet_size + 1; }
  // Feature-map extents after the conv stack for an input of the given size.
  // Throws ConfigError if any stage collapses to zero.
  int output_height() const;
  int output_width(int image_width) const;
  int time_steps() const { return output_width(input_width); }
  int feature_dim() const;
  int encoder_width() const { return rnn_hidden * (bidirectional ? 2 : 1); }

  void validate() const;
  // Non-fatal advisories, e.g. labels that cannot fit in time_steps().
  std::vector<std::string> warnings(int max_label_length) const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct NamedParameter {
  std::string name;
  Var value;
};

// CRNN: conv stack -> width-as-time sequence -> (bi)directional RNN ->
// per-frame projection -> log-softmax.
class Model {
 public:
  // Glorot-uniform weights, orthogonal recurrent blocks, zero biases.
  static Model build(const ModelConfig& config, std::uint64_t seed);
  // Adopts existing tensors (e.g. from a checkpoint); shapes are verified.
  Model(ModelConfig config, std::vector<NamedParameter> parameters);

  const ModelConfig& config() const { return config_; }
  const std::vector<NamedParameter>& parameters() const { return parameters_; }
  std::vector<NamedParameter>& parameters() { return parameters_; }
  const Var& parameter(const std::string& name) const;
  std::size_t parameter_count() const;

  // Log-probabilities, shape T x (K+1). Height must equal the configured
  // height; width may differ as long as the conv stack stays non-empty.
  Var forward(const ImageTensor& image) const;
  // forward() without recording gradient information.
  Tensor infer(const ImageTensor& image) const;

  void zero_grad();
  Model clone() const;

  // Expected parameter shapes, in canonical order.
  static std::vector<std::pair<std::string, Shape>> parameter_layout(const ModelConfig& config);

 private:
  Var run_rnn(const Var& sequence, const std::string& prefix, bool reverse) const;

  ModelConfig config_;
  std::vector<NamedParameter> parameters_;
};

// Feature map C x H x W -> sequence W x (C*H); step w holds column w,
// channel-major then row.
Var map_to_sequence(const Var& features);
Tensor map_to_sequence(const Tensor& features);
// Inverse of map_to_sequence.
Tensor sequence_to_map(const Tensor& sequence, std::size_t channels, std::size_t height);

}  // namespace ctcocr
