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

#include "ctcocr/model.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "ctcocr/error.hpp"
#include "ctcocr/rng.hpp"

namespace ctcocr {

namespace {

Tensor glorot_uniform(Shape shape, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

// Random orthogonal n x n block from the QR factorization of a Gaussian
// matrix, with column signs fixed by diag(R) so the result is unique.
Eigen::MatrixXd random_orthogonal(std::size_t n, Rng& rng) {
  Eigen::MatrixXd gaussian(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) gaussian(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (std::size_t c = 0; c < n; ++c) {
    if (r(c, c) < 0) q.col(c) *= -1.0;
  }
  return q;
}

// Recurrent weights [H x gates*H] with each H x H gate block orthogonal.
Tensor orthogonal_blocks(std::size_t hidden, std::size_t gates, Rng& rng) {
  Tensor t({hidden, gates * hidden});
  for (std::size_t g = 0; g < gates; ++g) {
    const Eigen::MatrixXd q = random_orthogonal(hidden, rng);
    for (std::size_t r = 0; r < hidden; ++r) {
      for (std::size_t c = 0; c < hidden; ++c) t.at(r, g * hidden + c) = q(r, c);
    }
  }
  return t;
}

std::size_t gate_count(RnnKind kind) { return kind == RnnKind::kGru ? 3 : 1; }

std::vector<std::string> directions(const ModelConfig& config) {
  if (config.bidirectional) return {"rnn.fwd", "rnn.bwd"};
  return {"rnn.fwd"};
}

}  // namespace

std::string to_string(RnnKind kind) { return kind == RnnKind::kGru ? "gru" : "simple"; }

RnnKind parse_rnn_kind(const std::string& text) {
  if (text == "gru") return RnnKind::kGru;
  if (text == "simple") return RnnKind::kSimple;
  throw ConfigError("unknown rnn kind '" + text + "' (expected gru or simple)");
}

int ModelConfig::output_height() const {
  int h = input_height;
  for (const auto& block : conv_blocks) {
    if (block.pool < 1 || block.pool > h) {
      throw ConfigError("conv stack reduces height to zero (height " + std::to_string(h) +
                        " before a pool of " + std::to_string(block.pool) + ")");
    }
    h /= block.pool;
  }
  return h;
}

int ModelConfig::output_width(int image_width) const {
  int w = image_width;
  for (const auto& block : conv_blocks) {
    if (block.pool < 1 || block.pool > w) {
      throw ConfigError("conv stack reduces width to zero (width " + std::to_string(w) +
                        " before a pool of " + std::to_string(block.pool) + ")");
    }
    w /= block.pool;
  }
  return w;
}

int ModelConfig::feature_dim() const {
  const int channels = conv_blocks.empty() ? 1 : conv_blocks.back().out_channels;
  return channels * output_height();
}

void ModelConfig::validate() const {
  if (input_height < 1 || input_width < 1) throw ConfigError("input size must be positive");
  if (rnn_hidden < 1) throw ConfigError("rnn_hidden must be positive");
  if (alphabet_size < 1) throw ConfigError("alphabet_size must be positive");
  for (const auto& block : conv_blocks) {
    if (block.out_channels < 1) throw ConfigError("conv out_channels must be positive");
    if (block.kernel < 1 || block.kernel % 2 == 0) {
      throw ConfigError("conv kernel must be a positive odd number, got " +
                        std::to_string(block.kernel));
    }
  }
  (void)output_height();
  (void)output_width(input_width);
}

std::vector<std::string> ModelConfig::warnings(int max_label_length) const {
  std::vector<std::string> out;
  const int needed = 2 * max_label_length + 1;
  if (time_steps() < needed) {
    out.push_back("model produces " + std::to_string(time_steps()) +
                  " time steps but labels of length " + std::to_string(max_label_length) +
                  " may need up to " + std::to_string(needed) + "; consider a wider input");
  }
  return out;
}

std::vector<std::pair<std::string, Shape>> Model::parameter_layout(const ModelConfig& config) {
  std::vector<std::pair<std::string, Shape>> layout;
  std::size_t in_channels = 1;
  for (std::size_t i = 0; i < config.conv_blocks.size(); ++i) {
    const auto& b = config.conv_blocks[i];
    const auto k = static_cast<std::size_t>(b.kernel);
    const auto out = static_cast<std::size_t>(b.out_channels);
    layout.push_back({"conv" + std::to_string(i) + ".weight", {out, in_channels, k, k}});
    layout.push_back({"conv" + std::to_string(i) + ".bias", {out}});
    in_channels = out;
  }
  const auto features = static_cast<std::size_t>(config.feature_dim());
  const auto hidden = static_cast<std::size_t>(config.rnn_hidden);
  const std::size_t gates = gate_count(config.rnn_kind);
  for (const auto& dir : directions(config)) {
    layout.push_back({dir + ".w_ih", {features, gates * hidden}});
    layout.push_back({dir + ".w_hh", {hidden, gates * hidden}});
    layout.push_back({dir + ".b_ih", {gates * hidden}});
    layout.push_back({dir + ".b_hh", {gates * hidden}});
  }
  const auto encoder = static_cast<std::size_t>(config.encoder_width());
  const auto classes = static_cast<std::size_t>(config.num_classes());
  layout.push_back({"proj.weight", {encoder, classes}});
  layout.push_back({"proj.bias", {classes}});
  return layout;
}

Model Model::build(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  std::vector<NamedParameter> params;
  const std::size_t gates = gate_count(config.rnn_kind);
  for (auto& [name, shape] : parameter_layout(config)) {
    Tensor value;
    if (name.ends_with("bias") || name.ends_with("b_ih") || name.ends_with("b_hh")) {
      value = Tensor(shape, 0.0);
    } else if (name.ends_with("w_hh")) {
      value = orthogonal_blocks(shape[0], gates, rng);
    } else if (shape.size() == 4) {
      const double receptive = static_cast<double>(shape[2] * shape[3]);
      value = glorot_uniform(shape, static_cast<double>(shape[1]) * receptive,
                             static_cast<double>(shape[0]) * receptive, rng);
    } else {
      value = glorot_uniform(shape, static_cast<double>(shape[0]), static_cast<double>(shape[1]),
                             rng);
    }
    params.push_back({name, Var::parameter(std::move(value))});
  }
  return Model(config, std::move(params));
}

Model::Model(ModelConfig config, std::vector<NamedParameter> parameters)
    : config_(std::move(config)), parameters_(std::move(parameters)) {
  config_.validate();
  const auto layout = parameter_layout(config_);
  if (layout.size() != parameters_.size()) {
    throw ShapeError("model expects " + std::to_string(layout.size()) + " parameter tensors, got " +
                     std::to_string(parameters_.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (layout[i].first != parameters_[i].name || layout[i].second != parameters_[i].value.shape()) {
      throw ShapeError("parameter " + std::to_string(i) + " is " + parameters_[i].name + " " +
                       to_string(parameters_[i].value.shape()) + ", expected " + layout[i].first +
                       " " + to_string(layout[i].second));
    }
  }
}

const Var& Model::parameter(const std::string& name) const {
  for (const auto& p : parameters_) {
    if (p.name == name) return p.value;
  }
  throw UsageError("no parameter named " + name);
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters_) n += p.value.value().size();
  return n;
}

void Model::zero_grad() {
  for (auto& p : parameters_) p.value.zero_grad();
}

Model Model::clone() const {
  std::vector<NamedParameter> copy;
  copy.reserve(parameters_.size());
  for (const auto& p : parameters_) copy.push_back({p.name, Var::parameter(p.value.value())});
  return Model(config_, std::move(copy));
}

Var Model::run_rnn(const Var& sequence, const std::string& prefix, bool reverse) const {
  const std::size_t steps = sequence.shape()[0];
  const auto hidden = static_cast<std::size_t>(config_.rnn_hidden);
  const Var& w_hh = parameter(prefix + ".w_hh");
  const Var& b_hh = parameter(prefix + ".b_hh");
  // Input contributions for every step in one product.
  const Var projected =
      add_row_bias(matmul(sequence, parameter(prefix + ".w_ih")), parameter(prefix + ".b_ih"));

  if (config_.rnn_kind == RnnKind::kGru) return gru_sequence(projected, w_hh, b_hh, reverse);

  Var h = Var::constant(Tensor({1, hidden}, 0.0));
  std::vector<Var> outputs(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const std::size_t t = reverse ? steps - 1 - i : i;
    const Var x = slice_rows(projected, t, t + 1);
    h = tanh(add(x, add_row_bias(matmul(h, w_hh), b_hh)));
    outputs[t] = h;
  }
  return concat_rows(outputs);
}

Var Model::forward(const ImageTensor& image) const {
  if (image.rank() != 2 || image.dim(0) != static_cast<std::size_t>(config_.input_height)) {
    throw ShapeError("model expects images of height " + std::to_string(config_.input_height) +
                     ", got " + to_string(image.shape()));
  }
  const int width = static_cast<int>(image.dim(1));
  try {
    (void)config_.output_width(width);
  } catch (const ConfigError& e) {
    throw ShapeError(std::string("image too narrow for the conv stack: ") + e.what());
  }

  Var x = Var::constant(image.reshaped({1, image.dim(0), image.dim(1)}));
  for (std::size_t i = 0; i < config_.conv_blocks.size(); ++i) {
    const auto& block = config_.conv_blocks[i];
    const std::string name = "conv" + std::to_string(i);
    x = conv2d(x, parameter(name + ".weight"), parameter(name + ".bias"), 1, block.kernel / 2);
    // pool(relu(x)) == relu(pool(x)) in value and gradient; pooling first
    // touches a quarter of the elements.
    x = relu(max_pool2d(x, block.pool, block.pool));
  }
  const Var sequence = map_to_sequence(x);
  Var encoded = run_rnn(sequence, "rnn.fwd", false);
  if (config_.bidirectional) encoded = concat_cols(encoded, run_rnn(sequence, "rnn.bwd", true));
  const Var logits =
      add_row_bias(matmul(encoded, parameter("proj.weight")), parameter("proj.bias"));
  return log_softmax_rows(logits);
}

Tensor Model::infer(const ImageTensor& image) const {
  NoGradGuard no_grad;
  return forward(image).value();
}

Tensor map_to_sequence(const Tensor& features) {
  if (features.rank() != 3) {
    throw ShapeError("map_to_sequence expects C x H x W, got " + to_string(features.shape()));
  }
  const std::size_t channels = features.dim(0), height = features.dim(1), width = features.dim(2);
  Tensor out({width, channels * height});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t h = 0; h < height; ++h) {
      for (std::size_t w = 0; w < width; ++w) out.at(w, c * height + h) = features.at(c, h, w);
    }
  }
  return out;
}

Tensor sequence_to_map(const Tensor& sequence, std::size_t channels, std::size_t height) {
  if (sequence.rank() != 2 || sequence.dim(1) != channels * height) {
    throw ShapeError("sequence " + to_string(sequence.shape()) + " does not hold " +
                     std::to_string(channels) + " x " + std::to_string(height) + " features");
  }
  const std::size_t width = sequence.dim(0);
  Tensor out({channels, height, width});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t h = 0; h < height; ++h) {
      for (std::size_t w = 0; w < width; ++w) out.at(c, h, w) = sequence.at(w, c * height + h);
    }
  }
  return out;
}

Var map_to_sequence(const Var& features) {
  Tensor out = map_to_sequence(features.value());
  return make_op("map_to_sequence", std::move(out), {features}, [](Node& self) {
    Node& in = *self.inputs[0];
    in.grad_buffer() += sequence_to_map(self.grad(), in.value.dim(0), in.value.dim(1));
  });
}

}  // namespace ctcocr
