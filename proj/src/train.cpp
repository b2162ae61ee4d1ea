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


#include "ctcocr/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "ctcocr/ctc.hpp"
#include "ctcocr/error.hpp"
#include "ctcocr/eval.hpp"

namespace ctcocr {

AdamConfig TrainConfig::adam() const {
  return {learning_rate, beta1, beta2, epsilon, gradient_clip_norm};
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1 (got " + std::to_string(epochs) + ")");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (early_stop_patience < 0) throw ConfigError("patience must be non-negative");
  if (std::isnan(gradient_clip_norm)) throw ConfigError("gradient clip norm is NaN");
  augmentation.validate();
}

std::string format_metrics_row(const EpochRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.3f", r.epoch, r.train_loss,
                r.val_loss, r.val_char_acc, r.val_word_acc, r.seconds);
  return buf;
}

LossCurve read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw DataError(path.string() + " has an unexpected header");
  }
  LossCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochRecord r;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf", &r.epoch, &r.train_loss, &r.val_loss,
                    &r.val_char_acc, &r.val_word_acc, &r.seconds) != 6) {
      throw DataError("malformed row in " + path.string() + ": " + line);
    }
    curve.push_back(r);
  }
  return curve;
}

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 256 << 20);
#endif
}

namespace {

bool fits(const Sample& s, std::size_t frames) { return ctc_min_frames(s.label) <= frames; }

std::size_t frames_for(const Model& model, const Sample& s) {
  return static_cast<std::size_t>(model.config().output_width(static_cast<int>(s.image.dim(1))));
}

void log_line(const TrainOutputs& outputs, const std::string& line) {
  if (outputs.log) *outputs.log << line << std::endl;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

void write_metrics(const std::filesystem::path& path, const LossCurve& curve) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << kMetricsHeader << '\n';
  for (const auto& r : curve) out << format_metrics_row(r) << '\n';
}

}  // namespace

Validation validate_model(const Model& model, const Alphabet& alphabet,
                          const std::vector<Sample>& samples) {
  if (samples.empty()) throw DataError("validation split is empty");
  const int blank = alphabet.blank_index();
  Validation v;
  double loss_sum = 0.0;
  std::size_t feasible = 0;
  std::vector<PredictionPair> pairs;
  pairs.reserve(samples.size());
  for (const auto& s : samples) {
    const Tensor log_probs = model.infer(s.image);
    if (ctc_min_frames(s.label) <= log_probs.dim(0)) {
      loss_sum += ctc_loss(log_probs, s.label, blank).loss;
      ++feasible;
    } else {
      ++v.infeasible;
    }
    pairs.push_back({alphabet.decode(ctc_greedy_decode(log_probs, blank)), alphabet.decode(s.label)});
  }
  v.loss = feasible > 0 ? loss_sum / static_cast<double>(feasible)
                        : std::numeric_limits<double>::infinity();
  v.char_accuracy = char_accuracy(pairs);
  v.word_accuracy = word_accuracy(pairs);
  return v;
}

TrainResult train(const ModelConfig& model_config, const Alphabet& alphabet,
                  const std::vector<Sample>& train_set, const std::vector<Sample>& val_set,
                  const TrainConfig& config, const TrainOutputs& outputs) {
  config.validate();
  model_config.validate();
  if (model_config.alphabet_size != alphabet.size()) {
    throw ConfigError("model emits " + std::to_string(model_config.alphabet_size) +
                      " symbols but the alphabet has " + std::to_string(alphabet.size()));
  }
  if (train_set.empty()) throw ConfigError("training split is empty");
  if (val_set.empty()) throw ConfigError("validation split is empty");

  Model model = Model::build(model_config, config.seed);
  {
    std::size_t feasible = 0;
    std::size_t longest = 0;
    for (const auto& s : train_set) {
      if (fits(s, frames_for(model, s))) ++feasible;
      longest = std::max(longest, ctc_min_frames(s.label));
    }
    if (feasible == 0) {
      throw DataError("no training label fits the model's " +
                      std::to_string(model_config.time_steps()) +
                      " output frames (labels need up to " + std::to_string(longest) +
                      "); use a wider input or fewer pooling stages");
    }
  }

  const bool persist = !outputs.directory.empty();
  if (persist) {
    std::error_code ec;
    std::filesystem::create_directories(outputs.directory, ec);
    if (!std::filesystem::is_directory(outputs.directory)) {
      throw DataError("cannot create output directory " + outputs.directory.string());
    }
  }
  const auto metrics_path = outputs.directory / kMetricsName;
  const auto best_path = outputs.directory / kBestCheckpointName;
  const auto last_path = outputs.directory / kLastCheckpointName;

  TrainResult result;
  AdamState adam;
  TrainingState state;
  result.best = Checkpoint::from_model(model, alphabet);

  if (persist && outputs.resume && std::filesystem::exists(last_path)) {
    Checkpoint last = load_checkpoint(last_path);
    require_alphabet(last, alphabet);
    if (!(last.model_config == model_config)) {
      throw ConfigError("cannot resume: " + last_path.string() + " has a different model config");
    }
    model = last.to_model();
    if (last.optimizer) adam = *last.optimizer;
    state = last.state;
    if (std::filesystem::exists(best_path)) result.best = load_checkpoint(best_path);
    if (std::filesystem::exists(metrics_path)) {
      for (const auto& r : read_metrics(metrics_path)) {
        if (r.epoch <= state.epoch) result.curve.push_back(r);
      }
    }
    log_line(outputs, fmt("resuming after epoch %lld", static_cast<long long>(state.epoch)));
  }
  if (persist) write_metrics(metrics_path, result.curve);

  std::vector<Tensor*> param_values;
  for (auto& p : model.parameters()) param_values.push_back(&p.value.mutable_value());
  const AdamConfig adam_config = config.adam();
  const int blank = alphabet.blank_index();
  const int patience = std::max(config.early_stop_patience, 1);
  log_line(outputs, fmt("training %zu parameters on %zu samples (val %zu), batch %d",
                        model.parameter_count(), train_set.size(), val_set.size(),
                        config.batch_size));

  std::ofstream metrics;
  if (persist) metrics.open(metrics_path, std::ios::app);

  for (int epoch = static_cast<int>(state.epoch) + 1; epoch <= config.epochs; ++epoch) {
    if (state.epochs_without_improvement >= patience) {
      result.stopped_early = true;
      break;
    }
    const auto started = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(combine_seeds(config.seed, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order.begin(), order.end());

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    std::size_t skipped = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      model.zero_grad();
      double batch_loss = 0.0;
      std::size_t used = 0;
      for (std::size_t i = begin; i < end; ++i) {
        const Sample& s = train_set[order[i]];
        if (!fits(s, frames_for(model, s))) {
          ++skipped;
          continue;
        }
        const ImageTensor image =
            config.augment ? augment(s.image, config.augmentation,
                                     augmentation_seed(config.seed, static_cast<std::uint64_t>(epoch), order[i]))
                           : s.image;
        const Var loss = ctc_loss(model.forward(image), s.label, blank);
        backward(loss);
        batch_loss += loss.value().item();
        ++used;
      }
      if (used == 0) continue;
      std::vector<Tensor> grads;
      grads.reserve(param_values.size());
      for (const auto& p : model.parameters()) {
        Tensor g = p.value.grad();
        g *= 1.0 / static_cast<double>(used);
        grads.push_back(std::move(g));
      }
      const AdamStepReport step = adam_step(param_values, grads, adam, adam_config);
      if (!step.applied) {
        ++result.skipped_batches;
        log_line(outputs, fmt("warning: epoch %d batch at %zu has a non-finite gradient; skipped",
                              epoch, begin));
      }
      loss_sum += batch_loss;
      loss_count += used;
    }
    model.zero_grad();
    result.skipped_infeasible += skipped;
    if (skipped > 0) {
      log_line(outputs, fmt("epoch %d: skipped %zu infeasible samples", epoch, skipped));
    }

    const Validation val = validate_model(model, alphabet, val_set);
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : NAN;
    record.val_loss = val.loss;
    record.val_char_acc = val.char_accuracy;
    record.val_word_acc = val.word_accuracy;

    state.epoch = epoch;
    const bool improved = std::isfinite(val.loss) && val.loss < state.best_val_loss;
    if (improved) {
      state.best_val_loss = val.loss;
      state.best_epoch = epoch;
      state.epochs_without_improvement = 0;
      result.best = Checkpoint::from_model(model, alphabet);
    } else {
      ++state.epochs_without_improvement;
    }
    result.best.state = state;
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.curve.push_back(record);

    if (persist) {
      if (improved) save_checkpoint(result.best, best_path);
      Checkpoint last = Checkpoint::from_model(model, alphabet);
      last.state = state;
      last.optimizer = adam;
      save_checkpoint(last, last_path);
      metrics << format_metrics_row(record) << std::endl;
    }
    log_line(outputs, fmt("epoch %d/%d train_loss %.4f val_loss %.4f val_char %.4f val_word %.4f "
                          "(%.1fs)%s",
                          epoch, config.epochs, record.train_loss, record.val_loss,
                          record.val_char_acc, record.val_word_acc, record.seconds,
                          improved ? " *" : ""));
  }
  if (state.epochs_without_improvement >= patience && state.epoch < config.epochs) {
    result.stopped_early = true;
  }
  if (result.stopped_early) {
    log_line(outputs, fmt("early stop: no improvement for %lld epochs; best epoch %lld",
                          static_cast<long long>(state.epochs_without_improvement),
                          static_cast<long long>(state.best_epoch)));
  }
  result.best.state = state;
  if (persist) save_checkpoint(result.best, best_path);
  return result;
}

}  // namespace ctcocr
