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
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ctcocr/alphabet.hpp"
#include "ctcocr/checkpoint.hpp"
#include "ctcocr/data.hpp"
#include "ctcocr/model.hpp"
#include "ctcocr/optim.hpp"

namespace ctcocr {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int early_stop_patience = 10;
  double gradient_clip_norm = 5.0;
  std::uint64_t seed = 0;
  bool augment = true;
  AugmentationConfig augmentation;

  AdamConfig adam() const;
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_char_acc = 0.0;
  double val_word_acc = 0.0;
  double seconds = 0.0;
};

using LossCurve = std::vector<EpochRecord>;

inline constexpr const char* kMetricsHeader =
    "epoch,train_loss,val_loss,val_char_acc,val_word_acc,seconds";
std::string format_metrics_row(const EpochRecord& record);
LossCurve read_metrics(const std::filesystem::path& path);

struct Validation {
  double loss = 0.0;  // mean over feasible samples
  double char_accuracy = 0.0;
  double word_accuracy = 0.0;
  std::size_t infeasible = 0;
};

// Greedy decoding, no augmentation.
Validation validate_model(const Model& model, const Alphabet& alphabet,
                          const std::vector<Sample>& samples);

struct TrainOutputs {
  // When set, receives metrics.csv, model.ckpt (best) and last.ckpt.
  std::filesystem::path directory;
  // Continue from directory/last.ckpt if present.
  bool resume = false;
  // Progress lines; null silences them.
  std::ostream* log = nullptr;
};

struct TrainResult {
  Checkpoint best;  // lowest validation loss seen
  LossCurve curve;
  std::size_t skipped_infeasible = 0;  // summed over epochs
  std::size_t skipped_batches = 0;     // non-finite gradients
  bool stopped_early = false;
};

inline constexpr const char* kBestCheckpointName = "model.ckpt";
inline constexpr const char* kLastCheckpointName = "last.ckpt";
inline constexpr const char* kMetricsName = "metrics.csv";

TrainResult train(const ModelConfig& model_config, const Alphabet& alphabet,
                  const std::vector<Sample>& train_set, const std::vector<Sample>& val_set,
                  const TrainConfig& config, const TrainOutputs& outputs = {});

// Keeps freed training buffers mapped; graph tensors are reallocated every
// sample and returning them to the kernel dominates small-batch runs.
void tune_allocator();

}  // namespace ctcocr
