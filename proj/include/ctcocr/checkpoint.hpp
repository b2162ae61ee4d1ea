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
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ctcocr/alphabet.hpp"
#include "ctcocr/model.hpp"
#include "ctcocr/optim.hpp"

namespace ctcocr {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct TrainingState {
  std::int64_t epoch = 0;  // completed epochs
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::int64_t best_epoch = 0;
  std::int64_t epochs_without_improvement = 0;
};

// Layout (little-endian): "CTCOCR\0\0", u32 version, model config, alphabet
// (length, bytes, FNV-1a hash), named tensors, training state, optional Adam
// state, then a CRC-32 of every preceding byte.
struct Checkpoint {
  std::uint32_t format_version = kCheckpointVersion;
  ModelConfig model_config;
  Alphabet alphabet;
  std::vector<NamedTensor> parameters;
  TrainingState state;
  std::optional<AdamState> optimizer;

  static Checkpoint from_model(const Model& model, const Alphabet& alphabet);
  Model to_model() const;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

// Throws IntegrityError on a corrupt or truncated file and VersionError on
// an unsupported format version.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws ConfigError unless `checkpoint` was trained on `expected`.
void require_alphabet(const Checkpoint& checkpoint, const Alphabet& expected);

}  // namespace ctcocr
