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
#include <string>
#include <utility>
#include <vector>

#include "ctcocr/data.hpp"
#include "ctcocr/model.hpp"
#include "ctcocr/train.hpp"

namespace ctcocr {

// Everything a command needs, resolved from built-in defaults, then a
// config file, then command-line overrides.
struct CliConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";

  std::filesystem::path data_dir;
  int synthetic_count = 0;  // > 0 replaces data_dir with a generated corpus
  int min_length = 4;
  int max_length = 6;
  std::string alphabet = "2345678bcdefgmnpwxy";  // or "auto": derive from filenames
  bool oversample = false;

  PreprocessConfig preprocess;
  SplitSpec split;
  ModelConfig model;
  TrainConfig train;

  std::filesystem::path checkpoint;
  std::string decoder = "greedy";
  int beam_width = 10;
  std::string eval_split = "test";  // train | val | test | all

  // Throws ConfigError naming the key on an unknown key or bad value.
  void set(const std::string& key, const std::string& value);
  // Every key with its current value, in a fixed order; feeding them back
  // through set() reproduces this config.
  std::vector<std::pair<std::string, std::string>> entries() const;
  // Pushes shared values (seed, input size) into the nested configs.
  void finalize();
  void validate() const;
};

// `key = value` lines; `#` starts a comment.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text,
                                                                   const std::string& origin);
void apply_config_file(CliConfig& config, const std::filesystem::path& path);
std::string format_config(const CliConfig& config);
void write_resolved_config(const CliConfig& config, const std::filesystem::path& directory);

}  // namespace ctcocr
