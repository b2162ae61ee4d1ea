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

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctcocr/alphabet.hpp"
#include "ctcocr/data.hpp"
#include "ctcocr/model.hpp"

namespace ctcocr {

// Levenshtein distance with unit costs.
std::size_t edit_distance(std::string_view a, std::string_view b);

struct PredictionPair {
  std::string prediction;
  std::string reference;
};

// 1 - sum(edit distance) / sum(reference length), clamped to [0, 1].
// Throws DomainError on an empty list or an empty reference.
double char_accuracy(std::span<const PredictionPair> pairs);
// Fraction of exact matches.
double word_accuracy(std::span<const PredictionPair> pairs);

struct EvalRecord {
  std::string source_id;
  std::string reference;
  std::string prediction;
  std::size_t edit_distance = 0;
};

struct EvalReport {
  std::size_t n_samples = 0;
  double char_accuracy = 0.0;
  double word_accuracy = 0.0;
  double mean_edit_distance = 0.0;
  std::string decoder;
  std::vector<EvalRecord> records;
};

struct DecoderSpec {
  enum class Kind { kGreedy, kBeam };
  Kind kind = Kind::kGreedy;
  int beam_width = 10;

  static DecoderSpec greedy() { return {}; }
  static DecoderSpec beam(int width) { return {Kind::kBeam, width}; }
  std::string name() const;
};

DecoderSpec parse_decoder(const std::string& name, int beam_width);

std::string decode(const Tensor& log_probs, const Alphabet& alphabet, const DecoderSpec& decoder);

// Characters of `texts` missing from `alphabet`, sorted and de-duplicated.
std::string unknown_characters(const std::vector<std::string>& texts, const Alphabet& alphabet);

using Predictor = std::function<std::string(const Sample&)>;

// Labels are decoded with `label_alphabet`.
EvalReport evaluate(const std::vector<Sample>& samples, const Alphabet& label_alphabet,
                    const Predictor& predict, const std::string& decoder_name = "custom");

// Throws DataError listing the offending characters when a reference uses a
// symbol the model cannot emit.
EvalReport evaluate(const Model& model, const Alphabet& model_alphabet,
                    const std::vector<Sample>& samples, const Alphabet& label_alphabet,
                    const DecoderSpec& decoder);

// eval.json (summary) and eval_details.tsv (one row per sample).
void write_eval_report(const std::filesystem::path& directory, const EvalReport& report);

}  // namespace ctcocr
