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


#include "ctcocr/eval.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "ctcocr/ctc.hpp"
#include "ctcocr/error.hpp"

namespace ctcocr {

std::size_t edit_distance(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  // Single rolling row over the shorter string.
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diagonal + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diagonal = up;
    }
  }
  return row[b.size()];
}

namespace {

void check_pairs(std::span<const PredictionPair> pairs) {
  if (pairs.empty()) throw DomainError("accuracy of an empty prediction list");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].reference.empty()) {
      throw DomainError("reference " + std::to_string(i) + " is empty");
    }
  }
}

}  // namespace

double char_accuracy(std::span<const PredictionPair> pairs) {
  check_pairs(pairs);
  std::size_t errors = 0, length = 0;
  for (const auto& p : pairs) {
    errors += edit_distance(p.prediction, p.reference);
    length += p.reference.size();
  }
  return std::clamp(1.0 - static_cast<double>(errors) / static_cast<double>(length), 0.0, 1.0);
}

double word_accuracy(std::span<const PredictionPair> pairs) {
  check_pairs(pairs);
  const auto hits = std::count_if(pairs.begin(), pairs.end(),
                                  [](const auto& p) { return p.prediction == p.reference; });
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

std::string DecoderSpec::name() const {
  return kind == Kind::kGreedy ? "greedy" : "beam" + std::to_string(beam_width);
}

DecoderSpec parse_decoder(const std::string& name, int beam_width) {
  if (name == "greedy") return DecoderSpec::greedy();
  if (name == "beam") {
    if (beam_width < 1) throw ConfigError("beam width must be at least 1");
    return DecoderSpec::beam(beam_width);
  }
  throw ConfigError("unknown decoder '" + name + "' (expected greedy or beam)");
}

std::string decode(const Tensor& log_probs, const Alphabet& alphabet, const DecoderSpec& decoder) {
  const int blank = alphabet.blank_index();
  const LabelSequence label = decoder.kind == DecoderSpec::Kind::kGreedy
                                  ? ctc_greedy_decode(log_probs, blank)
                                  : ctc_beam_decode(log_probs, blank, decoder.beam_width);
  return alphabet.decode(label);
}

std::string unknown_characters(const std::vector<std::string>& texts, const Alphabet& alphabet) {
  std::set<char> missing;
  for (const auto& t : texts) {
    for (char c : t) {
      if (!alphabet.contains(c)) missing.insert(c);
    }
  }
  return {missing.begin(), missing.end()};
}

EvalReport evaluate(const std::vector<Sample>& samples, const Alphabet& label_alphabet,
                    const Predictor& predict, const std::string& decoder_name) {
  if (samples.empty()) throw DataError("no samples to evaluate");
  EvalReport report;
  report.decoder = decoder_name;
  std::vector<PredictionPair> pairs;
  pairs.reserve(samples.size());
  std::size_t total_distance = 0;
  for (const auto& s : samples) {
    PredictionPair pair{predict(s), label_alphabet.decode(s.label)};
    const std::size_t d = edit_distance(pair.prediction, pair.reference);
    total_distance += d;
    report.records.push_back({s.source_id, pair.reference, pair.prediction, d});
    pairs.push_back(std::move(pair));
  }
  report.n_samples = samples.size();
  report.char_accuracy = char_accuracy(pairs);
  report.word_accuracy = word_accuracy(pairs);
  report.mean_edit_distance =
      static_cast<double>(total_distance) / static_cast<double>(samples.size());
  return report;
}

EvalReport evaluate(const Model& model, const Alphabet& model_alphabet,
                    const std::vector<Sample>& samples, const Alphabet& label_alphabet,
                    const DecoderSpec& decoder) {
  if (model_alphabet.size() != model.config().alphabet_size) {
    throw ConfigError("alphabet has " + std::to_string(model_alphabet.size()) +
                      " symbols but the model emits " +
                      std::to_string(model.config().alphabet_size));
  }
  if (!(label_alphabet == model_alphabet)) {
    std::vector<std::string> references;
    for (const auto& s : samples) references.push_back(label_alphabet.decode(s.label));
    const std::string missing = unknown_characters(references, model_alphabet);
    if (!missing.empty()) {
      throw DataError("labels use characters outside the model alphabet: \"" + missing + "\"");
    }
  }
  return evaluate(
      samples, label_alphabet,
      [&](const Sample& s) { return decode(model.infer(s.image), model_alphabet, decoder); },
      decoder.name());
}

void write_eval_report(const std::filesystem::path& directory, const EvalReport& report) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  nlohmann::ordered_json summary;
  summary["n_samples"] = report.n_samples;
  summary["decoder"] = report.decoder;
  summary["char_accuracy"] = report.char_accuracy;
  summary["word_accuracy"] = report.word_accuracy;
  summary["mean_edit_distance"] = report.mean_edit_distance;
  std::ofstream json(directory / "eval.json");
  if (!json) throw DataError("cannot write " + (directory / "eval.json").string());
  json << summary.dump(2) << '\n';

  std::ofstream tsv(directory / "eval_details.tsv");
  if (!tsv) throw DataError("cannot write " + (directory / "eval_details.tsv").string());
  tsv << "source_id\treference\tprediction\tedit_distance\n";
  for (const auto& r : report.records) {
    tsv << r.source_id << '\t' << r.reference << '\t' << r.prediction << '\t' << r.edit_distance
        << '\n';
  }
}

}  // namespace ctcocr
