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


#include "ctcocr/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "ctcocr/error.hpp"

namespace ctcocr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("invalid value '" + text + "' for " + key);
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("invalid boolean '" + text + "' for " + key);
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  return parts;
}

Range parse_range(const std::string& key, const std::string& text) {
  const auto parts = split_commas(text);
  if (parts.size() != 2) throw ConfigError(key + " expects 'lo,hi' (got '" + text + "')");
  return {parse_number<double>(key, parts[0]), parse_number<double>(key, parts[1])};
}

std::string show(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);  // shortest round-trip form
  return std::string(buf, r.ptr);
}
std::string show(bool b) { return b ? "true" : "false"; }
std::string show(const Range& r) { return show(r.lo) + "," + show(r.hi); }

struct Key {
  const char* name;
  std::function<std::string(const CliConfig&)> get;
  std::function<void(CliConfig&, const std::string& key, const std::string& value)> set;
};

#define CTCOCR_KEY(NAME, EXPR, SHOW, PARSE)                                                 \
  Key {                                                                                     \
    NAME, [](const CliConfig& c) { return SHOW(c.EXPR); },                                  \
        [](CliConfig& c, [[maybe_unused]] const std::string& k, const std::string& v) { \
      c.EXPR = PARSE;                                                                       \
    }                                                                                       \
  }

std::string show_int(long long x) { return std::to_string(x); }
std::string show_path(const std::filesystem::path& p) { return p.string(); }
std::string show_str(const std::string& s) { return s; }

std::string show_channels(const std::vector<ConvBlock>& blocks) {
  std::string out;
  for (const auto& b : blocks) out += (out.empty() ? "" : ",") + std::to_string(b.out_channels);
  return out;
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      CTCOCR_KEY("seed", seed, show_int, parse_number<std::uint64_t>(k, v)),
      CTCOCR_KEY("out", out, show_path, std::filesystem::path(v)),
      CTCOCR_KEY("data.dir", data_dir, show_path, std::filesystem::path(v)),
      CTCOCR_KEY("data.synthetic", synthetic_count, show_int, parse_number<int>(k, v)),
      CTCOCR_KEY("data.min_length", min_length, show_int, parse_number<int>(k, v)),
      CTCOCR_KEY("data.max_length", max_length, show_int, parse_number<int>(k, v)),
      CTCOCR_KEY("data.alphabet", alphabet, show_str, v),
      CTCOCR_KEY("data.oversample", oversample, show, parse_bool(k, v)),
      CTCOCR_KEY("preprocess.contrast_stretch", preprocess.contrast_stretch, show, parse_bool(k, v)),
      CTCOCR_KEY("preprocess.low_percentile", preprocess.low_percentile, show, parse_number<double>(k, v)),
      CTCOCR_KEY("preprocess.high_percentile", preprocess.high_percentile, show, parse_number<double>(k, v)),
      CTCOCR_KEY("preprocess.standardize", preprocess.standardize, show, parse_bool(k, v)),
      CTCOCR_KEY("preprocess.denoise", preprocess.denoise, show, parse_bool(k, v)),
      CTCOCR_KEY("split.train", split.train_fraction, show, parse_number<double>(k, v)),
      CTCOCR_KEY("split.val", split.val_fraction, show, parse_number<double>(k, v)),
      CTCOCR_KEY("split.test", split.test_fraction, show, parse_number<double>(k, v)),
      CTCOCR_KEY("model.input_height", model.input_height, show_int, parse_number<int>(k, v)),
      CTCOCR_KEY("model.input_width", model.input_width, show_int, parse_number<int>(k, v)),
      Key{"model.conv_channels", [](const CliConfig& c) { return show_channels(c.model.conv_blocks); },
          [](CliConfig& c, const std::string& k, const std::string& v) {
            const ConvBlock shape = c.model.conv_blocks.empty() ? ConvBlock{} : c.model.conv_blocks.front();
            c.model.conv_blocks.clear();
            for (const auto& part : split_commas(v)) {
              c.model.conv_blocks.push_back({parse_number<int>(k, part), shape.kernel, shape.pool});
            }
          }},
      Key{"model.kernel",
          [](const CliConfig& c) {
            return c.model.conv_blocks.empty() ? std::string("3")
                                               : std::to_string(c.model.conv_blocks.front().kernel);
          },
          [](CliConfig& c, const std::string& k, const std::string& v) {
            for (auto& b : c.model.conv_blocks) b.kernel = parse_number<int>(k, v);
          }},
      Key{"model.pool",
          [](const CliConfig& c) {
            return c.model.conv_blocks.empty() ? std::string("2")
                                               : std::to_string(c.model.conv_blocks.front().pool);
          },
          [](CliConfig& c, const std::string& k, const std::string& v) {
            for (auto& b : c.model.conv_blocks) b.pool = parse_number<int>(k, v);
          }},
      CTCOCR_KEY("model.rnn_hidden", model.rnn_hidden, show_int, parse_number<int>(k, v)),
      CTCOCR_KEY("model.rnn", model.rnn_kind, to_string, parse_rnn_kind(v)),
      CTCOCR_KEY("model.bidirectional", model.bidirectional, show, parse_bool(k, v)),
      CTCOCR_KEY("train.epochs", train.epochs, show_int, parse_number<int>(k, v)),
      CTCOCR_KEY("train.batch_size", train.batch_size, show_int, parse_number<int>(k, v)),
      CTCOCR_KEY("train.learning_rate", train.learning_rate, show, parse_number<double>(k, v)),
      CTCOCR_KEY("train.beta1", train.beta1, show, parse_number<double>(k, v)),
      CTCOCR_KEY("train.beta2", train.beta2, show, parse_number<double>(k, v)),
      CTCOCR_KEY("train.epsilon", train.epsilon, show, parse_number<double>(k, v)),
      CTCOCR_KEY("train.patience", train.early_stop_patience, show_int, parse_number<int>(k, v)),
      CTCOCR_KEY("train.clip_norm", train.gradient_clip_norm, show, parse_number<double>(k, v)),
      CTCOCR_KEY("train.augment", train.augment, show, parse_bool(k, v)),
      CTCOCR_KEY("augment.rotation_degrees", train.augmentation.rotation_degrees, show, parse_range(k, v)),
      CTCOCR_KEY("augment.translate_fraction", train.augmentation.translate_fraction, show, parse_range(k, v)),
      CTCOCR_KEY("augment.zoom_factor", train.augmentation.zoom_factor, show, parse_range(k, v)),
      CTCOCR_KEY("augment.shear_degrees", train.augmentation.shear_degrees, show, parse_range(k, v)),
      CTCOCR_KEY("augment.brightness_delta", train.augmentation.brightness_delta, show, parse_range(k, v)),
      CTCOCR_KEY("augment.contrast_factor", train.augmentation.contrast_factor, show, parse_range(k, v)),
      CTCOCR_KEY("augment.flip", train.augmentation.flip_enabled, show, parse_bool(k, v)),
      CTCOCR_KEY("checkpoint", checkpoint, show_path, std::filesystem::path(v)),
      CTCOCR_KEY("eval.decoder", decoder, show_str, v),
      CTCOCR_KEY("eval.beam_width", beam_width, show_int, parse_number<int>(k, v)),
      CTCOCR_KEY("eval.split", eval_split, show_str, v),
  };
  return table;
}

#undef CTCOCR_KEY

}  // namespace

void CliConfig::set(const std::string& key, const std::string& value) {
  for (const auto& k : keys()) {
    if (key == k.name) {
      k.set(*this, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> CliConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(k.name, k.get(*this));
  return out;
}

void CliConfig::finalize() {
  preprocess.height = model.input_height;
  preprocess.width = model.input_width;
  split.seed = seed;
  train.seed = seed;
}

void CliConfig::validate() const {
  model.validate();
  train.validate();
  split.validate();
  if (synthetic_count < 0) throw ConfigError("data.synthetic must be non-negative");
  if (min_length < 1 || max_length < min_length) {
    throw ConfigError("data.min_length/data.max_length must satisfy 1 <= min <= max");
  }
  if (!(preprocess.low_percentile >= 0.0 && preprocess.low_percentile < preprocess.high_percentile &&
        preprocess.high_percentile <= 1.0)) {
    throw ConfigError("preprocess percentiles must satisfy 0 <= low < high <= 1");
  }
  if (decoder != "greedy" && decoder != "beam") {
    throw ConfigError("eval.decoder must be greedy or beam (got '" + decoder + "')");
  }
  if (beam_width < 1) throw ConfigError("eval.beam_width must be at least 1");
  if (eval_split != "train" && eval_split != "val" && eval_split != "test" && eval_split != "all") {
    throw ConfigError("eval.split must be train, val, test or all");
  }
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text,
                                                                   const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::stringstream ss(text);
  std::string line;
  for (int number = 1; std::getline(ss, line); ++number) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(number) + ": empty key");
    out.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return out;
}

void apply_config_file(CliConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  for (const auto& [key, value] : parse_config_text(buffer.str(), path.string())) {
    try {
      config.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
}

std::string format_config(const CliConfig& config) {
  std::string out;
  for (const auto& [key, value] : config.entries()) out += key + " = " + value + "\n";
  return out;
}

void write_resolved_config(const CliConfig& config, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  std::ofstream out(directory / "resolved_config");
  if (!out) throw DataError("cannot write " + (directory / "resolved_config").string());
  out << format_config(config);
}

}  // namespace ctcocr
