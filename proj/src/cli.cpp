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


#include "ctcocr/cli.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <memory>
#include <ostream>

#include "ctcocr/checkpoint.hpp"
#include "ctcocr/config.hpp"
#include "ctcocr/error.hpp"
#include "ctcocr/eval.hpp"
#include "ctcocr/train.hpp"

namespace ctcocr {

namespace {

// A command-line flag that overrides one config key.
struct KeyFlag {
  std::string key;
  std::string value;
  CLI::Option* option = nullptr;
};

class Command {
 public:
  Command(CLI::App& app, const std::string& name, const std::string& description)
      : sub_(app.add_subcommand(name, description)) {
    sub_->add_option("--config", config_path_, "key = value config file");
    flag("--seed", "seed", "Seed for synthesis, splitting, initialization and shuffling");
    flag("--out", "out", "Output directory");
    sub_->add_option("--set", overrides_, "Override any config key (key=value)");
  }

  CLI::App* app() const { return sub_; }

  void flag(const std::string& name, const std::string& key, const std::string& help) {
    auto f = std::make_unique<KeyFlag>();
    f->key = key;
    f->option = sub_->add_option(name, f->value, help);
    flags_.push_back(std::move(f));
  }

  // Defaults, then the config file, then --set, then dedicated flags.
  CliConfig resolve() const {
    CliConfig config;
    if (!config_path_.empty()) apply_config_file(config, config_path_);
    for (const auto& item : overrides_) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value (got '" + item + "')");
      config.set(item.substr(0, eq), item.substr(eq + 1));
    }
    for (const auto& f : flags_) {
      if (f->option->count() > 0) config.set(f->key, f->value);
    }
    config.finalize();
    config.validate();
    return config;
  }

 private:
  CLI::App* sub_;
  std::string config_path_;
  std::vector<std::string> overrides_;
  std::vector<std::unique_ptr<KeyFlag>> flags_;
};

Alphabet resolve_alphabet(const CliConfig& config) {
  if (config.alphabet != "auto") return Alphabet(config.alphabet);
  if (config.synthetic_count > 0) return Alphabet::captcha_default();
  std::vector<std::string> stems;
  std::error_code ec;
  if (!std::filesystem::is_directory(config.data_dir, ec)) {
    throw DataError("dataset directory " + config.data_dir.string() + " does not exist");
  }
  for (const auto& e : std::filesystem::directory_iterator(config.data_dir)) {
    if (e.is_regular_file() && is_image_file(e.path())) stems.push_back(e.path().stem().string());
  }
  if (stems.empty()) throw DataError("no images in " + config.data_dir.string());
  return Alphabet::from_texts(stems);
}

std::vector<Sample> load_samples(const CliConfig& config, const Alphabet& alphabet,
                                 std::ostream& err) {
  if (config.synthetic_count > 0) {
    return synthesize_corpus(config.synthetic_count, config.min_length, config.max_length,
                             config.seed, alphabet, SynthConfig{}, config.preprocess);
  }
  if (config.data_dir.empty()) {
    throw ConfigError("no dataset: pass --data DIR or --synthetic N");
  }
  LoadResult loaded = load_dataset(config.data_dir, alphabet, config.preprocess);
  for (const auto& issue : loaded.skipped) {
    err << "skipped " << issue.file << ": " << issue.message << '\n';
  }
  if (loaded.samples.empty()) {
    throw DataError("no usable samples in " + config.data_dir.string() + " (" +
                    std::to_string(loaded.skipped.size()) + " skipped)");
  }
  return std::move(loaded.samples);
}

std::filesystem::path checkpoint_path(const CliConfig& config) {
  if (!config.checkpoint.empty()) return config.checkpoint;
  return config.out / kBestCheckpointName;
}

int cmd_synthesize(const CliConfig& config, int count, std::ostream& out) {
  if (count < 0) throw ConfigError("--count must be non-negative");
  const Alphabet alphabet = resolve_alphabet(config);
  const auto entries = write_corpus(config.out, count, config.min_length, config.max_length,
                                    config.seed, alphabet, SynthConfig{});
  write_resolved_config(config, config.out);
  out << "wrote " << entries.size() << " images to " << config.out.string() << '\n';
  return kExitOk;
}

int cmd_train(const CliConfig& config, bool resume, std::ostream& out, std::ostream& err) {
  const Alphabet alphabet = resolve_alphabet(config);
  ModelConfig model = config.model;
  model.alphabet_size = alphabet.size();
  model.validate();
  for (const auto& w : model.warnings(config.max_length)) err << "warning: " << w << '\n';

  std::vector<Sample> samples = load_samples(config, alphabet, err);
  DatasetSplit split = split_dataset(std::move(samples), config.split);
  if (config.oversample) {
    split.train = oversample_minority(std::move(split.train), alphabet, config.seed);
  }
  const ClassBalance balance = class_balance_report(split.train, alphabet);
  err << "class imbalance ratio (train): " << balance.imbalance_ratio << '\n';

  write_resolved_config(config, config.out);
  tune_allocator();
  TrainOutputs outputs;
  outputs.directory = config.out;
  outputs.resume = resume;
  outputs.log = &err;
  TrainResult result = train(model, alphabet, split.train, split.val, config.train, outputs);

  const Model best = result.best.to_model();
  out << "best epoch " << result.best.state.best_epoch << " val_loss "
      << result.best.state.best_val_loss << '\n';
  if (!split.test.empty()) {
    const EvalReport report = evaluate(best, alphabet, split.test, alphabet, DecoderSpec::greedy());
    out << "test char_accuracy " << report.char_accuracy << '\n';
    out << "test word_accuracy " << report.word_accuracy << '\n';
  }
  out << "checkpoint " << (config.out / kBestCheckpointName).string() << '\n';
  return kExitOk;
}

const std::vector<Sample>& pick_split(const CliConfig& config, const DatasetSplit& split,
                                      const std::vector<Sample>& all) {
  if (config.eval_split == "train") return split.train;
  if (config.eval_split == "val") return split.val;
  if (config.eval_split == "test") return split.test;
  return all;
}

int cmd_eval(const CliConfig& config, std::ostream& out, std::ostream& err) {
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path(config));
  const Model model = checkpoint.to_model();
  const Alphabet& alphabet = checkpoint.alphabet;
  const DecoderSpec decoder = parse_decoder(config.decoder, config.beam_width);

  CliConfig data_config = config;
  data_config.preprocess.height = model.config().input_height;
  data_config.preprocess.width = model.config().input_width;
  if (config.synthetic_count == 0 && !config.data_dir.empty()) {
    // Report foreign characters instead of silently skipping their files.
    std::vector<std::string> stems;
    std::error_code ec;
    if (std::filesystem::is_directory(config.data_dir, ec)) {
      for (const auto& e : std::filesystem::directory_iterator(config.data_dir)) {
        if (e.is_regular_file() && is_image_file(e.path())) stems.push_back(e.path().stem().string());
      }
    }
    const std::string missing = unknown_characters(stems, alphabet);
    if (!missing.empty()) {
      throw DataError("dataset labels use characters outside the checkpoint alphabet: \"" +
                      missing + "\"");
    }
  }
  std::vector<Sample> all = load_samples(data_config, alphabet, err);
  const DatasetSplit split =
      config.eval_split == "all" ? DatasetSplit{} : split_dataset(all, config.split);
  const std::vector<Sample>& samples = pick_split(config, split, all);
  if (samples.empty()) throw DataError("the " + config.eval_split + " split is empty");

  const EvalReport report = evaluate(model, alphabet, samples, alphabet, decoder);
  write_eval_report(config.out, report);
  write_resolved_config(config, config.out);
  out << "samples " << report.n_samples << " (" << config.eval_split << ", " << report.decoder
      << ")\n";
  out << "char_accuracy " << report.char_accuracy << '\n';
  out << "word_accuracy " << report.word_accuracy << '\n';
  out << "mean_edit_distance " << report.mean_edit_distance << '\n';
  return kExitOk;
}

int cmd_predict(const CliConfig& config, const std::vector<std::string>& images,
                std::ostream& out, std::ostream& err) {
  if (images.empty()) throw UsageError("predict needs at least one image");
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path(config));
  const Model model = checkpoint.to_model();
  const DecoderSpec decoder = parse_decoder(config.decoder, config.beam_width);
  PreprocessConfig prep = config.preprocess;
  prep.height = model.config().input_height;
  prep.width = model.config().input_width;

  int failures = 0;
  for (const auto& path : images) {
    try {
      const Tensor log_probs = model.infer(preprocess(read_image(path), prep));
      out << path << '\t' << decode(log_probs, checkpoint.alphabet, decoder) << '\n';
    } catch (const Error& e) {
      err << path << ": " << e.what() << '\n';
      ++failures;
    }
  }
  return failures > 0 ? kExitData : kExitOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ConfigError*>(&e)) {
    return kExitUsage;
  }
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const IntegrityError*>(&e) ||
      dynamic_cast<const VersionError*>(&e)) {
    return kExitData;
  }
  return kExitRuntime;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Segmentation-free captcha OCR (CRNN + CTC)", "ctcocr"};
  app.require_subcommand(1);

  Command synth(app, "synthesize", "Write a synthetic captcha corpus and manifest.tsv");
  int count = 1000;
  synth.app()->add_option("--count", count, "Number of images")->capture_default_str();
  synth.flag("--min-length", "data.min_length", "Shortest label");
  synth.flag("--max-length", "data.max_length", "Longest label");

  Command train_cmd(app, "train", "Train a model; writes checkpoint and metrics.csv");
  train_cmd.flag("--data", "data.dir", "Directory of <label>.png images");
  train_cmd.flag("--synthetic", "data.synthetic", "Train on N generated captcha instead");
  train_cmd.flag("--epochs", "train.epochs", "Maximum epochs");
  train_cmd.flag("--batch-size", "train.batch_size", "Mini-batch size");
  train_cmd.flag("--lr", "train.learning_rate", "Adam learning rate");
  train_cmd.flag("--patience", "train.patience", "Early-stopping patience in epochs");
  bool resume = false;
  train_cmd.app()->add_flag("--resume", resume, "Continue from <out>/last.ckpt");

  Command eval_cmd(app, "eval", "Evaluate a checkpoint; writes eval.json and eval_details.tsv");
  eval_cmd.flag("--checkpoint", "checkpoint", "Checkpoint file (default <out>/model.ckpt)");
  eval_cmd.flag("--data", "data.dir", "Directory of <label>.png images");
  eval_cmd.flag("--synthetic", "data.synthetic", "Evaluate on N generated captcha");
  eval_cmd.flag("--split", "eval.split", "train | val | test | all");
  eval_cmd.flag("--decoder", "eval.decoder", "greedy | beam");
  eval_cmd.flag("--beam-width", "eval.beam_width", "Beam width for --decoder beam");

  Command predict_cmd(app, "predict", "Print <path>\\t<text> for each image");
  predict_cmd.flag("--checkpoint", "checkpoint", "Checkpoint file (default <out>/model.ckpt)");
  predict_cmd.flag("--decoder", "eval.decoder", "greedy | beam");
  predict_cmd.flag("--beam-width", "eval.beam_width", "Beam width for --decoder beam");
  std::vector<std::string> images;
  predict_cmd.app()->add_option("images", images, "Image files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth.app()->parsed()) return cmd_synthesize(synth.resolve(), count, out);
    if (train_cmd.app()->parsed()) return cmd_train(train_cmd.resolve(), resume, out, err);
    if (eval_cmd.app()->parsed()) return cmd_eval(eval_cmd.resolve(), out, err);
    if (predict_cmd.app()->parsed()) return cmd_predict(predict_cmd.resolve(), images, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitUsage;
}

}  // namespace ctcocr
