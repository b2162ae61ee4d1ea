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


// Acceptance suite: one PASS/FAIL line per criterion. Criteria 6-8 train the
// default CRNN twice on 2000 synthetic captcha (about 20 minutes on one core).
//
//   acceptance [--quick] [--workdir DIR]
//
// --quick skips the training criteria. Set CTCOCR_EXTERNAL_DIR to a directory of
// <label>.png files to also train and report on that corpus (not a gate).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/test_support.hpp"
#include "ctcocr/checkpoint.hpp"
#include "ctcocr/ctc.hpp"
#include "ctcocr/eval.hpp"
#include "ctcocr/model.hpp"
#include "ctcocr/train.hpp"

namespace ctcocr {
namespace {

namespace fs = std::filesystem;
using testing::random_tensor;

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s %d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

LabelSequence random_label(Rng& rng, std::size_t max_len, int symbols) {
  LabelSequence l(rng.below(max_len + 1));
  for (int& k : l) k = static_cast<int>(rng.below(static_cast<std::uint64_t>(symbols)));
  return l;
}

void criterion_oracle() {
  Rng rng(101);
  double worst = 0.0;
  const int n = 600;
  for (int i = 0; i < n; ++i) {
    const std::size_t frames = rng.below(6) + 1;
    const int symbols = static_cast<int>(rng.below(3)) + 1;  // K <= 3, plus blank
    const Tensor lp = testing::random_log_probs(rng, frames, static_cast<std::size_t>(symbols + 1));
    const auto mass = testing::enumerate_ctc(testing::exp_tensor(lp), symbols);
    const LabelSequence label = random_label(rng, 3, symbols);
    const auto it = mass.find(label);
    const double expected = it == mass.end() ? 0.0 : it->second;
    worst = std::max(worst, std::abs(std::exp(-ctc_loss(lp, label, symbols).loss) - expected));
  }
  report(1, "ctc oracle equivalence", worst <= 1e-9,
         fmt("%.0f instances, max |exp(-loss) - enumeration| = %.3g (tol 1e-9)", n, worst));
}

void criterion_gradient() {
  Rng rng(102);
  double worst = 0.0;
  const int n = 150;
  for (int i = 0; i < n; ++i) {
    const std::size_t frames = rng.below(6) + 2;
    const int symbols = static_cast<int>(rng.below(3)) + 1;
    LabelSequence label = random_label(rng, 3, symbols);
    while (ctc_min_frames(label) > frames) label.pop_back();
    const Tensor logits = random_tensor(rng, {frames, static_cast<std::size_t>(symbols + 1)}, -2, 2);
    const Tensor analytic = ctc_gradient(log_softmax_rows(logits), label, symbols);
    const Tensor numeric = testing::numeric_gradient(
        [&](const Tensor& z) { return ctc_loss(log_softmax_rows(z), label, symbols).loss; }, logits,
        1e-6);
    worst = std::max(worst, testing::max_abs_diff(analytic, numeric));
  }
  report(2, "ctc gradient vs finite differences", worst <= 1e-6,
         fmt("%.0f instances, max abs error %.3g (tol 1e-6)", n, worst));
}

void criterion_hand_case() {
  const Tensor lp({2, 2}, std::log(0.5));
  const double loss = ctc_loss(lp, {0}, 1).loss;
  // Paths a-a, a-blank, blank-a: 3 of 4 equally likely.
  const double err = std::abs(loss + std::log(0.75));
  report(3, "hand-computable case", err <= 1e-12, fmt("loss %.17g, |loss + ln 0.75| = %.3g", loss, err));
}

void criterion_beam() {
  Rng rng(104);
  int exact = 0;
  const int n = 300;
  for (int i = 0; i < n; ++i) {
    const std::size_t frames = rng.below(3) + 1;
    const int symbols = static_cast<int>(rng.below(2)) + 1;
    const Tensor lp = testing::random_log_probs(rng, frames, static_cast<std::size_t>(symbols + 1));
    const auto mass = testing::enumerate_ctc(testing::exp_tensor(lp), symbols);
    double best = -1.0;
    for (const auto& [label, p] : mass) best = std::max(best, p);
    const LabelSequence got = ctc_beam_decode(lp, symbols, 1000);
    const auto it = mass.find(got);
    if (it != mass.end() && it->second >= best - 1e-12) ++exact;
  }
  report(4, "beam exactness", exact == n, fmt("%.0f / %.0f instances decode to the most probable label", exact, n));
}

void criterion_numeric_core() {
  Rng rng(105);
  double mm = 0.0, conv = 0.0, pool = 0.0;
  const int n = 120;
  for (int i = 0; i < n; ++i) {
    const std::size_t m = rng.below(9) + 1, k = rng.below(9) + 1, c = rng.below(9) + 1;
    const Tensor a = random_tensor(rng, {m, k}), b = random_tensor(rng, {k, c});
    mm = std::max(mm, testing::max_abs_diff(matmul(Var::constant(a), Var::constant(b)).value(),
                                            testing::naive_matmul(a, b)));

    const std::size_t cin = rng.below(3) + 1, cout = rng.below(4) + 1, kh = 2 * rng.below(2) + 1;
    const std::size_t h = rng.below(8) + 4, w = rng.below(10) + 4;
    const int stride = static_cast<int>(rng.below(2)) + 1, pad = static_cast<int>(rng.below(2));
    const Tensor in = random_tensor(rng, {cin, h, w}), kern = random_tensor(rng, {cout, cin, kh, kh});
    conv = std::max(conv, testing::max_abs_diff(
                              conv2d(Var::constant(in), Var::constant(kern), stride, pad).value(),
                              testing::naive_conv2d(in, kern, stride, pad)));
    const int window = static_cast<int>(rng.below(2)) + 2;
    pool = std::max(pool, testing::max_abs_diff(max_pool2d(Var::constant(in), window, window).value(),
                                                testing::naive_max_pool(in, window, window)));
  }

  ModelConfig tiny;
  tiny.input_height = 8;
  tiny.input_width = 16;
  tiny.conv_blocks = {{2, 3, 2}};
  tiny.rnn_hidden = 4;
  tiny.alphabet_size = 3;
  Model model = Model::build(tiny, 5);
  const Tensor image = random_tensor(rng, {8, 16}, 0.0, 1.0);
  const LabelSequence label = {0, 2, 2};
  backward(ctc_loss(model.forward(image), label, 3));
  double grad = 0.0;
  for (auto& p : model.parameters()) {
    const Tensor analytic = p.value.grad();
    Tensor& value = p.value.mutable_value();
    Tensor numeric(value.shape());
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + 1e-6;
      const double up = ctc_loss(model.infer(image), label, 3).loss;
      value[i] = saved - 1e-6;
      const double down = ctc_loss(model.infer(image), label, 3).loss;
      value[i] = saved;
      numeric[i] = (up - down) / 2e-6;
    }
    grad = std::max(grad, testing::max_relative_error(analytic, numeric, 1e-4));
  }
  const bool pass = mm <= 1e-12 && conv <= 1e-12 && pool <= 1e-12 && grad <= 1e-3;
  report(5, "numeric core oracles", pass,
         fmt("matmul %.3g, conv2d %.3g, max_pool2d %.3g", mm, conv, pool) +
             fmt(" over %.0f shapes; model gradient rel err %.3g (tol 1e-3)", n, grad));
}

void criterion_metrics() {
  Rng rng(110);
  auto text = [&] {
    std::string s(rng.below(8), ' ');
    for (char& ch : s) ch = "abc"[rng.below(3)];
    return s;
  };
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::string a = text(), b = text(), c = text();
    const std::size_t ab = edit_distance(a, b);
    const std::size_t gap = a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
    if (edit_distance(a, a) != 0 || (ab == 0) != (a == b) || ab != edit_distance(b, a) ||
        edit_distance(a, c) > ab + edit_distance(b, c) || ab > std::max(a.size(), b.size()) ||
        ab < gap) {
      ++violations;
    }
  }
  int accuracy_violations = 0;
  const std::vector<PredictionPair> one = {{"abce", "abcd"}};
  if (char_accuracy(one) != 0.75) ++accuracy_violations;
  std::vector<PredictionPair> twenty(20, {"2b827", "2b827"});
  twenty[3].prediction = "2b82";
  if (std::abs(word_accuracy(twenty) - 0.95) > 1e-15) ++accuracy_violations;
  for (int i = 0; i < 500; ++i) {
    std::vector<PredictionPair> pairs(rng.below(10) + 1);
    for (auto& p : pairs) {
      p.reference = text() + "a";
      p.prediction = rng.below(2) ? p.reference : text();
    }
    const double ca = char_accuracy(pairs), wa = word_accuracy(pairs);
    if (ca < 0.0 || ca > 1.0 || wa < 0.0 || wa > 1.0 || (wa == 1.0 && ca != 1.0)) ++accuracy_violations;
    auto perfect = pairs;
    for (auto& p : perfect) p.prediction = p.reference;
    if (char_accuracy(perfect) != 1.0 || word_accuracy(perfect) != 1.0) ++accuracy_violations;
    std::reverse(pairs.begin(), pairs.end());
    if (std::abs(char_accuracy(pairs) - ca) > 1e-15 || word_accuracy(pairs) != wa) ++accuracy_violations;
  }
  report(10, "metric properties", violations == 0 && accuracy_violations == 0,
         fmt("10000 edit-distance triples, %.0f axiom violations; %.0f accuracy invariant violations",
             violations, accuracy_violations));
}

// ---------------------------------------------------------------------------
// Training criteria

constexpr std::uint64_t kSeed = 7;

TrainConfig acceptance_train_config() {
  TrainConfig c;
  c.epochs = 10;
  c.batch_size = 16;
  c.early_stop_patience = 3;
  c.seed = kSeed;
  return c;
}

struct Run {
  TrainResult result;
  double seconds = 0.0;
};

Run train_once(const DatasetSplit& split, const Alphabet& alphabet, const fs::path& dir) {
  fs::remove_all(dir);
  TrainOutputs outputs;
  outputs.directory = dir;
  outputs.log = &std::cerr;
  const auto start = std::chrono::steady_clock::now();
  Run run{train(ModelConfig{}, alphabet, split.train, split.val, acceptance_train_config(), outputs)};
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

// metrics.csv without the wall-clock column.
std::vector<std::string> metrics_without_seconds(const fs::path& file) {
  std::ifstream in(file);
  std::vector<std::string> rows;
  for (std::string line; std::getline(in, line);) rows.push_back(line.substr(0, line.rfind(',')));
  return rows;
}

void criteria_training(const fs::path& workdir) {
  tune_allocator();
  const Alphabet alphabet = Alphabet::captcha_default();
  SplitSpec spec;
  spec.seed = kSeed;
  const DatasetSplit split = split_dataset(
      synthesize_corpus(2000, 4, 6, kSeed, alphabet, SynthConfig{}, PreprocessConfig{}), spec);

  const Run first = train_once(split, alphabet, workdir / "run1");
  const Model model = first.result.best.to_model();
  const EvalReport greedy = evaluate(model, alphabet, split.test, alphabet, DecoderSpec::greedy());
  const EvalReport beam = evaluate(model, alphabet, split.test, alphabet, DecoderSpec::beam(10));
  const SyntheticCaptcha clean = synthesize_captcha("2b827", 0, alphabet, SynthConfig::clean());
  const std::string clean_text = decode(
      model.infer(preprocess(RawImage::from_gray(clean.sample.image), PreprocessConfig{})), alphabet,
      DecoderSpec::greedy());
  const auto& curve = first.result.curve;
  const int best_epoch = static_cast<int>(first.result.best.state.best_epoch);
  std::printf("INFO 6 %zu epochs in %.0f s; best epoch %d; test beam(10) char %.4f word %.4f; clean \"2b827\" -> \"%s\"\n",
              curve.size(), first.seconds, best_epoch, beam.char_accuracy, beam.word_accuracy,
              clean_text.c_str());
  report(6, "synthetic training reproduction",
         greedy.char_accuracy >= 0.97 && greedy.word_accuracy >= 0.85 && clean_text == "2b827",
         fmt("greedy test char %.4f (>= 0.97), word %.4f (>= 0.85)", greedy.char_accuracy,
             greedy.word_accuracy) +
             " on " + std::to_string(greedy.n_samples) + " held-out samples; clean render " +
             (clean_text == "2b827" ? "decoded" : "missed"));

  const double epoch1 = curve.front().train_loss;
  const double at_best = curve.at(static_cast<std::size_t>(best_epoch - 1)).train_loss;
  report(7, "train loss decrease", at_best < 0.25 * epoch1,
         fmt("epoch-1 train loss %.4f, best-epoch train loss %.4f (ratio %.4f, need < 0.25)", epoch1,
             at_best, at_best / epoch1));

  train_once(split, alphabet, workdir / "run2");
  const auto a = metrics_without_seconds(workdir / "run1" / kMetricsName);
  const auto b = metrics_without_seconds(workdir / "run2" / kMetricsName);
  report(8, "determinism", a == b && a.size() > 1,
         std::to_string(a.size() - 1) + " epochs, metrics.csv " +
             (a == b ? "identical" : "differs") + " apart from the seconds column");

  const fs::path ckpt = workdir / "run1" / kBestCheckpointName;
  const Model reloaded = load_checkpoint(ckpt).to_model();
  const auto fixed = synthesize_corpus(10, 4, 6, 999, alphabet, SynthConfig{}, PreprocessConfig{});
  int identical = 0;
  for (const auto& s : fixed) identical += model.infer(s.image) == reloaded.infer(s.image);
  report(9, "checkpoint round trip", identical == 10,
         fmt("%.0f / 10 images give bit-identical log-probs after save/load", identical));
}

void external_corpus(const fs::path& dir, const fs::path& workdir) {
  const LoadResult loaded = load_dataset(dir, Alphabet::captcha_default(), PreprocessConfig{});
  if (loaded.samples.empty()) {
    std::printf("INFO external: no usable samples in %s\n", dir.string().c_str());
    return;
  }
  SplitSpec spec;
  spec.seed = kSeed;
  const DatasetSplit split = split_dataset(loaded.samples, spec);
  const Alphabet alphabet = Alphabet::captcha_default();
  const Run run = train_once(split, alphabet, workdir / "external");
  const EvalReport r =
      evaluate(run.result.best.to_model(), alphabet, split.test, alphabet, DecoderSpec::greedy());
  std::printf("INFO external: %zu samples, test char %.4f word %.4f\n",
              loaded.samples.size(), r.char_accuracy, r.word_accuracy);
}

}  // namespace
}  // namespace ctcocr

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  bool quick = false;
  fs::path workdir = fs::temp_directory_path() / "ctcocr_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--quick") {
      quick = true;
    } else if (arg == "--workdir" && i + 1 < argc) {
      workdir = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--quick] [--workdir DIR]\n", argv[0]);
      return 1;
    }
  }
  using namespace ctcocr;
  criterion_oracle();
  criterion_gradient();
  criterion_hand_case();
  criterion_beam();
  criterion_numeric_core();
  criterion_metrics();
  if (quick) {
    std::printf("SKIP 6-9 training criteria (--quick)\n");
  } else {
    criteria_training(workdir);
    if (const char* external = std::getenv("CTCOCR_EXTERNAL_DIR")) external_corpus(external, workdir);
  }
  std::printf("%s: %d failing criteria\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
