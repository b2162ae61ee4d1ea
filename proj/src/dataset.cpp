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

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>

#include "ctcocr/data.hpp"
#include "ctcocr/error.hpp"

namespace ctcocr {

namespace {

ImageTensor median3x3(const ImageTensor& image) {
  const std::size_t h = image.dim(0), w = image.dim(1);
  ImageTensor out(image.shape());
  std::array<double, 9> window{};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const long yy = std::clamp<long>(static_cast<long>(y) + dy, 0, static_cast<long>(h) - 1);
          const long xx = std::clamp<long>(static_cast<long>(x) + dx, 0, static_cast<long>(w) - 1);
          window[n++] = image.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
        }
      }
      std::nth_element(window.begin(), window.begin() + 4, window.end());
      out.at(y, x) = window[4];
    }
  }
  return out;
}

double percentile(std::vector<double> values, double q) {
  const auto rank = static_cast<std::size_t>(std::llround(q * static_cast<double>(values.size() - 1)));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank), values.end());
  return values[rank];
}

void standardize_in_place(ImageTensor& image) {
  const auto n = static_cast<double>(image.size());
  double mean = 0.0;
  for (double v : image.data()) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : image.data()) var += (v - mean) * (v - mean);
  const double stddev = std::sqrt(var / n);
  if (stddev < 1e-12) return;  // constant image: nothing to standardize
  double lo = INFINITY, hi = -INFINITY;
  for (double& v : image.data()) {
    v = (v - mean) / stddev;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double& v : image.data()) v = (v - lo) / (hi - lo);
}

void contrast_stretch_in_place(ImageTensor& image, double low_q, double high_q) {
  const std::vector<double> values(image.data().begin(), image.data().end());
  const double lo = percentile(values, low_q);
  const double hi = percentile(values, high_q);
  if (hi - lo < 1e-12) return;
  for (double& v : image.data()) v = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

ImageTensor to_grayscale(const RawImage& raw) {
  if (raw.height <= 0 || raw.width <= 0) throw DataError("image has zero area");
  const auto h = static_cast<std::size_t>(raw.height), w = static_cast<std::size_t>(raw.width);
  const auto c = static_cast<std::size_t>(raw.channels);
  if (raw.samples.size() != h * w * c) throw DataError("image sample count does not match its size");
  ImageTensor out({h, w});
  for (std::size_t i = 0; i < h * w; ++i) {
    const double* px = raw.samples.data() + i * c;
    const double luma = c >= 3 ? 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2] : px[0];
    out[i] = luma / raw.max_value;
  }
  return out;
}

ImageTensor preprocess(const RawImage& raw, const PreprocessConfig& config) {
  if (config.height < 1 || config.width < 1) throw ConfigError("preprocess size must be positive");
  ImageTensor image = to_grayscale(raw);
  if (config.denoise) image = median3x3(image);
  image = resize_bilinear(image, static_cast<std::size_t>(config.height),
                          static_cast<std::size_t>(config.width));
  for (double& v : image.data()) v = std::clamp(v, 0.0, 1.0);
  if (config.standardize) standardize_in_place(image);
  if (config.contrast_stretch) {
    contrast_stretch_in_place(image, config.low_percentile, config.high_percentile);
  }
  return image;
}

bool is_image_file(const std::filesystem::path& path) {
  const std::string ext = lowercase(path.extension().string());
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

LoadResult load_dataset(const std::filesystem::path& directory, const Alphabet& alphabet,
                        const PreprocessConfig& config) {
  std::error_code ec;
  if (!std::filesystem::is_directory(directory, ec)) {
    throw DataError("dataset directory " + directory.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename() < b.filename(); });

  LoadResult result;
  for (const auto& file : files) {
    const std::string stem = file.stem().string();
    try {
      if (stem.empty()) throw DataError("empty label");
      LabelSequence label = alphabet.encode(stem);
      ImageTensor image = preprocess(read_image(file), config);
      result.samples.push_back({std::move(image), std::move(label), stem});
    } catch (const Error& e) {
      result.skipped.push_back({file.filename().string(), e.what()});
    }
  }
  return result;
}

void SplitSpec::validate() const {
  for (double f : {train_fraction, val_fraction, test_fraction}) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("split fractions must lie in (0, 1)");
  }
  if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

DatasetSplit split_dataset(std::vector<Sample> samples, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(combine_seeds(spec.seed, 0x5b1));
  rng.shuffle(order.begin(), order.end());

  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.val_fraction));
  const auto n_test =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.test_fraction));
  const std::size_t n_train = n - n_val - n_test;

  DatasetSplit split;
  split.train.reserve(n_train);
  split.val.reserve(n_val);
  split.test.reserve(n_test);
  for (std::size_t i = 0; i < n; ++i) {
    Sample& s = samples[order[i]];
    if (i < n_train) {
      split.train.push_back(std::move(s));
    } else if (i < n_train + n_val) {
      split.val.push_back(std::move(s));
    } else {
      split.test.push_back(std::move(s));
    }
  }
  return split;
}

ClassBalance class_balance_report(const std::vector<Sample>& samples, const Alphabet& alphabet) {
  ClassBalance report;
  report.counts.assign(static_cast<std::size_t>(alphabet.size()), 0);
  for (const auto& s : samples) {
    for (int k : s.label) {
      if (k < 0 || k >= alphabet.size()) {
        throw DomainError("label index " + std::to_string(k) + " outside the alphabet");
      }
      ++report.counts[static_cast<std::size_t>(k)];
    }
  }
  if (!report.counts.empty()) {
    const auto [lo, hi] = std::minmax_element(report.counts.begin(), report.counts.end());
    report.imbalance_ratio =
        static_cast<double>(*hi) / static_cast<double>(std::max<std::size_t>(1, *lo));
  }
  return report;
}

std::vector<Sample> oversample_minority(std::vector<Sample> samples, const Alphabet& alphabet,
                                        std::uint64_t seed, double target_ratio) {
  const std::size_t original = samples.size();
  Rng rng(combine_seeds(seed, 0xba1));
  while (samples.size() < 2 * original) {
    const ClassBalance report = class_balance_report(samples, alphabet);
    if (report.imbalance_ratio <= target_ratio) break;
    const auto rarest = static_cast<int>(
        std::min_element(report.counts.begin(), report.counts.end()) - report.counts.begin());
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < original; ++i) {
      if (std::find(samples[i].label.begin(), samples[i].label.end(), rarest) !=
          samples[i].label.end()) {
        candidates.push_back(i);
      }
    }
    if (candidates.empty()) break;  // character absent altogether
    Sample copy = samples[candidates[rng.below(candidates.size())]];
    copy.source_id += "#dup";
    samples.push_back(std::move(copy));
  }
  return samples;
}

}  // namespace ctcocr
