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
#include <string_view>
#include <vector>

#include "ctcocr/alphabet.hpp"
#include "ctcocr/image.hpp"
#include "ctcocr/model.hpp"
#include "ctcocr/rng.hpp"

namespace ctcocr {

struct Sample {
  ImageTensor image;
  LabelSequence label;
  std::string source_id;  // filename stem, or a synthetic seed tag
};

// ---------------------------------------------------------------------------
// Preprocessing

struct PreprocessConfig {
  int height = 50;
  int width = 200;
  // Map the low/high intensity percentiles to 0/1.
  bool contrast_stretch = true;
  double low_percentile = 0.01;
  double high_percentile = 0.99;
  // Per-image (x - mean) / std followed by an affine remap to [0, 1].
  bool standardize = false;
  // 3x3 median filter before resizing.
  bool denoise = false;
};

// Luma 0.299 R + 0.587 G + 0.114 B, scaled to [0, 1]. Alpha is ignored.
ImageTensor to_grayscale(const RawImage& raw);

// grayscale -> [denoise] -> resize -> [standardize] -> [contrast stretch].
// Output has the configured shape and values in [0, 1].
ImageTensor preprocess(const RawImage& raw, const PreprocessConfig& config);

// ---------------------------------------------------------------------------
// Loading

struct LoadIssue {
  std::string file;
  std::string message;
};

struct LoadResult {
  std::vector<Sample> samples;
  std::vector<LoadIssue> skipped;
};

bool is_image_file(const std::filesystem::path& path);

// One sample per png/jpg/jpeg in `directory` (non-recursive), ordered by
// filename; the stem is the label. Files whose stem has characters outside
// the alphabet, or that fail to decode, are skipped and reported. Throws
// DataError only if the directory itself is unusable.
LoadResult load_dataset(const std::filesystem::path& directory, const Alphabet& alphabet,
                        const PreprocessConfig& config);

// ---------------------------------------------------------------------------
// Augmentation

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Range&, const Range&) = default;
};

struct AugmentationConfig {
  Range rotation_degrees{-5.0, 5.0};
  Range translate_fraction{-0.05, 0.05};
  Range zoom_factor{0.95, 1.05};
  Range shear_degrees{-5.0, 5.0};
  Range brightness_delta{-0.1, 0.1};
  Range contrast_factor{0.9, 1.1};
  // Off by default: mirroring changes glyph identity (b <-> d).
  bool flip_enabled = false;

  static AugmentationConfig identity();
  void validate() const;
  friend bool operator==(const AugmentationConfig&, const AugmentationConfig&) = default;
};

// One concrete draw from an AugmentationConfig.
struct AugmentParams {
  double rotation_degrees = 0.0;
  double translate_x = 0.0;  // fraction of width
  double translate_y = 0.0;  // fraction of height
  double zoom = 1.0;
  double shear_degrees = 0.0;
  double brightness = 0.0;
  double contrast = 1.0;
  bool flip = false;
};

AugmentParams sample_augmentation(const AugmentationConfig& config, std::uint64_t seed);

// Geometric part as one affine map about the image centre (bilinear,
// background 1.0), then contrast/brightness, then clamping to [0, 1].
ImageTensor apply_augmentation(const ImageTensor& image, const AugmentParams& params);

ImageTensor augment(const ImageTensor& image, const AugmentationConfig& config,
                    std::uint64_t seed);

// Per-sample seed for a given epoch; independent of iteration order.
std::uint64_t augmentation_seed(std::uint64_t global_seed, std::uint64_t epoch,
                                std::uint64_t sample_index);

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
};

// Seeded shuffle, then contiguous slices: val and test get floor(n * f),
// train gets the rest.
DatasetSplit split_dataset(std::vector<Sample> samples, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Synthetic captcha

struct SynthConfig {
  int height = 50;
  int width = 200;
  double glyph_scale = 4.0;         // pixels per font cell
  double scale_variation = 0.08;    // relative, per image
  double position_jitter = 2.0;     // pixels, per character
  double rotation_jitter = 10.0;    // degrees, per character
  double warp_amplitude = 2.0;      // pixels, vertical sinusoid
  double max_noise_density = 0.02;  // salt-and-pepper fraction
  bool strike_through = true;
  bool vary_shading = true;  // random background and ink levels

  // No jitter, warp, noise or strike-through; output depends only on text.
  static SynthConfig clean();
  int pitch() const;
  int margin() const;
  int max_text_length() const;
};

struct GlyphBox {
  char symbol = 0;
  double center_x = 0.0;
  double center_y = 0.0;
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
};

struct SyntheticCaptcha {
  Sample sample;
  std::vector<GlyphBox> glyphs;  // left to right, in label order
};

bool has_glyph(char symbol);

// Deterministic in (text, style_seed, config). Throws DomainError for
// characters outside the alphabet or without a built-in glyph, and
// ConfigError when the text does not fit the canvas width.
SyntheticCaptcha synthesize_captcha(std::string_view text, std::uint64_t style_seed,
                                    const Alphabet& alphabet, const SynthConfig& config = {});

// Uniform length in [min_length, max_length], uniform characters.
std::string random_text(Rng& rng, const Alphabet& alphabet, int min_length, int max_length);

struct CorpusEntry {
  std::string source_id;
  std::string label;
  std::uint64_t style_seed = 0;
};

// `count` captchas with distinct texts; texts and style seeds derive from
// `seed`. Each image
// is passed through `preprocess` so it matches what load_dataset produces.
std::vector<Sample> synthesize_corpus(int count, int min_length, int max_length,
                                      std::uint64_t seed, const Alphabet& alphabet,
                                      const SynthConfig& synth,
                                      const PreprocessConfig& preprocess_config,
                                      std::vector<CorpusEntry>* manifest = nullptr);

// Writes one `<label>.png` per captcha plus manifest.tsv (source_id, label,
// style_seed) into `directory`, creating it if needed.
std::vector<CorpusEntry> write_corpus(const std::filesystem::path& directory, int count,
                                      int min_length, int max_length, std::uint64_t seed,
                                      const Alphabet& alphabet, const SynthConfig& synth);

// ---------------------------------------------------------------------------
// Class balance

struct ClassBalance {
  std::vector<std::size_t> counts;  // indexed by alphabet position
  double imbalance_ratio = 1.0;     // max / max(1, min)
};

ClassBalance class_balance_report(const std::vector<Sample>& samples, const Alphabet& alphabet);

// Appends copies of samples that contain the rarest character until the
// imbalance ratio reaches `target_ratio` or the set has doubled.
std::vector<Sample> oversample_minority(std::vector<Sample> samples, const Alphabet& alphabet,
                                        std::uint64_t seed, double target_ratio = 1.25);

}  // namespace ctcocr
