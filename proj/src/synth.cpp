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
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <string>

#include "ctcocr/data.hpp"
#include "ctcocr/error.hpp"

namespace ctcocr {

namespace {

constexpr int kGlyphWidth = 5;
constexpr int kGlyphHeight = 9;  // 7 rows above the baseline, 2 descender rows

struct Glyph {
  char symbol;
  std::array<const char*, kGlyphHeight> rows;
};

// clang-format off
constexpr Glyph kFont[] = {
  {'0', {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###.", ".....", "....."}},
  {'1', {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###.", ".....", "....."}},
  {'2', {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####", ".....", "....."}},
  {'3', {"#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###.", ".....", "....."}},
  {'4', {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#.", ".....", "....."}},
  {'5', {"#####", "#....", "####.", "....#", "....#", "#...#", ".###.", ".....", "....."}},
  {'6', {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###.", ".....", "....."}},
  {'7', {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#...", ".....", "....."}},
  {'8', {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###.", ".....", "....."}},
  {'9', {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##..", ".....", "....."}},
  {'a', {".....", ".....", ".###.", "....#", ".####", "#...#", ".####", ".....", "....."}},
  {'b', {"#....", "#....", "#.##.", "##..#", "#...#", "#...#", "####.", ".....", "....."}},
  {'c', {".....", ".....", ".###.", "#....", "#....", "#...#", ".###.", ".....", "....."}},
  {'d', {"....#", "....#", ".##.#", "#..##", "#...#", "#...#", ".####", ".....", "....."}},
  {'e', {".....", ".....", ".###.", "#...#", "#####", "#....", ".###.", ".....", "....."}},
  {'f', {"..##.", ".#..#", ".#...", "###..", ".#...", ".#...", ".#...", ".....", "....."}},
  {'g', {".....", ".....", ".####", "#...#", "#...#", ".####", "....#", "#...#", ".###."}},
  {'h', {"#....", "#....", "#.##.", "##..#", "#...#", "#...#", "#...#", ".....", "....."}},
  {'i', {"..#..", ".....", ".##..", "..#..", "..#..", "..#..", ".###.", ".....", "....."}},
  {'j', {"...#.", ".....", "..##.", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."}},
  {'k', {"#....", "#....", "#..#.", "#.#..", "##...", "#.#..", "#..#.", ".....", "....."}},
  {'l', {".##..", "..#..", "..#..", "..#..", "..#..", "..#..", ".###.", ".....", "....."}},
  {'m', {".....", ".....", "##.#.", "#.#.#", "#.#.#", "#...#", "#...#", ".....", "....."}},
  {'n', {".....", ".....", "#.##.", "##..#", "#...#", "#...#", "#...#", ".....", "....."}},
  {'o', {".....", ".....", ".###.", "#...#", "#...#", "#...#", ".###.", ".....", "....."}},
  {'p', {".....", ".....", "####.", "#...#", "#...#", "####.", "#....", "#....", "#...."}},
  {'q', {".....", ".....", ".####", "#...#", "#...#", ".####", "....#", "....#", "....#"}},
  {'r', {".....", ".....", "#.##.", "##..#", "#....", "#....", "#....", ".....", "....."}},
  {'s', {".....", ".....", ".####", "#....", ".###.", "....#", "####.", ".....", "....."}},
  {'t', {".#...", ".#...", "###..", ".#...", ".#...", ".#..#", "..##.", ".....", "....."}},
  {'u', {".....", ".....", "#...#", "#...#", "#...#", "#..##", ".##.#", ".....", "....."}},
  {'v', {".....", ".....", "#...#", "#...#", "#...#", ".#.#.", "..#..", ".....", "....."}},
  {'w', {".....", ".....", "#...#", "#...#", "#.#.#", "#.#.#", ".#.#.", ".....", "....."}},
  {'x', {".....", ".....", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", ".....", "....."}},
  {'y', {".....", ".....", "#...#", "#...#", "#...#", ".####", "....#", "#...#", ".###."}},
  {'z', {".....", ".....", "#####", "...#.", "..#..", ".#...", "#####", ".....", "....."}},
};
// clang-format on

const Glyph* find_glyph(char symbol) {
  for (const auto& g : kFont) {
    if (g.symbol == symbol) return &g;
  }
  return nullptr;
}

// Ink coverage at continuous font-cell coordinates (cell centres at +0.5).
double glyph_ink(const Glyph& glyph, double u, double v) {
  auto cell = [&](long row, long col) -> double {
    if (row < 0 || row >= kGlyphHeight || col < 0 || col >= kGlyphWidth) return 0.0;
    return glyph.rows[static_cast<std::size_t>(row)][col] == '#' ? 1.0 : 0.0;
  };
  const double x = u - 0.5, y = v - 0.5;
  const double fx = std::floor(x), fy = std::floor(y);
  const double dx = x - fx, dy = y - fy;
  const auto c0 = static_cast<long>(fx), r0 = static_cast<long>(fy);
  const double bilinear = (1 - dy) * ((1 - dx) * cell(r0, c0) + dx * cell(r0, c0 + 1)) +
                          dy * ((1 - dx) * cell(r0 + 1, c0) + dx * cell(r0 + 1, c0 + 1));
  // Sharpen the interpolated coverage into strokes with soft edges.
  return std::clamp((bilinear - 0.25) * 2.5, 0.0, 1.0);
}

double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

}  // namespace

SynthConfig SynthConfig::clean() {
  SynthConfig c;
  c.scale_variation = 0.0;
  c.position_jitter = 0.0;
  c.rotation_jitter = 0.0;
  c.warp_amplitude = 0.0;
  c.max_noise_density = 0.0;
  c.strike_through = false;
  c.vary_shading = false;
  return c;
}

int SynthConfig::pitch() const {
  return static_cast<int>(std::lround(glyph_scale * (kGlyphWidth + 1.5)));
}

int SynthConfig::margin() const { return static_cast<int>(std::lround(glyph_scale * 2.5)); }

int SynthConfig::max_text_length() const { return std::max(0, (width - 2 * margin()) / pitch()); }

bool has_glyph(char symbol) { return find_glyph(symbol) != nullptr; }

SyntheticCaptcha synthesize_captcha(std::string_view text, std::uint64_t style_seed,
                                    const Alphabet& alphabet, const SynthConfig& config) {
  if (text.empty()) throw DomainError("cannot synthesize an empty captcha");
  LabelSequence label = alphabet.encode(text);
  for (char c : text) {
    if (!has_glyph(c)) throw DomainError(std::string("no built-in glyph for '") + c + "'");
  }
  if (static_cast<int>(text.size()) > config.max_text_length()) {
    throw ConfigError("text of length " + std::to_string(text.size()) + " does not fit width " +
                      std::to_string(config.width) + " (at most " +
                      std::to_string(config.max_text_length()) + " characters)");
  }

  const auto h = static_cast<std::size_t>(config.height);
  const auto w = static_cast<std::size_t>(config.width);
  Rng rng(style_seed);
  double background = rng.uniform(0.88, 1.0);
  double ink_level = rng.uniform(0.05, 0.3);
  if (!config.vary_shading) {
    background = 1.0;
    ink_level = 0.1;
  }
  const double scale = config.glyph_scale * (1.0 + rng.uniform(-1.0, 1.0) * config.scale_variation);
  const double pitch = config.pitch();
  // Centre the text run horizontally.
  const double run = pitch * static_cast<double>(text.size());
  const double start_x = (static_cast<double>(w) - run) / 2.0;

  ImageTensor canvas({h, w}, background);
  std::vector<GlyphBox> boxes;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const Glyph& glyph = *find_glyph(text[i]);
    const double cx = start_x + pitch * (static_cast<double>(i) + 0.5) +
                      rng.uniform(-1.0, 1.0) * config.position_jitter;
    // Baseline-aligned: the 7-row body is centred, descenders hang below.
    const double cy = static_cast<double>(h) / 2.0 + scale * 1.0 +
                      rng.uniform(-1.0, 1.0) * config.position_jitter;
    const double theta = radians(rng.uniform(-1.0, 1.0) * config.rotation_jitter);
    const double cos_t = std::cos(theta), sin_t = std::sin(theta);
    const double half_w = scale * kGlyphWidth / 2.0, half_h = scale * kGlyphHeight / 2.0;
    const double reach = std::hypot(half_w, half_h) + 1.0;

    GlyphBox box{text[i], cx, cy, INFINITY, INFINITY, -INFINITY, -INFINITY};
    const long y_lo = std::max<long>(0, static_cast<long>(std::floor(cy - reach)));
    const long y_hi = std::min<long>(static_cast<long>(h) - 1, static_cast<long>(std::ceil(cy + reach)));
    const long x_lo = std::max<long>(0, static_cast<long>(std::floor(cx - reach)));
    const long x_hi = std::min<long>(static_cast<long>(w) - 1, static_cast<long>(std::ceil(cx + reach)));
    for (long y = y_lo; y <= y_hi; ++y) {
      for (long x = x_lo; x <= x_hi; ++x) {
        const double px = static_cast<double>(x) - cx, py = static_cast<double>(y) - cy;
        // Rotate canvas offset back into the glyph frame.
        const double gx = cos_t * px + sin_t * py, gy = -sin_t * px + cos_t * py;
        const double u = gx / scale + kGlyphWidth / 2.0;
        const double v = gy / scale + kGlyphHeight / 2.0;
        const double ink = glyph_ink(glyph, u, v);
        if (ink <= 0.0) continue;
        double& dst = canvas.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
        dst = std::min(dst, background + (ink_level - background) * ink);
        box.x0 = std::min(box.x0, static_cast<double>(x));
        box.x1 = std::max(box.x1, static_cast<double>(x));
        box.y0 = std::min(box.y0, static_cast<double>(y));
        box.y1 = std::max(box.y1, static_cast<double>(y));
      }
    }
    boxes.push_back(box);
  }

  if (config.strike_through) {
    const double y0 = static_cast<double>(h) / 2.0 + rng.uniform(-8.0, 8.0);
    const double y1 = static_cast<double>(h) / 2.0 + rng.uniform(-8.0, 8.0);
    const double thickness = rng.uniform(0.8, 1.6);
    const double level = rng.uniform(0.2, 0.5);
    const double slope = (y1 - y0) / static_cast<double>(w);
    const double norm = std::sqrt(1.0 + slope * slope);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double dist =
            std::abs(static_cast<double>(y) - (y0 + slope * static_cast<double>(x))) / norm;
        const double cover = std::clamp(thickness - dist + 0.5, 0.0, 1.0);
        if (cover > 0.0) {
          double& dst = canvas.at(y, x);
          dst = std::min(dst, background + (level - background) * cover);
        }
      }
    }
  }

  // Vertical sinusoidal warp. A zero amplitude still consumes the draws so
  // later stages see the same random stream.
  const double amplitude = rng.uniform(0.0, 1.0) * config.warp_amplitude;
  const double wavelength = rng.uniform(60.0, 120.0);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  if (amplitude > 0.0) {
    ImageTensor warped({h, w});
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double shift =
            amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(x) / wavelength + phase);
        warped.at(y, x) =
            sample_bilinear(canvas, static_cast<double>(y) + shift, static_cast<double>(x), background);
      }
    }
    for (auto& box : boxes) {
      const double shift =
          amplitude * std::sin(2.0 * std::numbers::pi * box.center_x / wavelength + phase);
      box.center_y -= shift;
      box.y0 -= shift;
      box.y1 -= shift;
    }
    canvas = std::move(warped);
  }

  const double density = rng.uniform(0.0, 1.0) * config.max_noise_density;
  if (density > 0.0) {
    for (double& v : canvas.data()) {
      if (rng.uniform() < density) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    }
  }

  SyntheticCaptcha out;
  out.sample = {std::move(canvas), std::move(label), "synth-" + std::to_string(style_seed)};
  out.glyphs = std::move(boxes);
  return out;
}

std::string random_text(Rng& rng, const Alphabet& alphabet, int min_length, int max_length) {
  if (min_length < 1 || max_length < min_length) {
    throw ConfigError("invalid text length range [" + std::to_string(min_length) + ", " +
                      std::to_string(max_length) + "]");
  }
  if (alphabet.size() == 0) throw ConfigError("empty alphabet");
  const int length = rng.between(min_length, max_length);
  std::string text;
  for (int i = 0; i < length; ++i) {
    text.push_back(alphabet.symbol(static_cast<int>(rng.below(static_cast<std::uint64_t>(alphabet.size())))));
  }
  return text;
}

namespace {

std::vector<CorpusEntry> plan_corpus(int count, int min_length, int max_length, std::uint64_t seed,
                                     const Alphabet& alphabet, const SynthConfig& synth) {
  if (count < 0) throw ConfigError("corpus size must be non-negative");
  if (max_length > synth.max_text_length()) {
    throw ConfigError("labels of length " + std::to_string(max_length) + " do not fit width " +
                      std::to_string(synth.width));
  }
  double distinct = 0.0;
  for (int len = min_length; len <= max_length; ++len) {
    distinct += std::pow(static_cast<double>(alphabet.size()), len);
  }
  if (static_cast<double>(count) > distinct / 2.0) {
    throw ConfigError("too many captchas requested for the available distinct texts");
  }
  Rng rng(combine_seeds(seed, 0x7e47));
  std::set<std::string> used;
  std::vector<CorpusEntry> entries;
  entries.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(entries.size()) < count) {
    std::string text = random_text(rng, alphabet, min_length, max_length);
    if (!used.insert(text).second) continue;
    const std::uint64_t style = combine_seeds(seed, entries.size());
    entries.push_back({text, text, style});
  }
  return entries;
}

}  // namespace

std::vector<Sample> synthesize_corpus(int count, int min_length, int max_length,
                                      std::uint64_t seed, const Alphabet& alphabet,
                                      const SynthConfig& synth,
                                      const PreprocessConfig& preprocess_config,
                                      std::vector<CorpusEntry>* manifest) {
  const auto entries = plan_corpus(count, min_length, max_length, seed, alphabet, synth);
  std::vector<Sample> samples;
  samples.reserve(entries.size());
  for (const auto& e : entries) {
    SyntheticCaptcha captcha = synthesize_captcha(e.label, e.style_seed, alphabet, synth);
    Sample s = std::move(captcha.sample);
    s.image = preprocess(RawImage::from_gray(s.image), preprocess_config);
    s.source_id = e.source_id;
    samples.push_back(std::move(s));
  }
  if (manifest) *manifest = entries;
  return samples;
}

std::vector<CorpusEntry> write_corpus(const std::filesystem::path& directory, int count,
                                      int min_length, int max_length, std::uint64_t seed,
                                      const Alphabet& alphabet, const SynthConfig& synth) {
  const auto entries = plan_corpus(count, min_length, max_length, seed, alphabet, synth);
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec || !std::filesystem::is_directory(directory)) {
    throw DataError("cannot create output directory " + directory.string());
  }
  std::ofstream manifest(directory / "manifest.tsv");
  if (!manifest) throw DataError("cannot write " + (directory / "manifest.tsv").string());
  manifest << "source_id\tlabel\tstyle_seed\n";
  for (const auto& e : entries) {
    const SyntheticCaptcha captcha = synthesize_captcha(e.label, e.style_seed, alphabet, synth);
    write_png(directory / (e.label + ".png"), captcha.sample.image);
    manifest << e.source_id << '\t' << e.label << '\t' << e.style_seed << '\n';
  }
  if (!manifest) throw DataError("failed writing manifest in " + directory.string());
  return entries;
}

}  // namespace ctcocr
