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
#include <cmath>
#include <numbers>

#include "ctcocr/data.hpp"
#include "ctcocr/error.hpp"

namespace ctcocr {

namespace {

constexpr double kBackground = 1.0;

double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

double draw(Rng& rng, const Range& r) { return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi); }

// 2x3 affine matrix [a b c; d e f] mapping (x, y) -> (a x + b y + c, d x + e y + f).
struct Affine {
  double a = 1, b = 0, c = 0, d = 0, e = 1, f = 0;

  Affine then(const Affine& next) const {  // next * this
    return {next.a * a + next.b * d,     next.a * b + next.b * e,     next.a * c + next.b * f + next.c,
            next.d * a + next.e * d,     next.d * b + next.e * e,     next.d * c + next.e * f + next.f};
  }

  Affine inverse() const {
    const double det = a * e - b * d;
    const double ia = e / det, ib = -b / det, id = -d / det, ie = a / det;
    return {ia, ib, -(ia * c + ib * f), id, ie, -(id * c + ie * f)};
  }
};

}  // namespace

AugmentationConfig AugmentationConfig::identity() {
  AugmentationConfig c;
  c.rotation_degrees = {0.0, 0.0};
  c.translate_fraction = {0.0, 0.0};
  c.zoom_factor = {1.0, 1.0};
  c.shear_degrees = {0.0, 0.0};
  c.brightness_delta = {0.0, 0.0};
  c.contrast_factor = {1.0, 1.0};
  c.flip_enabled = false;
  return c;
}

void AugmentationConfig::validate() const {
  const std::pair<const char*, Range> ranges[] = {
      {"rotation", rotation_degrees}, {"translate", translate_fraction},
      {"zoom", zoom_factor},          {"shear", shear_degrees},
      {"brightness", brightness_delta}, {"contrast", contrast_factor}};
  for (const auto& [name, r] : ranges) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
      throw ConfigError(std::string("augmentation ") + name + " range must be finite with lo <= hi");
    }
  }
  if (zoom_factor.lo <= 0.0) throw ConfigError("augmentation zoom must stay positive");
  if (std::abs(shear_degrees.lo) >= 89.0 || std::abs(shear_degrees.hi) >= 89.0) {
    throw ConfigError("augmentation shear must stay below 89 degrees");
  }
}

AugmentParams sample_augmentation(const AugmentationConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  AugmentParams p;
  p.rotation_degrees = draw(rng, config.rotation_degrees);
  p.translate_x = draw(rng, config.translate_fraction);
  p.translate_y = draw(rng, config.translate_fraction);
  p.zoom = draw(rng, config.zoom_factor);
  p.shear_degrees = draw(rng, config.shear_degrees);
  p.brightness = draw(rng, config.brightness_delta);
  p.contrast = draw(rng, config.contrast_factor);
  p.flip = config.flip_enabled && rng.uniform() < 0.5;
  return p;
}

ImageTensor apply_augmentation(const ImageTensor& image, const AugmentParams& p) {
  if (image.rank() != 2) throw ShapeError("expected a 2-D image, got " + to_string(image.shape()));
  const std::size_t h = image.dim(0), w = image.dim(1);
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;

  // Source -> destination: centre, flip, zoom, shear, rotate, un-centre + shift.
  const double theta = radians(p.rotation_degrees);
  const double shear = std::tan(radians(p.shear_degrees));
  Affine forward{1, 0, -cx, 0, 1, -cy};
  if (p.flip) forward = forward.then({-1, 0, 0, 0, 1, 0});
  forward = forward.then({p.zoom, 0, 0, 0, p.zoom, 0});
  forward = forward.then({1, shear, 0, 0, 1, 0});
  forward = forward.then({std::cos(theta), -std::sin(theta), 0, std::sin(theta), std::cos(theta), 0});
  forward = forward.then({1, 0, cx + p.translate_x * static_cast<double>(w), 0, 1,
                          cy + p.translate_y * static_cast<double>(h)});
  const Affine back = forward.inverse();

  ImageTensor out({h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const auto fx = static_cast<double>(x), fy = static_cast<double>(y);
      const double sx = back.a * fx + back.b * fy + back.c;
      const double sy = back.d * fx + back.e * fy + back.f;
      double v = sample_bilinear(image, sy, sx, kBackground);
      v = (v - 0.5) * p.contrast + 0.5 + p.brightness;
      out.at(y, x) = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

ImageTensor augment(const ImageTensor& image, const AugmentationConfig& config,
                    std::uint64_t seed) {
  return apply_augmentation(image, sample_augmentation(config, seed));
}

std::uint64_t augmentation_seed(std::uint64_t global_seed, std::uint64_t epoch,
                                std::uint64_t sample_index) {
  return combine_seeds(combine_seeds(global_seed, epoch), sample_index);
}

}  // namespace ctcocr
