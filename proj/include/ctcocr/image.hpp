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

#include <filesystem>
#include <vector>

#include "ctcocr/model.hpp"

namespace ctcocr {

// Decoded image before preprocessing: interleaved samples (RGB order for
// three channels, RGBA for four), nominally in [0, max_value].
struct RawImage {
  int height = 0;
  int width = 0;
  int channels = 1;
  double max_value = 255.0;
  std::vector<double> samples;

  // Wraps a grayscale tensor already scaled to [0, 1].
  static RawImage from_gray(const ImageTensor& image);
};

// Reads PNG/JPEG via OpenCV. Throws DataError if the file cannot be decoded.
RawImage read_image(const std::filesystem::path& path);

// Writes an 8-bit grayscale PNG; values are clamped to [0, 1] first.
void write_png(const std::filesystem::path& path, const ImageTensor& image);

// Bilinear interpolation at continuous pixel coordinates (pixel centers at
// integers). Neighbours outside the image read as `fill`.
double sample_bilinear(const ImageTensor& image, double y, double x, double fill);

// Half-pixel-centre bilinear resize with edge clamping. Same-size input is
// returned unchanged.
ImageTensor resize_bilinear(const ImageTensor& image, std::size_t height, std::size_t width);

}  // namespace ctcocr
