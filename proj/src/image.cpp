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

#include "ctcocr/image.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "ctcocr/error.hpp"

namespace ctcocr {

RawImage RawImage::from_gray(const ImageTensor& image) {
  if (image.rank() != 2) throw ShapeError("expected a 2-D image, got " + to_string(image.shape()));
  RawImage raw;
  raw.height = static_cast<int>(image.dim(0));
  raw.width = static_cast<int>(image.dim(1));
  raw.channels = 1;
  raw.max_value = 1.0;
  raw.samples.assign(image.data().begin(), image.data().end());
  return raw;
}

RawImage read_image(const std::filesystem::path& path) {
  cv::Mat mat;
  try {
    mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw DataError("cannot decode " + path.string() + ": " + e.what());
  }
  if (mat.empty()) throw DataError("cannot decode image " + path.string());
  if (mat.dims != 2 || mat.channels() == 2 || mat.channels() > 4) {
    throw DataError("unsupported image layout in " + path.string());
  }

  RawImage raw;
  raw.height = mat.rows;
  raw.width = mat.cols;
  raw.channels = mat.channels();
  switch (mat.depth()) {
    case CV_8U:
      raw.max_value = 255.0;
      break;
    case CV_16U:
      raw.max_value = 65535.0;
      break;
    default:
      throw DataError("unsupported sample depth in " + path.string());
  }
  cv::Mat wide;
  mat.convertTo(wide, CV_64F);
  raw.samples.resize(static_cast<std::size_t>(raw.height) * raw.width * raw.channels);
  for (int y = 0; y < raw.height; ++y) {
    const double* row = wide.ptr<double>(y);
    double* dst = raw.samples.data() + static_cast<std::size_t>(y) * raw.width * raw.channels;
    for (int x = 0; x < raw.width; ++x) {
      const double* px = row + static_cast<std::size_t>(x) * raw.channels;
      double* out = dst + static_cast<std::size_t>(x) * raw.channels;
      if (raw.channels >= 3) {
        // OpenCV decodes as BGR(A).
        out[0] = px[2];
        out[1] = px[1];
        out[2] = px[0];
        if (raw.channels == 4) out[3] = px[3];
      } else {
        out[0] = px[0];
      }
    }
  }
  return raw;
}

void write_png(const std::filesystem::path& path, const ImageTensor& image) {
  if (image.rank() != 2) throw ShapeError("expected a 2-D image, got " + to_string(image.shape()));
  cv::Mat mat(static_cast<int>(image.dim(0)), static_cast<int>(image.dim(1)), CV_8UC1);
  for (int y = 0; y < mat.rows; ++y) {
    auto* row = mat.ptr<unsigned char>(y);
    for (int x = 0; x < mat.cols; ++x) {
      const double v = std::clamp(image.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)), 0.0, 1.0);
      row[x] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat);
  } catch (const cv::Exception& e) {
    throw DataError("cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) throw DataError("cannot write " + path.string());
}

double sample_bilinear(const ImageTensor& image, double y, double x, double fill) {
  const long h = static_cast<long>(image.dim(0));
  const long w = static_cast<long>(image.dim(1));
  if (!(y > -1.0 && y < static_cast<double>(h) && x > -1.0 && x < static_cast<double>(w))) {
    return fill;
  }
  const double fy = std::floor(y), fx = std::floor(x);
  const long y0 = static_cast<long>(fy), x0 = static_cast<long>(fx);
  const double dy = y - fy, dx = x - fx;
  auto px = [&](long yy, long xx) {
    if (yy < 0 || yy >= h || xx < 0 || xx >= w) return fill;
    return image.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
  };
  if (dy == 0.0 && dx == 0.0) return px(y0, x0);
  return (1.0 - dy) * ((1.0 - dx) * px(y0, x0) + dx * px(y0, x0 + 1)) +
         dy * ((1.0 - dx) * px(y0 + 1, x0) + dx * px(y0 + 1, x0 + 1));
}

ImageTensor resize_bilinear(const ImageTensor& image, std::size_t height, std::size_t width) {
  if (image.rank() != 2) throw ShapeError("expected a 2-D image, got " + to_string(image.shape()));
  if (image.dim(0) == height && image.dim(1) == width) return image;
  const double sy = static_cast<double>(image.dim(0)) / static_cast<double>(height);
  const double sx = static_cast<double>(image.dim(1)) / static_cast<double>(width);
  const double max_y = static_cast<double>(image.dim(0) - 1);
  const double max_x = static_cast<double>(image.dim(1) - 1);
  ImageTensor out({height, width});
  for (std::size_t y = 0; y < height; ++y) {
    const double src_y = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    for (std::size_t x = 0; x < width; ++x) {
      const double src_x = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      out.at(y, x) = sample_bilinear(image, src_y, src_x, 0.0);
    }
  }
  return out;
}

}  // namespace ctcocr
