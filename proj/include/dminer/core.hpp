// Copyright 2026 The DMiner Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace dminer {

// Dense (y, x, channel) grid of doubles, row-major with channel fastest.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int height, int width, int channels, double fill = 0.0);
  Tensor3(int height, int width, int channels, std::vector<double> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  double& at(int y, int x, int c) noexcept { return data_[index(y, x, c)]; }
  double at(int y, int x, int c) const noexcept { return data_[index(y, x, c)]; }

  // Channel vector at one cell.
  std::span<double> cell(int y, int x) noexcept {
    return {data_.data() + index(y, x, 0), static_cast<std::size_t>(channels_)};
  }
  std::span<const double> cell(int y, int x) const noexcept {
    return {data_.data() + index(y, x, 0), static_cast<std::size_t>(channels_)};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const Tensor3& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  bool operator==(const Tensor3&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Row-major rows x cols matrix; used for stacks of feature vectors.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }

  double& at(int r, int c) noexcept { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double at(int r, int c) const noexcept { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  std::span<double> row(int r) noexcept {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }
  std::span<const double> row(int r) const noexcept {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Input image size and the downsample stride of the output grid.
struct Grid {
  int input_height = 0;
  int input_width = 0;
  int stride = 1;

  Grid() = default;
  Grid(int input_height, int input_width, int stride);

  int height() const noexcept { return input_height / stride; }
  int width() const noexcept { return input_width / stride; }
};

struct GridPos {
  int y = 0;
  int x = 0;

  auto operator<=>(const GridPos&) const = default;
};

// Center-form box in input-image pixels.
struct BBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double x0() const noexcept { return cx - 0.5 * w; }
  double y0() const noexcept { return cy - 0.5 * h; }
  double x1() const noexcept { return cx + 0.5 * w; }
  double y1() const noexcept { return cy + 0.5 * h; }

  bool operator==(const BBox&) const = default;
};

struct Annotation {
  BBox bbox;
  int category = 0;

  bool operator==(const Annotation&) const = default;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// Throws ZeroVector when ||v|| == 0.
std::vector<double> l2_normalize(std::span<const double> v);

// Backward pass of l2_normalize: given v and dL/du for u = v/||v||, returns
// dL/dv = (g - u (u.g)) / ||v||.
std::vector<double> l2_normalize_backward(std::span<const double> v,
                                          std::span<const double> grad_out);

double iou(const BBox& a, const BBox& b);

using ScalarFn = std::function<double(std::span<const double>)>;

// Central differences, one coordinate at a time. Throws NonFiniteLoss if any
// probe evaluates to inf/nan.
std::vector<double> finite_diff_grad(const ScalarFn& f, std::span<const double> x,
                                     double h);
Tensor3 finite_diff_grad(const std::function<double(const Tensor3&)>& f,
                         const Tensor3& x, double h);

}  // namespace dminer
