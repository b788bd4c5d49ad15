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

#include "dminer/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dminer/error.hpp"

namespace dminer {

Tensor3::Tensor3(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 0 || width < 0 || channels < 0) {
    throw Error(ErrorCode::kInvalidArgument, "negative tensor dimension");
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Tensor3::Tensor3(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height < 0 || width < 0 || channels < 0 ||
      data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw Error(ErrorCode::kInvalidArgument,
                "tensor data length does not match dims " + std::to_string(height) +
                    "x" + std::to_string(width) + "x" + std::to_string(channels));
  }
}

Matrix::Matrix(int rows, int cols, double fill) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) {
    throw Error(ErrorCode::kInvalidArgument, "negative matrix dimension");
  }
  data_.assign(static_cast<std::size_t>(rows) * cols, fill);
}

Grid::Grid(int input_height, int input_width, int stride)
    : input_height(input_height), input_width(input_width), stride(stride) {
  if (stride != 1 && stride != 2 && stride != 4 && stride != 8 && stride != 16) {
    throw Error(ErrorCode::kInvalidArgument,
                "stride must be one of 1,2,4,8,16, got " + std::to_string(stride));
  }
  if (input_height < stride || input_width < stride) {
    throw Error(ErrorCode::kInvalidArgument, "input smaller than one grid cell");
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

std::vector<double> l2_normalize(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::kInvalidArgument, "empty vector");
  const double n = l2_norm(v);
  if (n == 0.0) throw Error(ErrorCode::kZeroVector, "cannot normalize a zero vector");
  std::vector<double> out(v.begin(), v.end());
  for (double& e : out) e /= n;
  return out;
}

std::vector<double> l2_normalize_backward(std::span<const double> v,
                                          std::span<const double> grad_out) {
  const double n = l2_norm(v);
  if (n == 0.0) throw Error(ErrorCode::kZeroVector, "cannot normalize a zero vector");
  double ug = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) ug += v[i] / n * grad_out[i];
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (grad_out[i] - v[i] / n * ug) / n;
  return out;
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
  const double ih = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

std::vector<double> finite_diff_grad(const ScalarFn& f, std::span<const double> x,
                                     double h) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  "non-finite value probing coordinate " + std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

Tensor3 finite_diff_grad(const std::function<double(const Tensor3&)>& f,
                         const Tensor3& x, double h) {
  Tensor3 probe = x;
  Tensor3 grad(x.height(), x.width(), x.channels());
  auto values = probe.data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double orig = values[i];
    values[i] = orig + h;
    const double up = f(probe);
    values[i] = orig - h;
    const double down = f(probe);
    values[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  "non-finite value probing coordinate " + std::to_string(i));
    }
    grad.data()[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace dminer
