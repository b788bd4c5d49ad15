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

#include "dminer/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dminer/error.hpp"

namespace dminer {

GridPos downsample_center(const BBox& bbox, const Grid& grid) {
  const auto px = static_cast<long long>(std::floor(bbox.cx / grid.stride));
  const auto py = static_cast<long long>(std::floor(bbox.cy / grid.stride));
  if (px < 0 || py < 0 || px >= grid.width() || py >= grid.height()) {
    throw Error(ErrorCode::kCenterOutOfGrid,
                "center (" + std::to_string(bbox.cx) + ", " + std::to_string(bbox.cy) +
                    ") maps to cell (" + std::to_string(px) + ", " + std::to_string(py) +
                    ") outside " + std::to_string(grid.width()) + "x" +
                    std::to_string(grid.height()));
  }
  return {static_cast<int>(py), static_cast<int>(px)};
}

double gaussian_radius(double w_cells, double h_cells, double min_overlap) {
  if (!(w_cells > 0.0) || !(h_cells > 0.0)) {
    throw Error(ErrorCode::kInvalidSize, "box size must be positive");
  }
  if (!(min_overlap > 0.0 && min_overlap < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "min_overlap must lie in (0, 1)");
  }
  const double w = w_cells;
  const double h = h_cells;
  const double o = min_overlap;

  const double b1 = h + w;
  const double c1 = w * h * (1.0 - o) / (1.0 + o);
  const double r1 = (b1 + std::sqrt(b1 * b1 - 4.0 * c1)) / 2.0;

  const double a2 = 4.0;
  const double b2 = 2.0 * (h + w);
  const double c2 = (1.0 - o) * w * h;
  const double r2 = (b2 + std::sqrt(b2 * b2 - 4.0 * a2 * c2)) / 2.0;

  const double a3 = 4.0 * o;
  const double b3 = -2.0 * o * (h + w);
  const double c3 = (o - 1.0) * w * h;
  const double r3 = (b3 + std::sqrt(b3 * b3 - 4.0 * a3 * c3)) / 2.0;

  return std::min({r1, r2, r3}) / 3.0;
}

GaussianSpec gaussian_for(const Annotation& ann, const Grid& grid, double min_overlap) {
  return {gaussian_radius(ann.bbox.w / grid.stride, ann.bbox.h / grid.stride, min_overlap),
          downsample_center(ann.bbox, grid)};
}

void draw_gaussian(Tensor3& heatmap, int channel, const GaussianSpec& g) {
  const double two_sigma2 = 2.0 * g.sigma * g.sigma;
  const double cutoff = 9.0 * g.sigma * g.sigma;
  const int reach = static_cast<int>(std::floor(3.0 * g.sigma));
  const int y_lo = std::max(0, g.center.y - reach);
  const int y_hi = std::min(heatmap.height() - 1, g.center.y + reach);
  const int x_lo = std::max(0, g.center.x - reach);
  const int x_hi = std::min(heatmap.width() - 1, g.center.x + reach);
  for (int y = y_lo; y <= y_hi; ++y) {
    for (int x = x_lo; x <= x_hi; ++x) {
      const double d2 = double(x - g.center.x) * (x - g.center.x) +
                        double(y - g.center.y) * (y - g.center.y);
      if (d2 > cutoff) continue;
      double& v = heatmap.at(y, x, channel);
      v = std::max(v, std::exp(-d2 / two_sigma2));
    }
  }
}

TargetHeatmap render_target(std::span<const Annotation> annotations, const Grid& grid,
                            int num_categories) {
  TargetHeatmap out{Tensor3(grid.height(), grid.width(), num_categories), grid};
  for (const auto& ann : annotations) {
    if (ann.category < 0 || ann.category >= num_categories) {
      throw Error(ErrorCode::kCategoryOutOfRange,
                  "category " + std::to_string(ann.category) + " not in [0, " +
                      std::to_string(num_categories) + ")");
    }
    draw_gaussian(out.tensor, ann.category, gaussian_for(ann, grid));
  }
  return out;
}

}  // namespace dminer
