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

#include <span>

#include "dminer/core.hpp"

namespace dminer {

inline constexpr double kDefaultMinOverlap = 0.7;

// Per-category Gaussian target grid; channels == number of categories.
struct TargetHeatmap {
  Tensor3 tensor;
  Grid grid;
};

struct GaussianSpec {
  double sigma = 0.0;
  GridPos center;
};

// floor(cp / s) on both axes. Throws CenterOutOfGrid if the result falls
// outside [0, grid.height()) x [0, grid.width()).
GridPos downsample_center(const BBox& bbox, const Grid& grid);

// CornerNet/CenterNet three-case radius (min over the three quadratic
// cases), divided by 3. Sizes are in grid cells.
double gaussian_radius(double w_cells, double h_cells,
                       double min_overlap = kDefaultMinOverlap);

GaussianSpec gaussian_for(const Annotation& ann, const Grid& grid,
                          double min_overlap = kDefaultMinOverlap);

// Splats exp(-d^2 / 2 sigma^2) into one channel with per-pixel max. Support
// is truncated at 3 sigma.
void draw_gaussian(Tensor3& heatmap, int channel, const GaussianSpec& g);

TargetHeatmap render_target(std::span<const Annotation> annotations, const Grid& grid,
                            int num_categories);

}  // namespace dminer
