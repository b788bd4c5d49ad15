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
#include <vector>

#include "dminer/core.hpp"

namespace dminer {

// Pseudo-label generation from feature similarity to the labeled reference
// instances of an image, plus the penalty-reduced focal loss on the merged
// targets.

struct SplgConfig {
  double eta = 1.0;    // scale applied to accepted similarities
  double t_sim = 0.6;  // acceptance threshold (strict)
  double gamma = 2.0;  // focal exponent
  double alpha = 4.0;  // penalty-reduction exponent

  void validate() const;
};

inline constexpr double kPredictionEpsilon = 1e-7;

// Row i is the unit reference feature of categories[i].
struct ReferenceBank {
  std::vector<int> categories;
  Matrix g;
};

struct UnlabeledSet {
  int height = 0;
  int width = 0;
  std::vector<GridPos> positions;
  Matrix q;  // row k: unit feature at positions[k]
};

// Un-normalized sum_{y,x} Y[y,x,c] * F[y,x,:].
std::vector<double> pooled_feature(const Tensor3& features, const Tensor3& target,
                                   int category);

// Throws EmptyReference when a listed category's channel is all zero, and
// ZeroVector when the pooled feature vanishes.
ReferenceBank extract_reference_features(const Tensor3& features, const Tensor3& target,
                                         std::span<const int> categories);

// Cells holding an exact 1.0 peak in any channel, in (y, x) order.
std::vector<GridPos> labeled_centers(const Tensor3& target);

UnlabeledSet collect_unlabeled(const Tensor3& features, std::span<const GridPos> labeled);
UnlabeledSet collect_unlabeled(const Tensor3& features, const Tensor3& target);

// K x N cosine similarities clamped to [0, 1].
Matrix similarity(const UnlabeledSet& u, const ReferenceBank& r);

Tensor3 build_pseudo_heatmap(const Matrix& s, const UnlabeledSet& u, const ReferenceBank& r,
                             const SplgConfig& cfg, int num_categories);

// clamp(Y + pseudo, 0, 1).
Tensor3 merge_targets(const Tensor3& target, const Tensor3& pseudo);

struct LossGrad {
  double loss = 0.0;
  Tensor3 grad;
};

// Penalty-reduced focal loss normalized by the number of exact-1.0 target
// cells (at least 1). grad is dL/dprediction; zero where the prediction sits
// outside [eps, 1 - eps] and is clamped.
LossGrad splg_loss(const Tensor3& prediction, const Tensor3& target, const SplgConfig& cfg);

}  // namespace dminer
