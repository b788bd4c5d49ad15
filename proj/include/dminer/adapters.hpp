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

#include <vector>

#include "dminer/core.hpp"

namespace dminer {

// Anchor sizes (input pixels) paired index-wise with odd pooling kernels
// (grid cells) used to spread pixel-level pseudo labels to anchors.
struct AnchorSpec {
  std::vector<int> anchor_sizes{32, 64, 128, 256, 512};
  std::vector<int> kernel_sizes{1, 3, 5, 7, 9};

  void validate() const;
};

// Per-level top-m counts for multi-scale heads; only the listed levels are
// active.
struct FpnLevelConfig {
  std::vector<int> m_per_level;

  int active_levels() const noexcept { return static_cast<int>(m_per_level.size()); }
  // Throws InvalidLevelConfig for empty, non-positive or increasing m.
  void validate() const;
};

FpnLevelConfig default_fpn_config();

// k x k mean centered per cell; border windows average only in-grid cells.
Tensor3 average_pool(const Tensor3& map, int kernel);

// One pooled map per anchor size, in spec order.
std::vector<Tensor3> anchor_pseudo_pool(const Tensor3& pseudo, const AnchorSpec& spec = {});

}  // namespace dminer
