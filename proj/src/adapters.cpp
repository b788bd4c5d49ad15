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

#include "dminer/adapters.hpp"

#include <algorithm>
#include <string>

#include "dminer/error.hpp"

namespace dminer {

void AnchorSpec::validate() const {
  if (anchor_sizes.size() != kernel_sizes.size() || kernel_sizes.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "anchor and kernel lists must pair up");
  }
  for (std::size_t i = 0; i < kernel_sizes.size(); ++i) {
    if (kernel_sizes[i] < 1 || kernel_sizes[i] % 2 == 0) {
      throw Error(ErrorCode::kInvalidArgument, "kernel sizes must be odd and positive");
    }
    if (i > 0 && kernel_sizes[i] <= kernel_sizes[i - 1]) {
      throw Error(ErrorCode::kInvalidArgument, "kernel sizes must ascend");
    }
  }
}

void FpnLevelConfig::validate() const {
  if (m_per_level.empty()) throw Error(ErrorCode::kInvalidLevelConfig, "no active levels");
  for (std::size_t i = 0; i < m_per_level.size(); ++i) {
    if (m_per_level[i] <= 0) {
      throw Error(ErrorCode::kInvalidLevelConfig,
                  "level " + std::to_string(i) + " has non-positive m");
    }
    if (i > 0 && m_per_level[i] > m_per_level[i - 1]) {
      throw Error(ErrorCode::kInvalidLevelConfig, "m must be non-increasing with level");
    }
  }
}

FpnLevelConfig default_fpn_config() { return FpnLevelConfig{{96, 64, 32}}; }

Tensor3 average_pool(const Tensor3& map, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "kernel must be odd and positive");
  }
  if (kernel == 1) return map;
  const int r = kernel / 2;
  Tensor3 out(map.height(), map.width(), map.channels());
  for (int y = 0; y < map.height(); ++y) {
    const int y0 = std::max(0, y - r), y1 = std::min(map.height() - 1, y + r);
    for (int x = 0; x < map.width(); ++x) {
      const int x0 = std::max(0, x - r), x1 = std::min(map.width() - 1, x + r);
      const double count = double(y1 - y0 + 1) * (x1 - x0 + 1);
      auto dst = out.cell(y, x);
      for (int yy = y0; yy <= y1; ++yy) {
        for (int xx = x0; xx <= x1; ++xx) {
          const auto src = map.cell(yy, xx);
          for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
        }
      }
      for (double& v : dst) v /= count;
    }
  }
  return out;
}

std::vector<Tensor3> anchor_pseudo_pool(const Tensor3& pseudo, const AnchorSpec& spec) {
  spec.validate();
  std::vector<Tensor3> out;
  out.reserve(spec.kernel_sizes.size());
  for (int k : spec.kernel_sizes) out.push_back(average_pool(pseudo, k));
  return out;
}

}  // namespace dminer
