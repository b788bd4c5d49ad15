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

#include <cmath>

#include "dminer/error.hpp"
#include "dminer/harness.hpp"
#include "dminer/heatmap.hpp"

namespace dminer {

namespace {

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

RegressionLoss regression_losses(const Tensor3& pred_off, const Tensor3& pred_size,
                                 std::span<const Annotation> labeled, const Grid& grid) {
  if (pred_off.channels() != 2 || pred_size.channels() != 2 || !pred_off.same_shape(pred_size) ||
      pred_off.height() != grid.height() || pred_off.width() != grid.width()) {
    throw Error(ErrorCode::kInvalidArgument, "regression maps must be H x W x 2 on the grid");
  }
  RegressionLoss out{0.0, 0.0, Tensor3(pred_off.height(), pred_off.width(), 2),
                     Tensor3(pred_size.height(), pred_size.width(), 2)};
  if (labeled.empty()) return out;
  const double norm = 2.0 * static_cast<double>(labeled.size());
  const double s = grid.stride;
  for (const auto& a : labeled) {
    const GridPos p = downsample_center(a.bbox, grid);
    const double off_tgt[2] = {a.bbox.cx / s - p.x, a.bbox.cy / s - p.y};
    const double size_tgt[2] = {a.bbox.w / s, a.bbox.h / s};
    for (int k = 0; k < 2; ++k) {
      const double e_off = pred_off.at(p.y, p.x, k) - off_tgt[k];
      const double e_size = pred_size.at(p.y, p.x, k) - size_tgt[k];
      out.l_off += std::abs(e_off) / norm;
      out.l_size += std::abs(e_size) / norm;
      out.d_off.at(p.y, p.x, k) += sign(e_off) / norm;
      out.d_size.at(p.y, p.x, k) += sign(e_size) / norm;
    }
  }
  return out;
}

TotalLoss total_loss(const LossState& state, const LossWeights& weights,
                     const SplgConfig& splg, double tau) {
  TotalLoss out;
  auto focal = splg_loss(state.prediction, state.target, splg);
  auto contrast = pgcl_loss(state.queries, state.keys, state.primary_keys, state.mask, tau);
  auto reg = regression_losses(state.pred_off, state.pred_size, state.labeled, state.grid);

  out.splg = focal.loss;
  out.pgcl = contrast.loss;
  out.off = reg.l_off;
  out.size = reg.l_size;
  out.total = out.splg + weights.pgcl * out.pgcl + weights.off * out.off + weights.size * out.size;

  out.d_prediction = std::move(focal.grad);
  auto scale = [](auto span, double w) {
    for (double& v : span) v *= w;
  };
  out.d_queries = std::move(contrast.d_queries);
  out.d_keys = std::move(contrast.d_keys);
  out.d_primary_keys = std::move(contrast.d_primary_keys);
  scale(out.d_queries.data(), weights.pgcl);
  scale(out.d_keys.data(), weights.pgcl);
  scale(out.d_primary_keys.data(), weights.pgcl);
  out.d_off = std::move(reg.d_off);
  out.d_size = std::move(reg.d_size);
  scale(out.d_off.data(), weights.off);
  scale(out.d_size.data(), weights.size);
  return out;
}

}  // namespace dminer
