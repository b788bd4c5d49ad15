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

#include "dminer/splg.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "dminer/error.hpp"

namespace dminer {

void SplgConfig::validate() const {
  if (!(eta > 0.0 && eta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "eta must lie in (0, 1]");
  if (!(t_sim > 0.0 && t_sim < 1.0)) throw Error(ErrorCode::kInvalidArgument, "t_sim must lie in (0, 1)");
  if (!(gamma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "gamma must be positive");
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be positive");
}

std::vector<double> pooled_feature(const Tensor3& features, const Tensor3& target,
                                   int category) {
  std::vector<double> sum(static_cast<std::size_t>(features.channels()), 0.0);
  for (int y = 0; y < target.height(); ++y) {
    for (int x = 0; x < target.width(); ++x) {
      const double w = target.at(y, x, category);
      if (w == 0.0) continue;
      const auto f = features.cell(y, x);
      for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += w * f[d];
    }
  }
  return sum;
}

ReferenceBank extract_reference_features(const Tensor3& features, const Tensor3& target,
                                         std::span<const int> categories) {
  if (features.height() != target.height() || features.width() != target.width()) {
    throw Error(ErrorCode::kInvalidArgument, "feature and target grids differ");
  }
  if (categories.empty()) throw Error(ErrorCode::kInvalidArgument, "no reference categories");
  ReferenceBank bank;
  bank.categories.assign(categories.begin(), categories.end());
  bank.g = Matrix(static_cast<int>(categories.size()), features.channels());
  for (std::size_t i = 0; i < categories.size(); ++i) {
    const int c = categories[i];
    if (c < 0 || c >= target.channels()) {
      throw Error(ErrorCode::kCategoryOutOfRange, "reference category " + std::to_string(c));
    }
    bool any = false;
    for (int y = 0; y < target.height() && !any; ++y) {
      for (int x = 0; x < target.width() && !any; ++x) any = target.at(y, x, c) != 0.0;
    }
    if (!any) {
      throw Error(ErrorCode::kEmptyReference,
                  "target channel " + std::to_string(c) + " is all zero");
    }
    const auto unit = l2_normalize(pooled_feature(features, target, c));
    std::copy(unit.begin(), unit.end(), bank.g.row(static_cast<int>(i)).begin());
  }
  return bank;
}

std::vector<GridPos> labeled_centers(const Tensor3& target) {
  std::vector<GridPos> out;
  for (int y = 0; y < target.height(); ++y) {
    for (int x = 0; x < target.width(); ++x) {
      const auto v = target.cell(y, x);
      if (std::find(v.begin(), v.end(), 1.0) != v.end()) out.push_back({y, x});
    }
  }
  return out;
}

UnlabeledSet collect_unlabeled(const Tensor3& features, std::span<const GridPos> labeled) {
  const std::set<GridPos> skip(labeled.begin(), labeled.end());
  UnlabeledSet u;
  u.height = features.height();
  u.width = features.width();
  for (int y = 0; y < features.height(); ++y) {
    for (int x = 0; x < features.width(); ++x) {
      if (!skip.contains({y, x})) u.positions.push_back({y, x});
    }
  }
  u.q = Matrix(static_cast<int>(u.positions.size()), features.channels());
  for (std::size_t k = 0; k < u.positions.size(); ++k) {
    const auto [y, x] = u.positions[k];
    if (l2_norm(features.cell(y, x)) == 0.0) {
      throw Error(ErrorCode::kZeroVector, "zero feature at cell (" + std::to_string(y) +
                                              ", " + std::to_string(x) + ")");
    }
    const auto unit = l2_normalize(features.cell(y, x));
    std::copy(unit.begin(), unit.end(), u.q.row(static_cast<int>(k)).begin());
  }
  return u;
}

UnlabeledSet collect_unlabeled(const Tensor3& features, const Tensor3& target) {
  if (features.height() != target.height() || features.width() != target.width()) {
    throw Error(ErrorCode::kInvalidArgument, "feature and target grids differ");
  }
  return collect_unlabeled(features, labeled_centers(target));
}

Matrix similarity(const UnlabeledSet& u, const ReferenceBank& r) {
  if (u.q.rows() > 0 && u.q.cols() != r.g.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "feature dimensions differ");
  }
  Matrix s(u.q.rows(), r.g.rows());
  for (int k = 0; k < u.q.rows(); ++k) {
    for (int n = 0; n < r.g.rows(); ++n) {
      s.at(k, n) = std::clamp(dot(u.q.row(k), r.g.row(n)), 0.0, 1.0);
    }
  }
  return s;
}

Tensor3 build_pseudo_heatmap(const Matrix& s, const UnlabeledSet& u, const ReferenceBank& r,
                             const SplgConfig& cfg, int num_categories) {
  if (s.rows() != static_cast<int>(u.positions.size()) ||
      s.cols() != static_cast<int>(r.categories.size())) {
    throw Error(ErrorCode::kInvalidArgument, "similarity matrix shape mismatch");
  }
  Tensor3 pseudo(u.height, u.width, num_categories);
  for (int k = 0; k < s.rows(); ++k) {
    const auto row = s.row(k);
    if (row.empty()) continue;
    const auto best = std::max_element(row.begin(), row.end());
    const double v = *best;
    if (v > cfg.t_sim) {
      const int c = r.categories[static_cast<std::size_t>(best - row.begin())];
      pseudo.at(u.positions[k].y, u.positions[k].x, c) = v * cfg.eta;
    }
  }
  return pseudo;
}

Tensor3 merge_targets(const Tensor3& target, const Tensor3& pseudo) {
  if (!target.same_shape(pseudo)) throw Error(ErrorCode::kInvalidArgument, "shape mismatch");
  Tensor3 out = target;
  auto o = out.data();
  const auto p = pseudo.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::clamp(o[i] + p[i], 0.0, 1.0);
  return out;
}

LossGrad splg_loss(const Tensor3& prediction, const Tensor3& target, const SplgConfig& cfg) {
  if (!prediction.same_shape(target)) throw Error(ErrorCode::kInvalidArgument, "shape mismatch");
  constexpr double eps = kPredictionEpsilon;
  const auto pred = prediction.data();
  const auto tgt = target.data();

  std::size_t num_pos = 0;
  for (double t : tgt) num_pos += (t == 1.0);
  const double norm = static_cast<double>(std::max<std::size_t>(num_pos, 1));

  LossGrad out{0.0, Tensor3(prediction.height(), prediction.width(), prediction.channels())};
  auto grad = out.grad.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool clamped = pred[i] < eps || pred[i] > 1.0 - eps;
    const double p = std::clamp(pred[i], eps, 1.0 - eps);
    double term = 0.0;
    double dterm = 0.0;
    if (tgt[i] == 1.0) {
      const double one_m = 1.0 - p;
      term = std::pow(one_m, cfg.gamma) * std::log(p);
      dterm = -cfg.gamma * std::pow(one_m, cfg.gamma - 1.0) * std::log(p) +
              std::pow(one_m, cfg.gamma) / p;
    } else {
      const double weight = std::pow(1.0 - tgt[i], cfg.alpha);
      if (weight == 0.0) continue;
      const double log_neg = std::log(1.0 - p);
      term = weight * std::pow(p, cfg.gamma) * log_neg;
      dterm = weight * (cfg.gamma * std::pow(p, cfg.gamma - 1.0) * log_neg -
                        std::pow(p, cfg.gamma) / (1.0 - p));
    }
    sum += term;
    grad[i] = clamped ? 0.0 : -dterm / norm;
  }
  out.loss = -sum / norm;
  return out;
}

}  // namespace dminer
