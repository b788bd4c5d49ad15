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

// Pixel-level group contrastive loss: each labeled category's center feature
// (the query) is contrasted against its Gaussian-pooled reference (primary
// key) and a group of self-labeled top-m pixels (keys).

struct PgclConfig {
  int m = 128;
  double tau = 0.07;
  double lambda = 0.1;

  void validate() const;
};

struct TopM {
  std::vector<GridPos> positions;
  std::vector<int> self_labels;
};

// m highest cells by max-over-channel score, skipping `exclude`. Ties break
// on (y, x) ascending; the label is the lowest channel attaining the max.
// Throws NotEnoughCells if fewer than m cells remain.
TopM select_topm(const Tensor3& prediction, int m, std::span<const GridPos> exclude);

// N x m; M[i][j] = 1 iff self_labels[j] == categories[i].
Matrix build_mask(std::span<const int> self_labels, std::span<const int> categories);

struct PositiveSet {
  std::vector<GridPos> positions;
  Matrix keys;  // m x D, unit rows
  Matrix mask;  // N x m
};

PositiveSet build_positive_set(const Tensor3& features, const TopM& top,
                               std::span<const int> categories);

struct QuerySet {
  std::vector<int> categories;
  std::vector<GridPos> centers;
  Matrix queries;       // N x D, unit center features
  Matrix primary_keys;  // N x D, unit Gaussian-pooled features
};

// First exact-1.0 cell of the category's channel; throws EmptyReference if
// the channel has no peak.
GridPos category_center(const Tensor3& target, int category);

QuerySet build_queries(const Tensor3& features, const Tensor3& target,
                       std::span<const int> categories);

struct PgclLossGrad {
  double loss = 0.0;
  Matrix d_queries;
  Matrix d_keys;
  Matrix d_primary_keys;
};

// Raw-matrix form; rows need not be unit length (gradients are w.r.t. the
// rows as given). Throws InvalidTemperature for tau <= 0.
PgclLossGrad pgcl_loss(const Matrix& queries, const Matrix& keys, const Matrix& primary_keys,
                       const Matrix& mask, double tau);

PgclLossGrad pgcl_loss(const QuerySet& q, const PositiveSet& p, const PgclConfig& cfg);

}  // namespace dminer
