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

#include "dminer/pgcl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "dminer/error.hpp"
#include "dminer/splg.hpp"

namespace dminer {

void PgclConfig::validate() const {
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "m must be >= 1");
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidTemperature, "tau must be positive");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
}

TopM select_topm(const Tensor3& prediction, int m, std::span<const GridPos> exclude) {
  struct Candidate {
    double score;
    int y, x, label;
  };
  const std::set<GridPos> skip(exclude.begin(), exclude.end());
  std::vector<Candidate> pool;
  pool.reserve(static_cast<std::size_t>(prediction.height()) * prediction.width());
  for (int y = 0; y < prediction.height(); ++y) {
    for (int x = 0; x < prediction.width(); ++x) {
      if (skip.contains({y, x})) continue;
      const auto v = prediction.cell(y, x);
      if (v.empty()) continue;
      const auto best = std::max_element(v.begin(), v.end());
      pool.push_back({*best, y, x, static_cast<int>(best - v.begin())});
    }
  }
  if (m < 1 || static_cast<std::size_t>(m) > pool.size()) {
    throw Error(ErrorCode::kNotEnoughCells, "requested m=" + std::to_string(m) + " but only " +
                                                std::to_string(pool.size()) +
                                                " unlabeled cells available");
  }
  std::partial_sort(pool.begin(), pool.begin() + m, pool.end(),
                    [](const Candidate& a, const Candidate& b) {
                      if (a.score != b.score) return a.score > b.score;
                      if (a.y != b.y) return a.y < b.y;
                      return a.x < b.x;
                    });
  TopM out;
  for (int j = 0; j < m; ++j) {
    out.positions.push_back({pool[j].y, pool[j].x});
    out.self_labels.push_back(pool[j].label);
  }
  return out;
}

Matrix build_mask(std::span<const int> self_labels, std::span<const int> categories) {
  Matrix mask(static_cast<int>(categories.size()), static_cast<int>(self_labels.size()));
  for (std::size_t i = 0; i < categories.size(); ++i) {
    for (std::size_t j = 0; j < self_labels.size(); ++j) {
      if (self_labels[j] == categories[i]) mask.at(static_cast<int>(i), static_cast<int>(j)) = 1.0;
    }
  }
  return mask;
}

PositiveSet build_positive_set(const Tensor3& features, const TopM& top,
                               std::span<const int> categories) {
  PositiveSet p;
  p.positions = top.positions;
  p.keys = Matrix(static_cast<int>(top.positions.size()), features.channels());
  for (std::size_t j = 0; j < top.positions.size(); ++j) {
    const auto unit = l2_normalize(features.cell(top.positions[j].y, top.positions[j].x));
    std::copy(unit.begin(), unit.end(), p.keys.row(static_cast<int>(j)).begin());
  }
  p.mask = build_mask(top.self_labels, categories);
  return p;
}

GridPos category_center(const Tensor3& target, int category) {
  for (int y = 0; y < target.height(); ++y) {
    for (int x = 0; x < target.width(); ++x) {
      if (target.at(y, x, category) == 1.0) return {y, x};
    }
  }
  throw Error(ErrorCode::kEmptyReference,
              "category " + std::to_string(category) + " has no labeled center");
}

QuerySet build_queries(const Tensor3& features, const Tensor3& target,
                       std::span<const int> categories) {
  QuerySet q;
  q.categories.assign(categories.begin(), categories.end());
  q.queries = Matrix(static_cast<int>(categories.size()), features.channels());
  for (std::size_t i = 0; i < categories.size(); ++i) {
    const GridPos c = category_center(target, categories[i]);
    q.centers.push_back(c);
    const auto unit = l2_normalize(features.cell(c.y, c.x));
    std::copy(unit.begin(), unit.end(), q.queries.row(static_cast<int>(i)).begin());
  }
  q.primary_keys = extract_reference_features(features, target, categories).g;
  return q;
}

PgclLossGrad pgcl_loss(const Matrix& queries, const Matrix& keys, const Matrix& primary_keys,
                       const Matrix& mask, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidTemperature, "tau must be positive");
  const int n = queries.rows();
  const int m = keys.rows();
  if (n < 1 || m < 1) throw Error(ErrorCode::kInvalidArgument, "need N >= 1 and m >= 1");
  if (primary_keys.rows() != n || mask.rows() != n || mask.cols() != m ||
      keys.cols() != queries.cols() || primary_keys.cols() != queries.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "pgcl input shapes disagree");
  }

  PgclLossGrad out{0.0, Matrix(n, queries.cols()), Matrix(m, keys.cols()),
                   Matrix(n, primary_keys.cols())};
  std::vector<double> logits_k(static_cast<std::size_t>(m));
  std::vector<double> logits_0(static_cast<std::size_t>(n));
  const double inv_m = 1.0 / m;
  const double inv_n = 1.0 / n;

  for (int i = 0; i < n; ++i) {
    const auto q = queries.row(i);
    double hi = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) hi = std::max(hi, logits_k[j] = dot(q, keys.row(j)) / tau);
    for (int z = 0; z < n; ++z) hi = std::max(hi, logits_0[z] = dot(q, primary_keys.row(z)) / tau);
    double zsum = 0.0;
    for (double l : logits_k) zsum += std::exp(l - hi);
    for (double l : logits_0) zsum += std::exp(l - hi);
    const double log_z = hi + std::log(zsum);

    double mask_sum = 0.0;
    for (int j = 0; j < m; ++j) {
      const double mij = mask.at(i, j);
      mask_sum += mij;
      if (mij != 0.0) out.loss -= inv_m * mij * (logits_k[j] - log_z);
    }
    out.loss -= inv_n * (logits_0[i] - log_z);

    // dL/dlogZ_i, then dL/dlogit = -direct + w * softmax.
    const double w = inv_m * mask_sum + inv_n;
    auto dq = out.d_queries.row(i);
    for (int j = 0; j < m; ++j) {
      const double g = (-inv_m * mask.at(i, j) + w * std::exp(logits_k[j] - log_z)) / tau;
      const auto k = keys.row(j);
      auto dk = out.d_keys.row(j);
      for (std::size_t d = 0; d < q.size(); ++d) {
        dq[d] += g * k[d];
        dk[d] += g * q[d];
      }
    }
    for (int z = 0; z < n; ++z) {
      const double g = ((z == i ? -inv_n : 0.0) + w * std::exp(logits_0[z] - log_z)) / tau;
      const auto k0 = primary_keys.row(z);
      auto dk0 = out.d_primary_keys.row(z);
      for (std::size_t d = 0; d < q.size(); ++d) {
        dq[d] += g * k0[d];
        dk0[d] += g * q[d];
      }
    }
  }
  return out;
}

PgclLossGrad pgcl_loss(const QuerySet& q, const PositiveSet& p, const PgclConfig& cfg) {
  if (!(cfg.tau > 0.0)) throw Error(ErrorCode::kInvalidTemperature, "tau must be positive");
  return pgcl_loss(q.queries, p.keys, q.primary_keys, p.mask, cfg.tau);
}

}  // namespace dminer
