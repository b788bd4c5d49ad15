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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "dminer/error.hpp"
#include "dminer/heatmap.hpp"
#include "dminer/pgcl.hpp"
#include "dminer/splg.hpp"
#include "test_util.hpp"

using namespace dminer;
using dminer::testing::random_matrix;
using dminer::testing::random_tensor;
using dminer::testing::unit_rows;

namespace {

Matrix rows(std::initializer_list<std::vector<double>> r) {
  Matrix m(static_cast<int>(r.size()), static_cast<int>(r.begin()->size()));
  int i = 0;
  for (const auto& v : r) std::copy(v.begin(), v.end(), m.row(i++).begin());
  return m;
}

Matrix random_mask(std::mt19937_64& rng, int n, int m) {
  Matrix mask(n, m);
  for (int j = 0; j < m; ++j) {
    const int label = static_cast<int>(rng() % (n + 1)) - 1;
    if (label >= 0) mask.at(label, j) = 1.0;
  }
  return mask;
}

bool grads_match(std::span<const double> a, std::span<const double> n) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double err = std::abs(a[i] - n[i]);
    if (err > 1e-8 && err / std::max(std::abs(a[i]), std::abs(n[i])) > 1e-4) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("pgcl") {

TEST_CASE("select_topm examples") {
  Tensor3 p(3, 3, 3, 0.1);
  p.at(1, 2, 2) = 0.9;
  const auto one = select_topm(p, 1, {});
  CHECK(one.positions == std::vector<GridPos>{{1, 2}});
  CHECK(one.self_labels == std::vector<int>{2});

  const Tensor3 flat(2, 3, 2, 0.5);
  const auto first = select_topm(flat, 4, {});
  CHECK(first.positions == std::vector<GridPos>{{0, 0}, {0, 1}, {0, 2}, {1, 0}});
  CHECK(first.self_labels == std::vector<int>{0, 0, 0, 0});

  const GridPos skip[] = {{0, 1}};
  CHECK(select_topm(flat, 2, skip).positions == std::vector<GridPos>{{0, 0}, {0, 2}});

  try {
    select_topm(flat, 6, skip);
    FAIL("expected NotEnoughCells");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotEnoughCells);
  }
}

TEST_CASE("select_topm equals a full sort") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor3 p = random_tensor(rng, 5, 5, 2);
    struct Cell {
      double score;
      int y, x, label;
    };
    std::vector<Cell> cells;
    for (int y = 0; y < 5; ++y) {
      for (int x = 0; x < 5; ++x) {
        const int label = p.at(y, x, 1) > p.at(y, x, 0) ? 1 : 0;
        cells.push_back({p.at(y, x, label), y, x, label});
      }
    }
    std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
      if (a.score != b.score) return a.score > b.score;
      return std::tie(a.y, a.x) < std::tie(b.y, b.x);
    });
    const auto top = select_topm(p, 4, {});
    for (int j = 0; j < 4; ++j) {
      CHECK(top.positions[j] == GridPos{cells[j].y, cells[j].x});
      CHECK(top.self_labels[j] == cells[j].label);
    }
  }
}

TEST_CASE("build_mask examples") {
  const std::vector<int> cats{4, 7};
  const std::vector<int> labels{4, 7, 4};
  CHECK(build_mask(labels, cats) == rows({{1, 0, 1}, {0, 1, 0}}));
  const std::vector<int> outside{0, 1, 2};
  CHECK(build_mask(outside, cats) == Matrix(2, 3));
  const std::vector<int> single{4};
  const std::vector<int> all_four{4, 4, 4, 4};
  CHECK(build_mask(all_four, single) == Matrix(1, 4, 1.0));
}

TEST_CASE("build_queries examples") {
  const Tensor3 constant(4, 4, 3, 2.0);
  const Annotation anns[] = {{{6, 6, 8, 8}, 0}, {{14, 10, 4, 8}, 1}};
  const auto y = render_target(anns, Grid(16, 16, 4), 2).tensor;
  const std::vector<int> cats{0, 1};
  const auto q = build_queries(constant, y, cats);
  for (int i = 0; i < 2; ++i) {
    for (int d = 0; d < 3; ++d) {
      CHECK(q.queries.at(i, d) == doctest::Approx(1.0 / std::sqrt(3.0)));
      CHECK(q.primary_keys.at(i, d) == doctest::Approx(1.0 / std::sqrt(3.0)));
    }
  }
  CHECK(q.centers == std::vector<GridPos>{{1, 1}, {2, 3}});

  std::mt19937_64 rng(2);
  const Tensor3 f = random_tensor(rng, 4, 4, 3, -1.0, 1.0);
  Tensor3 onehot(4, 4, 1);
  onehot.at(2, 1, 0) = 1.0;
  const std::vector<int> c0{0};
  const auto q1 = build_queries(f, onehot, c0);
  for (int d = 0; d < 3; ++d) CHECK(q1.queries.at(0, d) == doctest::Approx(q1.primary_keys.at(0, d)));
}

TEST_CASE("primary key equals a brute-force Gaussian pooling") {
  std::mt19937_64 rng(3);
  const Tensor3 f = random_tensor(rng, 6, 6, 4, -1.0, 1.0);
  const Annotation a{{10, 10, 16, 16}, 0};
  const auto y = render_target(std::span(&a, 1), Grid(24, 24, 4), 1).tensor;
  std::vector<double> acc(4);
  for (int yy = 0; yy < 6; ++yy)
    for (int xx = 0; xx < 6; ++xx)
      for (int d = 0; d < 4; ++d) acc[d] += y.at(yy, xx, 0) * f.at(yy, xx, d);
  const auto want = l2_normalize(acc);
  const std::vector<int> c0{0};
  const auto q = build_queries(f, y, c0);
  for (int d = 0; d < 4; ++d) CHECK(q.primary_keys.at(0, d) == doctest::Approx(want[d]).epsilon(1e-14));
}

TEST_CASE("pgcl_loss closed forms") {
  const Matrix q = rows({{1.0, 0.0}});
  const Matrix k = rows({{1.0, 0.0}});
  const Matrix k0 = rows({{1.0, 0.0}});
  CHECK(std::abs(pgcl_loss(q, k, k0, rows({{1.0}}), 0.07).loss - 2.0 * std::log(2.0)) <= 1e-12);
  CHECK(std::abs(pgcl_loss(q, k, k0, rows({{0.0}}), 0.07).loss - std::log(2.0)) <= 1e-12);
  // off-axis but still all dots equal
  const Matrix d = rows({{0.6, 0.8}});
  CHECK(std::abs(pgcl_loss(q, d, d, rows({{1.0}}), 0.5).loss - 2.0 * std::log(2.0)) <= 1e-12);
}

TEST_CASE("pgcl_loss gradients on a random N=2, m=5, D=8 instance") {
  std::mt19937_64 rng(4);
  Matrix q = unit_rows(random_matrix(rng, 2, 8));
  Matrix k = unit_rows(random_matrix(rng, 5, 8));
  Matrix k0 = unit_rows(random_matrix(rng, 2, 8));
  const Matrix mask = rows({{1, 0, 1, 0, 0}, {0, 1, 0, 0, 1}});
  const auto g = pgcl_loss(q, k, k0, mask, 0.07);
  auto check = [&](Matrix& target, const Matrix& analytic) {
    const Matrix saved = target;
    const auto numeric = finite_diff_grad(
        [&](std::span<const double> x) {
          std::copy(x.begin(), x.end(), target.data().begin());
          return pgcl_loss(q, k, k0, mask, 0.07).loss;
        },
        saved.data(), 1e-4);
    target = saved;
    CHECK(grads_match(analytic.data(), numeric));
  };
  check(q, g.d_queries);
  check(k, g.d_keys);
  check(k0, g.d_primary_keys);
}

TEST_CASE("pgcl_loss is invariant under key permutation") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 3, m = 2 + trial % 6, d = 3 + trial % 5;
    const Matrix q = unit_rows(random_matrix(rng, n, d));
    const Matrix k = unit_rows(random_matrix(rng, m, d));
    const Matrix k0 = unit_rows(random_matrix(rng, n, d));
    const Matrix mask = random_mask(rng, n, m);
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix kp(m, d), mp(n, m);
    for (int j = 0; j < m; ++j) {
      std::copy(k.row(perm[j]).begin(), k.row(perm[j]).end(), kp.row(j).begin());
      for (int i = 0; i < n; ++i) mp.at(i, j) = mask.at(i, perm[j]);
    }
    CHECK(std::abs(pgcl_loss(q, k, k0, mask, 0.07).loss - pgcl_loss(q, kp, k0, mp, 0.07).loss) <=
          1e-12);
  }
}

TEST_CASE("key gradients are softmax weighted") {
  // N = 1: dL/dk_j = (w p_j - M_j / m) q / tau with w = sum(M) / m + 1 and
  // p_j the softmax weight of key j in Z. The repulsive part grows with the
  // key's similarity; the net attraction on a positive shrinks.
  const double tau = 0.1;
  const Matrix q = rows({{1.0, 0.0}});
  const Matrix k0 = rows({{0.0, 1.0}});
  const Matrix k = rows({{0.9, std::sqrt(1 - 0.81)}, {0.2, std::sqrt(1 - 0.04)},
                         {0.7, std::sqrt(1 - 0.49)}, {-0.3, std::sqrt(1 - 0.09)}});
  const Matrix mask = rows({{1, 1, 0, 0}});
  const auto g = pgcl_loss(q, k, k0, mask, tau);
  double z = std::exp(0.0 / tau);
  for (int j = 0; j < 4; ++j) z += std::exp(k.at(j, 0) / tau);
  const double w = 2.0 / 4.0 + 1.0;
  for (int j = 0; j < 4; ++j) {
    const double p = std::exp(k.at(j, 0) / tau) / z;
    const double along_q = (w * p - mask.at(0, j) / 4.0) / tau;
    CHECK(g.d_keys.at(j, 0) == doctest::Approx(along_q).epsilon(1e-12));
    CHECK(std::abs(g.d_keys.at(j, 1)) <= 1e-15);
  }
  // negatives: more similar means pushed harder
  CHECK(g.d_keys.at(2, 0) > g.d_keys.at(3, 0));
  CHECK(g.d_keys.at(3, 0) > 0.0);
  // positives: the closer key is pulled less
  CHECK(-g.d_keys.at(0, 0) < -g.d_keys.at(1, 0));
}

TEST_CASE("a more similar negative key raises the loss") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix q = unit_rows(random_matrix(rng, 1, 4));
    Matrix k = unit_rows(random_matrix(rng, 3, 4));
    const Matrix k0 = unit_rows(random_matrix(rng, 1, 4));
    const Matrix mask = rows({{1, 1, 0}});  // key 2 is a negative
    const double base = pgcl_loss(q, k, k0, mask, 0.07).loss;
    for (int d = 0; d < 4; ++d) k.at(2, d) += 0.05 * q.at(0, d);
    CHECK(pgcl_loss(q, k, k0, mask, 0.07).loss > base);
  }
}

TEST_CASE("gradient descent on keys decreases the loss monotonically") {
  std::mt19937_64 rng(7);
  const Matrix q = unit_rows(random_matrix(rng, 2, 6));
  Matrix k = unit_rows(random_matrix(rng, 5, 6));
  const Matrix k0 = unit_rows(random_matrix(rng, 2, 6));
  const Matrix mask = rows({{1, 0, 1, 0, 0}, {0, 1, 0, 1, 0}});
  double prev = pgcl_loss(q, k, k0, mask, 0.07).loss;
  for (int step = 0; step < 50; ++step) {
    const auto g = pgcl_loss(q, k, k0, mask, 0.07);
    for (std::size_t i = 0; i < k.data().size(); ++i) k.data()[i] -= 1e-3 * g.d_keys.data()[i];
    const double now = pgcl_loss(q, k, k0, mask, 0.07).loss;
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("pgcl_loss stays finite at low temperature") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix q = unit_rows(random_matrix(rng, 2, 3));
    Matrix k = unit_rows(random_matrix(rng, 4, 3));
    if (trial % 2 == 0) {
      for (int d = 0; d < 3; ++d) k.at(0, d) = -q.at(0, d), k.at(1, d) = q.at(1, d);
    }
    const Matrix k0 = unit_rows(random_matrix(rng, 2, 3));
    const auto g = pgcl_loss(q, k, k0, random_mask(rng, 2, 4), 0.01);
    CHECK(std::isfinite(g.loss));
    for (double v : g.d_keys.data()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("invalid temperature") {
  const Matrix q = rows({{1.0, 0.0}});
  for (double tau : {0.0, -0.5}) {
    try {
      pgcl_loss(q, q, q, rows({{1.0}}), tau);
      FAIL("expected InvalidTemperature");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInvalidTemperature);
    }
  }
}

TEST_CASE("structured overload agrees with the raw form") {
  std::mt19937_64 rng(9);
  const Tensor3 f = random_tensor(rng, 6, 6, 5, -1.0, 1.0);
  const Annotation anns[] = {{{5, 5, 8, 8}, 0}, {{17, 13, 8, 8}, 2}};
  const auto y = render_target(anns, Grid(24, 24, 4), 3).tensor;
  const std::vector<int> cats{0, 2};
  const auto q = build_queries(f, y, cats);
  const Tensor3 pred = random_tensor(rng, 6, 6, 3);
  const auto top = select_topm(pred, 6, labeled_centers(y));
  const auto pos = build_positive_set(f, top, cats);
  PgclConfig cfg;
  cfg.m = 6;
  const auto a = pgcl_loss(q, pos, cfg);
  const auto b = pgcl_loss(q.queries, pos.keys, q.primary_keys, pos.mask, cfg.tau);
  CHECK(a.loss == b.loss);
  CHECK(pos.mask == build_mask(top.self_labels, cats));
  for (int j = 0; j < 6; ++j) {
    const auto u = l2_normalize(f.cell(top.positions[j].y, top.positions[j].x));
    for (int d = 0; d < 5; ++d) CHECK(pos.keys.at(j, d) == doctest::Approx(u[d]));
  }
}

}  // TEST_SUITE
