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
#include <random>

#include "doctest.h"
#include "dminer/core.hpp"
#include "dminer/error.hpp"
#include "test_util.hpp"

using namespace dminer;

TEST_SUITE("core") {

TEST_CASE("l2_normalize examples") {
  const std::vector<double> v{3.0, 4.0};
  const auto u = l2_normalize(v);
  CHECK(u[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(u[1] == doctest::Approx(0.8).epsilon(1e-15));

  const std::vector<double> e1{1.0, 0.0, 0.0};
  CHECK(l2_normalize(e1) == e1);

  const std::vector<double> zero{0.0, 0.0};
  try {
    l2_normalize(zero);
    FAIL("expected ZeroVector");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kZeroVector);
    CHECK(std::string(e.what()).starts_with("ZeroVector"));
  }
}

TEST_CASE("l2_normalize is idempotent") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> v(1 + i % 9);
    for (double& x : v) x = n(rng) * 10.0;
    const auto once = l2_normalize(v);
    const auto twice = l2_normalize(once);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(std::abs(once[k] - twice[k]) <= 1e-12);
  }
}

TEST_CASE("l2_normalize_backward against finite differences") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> v(5), w(5);
    for (double& x : v) x = n(rng);
    for (double& x : w) x = n(rng);
    const auto analytic = l2_normalize_backward(v, w);
    const auto numeric = finite_diff_grad(
        [&](std::span<const double> x) { return dot(l2_normalize(x), w); }, v, 1e-5);
    for (int k = 0; k < 5; ++k) CHECK(analytic[k] == doctest::Approx(numeric[k]).epsilon(1e-7));
  }
}

TEST_CASE("iou examples") {
  const BBox a{1.0, 1.0, 2.0, 2.0};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, BBox{10.0, 10.0, 2.0, 2.0}) == 0.0);
  // intersection 2, union 6
  CHECK(iou(a, BBox{2.0, 1.0, 2.0, 2.0}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  // touching edges
  CHECK(iou(a, BBox{3.0, 1.0, 2.0, 2.0}) == 0.0);
}

TEST_CASE("iou is symmetric and bounded") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> c(0.0, 20.0), s(0.1, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const BBox a{c(rng), c(rng), s(rng), s(rng)};
    const BBox b{c(rng), c(rng), s(rng), s(rng)};
    CHECK(iou(a, b) == iou(b, a));
    CHECK(iou(a, b) >= 0.0);
    CHECK(iou(a, b) <= 1.0);
  }
}

TEST_CASE("finite_diff_grad examples") {
  const std::vector<double> x{1.0, 2.0};
  auto sq = [](std::span<const double> v) { return v[0] * v[0] + v[1] * v[1]; };
  const auto g = finite_diff_grad(sq, x, 1e-4);
  CHECK(std::abs(g[0] - 2.0) <= 1e-6);
  CHECK(std::abs(g[1] - 4.0) <= 1e-6);

  const auto z = finite_diff_grad([](std::span<const double>) { return 3.0; }, x, 1e-4);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);
}

TEST_CASE("finite_diff_grad error is O(h^2) on a cubic") {
  // f = x^3, f' = 3x^2, central difference error = h^2 exactly.
  const std::vector<double> x{1.7};
  auto cube = [](std::span<const double> v) { return v[0] * v[0] * v[0]; };
  for (double h : {1e-1, 1e-2, 1e-3}) {
    const double err = finite_diff_grad(cube, x, h)[0] - 3.0 * 1.7 * 1.7;
    CHECK(err == doctest::Approx(h * h).epsilon(1e-5));
  }
}

TEST_CASE("finite_diff_grad restores the input and rejects non-finite values") {
  Tensor3 t(2, 2, 1, 0.5);
  const Tensor3 before = t;
  auto g = finite_diff_grad([](const Tensor3& x) { return x.at(1, 1, 0) * 2.0; }, t, 1e-4);
  CHECK(t == before);
  CHECK(g.at(1, 1, 0) == doctest::Approx(2.0));
  CHECK(g.at(0, 0, 0) == 0.0);

  CHECK_THROWS_AS(finite_diff_grad([](const Tensor3&) { return std::nan(""); }, t, 1e-4),
                  Error);
}

TEST_CASE("Grid validates stride") {
  CHECK(Grid(32, 16, 4).height() == 8);
  CHECK(Grid(32, 16, 4).width() == 4);
  CHECK_THROWS_AS(Grid(32, 32, 3), Error);
  CHECK_THROWS_AS(Grid(0, 32, 4), Error);
}

TEST_CASE("Tensor3 layout is y, x, channel") {
  Tensor3 t(2, 3, 4);
  t.at(1, 2, 3) = 7.0;
  CHECK(t.data()[((1 * 3) + 2) * 4 + 3] == 7.0);
  CHECK(t.cell(1, 2)[3] == 7.0);
  CHECK_THROWS_AS(Tensor3(2, 2, 2, std::vector<double>(7)), Error);
}

}  // TEST_SUITE
