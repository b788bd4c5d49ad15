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
#include <random>

#include "doctest.h"
#include "dminer/error.hpp"
#include "dminer/heatmap.hpp"

using namespace dminer;

namespace {

// Larger root of z^2 - b z + a c = 0 by bisection; kept apart from the
// closed form on purpose.
double larger_root(double a, double b, double c) {
  auto p = [&](double z) { return z * z - b * z + a * c; };
  double lo = b / 2.0;
  double hi = b / 2.0 + std::sqrt(b * b / 4.0 + std::abs(a * c)) + 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (p(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

double sigma_oracle(double w, double h, double o) {
  const double r1 = larger_root(1.0, h + w, w * h * (1 - o) / (1 + o));
  const double r2 = larger_root(4.0, 2 * (h + w), (1 - o) * w * h);
  const double r3 = larger_root(4 * o, -2 * o * (h + w), (o - 1) * w * h);
  return std::min({r1, r2, r3}) / 3.0;
}

}  // namespace

TEST_SUITE("heatmap") {

TEST_CASE("downsample_center examples") {
  const Grid g(128, 128, 4);
  CHECK(downsample_center({100, 60, 4, 4}, g) == GridPos{15, 25});
  CHECK(downsample_center({0, 0, 4, 4}, g) == GridPos{0, 0});
  CHECK(downsample_center({7, 7, 4, 4}, g) == GridPos{1, 1});
  CHECK_THROWS_AS(downsample_center({128, 10, 4, 4}, g), Error);
  CHECK_THROWS_AS(downsample_center({-0.5, 10, 4, 4}, g), Error);
}

TEST_CASE("gaussian_radius for a 10x10 box") {
  const double s = gaussian_radius(10.0, 10.0, 0.7);
  CHECK(s == doctest::Approx(sigma_oracle(10.0, 10.0, 0.7)).epsilon(1e-12));
  CHECK(s == doctest::Approx(0.911067).epsilon(1e-6));
}

TEST_CASE("gaussian_radius matches the root oracle on random sizes") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.2, 60.0), o(0.3, 0.95);
  for (int i = 0; i < 500; ++i) {
    const double w = u(rng), h = u(rng), ov = o(rng);
    CHECK(gaussian_radius(w, h, ov) == doctest::Approx(sigma_oracle(w, h, ov)).epsilon(1e-10));
  }
}

TEST_CASE("gaussian_radius symmetry and monotonicity") {
  CHECK(gaussian_radius(3.0, 7.0) == gaussian_radius(7.0, 3.0));
  for (double side = 0.5; side < 50.0; side *= 1.7) {
    CHECK(gaussian_radius(2 * side, 2 * side) >= gaussian_radius(side, side));
  }
  CHECK_THROWS_AS(gaussian_radius(0.0, 1.0), Error);
  CHECK_THROWS_AS(gaussian_radius(1.0, -2.0), Error);
}

TEST_CASE("single instance renders the unnormalized Gaussian") {
  const Grid g(64, 64, 4);
  const Annotation a{{30, 42, 40, 40}, 1};
  const auto t = render_target(std::span(&a, 1), g, 3).tensor;
  const double sigma = gaussian_radius(10, 10);
  CHECK(t.at(10, 7, 1) == 1.0);
  for (int dy = -3; dy <= 3; ++dy) {
    for (int dx = -3; dx <= 3; ++dx) {
      const double d2 = dx * dx + dy * dy;
      const double want = d2 > 9 * sigma * sigma ? 0.0 : std::exp(-d2 / (2 * sigma * sigma));
      CHECK(t.at(10 + dy, 7 + dx, 1) == doctest::Approx(want).epsilon(1e-14));
    }
  }
  for (int y = 0; y < t.height(); ++y) {
    for (int x = 0; x < t.width(); ++x) {
      CHECK(t.at(y, x, 0) == 0.0);
      CHECK(t.at(y, x, 2) == 0.0);
    }
  }
}

TEST_CASE("empty annotation list gives a zero heatmap") {
  const auto t = render_target({}, Grid(32, 32, 4), 2).tensor;
  CHECK(std::all_of(t.data().begin(), t.data().end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("overlapping same-class instances merge by per-pixel max") {
  const Grid g(64, 64, 4);
  const std::vector<Annotation> anns{{{30, 30, 48, 40}, 0}, {{42, 34, 36, 44}, 0}};
  const auto t = render_target(anns, g, 1).tensor;
  Tensor3 oracle(16, 16, 1);
  for (const auto& a : anns) {
    const double sigma = gaussian_radius(a.bbox.w / 4, a.bbox.h / 4);
    const int cx = int(std::floor(a.bbox.cx / 4)), cy = int(std::floor(a.bbox.cy / 4));
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        const double d2 = double(x - cx) * (x - cx) + double(y - cy) * (y - cy);
        if (d2 <= 9 * sigma * sigma) {
          oracle.at(y, x, 0) = std::max(oracle.at(y, x, 0), std::exp(-d2 / (2 * sigma * sigma)));
        }
      }
    }
  }
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.data()[i] == oracle.data()[i]);
}

TEST_CASE("random scenes keep heatmap invariants") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(0.0, 127.9), size(1.0, 80.0);
  std::uniform_int_distribution<int> cat(0, 2), count(0, 8);
  const Grid g(128, 128, 4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Annotation> anns(count(rng));
    for (auto& a : anns) a = {{pos(rng), pos(rng), size(rng), size(rng)}, cat(rng) % 2};
    const auto t = render_target(anns, g, 3).tensor;
    for (double v : t.data()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    for (const auto& a : anns) {
      const auto p = downsample_center(a.bbox, g);
      CHECK(t.at(p.y, p.x, a.category) == 1.0);
    }
    for (int y = 0; y < t.height(); ++y) {
      for (int x = 0; x < t.width(); ++x) CHECK(t.at(y, x, 2) == 0.0);
    }
    auto shuffled = anns;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(render_target(shuffled, g, 3).tensor == t);
  }
}

TEST_CASE("render_target rejects unknown categories") {
  const Annotation a{{10, 10, 4, 4}, 2};
  try {
    render_target(std::span(&a, 1), Grid(32, 32, 4), 2);
    FAIL("expected CategoryOutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCategoryOutOfRange);
  }
}

}  // TEST_SUITE
