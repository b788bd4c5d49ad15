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
#include <string>

#include "dminer/error.hpp"
#include "dminer/harness.hpp"

namespace dminer {

void SceneSpec::validate() const {
  if (grid_height < 1 || grid_width < 1) throw Error(ErrorCode::kInvalidArgument, "empty grid");
  if (num_categories < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one category");
  if (instances_per_category < 1) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one instance per category");
  }
  if (dim < 2) throw Error(ErrorCode::kInvalidArgument, "feature dim must be >= 2");
  if (!(noise >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise must be >= 0");
  if (!(embedding_norm > 0.0)) throw Error(ErrorCode::kInvalidArgument, "embedding_norm must be > 0");
  if (!(min_size_cells > 0.0 && max_size_cells >= min_size_cells)) {
    throw Error(ErrorCode::kInvalidArgument, "bad instance size range");
  }
}

namespace {

std::vector<double> random_direction(std::mt19937_64& rng, int dim, double length) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(dim));
  do {
    for (double& e : v) e = normal(rng);
  } while (l2_norm(v) < 1e-6);
  auto u = l2_normalize(v);
  for (double& e : u) e *= length;
  return u;
}

}  // namespace

Scene gen_scene(const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  Scene scene;
  scene.grid = Grid(spec.grid_height * spec.stride, spec.grid_width * spec.stride, spec.stride);
  for (int c = 0; c < spec.num_categories; ++c) {
    scene.embeddings.push_back(random_direction(rng, spec.dim, spec.embedding_norm));
  }
  scene.background = random_direction(rng, spec.dim, spec.embedding_norm);

  ImageRecord image{0, scene.grid.input_width, scene.grid.input_height, {}};
  std::vector<GridPos> centers;
  std::uniform_int_distribution<int> cell_y(0, spec.grid_height - 1);
  std::uniform_int_distribution<int> cell_x(0, spec.grid_width - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> size(spec.min_size_cells, spec.max_size_cells);
  const double s = spec.stride;
  for (int c = 0; c < spec.num_categories; ++c) {
    for (int k = 0; k < spec.instances_per_category; ++k) {
      GridPos p;
      bool placed = false;
      for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        p = {cell_y(rng), cell_x(rng)};
        placed = true;
        for (const auto& q : centers) {
          if (std::abs(q.y - p.y) < 2 && std::abs(q.x - p.x) < 2) placed = false;
        }
      }
      if (!placed) {
        throw Error(ErrorCode::kSceneTooCrowded,
                    "cannot place instance " + std::to_string(centers.size()) + " on a " +
                        std::to_string(spec.grid_height) + "x" + std::to_string(spec.grid_width) +
                        " grid");
      }
      centers.push_back(p);
      Annotation a;
      a.category = c;
      a.bbox.cx = (p.x + 0.05 + 0.9 * unit(rng)) * s;
      a.bbox.cy = (p.y + 0.05 + 0.9 * unit(rng)) * s;
      a.bbox.w = size(rng) * s;
      a.bbox.h = size(rng) * s;
      image.annotations.push_back(a);
    }
  }

  // Footprints first (cells whose centers fall inside the box), then each
  // instance's own center cell so labeled centers always carry their class.
  std::vector<int> owner(static_cast<std::size_t>(spec.grid_height) * spec.grid_width, -1);
  for (std::size_t i = 0; i < image.annotations.size(); ++i) {
    const BBox& b = image.annotations[i].bbox;
    for (int y = 0; y < spec.grid_height; ++y) {
      for (int x = 0; x < spec.grid_width; ++x) {
        const double ux = (x + 0.5) * s, uy = (y + 0.5) * s;
        if (ux >= b.x0() && ux <= b.x1() && uy >= b.y0() && uy <= b.y1()) {
          owner[static_cast<std::size_t>(y) * spec.grid_width + x] = static_cast<int>(i);
        }
      }
    }
  }
  for (std::size_t i = 0; i < centers.size(); ++i) {
    owner[static_cast<std::size_t>(centers[i].y) * spec.grid_width + centers[i].x] =
        static_cast<int>(i);
  }

  std::normal_distribution<double> noise(0.0, 1.0);
  scene.features = Tensor3(spec.grid_height, spec.grid_width, spec.dim);
  for (int y = 0; y < spec.grid_height; ++y) {
    for (int x = 0; x < spec.grid_width; ++x) {
      const int who = owner[static_cast<std::size_t>(y) * spec.grid_width + x];
      const auto& base =
          who < 0 ? scene.background : scene.embeddings[image.annotations[who].category];
      auto f = scene.features.cell(y, x);
      for (int d = 0; d < spec.dim; ++d) f[d] = base[d] + spec.noise * noise(rng);
    }
  }

  scene.full.category_names.reserve(static_cast<std::size_t>(spec.num_categories));
  for (int c = 0; c < spec.num_categories; ++c) {
    scene.full.category_names.push_back("class" + std::to_string(c));
  }
  scene.full.images.push_back(std::move(image));
  scene.keep1 = keep1_transform(scene.full, spec.seed);
  return scene;
}

}  // namespace dminer
