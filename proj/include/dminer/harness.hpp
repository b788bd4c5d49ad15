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

#include <cstdint>
#include <span>
#include <vector>

#include "dminer/core.hpp"
#include "dminer/dataset.hpp"
#include "dminer/eval.hpp"
#include "dminer/pgcl.hpp"
#include "dminer/splg.hpp"

namespace dminer {

// ---------------------------------------------------------------------------
// Synthetic scenes. Each instance paints its category embedding (plus noise)
// over the cells its box covers; everything else gets a background embedding.
// Features are the free parameters of the demo, standing in for a backbone.

struct SceneSpec {
  int grid_height = 8;
  int grid_width = 8;
  int stride = 4;
  int num_categories = 2;
  int instances_per_category = 3;
  int dim = 8;
  double noise = 0.3;
  double embedding_norm = 0.8;  // length of each category / background embedding
  double min_size_cells = 1.5;
  double max_size_cells = 3.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Scene {
  Grid grid;
  Tensor3 features;
  Dataset full;   // one image
  Dataset keep1;  // keep1_transform(full, seed)
  std::vector<std::vector<double>> embeddings;  // per category, length embedding_norm
  std::vector<double> background;
};

// Throws SceneTooCrowded when instances cannot be placed with centers at
// least two cells apart.
Scene gen_scene(const SceneSpec& spec);

// ---------------------------------------------------------------------------
// L1 offset and size regression at labeled centers.

struct RegressionLoss {
  double l_off = 0.0;
  double l_size = 0.0;
  Tensor3 d_off;
  Tensor3 d_size;
};

// pred_off / pred_size are H x W x 2 with channel 0 = x, 1 = y. Each loss is
// the mean absolute error over instances and both components.
RegressionLoss regression_losses(const Tensor3& pred_off, const Tensor3& pred_size,
                                 std::span<const Annotation> labeled, const Grid& grid);

// ---------------------------------------------------------------------------
// Weighted total objective.

struct LossWeights {
  double pgcl = 0.1;
  double off = 1.0;
  double size = 0.1;
};

struct LossState {
  Tensor3 prediction;  // H x W x C, values in (0, 1)
  Tensor3 target;      // merged target (labeled + pseudo)
  Matrix queries;
  Matrix keys;
  Matrix primary_keys;
  Matrix mask;
  Tensor3 pred_off;
  Tensor3 pred_size;
  std::vector<Annotation> labeled;
  Grid grid;
};

struct TotalLoss {
  double total = 0.0;
  double splg = 0.0;
  double pgcl = 0.0;
  double off = 0.0;
  double size = 0.0;
  Tensor3 d_prediction;
  Matrix d_queries;
  Matrix d_keys;
  Matrix d_primary_keys;
  Tensor3 d_off;
  Tensor3 d_size;
};

TotalLoss total_loss(const LossState& state, const LossWeights& weights,
                     const SplgConfig& splg, double tau);

// ---------------------------------------------------------------------------
// Demo: gradient descent on features and regression maps of one scene.

struct TrainConfig {
  int steps = 200;
  double lr = 0.05;
  LossWeights weights;
  SplgConfig splg;
  PgclConfig pgcl{24, 0.07, 0.1};
  // prediction = sigmoid(head_scale * cos(feature, reference) + head_bias)
  double head_scale = 10.0;
  double head_bias = -10.0;
  bool line_search = false;
  int max_halvings = 20;

  void validate() const;
};

struct DemoParams {
  Tensor3 features;
  Tensor3 off;
  Tensor3 size;
};

// Everything the loss treats as fixed for one step.
struct DemoTargets {
  std::vector<int> categories;
  Tensor3 target;  // rendered labeled target
  Matrix reference;  // head weights, one row per entry of `categories`
  Tensor3 pseudo;
  Tensor3 merged;
  TopM top;
  Matrix mask;
  std::vector<GridPos> centers;
};

struct DemoEval {
  TotalLoss loss;
  Tensor3 prediction;
  DemoTargets targets;
};

class DemoModel {
 public:
  DemoModel(Scene scene, TrainConfig cfg);

  const Scene& scene() const noexcept { return scene_; }
  const TrainConfig& config() const noexcept { return cfg_; }
  DemoParams initial_params() const;

  Tensor3 predict(const DemoParams& p) const;
  DemoTargets make_targets(const DemoParams& p, const Tensor3& prediction) const;

  // Loss with targets frozen; fills `grad` (same shapes as params) if non-null.
  TotalLoss loss(const DemoParams& p, const DemoTargets& t, DemoParams* grad) const;

  DemoEval evaluate(const DemoParams& p, DemoParams* grad) const;

  struct PseudoQuality {
    double recall = 0.0;
    double precision = 0.0;
    int unlabeled_instances = 0;
    int pseudo_cells = 0;
  };
  PseudoQuality pseudo_quality(const Tensor3& pseudo) const;

  // Peaks of the prediction (3x3 local maxima per channel) decoded to boxes.
  std::vector<Detection> detections(const DemoParams& p, const Tensor3& prediction) const;
  double ap_at_s(const DemoParams& p, const Tensor3& prediction) const;

 private:
  Scene scene_;
  TrainConfig cfg_;
  std::vector<Annotation> labeled_;
  std::vector<Annotation> unlabeled_;
};

struct TrajectoryReport {
  std::vector<double> l_total, l_splg, l_pgcl, l_off, l_size;
  std::vector<double> recall, precision, ap_at_s, lr;
};

// Throws Diverged (with the step index) on a non-finite loss.
TrajectoryReport train_demo(const SceneSpec& spec, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Finite-difference verification of every analytic gradient.

struct GradcheckResult {
  const char* name = "";
  int instances = 0;
  double max_rel_error = 0.0;  // over coordinates outside the absolute floor
  double max_abs_error = 0.0;
  bool passed = false;
};

struct GradcheckConfig {
  int instances = 100;
  double step = 1e-4;
  double rel_tol = 1e-4;
  double abs_floor = 1e-8;
  std::uint64_t seed = 7;
};

// Compares two gradients coordinate-wise; updates `r` in place.
void accumulate_grad_error(std::span<const double> analytic, std::span<const double> numeric,
                           const GradcheckConfig& cfg, GradcheckResult& r);

std::vector<GradcheckResult> run_gradcheck(const GradcheckConfig& cfg = {});

}  // namespace dminer
