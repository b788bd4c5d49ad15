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

namespace dminer {

// Score-aware COCO-style evaluation. A detection d matches ground truth g
// only if IoU(g, d) > t_iou and s_d > t_s. Detections at or below t_s are
// false positives that never consume a ground truth. AP@S_i uses t_s = i/10
// and AP@S is the mean of the ten. With t_s = 0 and positive scores the
// result coincides with the standard COCO bbox AP.

struct Detection {
  std::int64_t image_id = 0;
  BBox bbox;
  int category = 0;
  double score = 0.0;
};

struct EvalConfig {
  std::vector<double> iou_thresholds;
  std::vector<double> score_thresholds;
  int max_dets = 100;  // per image and category, as COCO applies it
  int recall_points = 101;

  EvalConfig();
  void validate() const;
};

// numpy.linspace(0, 1, n) bit-for-bit, so recall lookups agree with pycocotools.
std::vector<double> recall_grid(int n);

struct ScoredBox {
  BBox bbox;
  double score = 0.0;
};

struct MatchResult {
  std::vector<std::size_t> order;  // detection indices, score descending, stable
  std::vector<std::uint8_t> is_tp;  // aligned with order, 1 = true positive
  std::vector<int> matched_gt;     // aligned with order, -1 when unmatched
  std::size_t unmatched_gt = 0;
};

MatchResult match_image(std::span<const BBox> gts, std::span<const ScoredBox> dets,
                        double t_iou, double t_s);

struct ApValue {
  double ap = 0.0;
  bool defined = false;  // false when num_gt == 0 (ap reported as 0)
};

// `labels` (1 = TP, 0 = FP) must already be ranked by descending score.
ApValue average_precision(std::span<const std::uint8_t> labels, std::size_t num_gt,
                          int recall_points = 101);

struct EvalResult {
  std::vector<double> iou_thresholds;
  std::vector<double> score_thresholds;
  // table[s][t]: mean AP over categories with ground truth at score
  // threshold s and IoU threshold t.
  std::vector<std::vector<double>> table;
  std::vector<double> ap_at_s;  // mean over IoU thresholds, one per t_s
  double ap_at_s_mean = 0.0;
  int evaluated_categories = 0;
};

// Throws NoGroundTruth if the dataset holds no annotations and
// CategoryOutOfRange for detections with unknown categories. Detections on
// images absent from `gts` are ignored.
EvalResult evaluate(const Dataset& gts, std::span<const Detection> dets,
                    const EvalConfig& cfg = {});

}  // namespace dminer
