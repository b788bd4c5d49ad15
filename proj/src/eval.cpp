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

#include "dminer/eval.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <utility>

#include "dminer/error.hpp"

namespace dminer {

EvalConfig::EvalConfig() {
  for (int i = 0; i < 10; ++i) iou_thresholds.push_back(0.5 + 0.05 * i);
  for (int i = 0; i < 10; ++i) score_thresholds.push_back(i / 10.0);
}

void EvalConfig::validate() const {
  auto check = [](const std::vector<double>& v, const char* what) {
    if (v.empty() || !std::is_sorted(v.begin(), v.end())) {
      throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must be non-empty and sorted");
    }
  };
  check(iou_thresholds, "iou thresholds");
  check(score_thresholds, "score thresholds");
  if (max_dets < 1) throw Error(ErrorCode::kInvalidArgument, "max_dets must be >= 1");
  if (recall_points < 2) throw Error(ErrorCode::kInvalidArgument, "recall_points must be >= 2");
}

std::vector<double> recall_grid(int n) {
  std::vector<double> r(static_cast<std::size_t>(n));
  const double step = 1.0 / (n - 1);
  for (int i = 0; i < n; ++i) r[i] = i * step;
  r.back() = 1.0;
  return r;
}

namespace {

std::vector<std::size_t> rank_by_score(std::span<const ScoredBox> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });
  return order;
}

// Greedy matching against a precomputed IoU table (rows: ranked detections).
void greedy_match(const std::vector<std::vector<double>>& ious, std::span<const double> scores,
                  std::size_t num_gt, double t_iou, double t_s, std::vector<std::uint8_t>& is_tp,
                  std::vector<int>& matched) {
  std::vector<bool> taken(num_gt, false);
  is_tp.assign(scores.size(), 0);
  matched.assign(scores.size(), -1);
  for (std::size_t d = 0; d < scores.size(); ++d) {
    if (!(scores[d] > t_s)) continue;
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < num_gt; ++g) {
      if (taken[g]) continue;
      if (ious[d][g] > best_iou) {
        best_iou = ious[d][g];
        best = static_cast<int>(g);
      }
    }
    if (best >= 0 && best_iou > t_iou) {
      taken[static_cast<std::size_t>(best)] = true;
      is_tp[d] = 1;
      matched[d] = best;
    }
  }
}

}  // namespace

MatchResult match_image(std::span<const BBox> gts, std::span<const ScoredBox> dets,
                        double t_iou, double t_s) {
  MatchResult r;
  r.order = rank_by_score(dets);
  std::vector<std::vector<double>> ious(dets.size(), std::vector<double>(gts.size()));
  std::vector<double> scores(dets.size());
  for (std::size_t d = 0; d < dets.size(); ++d) {
    const auto& det = dets[r.order[d]];
    scores[d] = det.score;
    for (std::size_t g = 0; g < gts.size(); ++g) ious[d][g] = iou(det.bbox, gts[g]);
  }
  greedy_match(ious, scores, gts.size(), t_iou, t_s, r.is_tp, r.matched_gt);
  r.unmatched_gt = gts.size() - static_cast<std::size_t>(
                                    std::count(r.is_tp.begin(), r.is_tp.end(), 1));
  return r;
}

ApValue average_precision(std::span<const std::uint8_t> labels, std::size_t num_gt, int recall_points) {
  if (num_gt == 0) return {0.0, false};
  const std::size_t n = labels.size();
  std::vector<double> recall(n), precision(n);
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    (labels[i] ? tp : fp) += 1.0;
    recall[i] = tp / static_cast<double>(num_gt);
    precision[i] = tp / (tp + fp);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);

  const auto grid = recall_grid(recall_points);
  double sum = 0.0;
  for (double r : grid) {
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return {sum / recall_points, true};
}

EvalResult evaluate(const Dataset& gts, std::span<const Detection> dets, const EvalConfig& cfg) {
  cfg.validate();
  const int num_categories = gts.num_categories();
  if (gts.num_annotations() == 0) {
    throw Error(ErrorCode::kNoGroundTruth, "ground-truth dataset has no annotations");
  }

  std::map<std::int64_t, std::size_t> image_index;
  for (std::size_t i = 0; i < gts.images.size(); ++i) image_index.emplace(gts.images[i].id, i);

  // Per (image, category): gt boxes and detections in input order.
  const std::size_t cells = gts.images.size() * static_cast<std::size_t>(num_categories);
  std::vector<std::vector<BBox>> gt_boxes(cells);
  std::vector<std::vector<ScoredBox>> det_boxes(cells);
  auto slot = [&](std::size_t img, int cat) { return img * num_categories + cat; };
  for (std::size_t i = 0; i < gts.images.size(); ++i) {
    for (const auto& a : gts.images[i].annotations) gt_boxes[slot(i, a.category)].push_back(a.bbox);
  }
  for (const auto& d : dets) {
    if (d.category < 0 || d.category >= num_categories) {
      throw Error(ErrorCode::kCategoryOutOfRange,
                  "detection category " + std::to_string(d.category));
    }
    const auto it = image_index.find(d.image_id);
    if (it == image_index.end()) continue;
    det_boxes[slot(it->second, d.category)].push_back({d.bbox, d.score});
  }

  struct Prepared {
    std::vector<double> scores;               // ranked, truncated to max_dets
    std::vector<std::vector<double>> ious;    // [ranked det][gt]
    std::size_t num_gt = 0;
  };
  std::vector<std::vector<Prepared>> per_cat(static_cast<std::size_t>(num_categories));
  std::vector<std::size_t> gt_count(static_cast<std::size_t>(num_categories), 0);
  // Images in id order so cross-image score ties rank the same way however
  // the dataset lists them.
  for (const auto& [id, i] : image_index) {
    for (int c = 0; c < num_categories; ++c) {
      const auto& g = gt_boxes[slot(i, c)];
      const auto& d = det_boxes[slot(i, c)];
      gt_count[c] += g.size();
      if (g.empty() && d.empty()) continue;
      Prepared p;
      p.num_gt = g.size();
      auto order = rank_by_score(d);
      if (order.size() > static_cast<std::size_t>(cfg.max_dets)) order.resize(cfg.max_dets);
      for (std::size_t k : order) {
        p.scores.push_back(d[k].score);
        std::vector<double> row(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) row[j] = iou(d[k].bbox, g[j]);
        p.ious.push_back(std::move(row));
      }
      per_cat[c].push_back(std::move(p));
    }
  }

  EvalResult res;
  res.iou_thresholds = cfg.iou_thresholds;
  res.score_thresholds = cfg.score_thresholds;
  res.table.assign(cfg.score_thresholds.size(),
                   std::vector<double>(cfg.iou_thresholds.size(), 0.0));
  for (int c = 0; c < num_categories; ++c) res.evaluated_categories += gt_count[c] > 0;

  std::vector<std::uint8_t> is_tp;
  std::vector<int> matched;
  for (std::size_t si = 0; si < cfg.score_thresholds.size(); ++si) {
    for (std::size_t ti = 0; ti < cfg.iou_thresholds.size(); ++ti) {
      double sum = 0.0;
      for (int c = 0; c < num_categories; ++c) {
        if (gt_count[c] == 0) continue;
        std::vector<std::pair<double, std::uint8_t>> ranked;
        for (const auto& p : per_cat[c]) {
          greedy_match(p.ious, p.scores, p.num_gt, cfg.iou_thresholds[ti],
                       cfg.score_thresholds[si], is_tp, matched);
          for (std::size_t k = 0; k < p.scores.size(); ++k) ranked.emplace_back(p.scores[k], is_tp[k]);
        }
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        std::vector<std::uint8_t> labels(ranked.size());
        for (std::size_t k = 0; k < ranked.size(); ++k) labels[k] = ranked[k].second;
        sum += average_precision(labels, gt_count[c], cfg.recall_points).ap;
      }
      res.table[si][ti] = sum / res.evaluated_categories;
    }
  }
  for (const auto& row : res.table) {
    res.ap_at_s.push_back(std::accumulate(row.begin(), row.end(), 0.0) / row.size());
  }
  res.ap_at_s_mean =
      std::accumulate(res.ap_at_s.begin(), res.ap_at_s.end(), 0.0) / res.ap_at_s.size();
  return res;
}

}  // namespace dminer
