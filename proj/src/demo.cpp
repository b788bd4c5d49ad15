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
#include <set>
#include <string>

#include "dminer/error.hpp"
#include "dminer/harness.hpp"
#include "dminer/heatmap.hpp"

namespace dminer {

namespace {

constexpr double kRecallFootprint = 0.3;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void axpy(std::span<double> y, double a, std::span<const double> x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

bool finite(const TotalLoss& l) { return std::isfinite(l.total); }

}  // namespace

void TrainConfig::validate() const {
  if (steps < 0) throw Error(ErrorCode::kInvalidArgument, "steps must be >= 0");
  if (!(lr >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lr must be >= 0");
  if (!(weights.pgcl >= 0.0 && weights.off >= 0.0 && weights.size >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "loss weights must be >= 0");
  }
  splg.validate();
  pgcl.validate();
}

DemoModel::DemoModel(Scene scene, TrainConfig cfg) : scene_(std::move(scene)), cfg_(cfg) {
  cfg_.validate();
  const auto& kept = scene_.keep1.images.at(0).annotations;
  labeled_ = kept;
  for (const auto& a : scene_.full.images.at(0).annotations) {
    if (std::find(kept.begin(), kept.end(), a) == kept.end()) unlabeled_.push_back(a);
  }
}

DemoParams DemoModel::initial_params() const {
  const int h = scene_.grid.height(), w = scene_.grid.width();
  DemoParams p{scene_.features, Tensor3(h, w, 2, 0.5), Tensor3(h, w, 2)};
  // Size maps start at the mean labeled size so unlabeled peaks decode to
  // plausible boxes.
  double mw = 0.0, mh = 0.0;
  for (const auto& a : labeled_) mw += a.bbox.w, mh += a.bbox.h;
  const double n = std::max<std::size_t>(labeled_.size(), 1) * double(scene_.grid.stride);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      p.size.at(y, x, 0) = mw / n;
      p.size.at(y, x, 1) = mh / n;
    }
  }
  return p;
}

Tensor3 DemoModel::predict(const DemoParams& p) const {
  const Tensor3 target =
      render_target(labeled_, scene_.grid, scene_.full.num_categories()).tensor;
  std::vector<int> cats;
  for (const auto& a : labeled_) cats.push_back(a.category);
  std::sort(cats.begin(), cats.end());
  cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
  const auto bank = extract_reference_features(p.features, target, cats);

  Tensor3 pred(p.features.height(), p.features.width(), target.channels(),
               sigmoid(cfg_.head_bias));
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      const auto u = l2_normalize(p.features.cell(y, x));
      for (std::size_t i = 0; i < cats.size(); ++i) {
        pred.at(y, x, cats[i]) =
            sigmoid(cfg_.head_scale * dot(u, bank.g.row(static_cast<int>(i))) + cfg_.head_bias);
      }
    }
  }
  return pred;
}

DemoTargets DemoModel::make_targets(const DemoParams& p, const Tensor3& prediction) const {
  DemoTargets t;
  t.target = render_target(labeled_, scene_.grid, scene_.full.num_categories()).tensor;
  for (const auto& a : labeled_) t.categories.push_back(a.category);
  std::sort(t.categories.begin(), t.categories.end());
  t.categories.erase(std::unique(t.categories.begin(), t.categories.end()), t.categories.end());
  for (int c : t.categories) t.centers.push_back(category_center(t.target, c));

  const auto bank = extract_reference_features(p.features, t.target, t.categories);
  t.reference = bank.g;
  const auto unlabeled = collect_unlabeled(p.features, labeled_centers(t.target));
  t.pseudo = build_pseudo_heatmap(similarity(unlabeled, bank), unlabeled, bank, cfg_.splg,
                                  t.target.channels());
  t.merged = merge_targets(t.target, t.pseudo);
  t.top = select_topm(prediction, cfg_.pgcl.m, labeled_centers(t.target));
  t.mask = build_mask(t.top.self_labels, t.categories);
  return t;
}

TotalLoss DemoModel::loss(const DemoParams& p, const DemoTargets& t, DemoParams* grad) const {
  const Tensor3& feat = p.features;
  const int h = feat.height(), w = feat.width(), dim = feat.channels();
  const int n = static_cast<int>(t.categories.size());

  // Forward.
  std::vector<std::vector<double>> pooled;
  Matrix g(n, dim);
  for (int i = 0; i < n; ++i) {
    pooled.push_back(pooled_feature(feat, t.target, t.categories[i]));
    const auto unit = l2_normalize(pooled.back());
    std::copy(unit.begin(), unit.end(), g.row(i).begin());
  }
  Tensor3 units(h, w, dim);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto u = l2_normalize(feat.cell(y, x));
      std::copy(u.begin(), u.end(), units.cell(y, x).begin());
    }
  }
  LossState state;
  state.prediction = Tensor3(h, w, t.target.channels(), sigmoid(cfg_.head_bias));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int i = 0; i < n; ++i) {
        state.prediction.at(y, x, t.categories[i]) =
            sigmoid(cfg_.head_scale * dot(units.cell(y, x), t.reference.row(i)) + cfg_.head_bias);
      }
    }
  }
  state.target = t.merged;
  state.queries = Matrix(n, dim);
  for (int i = 0; i < n; ++i) {
    const auto u = units.cell(t.centers[i].y, t.centers[i].x);
    std::copy(u.begin(), u.end(), state.queries.row(i).begin());
  }
  const int m = static_cast<int>(t.top.positions.size());
  state.keys = Matrix(m, dim);
  for (int j = 0; j < m; ++j) {
    const auto u = units.cell(t.top.positions[j].y, t.top.positions[j].x);
    std::copy(u.begin(), u.end(), state.keys.row(j).begin());
  }
  state.primary_keys = g;
  state.mask = t.mask;
  state.pred_off = p.off;
  state.pred_size = p.size;
  state.labeled = labeled_;
  state.grid = scene_.grid;

  TotalLoss out = total_loss(state, cfg_.weights, cfg_.splg, cfg_.pgcl.tau);
  if (grad == nullptr) return out;

  // Backward: prediction -> cosines -> unit features / references -> raw.
  Tensor3 d_units(h, w, dim);
  Matrix d_g = out.d_primary_keys;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int i = 0; i < n; ++i) {
        const int c = t.categories[i];
        const double yhat = state.prediction.at(y, x, c);
        const double d_cos = out.d_prediction.at(y, x, c) * yhat * (1.0 - yhat) * cfg_.head_scale;
        if (d_cos == 0.0) continue;
        axpy(d_units.cell(y, x), d_cos, t.reference.row(i));
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    axpy(d_units.cell(t.centers[i].y, t.centers[i].x), 1.0, out.d_queries.row(i));
  }
  for (int j = 0; j < m; ++j) {
    axpy(d_units.cell(t.top.positions[j].y, t.top.positions[j].x), 1.0, out.d_keys.row(j));
  }

  grad->features = Tensor3(h, w, dim);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto df = l2_normalize_backward(feat.cell(y, x), d_units.cell(y, x));
      std::copy(df.begin(), df.end(), grad->features.cell(y, x).begin());
    }
  }
  for (int i = 0; i < n; ++i) {
    const auto d_pooled = l2_normalize_backward(pooled[i], d_g.row(i));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double wgt = t.target.at(y, x, t.categories[i]);
        if (wgt != 0.0) axpy(grad->features.cell(y, x), wgt, d_pooled);
      }
    }
  }
  grad->off = out.d_off;
  grad->size = out.d_size;
  return out;
}

DemoEval DemoModel::evaluate(const DemoParams& p, DemoParams* grad) const {
  DemoEval e;
  e.prediction = predict(p);
  e.targets = make_targets(p, e.prediction);
  e.loss = loss(p, e.targets, grad);
  return e;
}

DemoModel::PseudoQuality DemoModel::pseudo_quality(const Tensor3& pseudo) const {
  PseudoQuality q;
  q.unlabeled_instances = static_cast<int>(unlabeled_.size());
  std::vector<Tensor3> footprints;
  for (const auto& a : unlabeled_) {
    Tensor3 fp(pseudo.height(), pseudo.width(), 1);
    draw_gaussian(fp, 0, gaussian_for(a, scene_.grid));
    footprints.push_back(std::move(fp));
  }
  std::vector<bool> recalled(unlabeled_.size(), false);
  int true_cells = 0;
  for (int y = 0; y < pseudo.height(); ++y) {
    for (int x = 0; x < pseudo.width(); ++x) {
      for (int c = 0; c < pseudo.channels(); ++c) {
        if (!(pseudo.at(y, x, c) > 0.0)) continue;
        ++q.pseudo_cells;
        bool hit = false;
        for (std::size_t k = 0; k < unlabeled_.size(); ++k) {
          if (unlabeled_[k].category == c && footprints[k].at(y, x, 0) >= kRecallFootprint) {
            recalled[k] = true;
            hit = true;
          }
        }
        true_cells += hit;
      }
    }
  }
  if (!unlabeled_.empty()) {
    q.recall = static_cast<double>(std::count(recalled.begin(), recalled.end(), true)) /
               static_cast<double>(unlabeled_.size());
  }
  if (q.pseudo_cells > 0) q.precision = static_cast<double>(true_cells) / q.pseudo_cells;
  return q;
}

std::vector<Detection> DemoModel::detections(const DemoParams& p, const Tensor3& prediction) const {
  std::vector<Detection> dets;
  const double s = scene_.grid.stride;
  const std::int64_t image_id = scene_.full.images.at(0).id;
  for (int y = 0; y < prediction.height(); ++y) {
    for (int x = 0; x < prediction.width(); ++x) {
      for (int c = 0; c < prediction.channels(); ++c) {
        const double v = prediction.at(y, x, c);
        bool peak = true;
        for (int dy = -1; dy <= 1 && peak; ++dy) {
          for (int dx = -1; dx <= 1 && peak; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if ((dy || dx) && yy >= 0 && xx >= 0 && yy < prediction.height() &&
                xx < prediction.width() && prediction.at(yy, xx, c) > v) {
              peak = false;
            }
          }
        }
        if (!peak) continue;
        Detection d;
        d.image_id = image_id;
        d.category = c;
        d.score = v;
        d.bbox = {(x + p.off.at(y, x, 0)) * s, (y + p.off.at(y, x, 1)) * s,
                  std::max(p.size.at(y, x, 0), 0.05) * s, std::max(p.size.at(y, x, 1), 0.05) * s};
        dets.push_back(d);
      }
    }
  }
  return dets;
}

double DemoModel::ap_at_s(const DemoParams& p, const Tensor3& prediction) const {
  const auto dets = detections(p, prediction);
  return ::dminer::evaluate(scene_.full, dets).ap_at_s_mean;
}

TrajectoryReport train_demo(const SceneSpec& spec, const TrainConfig& cfg) {
  DemoModel model(gen_scene(spec), cfg);
  DemoParams params = model.initial_params();
  TrajectoryReport report;

  auto record = [&](const DemoEval& e, double lr) {
    const auto q = model.pseudo_quality(e.targets.pseudo);
    report.l_total.push_back(e.loss.total);
    report.l_splg.push_back(e.loss.splg);
    report.l_pgcl.push_back(e.loss.pgcl);
    report.l_off.push_back(e.loss.off);
    report.l_size.push_back(e.loss.size);
    report.recall.push_back(q.recall);
    report.precision.push_back(q.precision);
    report.ap_at_s.push_back(model.ap_at_s(params, e.prediction));
    report.lr.push_back(lr);
  };

  DemoParams grad;
  DemoEval current = model.evaluate(params, &grad);
  if (!finite(current.loss)) throw Error(ErrorCode::kDiverged, "non-finite loss at step 0");
  record(current, 0.0);

  for (int step = 1; step <= cfg.steps; ++step) {
    double lr = cfg.lr;
    DemoParams next;
    DemoEval trial;
    bool accepted = false;
    for (int attempt = 0; attempt <= (cfg.line_search ? cfg.max_halvings : 0); ++attempt) {
      next = params;
      axpy(next.features.data(), -lr, grad.features.data());
      axpy(next.off.data(), -lr, grad.off.data());
      axpy(next.size.data(), -lr, grad.size.data());
      trial = model.evaluate(next, nullptr);
      if (!finite(trial.loss)) {
        if (!cfg.line_search) {
          throw Error(ErrorCode::kDiverged, "non-finite loss at step " + std::to_string(step));
        }
      } else if (!cfg.line_search || trial.loss.total <= current.loss.total) {
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (accepted) {
      params = std::move(next);
    } else {
      lr = 0.0;
    }
    current = model.evaluate(params, &grad);
    if (!finite(current.loss)) {
      throw Error(ErrorCode::kDiverged, "non-finite loss at step " + std::to_string(step));
    }
    record(current, lr);
  }
  return report;
}

}  // namespace dminer
