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

#include "dminer/harness.hpp"
#include "dminer/heatmap.hpp"

namespace dminer {

void accumulate_grad_error(std::span<const double> analytic, std::span<const double> numeric,
                           const GradcheckConfig& cfg, GradcheckResult& r) {
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double diff = std::abs(analytic[i] - numeric[i]);
    r.max_abs_error = std::max(r.max_abs_error, diff);
    if (diff <= cfg.abs_floor) continue;
    const double scale = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
    r.max_rel_error = std::max(r.max_rel_error, diff / scale);
  }
}

namespace {

using Rng = std::mt19937_64;

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Matrix random_unit_rows(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    std::vector<double> v(static_cast<std::size_t>(cols));
    do {
      for (double& e : v) e = normal(rng);
    } while (l2_norm(v) < 1e-3);
    const auto u = l2_normalize(v);
    std::copy(u.begin(), u.end(), m.row(r).begin());
  }
  return m;
}

Tensor3 random_prediction(Rng& rng, int h, int w, int c) {
  Tensor3 t(h, w, c);
  for (double& v : t.data()) v = uniform(rng, 0.05, 0.95);
  return t;
}

Tensor3 random_target(Rng& rng, int h, int w, int c) {
  Tensor3 t(h, w, c);
  for (double& v : t.data()) {
    const double u = uniform(rng, 0.0, 1.0);
    v = u < 0.15 ? 1.0 : (u < 0.5 ? 0.0 : uniform(rng, 0.0, 0.99));
  }
  return t;
}

Matrix random_mask(Rng& rng, int n, int m) {
  Matrix mask(n, m);
  for (int j = 0; j < m; ++j) {
    const int label = uniform_int(rng, -1, n - 1);
    if (label >= 0) mask.at(label, j) = 1.0;
  }
  return mask;
}

// Labeled annotations on distinct cells plus regression maps whose values
// at those cells sit well away from the L1 kink.
struct RegressionCase {
  Grid grid;
  std::vector<Annotation> labeled;
  Tensor3 off;
  Tensor3 size;
};

RegressionCase random_regression(Rng& rng) {
  RegressionCase rc;
  const int gh = uniform_int(rng, 2, 8), gw = uniform_int(rng, 2, 8), s = 4;
  rc.grid = Grid(gh * s, gw * s, s);
  const int count = uniform_int(rng, 1, std::min(4, gh * gw));
  std::vector<GridPos> used;
  while (static_cast<int>(rc.labeled.size()) < count) {
    const GridPos p{uniform_int(rng, 0, gh - 1), uniform_int(rng, 0, gw - 1)};
    if (std::find(used.begin(), used.end(), p) != used.end()) continue;
    used.push_back(p);
    Annotation a;
    a.bbox = {(p.x + uniform(rng, 0.05, 0.95)) * s, (p.y + uniform(rng, 0.05, 0.95)) * s,
              uniform(rng, 2.0, 16.0), uniform(rng, 2.0, 16.0)};
    a.category = 0;
    rc.labeled.push_back(a);
  }
  rc.off = Tensor3(gh, gw, 2);
  rc.size = Tensor3(gh, gw, 2);
  for (double& v : rc.off.data()) v = uniform(rng, 0.0, 1.0);
  for (double& v : rc.size.data()) v = uniform(rng, 0.5, 4.0);
  // Push every supervised coordinate at least 0.05 from its target.
  for (const auto& a : rc.labeled) {
    const GridPos p = downsample_center(a.bbox, rc.grid);
    const double off_tgt[2] = {a.bbox.cx / s - p.x, a.bbox.cy / s - p.y};
    const double size_tgt[2] = {a.bbox.w / s, a.bbox.h / s};
    for (int k = 0; k < 2; ++k) {
      const double so = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
      const double ss = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
      rc.off.at(p.y, p.x, k) = off_tgt[k] + so * uniform(rng, 0.05, 0.5);
      rc.size.at(p.y, p.x, k) = size_tgt[k] + ss * uniform(rng, 0.05, 1.0);
    }
  }
  return rc;
}

LossState random_state(Rng& rng) {
  LossState st;
  RegressionCase rc = random_regression(rng);
  const int h = rc.grid.height(), w = rc.grid.width();
  const int c = uniform_int(rng, 1, 3);
  st.prediction = random_prediction(rng, h, w, c);
  st.target = random_target(rng, h, w, c);
  const int n = uniform_int(rng, 1, 3), m = uniform_int(rng, 1, 6), d = uniform_int(rng, 2, 8);
  st.queries = random_unit_rows(rng, n, d);
  st.keys = random_unit_rows(rng, m, d);
  st.primary_keys = random_unit_rows(rng, n, d);
  st.mask = random_mask(rng, n, m);
  st.pred_off = std::move(rc.off);
  st.pred_size = std::move(rc.size);
  st.labeled = std::move(rc.labeled);
  st.grid = rc.grid;
  return st;
}

void finish(GradcheckResult& r, const GradcheckConfig& cfg) {
  r.passed = r.max_rel_error <= cfg.rel_tol;
}

GradcheckResult check_splg(const GradcheckConfig& cfg) {
  Rng rng(cfg.seed ^ 0x5011);
  GradcheckResult r{"splg", cfg.instances};
  const SplgConfig scfg;
  for (int i = 0; i < cfg.instances; ++i) {
    const int h = uniform_int(rng, 1, 8), w = uniform_int(rng, 1, 8), c = uniform_int(rng, 1, 4);
    const Tensor3 pred = random_prediction(rng, h, w, c);
    const Tensor3 target = random_target(rng, h, w, c);
    const auto analytic = splg_loss(pred, target, scfg).grad;
    const auto numeric = finite_diff_grad(
        [&](const Tensor3& p) { return splg_loss(p, target, scfg).loss; }, pred, cfg.step);
    accumulate_grad_error(analytic.data(), numeric.data(), cfg, r);
  }
  finish(r, cfg);
  return r;
}

GradcheckResult check_pgcl(const GradcheckConfig& cfg) {
  Rng rng(cfg.seed ^ 0x9c1);
  GradcheckResult r{"pgcl", cfg.instances};
  constexpr double kTaus[] = {0.07, 0.1, 0.2, 0.5};
  for (int i = 0; i < cfg.instances; ++i) {
    const int n = uniform_int(rng, 1, 3), m = uniform_int(rng, 1, 6), d = uniform_int(rng, 2, 8);
    const double tau = kTaus[uniform_int(rng, 0, 3)];
    Matrix q = random_unit_rows(rng, n, d), k = random_unit_rows(rng, m, d),
           k0 = random_unit_rows(rng, n, d);
    const Matrix mask = random_mask(rng, n, m);
    const auto g = pgcl_loss(q, k, k0, mask, tau);

    auto wrt = [&](Matrix& target, const Matrix& analytic) {
      const Matrix saved = target;
      auto numeric = finite_diff_grad(
          [&](std::span<const double> x) {
            std::copy(x.begin(), x.end(), target.data().begin());
            return pgcl_loss(q, k, k0, mask, tau).loss;
          },
          saved.data(), cfg.step);
      target = saved;
      accumulate_grad_error(analytic.data(), numeric, cfg, r);
    };
    wrt(q, g.d_queries);
    wrt(k, g.d_keys);
    wrt(k0, g.d_primary_keys);
  }
  finish(r, cfg);
  return r;
}

GradcheckResult check_regression(const GradcheckConfig& cfg, bool size) {
  Rng rng(cfg.seed ^ (size ? 0x512e : 0x0ff));
  GradcheckResult r{size ? "size" : "off", cfg.instances};
  for (int i = 0; i < cfg.instances; ++i) {
    RegressionCase rc = random_regression(rng);
    const auto g = regression_losses(rc.off, rc.size, rc.labeled, rc.grid);
    const Tensor3 numeric =
        size ? finite_diff_grad(
                   [&](const Tensor3& s) {
                     return regression_losses(rc.off, s, rc.labeled, rc.grid).l_size;
                   },
                   rc.size, cfg.step)
             : finite_diff_grad(
                   [&](const Tensor3& o) {
                     return regression_losses(o, rc.size, rc.labeled, rc.grid).l_off;
                   },
                   rc.off, cfg.step);
    accumulate_grad_error(size ? g.d_size.data() : g.d_off.data(), numeric.data(), cfg, r);
  }
  finish(r, cfg);
  return r;
}

GradcheckResult check_total(const GradcheckConfig& cfg) {
  Rng rng(cfg.seed ^ 0x707a1);
  GradcheckResult r{"total", cfg.instances};
  const SplgConfig scfg;
  const LossWeights weights;
  constexpr double kTau = 0.07;
  for (int i = 0; i < cfg.instances; ++i) {
    LossState st = random_state(rng);
    const auto g = total_loss(st, weights, scfg, kTau);
    auto value = [&] { return total_loss(st, weights, scfg, kTau).total; };
    auto wrt = [&](std::span<double> field, std::span<const double> analytic) {
      const std::vector<double> saved(field.begin(), field.end());
      auto numeric = finite_diff_grad(
          [&](std::span<const double> x) {
            std::copy(x.begin(), x.end(), field.begin());
            return value();
          },
          saved, cfg.step);
      std::copy(saved.begin(), saved.end(), field.begin());
      accumulate_grad_error(analytic, numeric, cfg, r);
    };
    wrt(st.prediction.data(), g.d_prediction.data());
    wrt(st.queries.data(), g.d_queries.data());
    wrt(st.keys.data(), g.d_keys.data());
    wrt(st.primary_keys.data(), g.d_primary_keys.data());
    wrt(st.pred_off.data(), g.d_off.data());
    wrt(st.pred_size.data(), g.d_size.data());
  }
  finish(r, cfg);
  return r;
}

// Chain rule through the demo head (features -> references, cosines,
// sigmoid) with targets frozen. The head is steep enough that h = 1e-4
// shows curvature on small coordinates, so this one probes with h / 100.
GradcheckResult check_demo_chain(const GradcheckConfig& cfg) {
  const int instances = std::max(1, cfg.instances / 10);
  GradcheckResult r{"demo_chain", instances};
  for (int i = 0; i < instances; ++i) {
    SceneSpec spec;
    spec.grid_height = 6;
    spec.grid_width = 6;
    spec.instances_per_category = 2;
    spec.dim = 4;
    spec.seed = cfg.seed * 1000 + static_cast<std::uint64_t>(i);
    TrainConfig tc;
    tc.pgcl.m = 4;
    DemoModel model(gen_scene(spec), tc);
    DemoParams p = model.initial_params();
    // Move regression maps off their kinks.
    for (double& v : p.off.data()) v += 0.013;
    for (double& v : p.size.data()) v += 0.021;
    const auto targets = model.make_targets(p, model.predict(p));
    DemoParams grad;
    model.loss(p, targets, &grad);
    const auto numeric = finite_diff_grad(
        [&](const Tensor3& f) {
          DemoParams probe{f, p.off, p.size};
          return model.loss(probe, targets, nullptr).total;
        },
        p.features, cfg.step / 100.0);
    accumulate_grad_error(grad.features.data(), numeric.data(), cfg, r);
  }
  finish(r, cfg);
  return r;
}

}  // namespace

std::vector<GradcheckResult> run_gradcheck(const GradcheckConfig& cfg) {
  return {check_splg(cfg),        check_pgcl(cfg),  check_regression(cfg, false),
          check_regression(cfg, true), check_total(cfg), check_demo_chain(cfg)};
}

}  // namespace dminer
