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

// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dminer/adapters.hpp"
#include "dminer/harness.hpp"
#include "eval_fixtures.hpp"

using namespace dminer;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

void report(int id, const Outcome& o) {
  std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Matrix unit_rows(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    std::vector<double> v(cols);
    for (double& e : v) e = n(rng);
    const auto u = l2_normalize(v);
    std::copy(u.begin(), u.end(), m.row(r).begin());
  }
  return m;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  const auto results = run_gradcheck(GradcheckConfig{});
  const double t = seconds_since(t0);
  Outcome o;
  for (const auto& r : results) {
    const bool ok = r.passed && r.instances >= (std::string(r.name) == "demo_chain" ? 10 : 100);
    o.pass = o.pass && ok;
    o.detail += fmt("%s n=%d rel=%.1e; ", r.name, r.instances, r.max_rel_error);
  }
  o.pass = o.pass && t < 60.0;
  o.detail += fmt("%.2fs", t);
  return o;
}

Outcome criterion2() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  const int sets = 25;
  for (int i = 0; i < sets; ++i) {
    const auto s = testing::random_detection_set(rng);
    const double ours = evaluate(s.gts, s.dets).ap_at_s[0];
    worst = std::max(worst, std::abs(ours - testing::oracle_ap(s)));
  }
  return {worst <= 1e-9, fmt("%d sets, max |diff| = %.2e", sets, worst)};
}

Outcome criterion3() {
  std::mt19937_64 rng(33);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto s = testing::random_detection_set(rng, 20, 5, 20);
    const auto r = evaluate(s.gts, s.dets);
    for (int k = 1; k < 10; ++k) violations += r.ap_at_s[k] > r.ap_at_s[k - 1];
  }
  return {violations == 0, fmt("1000 sets, %d violations", violations)};
}

Outcome criterion4() {
  Matrix e(1, 2);
  e.at(0, 0) = 1.0;
  Matrix one(1, 1, 1.0);
  const double sym = pgcl_loss(e, e, e, one, 0.07).loss;
  const double err = std::abs(sym - 2.0 * std::log(2.0));

  std::mt19937_64 rng(44);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int n = 1 + i % 3, m = 2 + i % 7, d = 2 + i % 6;
    const Matrix q = unit_rows(rng, n, d), k = unit_rows(rng, m, d), k0 = unit_rows(rng, n, d);
    Matrix mask(n, m);
    for (int j = 0; j < m; ++j) {
      const int label = static_cast<int>(rng() % (n + 1)) - 1;
      if (label >= 0) mask.at(label, j) = 1.0;
    }
    std::vector<int> perm(m);
    for (int j = 0; j < m; ++j) perm[j] = j;
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix kp(m, d), mp(n, m);
    for (int j = 0; j < m; ++j) {
      std::copy(k.row(perm[j]).begin(), k.row(perm[j]).end(), kp.row(j).begin());
      for (int r = 0; r < n; ++r) mp.at(r, j) = mask.at(r, perm[j]);
    }
    worst = std::max(worst, std::abs(pgcl_loss(q, k, k0, mask, 0.07).loss -
                                     pgcl_loss(q, kp, k0, mp, 0.07).loss));
  }
  return {err <= 1e-12 && worst <= 1e-12,
          fmt("|L - 2ln2| = %.1e, permutation max diff = %.1e", err, worst)};
}

Outcome criterion5() {
  const SplgConfig cfg;
  const double loss = splg_loss(Tensor3(1, 1, 1, 0.5), Tensor3(1, 1, 1, 1.0), cfg).loss;
  const double err = std::abs(loss - 0.25 * std::log(2.0));

  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int bad_cells = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int h = 1 + trial % 6, w = 1 + trial % 8, c = 1 + trial % 5;
    UnlabeledSet u;
    u.height = h;
    u.width = w;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) u.positions.push_back({y, x});
    ReferenceBank r;
    for (int k = 0; k < c; ++k) r.categories.push_back(k);
    Matrix s(static_cast<int>(u.positions.size()), c);
    for (double& v : s.data()) v = unit(rng);
    const auto p = build_pseudo_heatmap(s, u, r, cfg, c);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        int nonzero = 0;
        bool in_range = true;
        for (double v : p.cell(y, x)) {
          if (v == 0.0) continue;
          ++nonzero;
          in_range = in_range && v > cfg.t_sim * cfg.eta && v <= cfg.eta;
        }
        bad_cells += nonzero > 1 || !in_range;
      }
    }
  }
  return {err <= 1e-12 && bad_cells == 0,
          fmt("|L - 0.25ln2| = %.1e, bad pseudo cells = %d over 1000 maps", err, bad_cells)};
}

Outcome criterion6() {
  std::mt19937_64 rng(66);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Dataset d;
  d.category_names = {"a", "b", "c", "d"};
  for (int i = 0; i < 200; ++i) {
    ImageRecord im{1000 + i, 100, 100, {}};
    const int n = static_cast<int>(rng() % 9);
    for (int j = 0; j < n; ++j) {
      im.annotations.push_back({{100 * unit(rng), 100 * unit(rng), 5, 5}, static_cast<int>(rng() % 4)});
    }
    d.images.push_back(im);
  }
  int contract_errors = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto k = keep1_transform(d, seed);
    contract_errors += !(k == keep1_transform(d, seed));
    for (std::size_t i = 0; i < d.images.size(); ++i) {
      std::map<int, int> full, kept;
      for (const auto& a : d.images[i].annotations) ++full[a.category];
      for (const auto& a : k.images[i].annotations) {
        ++kept[a.category];
        const auto& src = d.images[i].annotations;
        contract_errors += std::find(src.begin(), src.end(), a) == src.end();
      }
      contract_errors += full.size() != kept.size();
      for (const auto& [c, n] : kept) contract_errors += n != 1 || !full.count(c);
    }
  }

  Dataset three;
  three.category_names = {"x"};
  three.images.push_back({7, 100, 100, {}});
  for (int j = 0; j < 3; ++j) three.images[0].annotations.push_back({{10.0 + j, 10, 4, 4}, 0});
  std::array<int, 3> hits{};
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    ++hits[static_cast<int>(keep1_transform(three, seed).images[0].annotations.at(0).bbox.cx) - 10];
  }
  bool uniform = true;
  for (int h : hits) uniform = uniform && h >= 3000 && h <= 3700;
  return {contract_errors == 0 && uniform,
          fmt("contract errors = %d, frequencies %.4f %.4f %.4f", contract_errors, hits[0] / 1e4,
              hits[1] / 1e4, hits[2] / 1e4)};
}

Outcome criterion7() {
  const auto t0 = Clock::now();
  std::vector<double> recall_gain;
  int loss_down = 0, ap_kept = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SceneSpec spec;
    spec.seed = seed;
    const auto r = train_demo(spec, TrainConfig{});
    recall_gain.push_back(r.recall.back() - r.recall.front());
    loss_down += r.l_total.back() < r.l_total.front();
    ap_kept += r.ap_at_s.back() >= r.ap_at_s.front();
  }
  std::sort(recall_gain.begin(), recall_gain.end());
  const double median = 0.5 * (recall_gain[4] + recall_gain[5]);
  const double t = seconds_since(t0);
  return {median > 0.0 && loss_down == 10 && ap_kept == 10 && t < 120.0,
          fmt("median recall gain %+.3f, loss fell %d/10, AP@S held %d/10, %.1fs", median,
              loss_down, ap_kept, t)};
}

double max_value(const Tensor3& t) { return *std::max_element(t.data().begin(), t.data().end()); }

Outcome criterion8() {
  std::mt19937_64 rng(88);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AnchorSpec identity;
  identity.anchor_sizes = {32};
  identity.kernel_sizes = {1};
  int not_identical = 0, out_of_range = 0, max_grew = 0;
  for (int i = 0; i < 500; ++i) {
    const int h = 4 + static_cast<int>(rng() % 21), w = 4 + static_cast<int>(rng() % 21);
    Tensor3 t(h, w, 1 + static_cast<int>(rng() % 3));
    for (double& v : t.data()) v = unit(rng);
    const auto one = anchor_pseudo_pool(t, identity)[0];
    not_identical += !std::equal(one.data().begin(), one.data().end(), t.data().begin());
    const auto levels = anchor_pseudo_pool(t);
    bool grew = false;
    for (std::size_t l = 0; l < levels.size(); ++l) {
      for (double v : levels[l].data()) out_of_range += v < 0.0 || v > 1.0;
      if (l > 0 && max_value(levels[l]) > max_value(levels[l - 1])) grew = true;
    }
    max_grew += grew;
  }
  const auto fpn = default_fpn_config();
  const bool fpn_ok = fpn.active_levels() == 3 && fpn.m_per_level == std::vector<int>{96, 64, 32};
  return {not_identical == 0 && out_of_range == 0 && max_grew == 0 && fpn_ok,
          fmt("500 uniform maps: k=1 mismatches %d, out of range %d, max grew with k on %d; "
              "fpn %s",
              not_identical, out_of_range, max_grew, fpn_ok ? "[96,64,32]" : "wrong")};
}

Outcome criterion9(double own_seconds) {
  const auto t0 = Clock::now();
  const int unit_rc = std::system(DMINER_TESTS_PATH " > /dev/null 2>&1");
  const int cli_rc = std::system(DMINER_CLI_PATH " gradcheck > /dev/null 2>&1");
  const double total = seconds_since(t0) + own_seconds;
  return {unit_rc == 0 && cli_rc == 0 && total < 300.0,
          fmt("unit suite rc=%d, gradcheck cli rc=%d, %.1fs including criteria 1-8", unit_rc,
              cli_rc, total)};
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  std::vector<Outcome> all;
  Outcome (*checks[])() = {criterion1, criterion2, criterion3, criterion4,
                           criterion5, criterion6, criterion7, criterion8};
  for (int i = 0; i < 8; ++i) {
    Outcome o;
    try {
      o = checks[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    report(i + 1, o);
    all.push_back(o);
  }
  const Outcome nine = criterion9(seconds_since(t0));
  report(9, nine);
  all.push_back(nine);
  return std::all_of(all.begin(), all.end(), [](const Outcome& o) { return o.pass; }) ? 0 : 1;
}
