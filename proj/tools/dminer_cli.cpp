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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dminer/adapters.hpp"
#include "dminer/dataset.hpp"
#include "dminer/error.hpp"
#include "dminer/eval.hpp"
#include "dminer/harness.hpp"
#include "dminer/heatmap.hpp"
#include "dminer/io.hpp"
#include "dminer/pgcl.hpp"
#include "dminer/splg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dminer;

namespace {

// Flat `key = value` lines; '#' starts a comment. Keys are long option names.
std::map<std::string, std::string> read_flat_config(const fs::path& path) {
  std::map<std::string, std::string> kv;
  std::istringstream in(io::read_file(path));
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    kv[trim(line.substr(0, eq))] = value;
  }
  return kv;
}

// Fills options the command line left unset; warns about keys nobody takes.
void apply_config(CLI::App* sub, const std::map<std::string, std::string>& kv) {
  std::map<std::string, bool> used;
  for (const auto& [k, v] : kv) used[k] = false;
  for (CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    const auto it = kv.find(name);
    if (it == kv.end()) continue;
    used[name] = true;
    if (opt->count() > 0) continue;
    opt->add_result(it->second);
    opt->run_callback();
  }
  for (const auto& [k, hit] : used) {
    if (!hit) std::cerr << "warning: config key '" << k << "' unused by '" << sub->get_name() << "'\n";
  }
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

const ImageRecord& pick_image(const Dataset& d, std::optional<std::int64_t> id) {
  if (d.images.empty()) throw Error(ErrorCode::kInvalidArgument, "dataset has no images");
  if (!id) return d.images.front();
  for (const auto& img : d.images) {
    if (img.id == *id) return img;
  }
  throw Error(ErrorCode::kInvalidArgument, "no image with id " + std::to_string(*id));
}

std::vector<int> peak_categories(const Tensor3& target) {
  std::vector<int> cats;
  for (int c = 0; c < target.channels(); ++c) {
    for (int y = 0; y < target.height() && (cats.empty() || cats.back() != c); ++y) {
      for (int x = 0; x < target.width(); ++x) {
        if (target.at(y, x, c) == 1.0) {
          cats.push_back(c);
          break;
        }
      }
    }
  }
  return cats;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text << (text.empty() || text.back() == '\n' ? "" : "\n");
  } else {
    io::write_file(path, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dminer: sparse-annotation detection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "flat key = value file; command-line flags win");

  auto add_seed = [](CLI::App* sub, std::uint64_t& target) {
    return sub->add_option("--seed", target, "RNG seed (DMINER_SEED overrides the config file)")
        ->capture_default_str();
  };
  std::string box_format = "cxcywh";

  // keep1
  auto* keep1 = app.add_subcommand("keep1", "keep one annotation per (image, category)");
  std::string keep1_in, keep1_out;
  std::uint64_t keep1_seed_value = 0;
  keep1->add_option("--in", keep1_in, "dataset JSON")->required();
  keep1->add_option("--out", keep1_out, "sparse dataset JSON (center boxes)")->required();
  keep1->add_option("--box-format", box_format, "cxcywh | xywh")->capture_default_str();
  auto* keep1_seed = add_seed(keep1, keep1_seed_value);

  // render-heatmap
  auto* render = app.add_subcommand("render-heatmap", "Gaussian target heatmap of one image");
  std::string render_in, render_out;
  std::optional<std::int64_t> image_id;
  int stride = 4;
  bool sidecar = false;
  render->add_option("--annotations", render_in, "dataset JSON")->required();
  render->add_option("--image-id", image_id, "defaults to the first image");
  render->add_option("--stride", stride)->capture_default_str();
  render->add_option("--box-format", box_format)->capture_default_str();
  render->add_option("--out", render_out, "tensor dump")->required();
  render->add_flag("--sidecar", sidecar, "write values to a .bin next to the header");

  // splg
  auto* splg = app.add_subcommand("splg", "pseudo labels from similarity to references");
  std::string splg_features, splg_target, splg_prediction, splg_out, splg_merged;
  SplgConfig splg_cfg;
  splg->add_option("--features", splg_features, "H x W x D tensor dump")->required();
  splg->add_option("--target", splg_target, "H x W x C labeled target dump")->required();
  splg->add_option("--prediction", splg_prediction, "optional; reports the focal loss");
  splg->add_option("--eta", splg_cfg.eta)->capture_default_str();
  splg->add_option("--t-sim", splg_cfg.t_sim)->capture_default_str();
  splg->add_option("--out", splg_out, "pseudo heatmap dump")->required();
  splg->add_option("--merged-out", splg_merged, "merged target dump");
  splg->add_flag("--sidecar", sidecar);

  // pgcl
  auto* pgcl = app.add_subcommand("pgcl", "group contrastive loss on one feature map");
  std::string pgcl_features, pgcl_target, pgcl_prediction;
  PgclConfig pgcl_cfg;
  pgcl->add_option("--features", pgcl_features)->required();
  pgcl->add_option("--target", pgcl_target)->required();
  pgcl->add_option("--prediction", pgcl_prediction, "scores for top-m selection")->required();
  pgcl->add_option("--m", pgcl_cfg.m)->capture_default_str();
  pgcl->add_option("--tau", pgcl_cfg.tau)->capture_default_str();

  // pool
  auto* pool = app.add_subcommand("pool", "average-pool pseudo labels per anchor size");
  std::string pool_in, pool_out_dir;
  pool->add_option("--in", pool_in, "heatmap dump")->required();
  pool->add_option("--out-dir", pool_out_dir)->required();
  pool->add_flag("--sidecar", sidecar);

  // eval
  auto* eval = app.add_subcommand("eval", "score-aware COCO-style AP");
  std::string eval_gt, eval_dets, eval_out, eval_csv, eval_svg, iou_thrs;
  EvalConfig eval_cfg;
  eval->add_option("--gt", eval_gt, "ground-truth dataset JSON")->required();
  eval->add_option("--dets", eval_dets, "detections JSON")->required();
  eval->add_option("--iou-thrs", iou_thrs, "comma list, default 0.50:0.05:0.95");
  eval->add_option("--max-dets", eval_cfg.max_dets)->capture_default_str();
  eval->add_option("--box-format", box_format, "ground-truth box format")->capture_default_str();
  eval->add_option("--out", eval_out, "JSON report (stdout if omitted)");
  eval->add_option("--csv", eval_csv, "AP@S_i table");
  eval->add_option("--svg", eval_svg, "AP@S_i vs t_s plot");

  // demo
  auto* demo = app.add_subcommand("demo", "gradient descent on a synthetic scene");
  SceneSpec scene;
  TrainConfig train;
  std::string demo_json, demo_csv, demo_svg, demo_dump;
  demo->add_option("--grid", scene.grid_height, "square grid side")->capture_default_str();
  demo->add_option("--categories", scene.num_categories)->capture_default_str();
  demo->add_option("--instances", scene.instances_per_category)->capture_default_str();
  demo->add_option("--dim", scene.dim)->capture_default_str();
  demo->add_option("--noise", scene.noise)->capture_default_str();
  demo->add_option("--steps", train.steps)->capture_default_str();
  demo->add_option("--lr", train.lr)->capture_default_str();
  demo->add_flag("--line-search", train.line_search, "halve the step until the loss does not rise");
  demo->add_option("--t-sim", train.splg.t_sim)->capture_default_str();
  demo->add_option("--m", train.pgcl.m)->capture_default_str();
  demo->add_option("--tau", train.pgcl.tau)->capture_default_str();
  demo->add_option("--out-json", demo_json, "trajectory JSON (stdout if omitted)");
  demo->add_option("--out-csv", demo_csv);
  demo->add_option("--svg", demo_svg, "loss and recall curves");
  demo->add_option("--dump-scene", demo_dump,
                   "also write the scene's features, keep1 target and datasets here");
  auto* demo_seed = add_seed(demo, scene.seed);

  // gradcheck
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every gradient");
  GradcheckConfig gc;
  std::string grad_json;
  grad->add_option("--instances", gc.instances)->capture_default_str();
  grad->add_option("--json", grad_json, "write results as JSON");
  auto* grad_seed = add_seed(grad, gc.seed);

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();
    // flag > DMINER_SEED > config file > default
    struct SeedSlot {
      CLI::App* owner;
      CLI::Option* opt;
      std::uint64_t* target;
    };
    const SeedSlot seeds[] = {{keep1, keep1_seed, &keep1_seed_value},
                              {demo, demo_seed, &scene.seed},
                              {grad, grad_seed, &gc.seed}};
    bool seed_on_cli = false;
    for (const auto& s : seeds) seed_on_cli = seed_on_cli || (s.owner == sub && s.opt->count() > 0);
    if (!config_path.empty()) apply_config(sub, read_flat_config(config_path));
    if (const char* env = std::getenv("DMINER_SEED"); env && !seed_on_cli) {
      for (const auto& s : seeds) {
        if (s.owner == sub) *s.target = std::stoull(env);
      }
    }
    const BoxFormat format = parse_box_format(box_format);

    if (sub == keep1) {
      const Dataset full = load_dataset(keep1_in, format);
      const Dataset kept = keep1_transform(full, keep1_seed_value);
      save_dataset(kept, keep1_out);
      const auto r = reduction_report(full, kept);
      json j{{"seed", keep1_seed_value},
             {"full_instances", r.full_instances},
             {"kept_instances", r.kept_instances},
             {"reduction_ratio", r.reduction_ratio},
             {"full_per_category", r.full_per_category},
             {"kept_per_category", r.kept_per_category}};
      std::cout << j.dump(2) << "\n";
    } else if (sub == render) {
      const Dataset d = load_dataset(render_in, format);
      const auto& img = pick_image(d, image_id);
      const auto t = render_target(img.annotations, Grid(img.height, img.width, stride),
                                   d.num_categories());
      io::save_tensor(t.tensor, render_out, sidecar);
    } else if (sub == splg) {
      splg_cfg.validate();
      const Tensor3 f = io::load_tensor(splg_features);
      const Tensor3 y = io::load_tensor(splg_target);
      const auto cats = peak_categories(y);
      const auto refs = extract_reference_features(f, y, cats);
      const auto u = collect_unlabeled(f, y);
      const Tensor3 pseudo = build_pseudo_heatmap(similarity(u, refs), u, refs, splg_cfg, y.channels());
      io::save_tensor(pseudo, splg_out, sidecar);
      const Tensor3 merged = merge_targets(y, pseudo);
      if (!splg_merged.empty()) io::save_tensor(merged, splg_merged, sidecar);
      std::vector<int> per_channel(y.channels(), 0);
      for (int yy = 0; yy < pseudo.height(); ++yy)
        for (int xx = 0; xx < pseudo.width(); ++xx)
          for (int c = 0; c < pseudo.channels(); ++c) per_channel[c] += pseudo.at(yy, xx, c) > 0.0;
      json j{{"reference_categories", cats},
             {"unlabeled_cells", u.positions.size()},
             {"pseudo_cells_per_channel", per_channel}};
      if (!splg_prediction.empty()) {
        j["splg_loss"] = splg_loss(io::load_tensor(splg_prediction), merged, splg_cfg).loss;
      }
      std::cout << j.dump(2) << "\n";
    } else if (sub == pgcl) {
      pgcl_cfg.validate();
      const Tensor3 f = io::load_tensor(pgcl_features);
      const Tensor3 y = io::load_tensor(pgcl_target);
      const Tensor3 p = io::load_tensor(pgcl_prediction);
      const auto cats = peak_categories(y);
      const auto q = build_queries(f, y, cats);
      const auto top = select_topm(p, pgcl_cfg.m, labeled_centers(y));
      const auto pos = build_positive_set(f, top, cats);
      const auto r = pgcl_loss(q, pos, pgcl_cfg);
      json j{{"loss", r.loss}, {"queries", cats.size()}, {"m", pgcl_cfg.m}, {"tau", pgcl_cfg.tau}};
      std::cout << j.dump(2) << "\n";
    } else if (sub == pool) {
      const AnchorSpec spec;
      const auto levels = anchor_pseudo_pool(io::load_tensor(pool_in), spec);
      fs::create_directories(pool_out_dir);
      json j = json::array();
      for (std::size_t i = 0; i < levels.size(); ++i) {
        const fs::path out = fs::path(pool_out_dir) / ("anchor" + std::to_string(spec.anchor_sizes[i]) +
                                                       "_k" + std::to_string(spec.kernel_sizes[i]) + ".json");
        io::save_tensor(levels[i], out, sidecar);
        j.push_back({{"anchor", spec.anchor_sizes[i]}, {"kernel", spec.kernel_sizes[i]}, {"file", out.string()}});
      }
      std::cout << j.dump(2) << "\n";
    } else if (sub == eval) {
      if (!iou_thrs.empty()) eval_cfg.iou_thresholds = parse_list(iou_thrs);
      const Dataset gts = load_dataset(eval_gt, format);
      const auto dets = io::load_detections(eval_dets);
      const auto r = evaluate(gts, dets, eval_cfg);
      emit(io::eval_result_to_json(r), eval_out);
      if (!eval_csv.empty()) io::write_file(eval_csv, io::eval_result_to_csv(r));
      if (!eval_svg.empty()) {
        io::write_file(eval_svg, io::line_chart_svg("AP@S by score threshold", "t_s",
                                                    {{"AP@S_i", r.score_thresholds, r.ap_at_s}}));
      }
    } else if (sub == demo) {
      scene.grid_width = scene.grid_height;
      if (!demo_dump.empty()) {
        const Scene sc = gen_scene(scene);
        const fs::path dir = demo_dump;
        fs::create_directories(dir);
        io::save_tensor(sc.features, dir / "features.json");
        io::save_tensor(render_target(sc.keep1.images[0].annotations, sc.grid, scene.num_categories).tensor,
                        dir / "target.json");
        save_dataset(sc.full, dir / "full.json");
        save_dataset(sc.keep1, dir / "keep1.json");
      }
      const auto r = train_demo(scene, train);
      emit(io::trajectory_to_json(r), demo_json);
      if (!demo_csv.empty()) io::write_file(demo_csv, io::trajectory_to_csv(r));
      if (!demo_svg.empty()) {
        std::vector<double> steps(r.l_total.size());
        for (std::size_t i = 0; i < steps.size(); ++i) steps[i] = static_cast<double>(i);
        io::write_file(demo_svg, io::line_chart_svg("synthetic scene training", "step",
                                                    {{"L_total", steps, r.l_total},
                                                     {"L_splg", steps, r.l_splg},
                                                     {"pseudo recall", steps, r.recall},
                                                     {"AP@S", steps, r.ap_at_s}}));
      }
    } else if (sub == grad) {
      const auto results = run_gradcheck(gc);
      bool ok = true;
      for (const auto& r : results) {
        std::printf("%-11s n=%-4d max_rel=%.3e max_abs=%.3e %s\n", r.name, r.instances,
                    r.max_rel_error, r.max_abs_error, r.passed ? "ok" : "FAILED");
        ok = ok && r.passed;
      }
      if (!grad_json.empty()) io::write_file(grad_json, io::gradcheck_to_json(results));
      return ok ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
