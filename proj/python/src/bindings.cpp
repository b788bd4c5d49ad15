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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dminer/adapters.hpp"
#include "dminer/dataset.hpp"
#include "dminer/error.hpp"
#include "dminer/eval.hpp"
#include "dminer/harness.hpp"
#include "dminer/heatmap.hpp"
#include "dminer/io.hpp"
#include "dminer/pgcl.hpp"
#include "dminer/splg.hpp"

namespace py = pybind11;
using namespace dminer;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor3 to_tensor(const Array& a) {
  if (a.ndim() != 3) throw Error(ErrorCode::kInvalidArgument, "expected an H x W x C array");
  Tensor3 t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
  std::copy(a.data(), a.data() + a.size(), t.data().begin());
  return t;
}

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw Error(ErrorCode::kInvalidArgument, "expected a 2-d array");
  Matrix m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

Array from_tensor(const Tensor3& t) {
  Array a({t.height(), t.width(), t.channels()});
  std::copy(t.data().begin(), t.data().end(), a.mutable_data());
  return a;
}

Array from_matrix(const Matrix& m) {
  Array a({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), a.mutable_data());
  return a;
}

// (cx, cy, w, h, category) tuples
std::vector<Annotation> to_annotations(const std::vector<std::tuple<double, double, double, double, int>>& rows) {
  std::vector<Annotation> out;
  for (const auto& [cx, cy, w, h, c] : rows) out.push_back({{cx, cy, w, h}, c});
  return out;
}

py::dict eval_dict(const EvalResult& r) {
  py::dict d;
  d["iou_thresholds"] = r.iou_thresholds;
  d["score_thresholds"] = r.score_thresholds;
  d["table"] = r.table;
  d["ap_at_s"] = r.ap_at_s;
  d["ap_at_s_mean"] = r.ap_at_s_mean;
  d["evaluated_categories"] = r.evaluated_categories;
  return d;
}

}  // namespace

PYBIND11_MODULE(_dminer, m) {
  m.doc() = "Bindings for the dminer C++ core";

  // The module attribute keeps the type alive; the raw pointer is enough here.
  static PyObject* error_type = py::exception<Error>(m, "DminerError", PyExc_ValueError).ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("code") = std::string(ErrorName(e.code()));
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  m.def("gaussian_radius", &gaussian_radius, py::arg("w_cells"), py::arg("h_cells"),
        py::arg("min_overlap") = kDefaultMinOverlap);

  m.def(
      "render_target",
      [](const std::vector<std::tuple<double, double, double, double, int>>& anns, int input_height,
         int input_width, int stride, int num_categories) {
        const auto a = to_annotations(anns);
        return from_tensor(render_target(a, Grid(input_height, input_width, stride), num_categories).tensor);
      },
      py::arg("annotations"), py::arg("input_height"), py::arg("input_width"), py::arg("stride"),
      py::arg("num_categories"), "annotations: list of (cx, cy, w, h, category)");

  m.def(
      "keep1",
      [](const std::string& dataset_json, std::uint64_t seed, const std::string& box_format) {
        return dataset_to_json(keep1_transform(parse_dataset(dataset_json, parse_box_format(box_format)), seed));
      },
      py::arg("dataset_json"), py::arg("seed"), py::arg("box_format") = "cxcywh",
      "returns the sparse dataset as JSON (center boxes)");

  m.def(
      "splg_loss",
      [](const Array& prediction, const Array& target, double gamma, double alpha) {
        SplgConfig cfg;
        cfg.gamma = gamma;
        cfg.alpha = alpha;
        const auto r = splg_loss(to_tensor(prediction), to_tensor(target), cfg);
        return py::make_tuple(r.loss, from_tensor(r.grad));
      },
      py::arg("prediction"), py::arg("target"), py::arg("gamma") = 2.0, py::arg("alpha") = 4.0);

  m.def(
      "pseudo_labels",
      [](const Array& features, const Array& target, double eta, double t_sim) {
        SplgConfig cfg;
        cfg.eta = eta;
        cfg.t_sim = t_sim;
        cfg.validate();
        const Tensor3 f = to_tensor(features), y = to_tensor(target);
        std::vector<int> cats;
        const auto centers = labeled_centers(y);
        for (int c = 0; c < y.channels(); ++c) {
          for (const auto& p : centers) {
            if (y.at(p.y, p.x, c) == 1.0) {
              cats.push_back(c);
              break;
            }
          }
        }
        const auto refs = extract_reference_features(f, y, cats);
        const auto u = collect_unlabeled(f, y);
        return from_tensor(build_pseudo_heatmap(similarity(u, refs), u, refs, cfg, y.channels()));
      },
      py::arg("features"), py::arg("target"), py::arg("eta") = 1.0, py::arg("t_sim") = 0.6);

  m.def(
      "pgcl_loss",
      [](const Array& q, const Array& k, const Array& k0, const Array& mask, double tau) {
        const auto r = pgcl_loss(to_matrix(q), to_matrix(k), to_matrix(k0), to_matrix(mask), tau);
        return py::make_tuple(r.loss, from_matrix(r.d_queries), from_matrix(r.d_keys),
                              from_matrix(r.d_primary_keys));
      },
      py::arg("queries"), py::arg("keys"), py::arg("primary_keys"), py::arg("mask"),
      py::arg("tau") = 0.07, "returns (loss, d_queries, d_keys, d_primary_keys)");

  m.def(
      "average_pool", [](const Array& map, int kernel) { return from_tensor(average_pool(to_tensor(map), kernel)); },
      py::arg("map"), py::arg("kernel"));

  m.def(
      "anchor_pseudo_pool",
      [](const Array& pseudo) {
        std::vector<Array> out;
        for (const auto& t : anchor_pseudo_pool(to_tensor(pseudo))) out.push_back(from_tensor(t));
        return out;
      },
      py::arg("pseudo"), "one pooled map per default anchor size (32 .. 512)");

  m.def("default_fpn_config", [] { return default_fpn_config().m_per_level; });

  m.def(
      "evaluate",
      [](const std::string& gt_json, const std::string& dets_json, int max_dets,
         const std::string& box_format) {
        EvalConfig cfg;
        cfg.max_dets = max_dets;
        const auto gts = parse_dataset(gt_json, parse_box_format(box_format));
        return eval_dict(evaluate(gts, io::parse_detections(dets_json), cfg));
      },
      py::arg("gt_json"), py::arg("dets_json"), py::arg("max_dets") = 100,
      py::arg("box_format") = "cxcywh");

  m.def(
      "train_demo",
      [](std::uint64_t seed, int steps, double lr, bool line_search) {
        SceneSpec spec;
        spec.seed = seed;
        TrainConfig cfg;
        cfg.steps = steps;
        cfg.lr = lr;
        cfg.line_search = line_search;
        TrajectoryReport r;
        {
          py::gil_scoped_release release;
          r = train_demo(spec, cfg);
        }
        py::dict d;
        d["l_total"] = r.l_total;
        d["l_splg"] = r.l_splg;
        d["l_pgcl"] = r.l_pgcl;
        d["l_off"] = r.l_off;
        d["l_size"] = r.l_size;
        d["pseudo_recall"] = r.recall;
        d["pseudo_precision"] = r.precision;
        d["ap_at_s"] = r.ap_at_s;
        d["lr"] = r.lr;
        return d;
      },
      py::arg("seed") = 0, py::arg("steps") = 200, py::arg("lr") = 0.05, py::arg("line_search") = false);

  m.def(
      "gradcheck",
      [](int instances, std::uint64_t seed) {
        GradcheckConfig cfg;
        cfg.instances = instances;
        cfg.seed = seed;
        py::list out;
        for (const auto& r : run_gradcheck(cfg)) {
          py::dict d;
          d["name"] = r.name;
          d["instances"] = r.instances;
          d["max_rel_error"] = r.max_rel_error;
          d["max_abs_error"] = r.max_abs_error;
          d["passed"] = r.passed;
          out.append(d);
        }
        return out;
      },
      py::arg("instances") = 100, py::arg("seed") = 7);
}
