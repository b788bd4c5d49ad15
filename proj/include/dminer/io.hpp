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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dminer/core.hpp"
#include "dminer/eval.hpp"
#include "dminer/harness.hpp"

namespace dminer::io {

// Tensor dump: a JSON header {"dims": [H, W, C], "dtype": "f64",
// "layout": "yxc"} plus either "data_b64" (little-endian f64, row-major) or
// "data_file" naming a sidecar binary relative to the header's directory.
std::string tensor_to_json(const Tensor3& t);
Tensor3 tensor_from_json(std::string_view text, const std::filesystem::path& base_dir = {});

void save_tensor(const Tensor3& t, const std::filesystem::path& path, bool sidecar = false);
Tensor3 load_tensor(const std::filesystem::path& path);

std::vector<Detection> parse_detections(std::string_view text);
std::vector<Detection> load_detections(const std::filesystem::path& path);
std::string detections_to_json(const std::vector<Detection>& dets);

std::string eval_result_to_json(const EvalResult& r);
// Header "t_s,ap" then one row per score threshold.
std::string eval_result_to_csv(const EvalResult& r);

std::string trajectory_to_json(const TrajectoryReport& r);
// One row per recorded step, step 0 first.
std::string trajectory_to_csv(const TrajectoryReport& r);

std::string gradcheck_to_json(const std::vector<GradcheckResult>& results);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal static line chart.
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::vector<Series>& series);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace dminer::io
