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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dminer/core.hpp"

namespace dminer {

struct ImageRecord {
  std::int64_t id = 0;
  int width = 0;
  int height = 0;
  std::vector<Annotation> annotations;

  bool operator==(const ImageRecord&) const = default;
};

struct Dataset {
  std::vector<ImageRecord> images;
  std::vector<std::string> category_names;  // index == category id

  int num_categories() const noexcept { return static_cast<int>(category_names.size()); }
  std::size_t num_annotations() const noexcept;

  bool operator==(const Dataset&) const = default;
};

enum class BoxFormat {
  kCenter,  // "cx", "cy", "w", "h"
  kCorner,  // "bbox": [x, y, w, h], top-left corner
};

BoxFormat parse_box_format(std::string_view name);

Dataset parse_dataset(std::string_view json_text, BoxFormat format = BoxFormat::kCenter);
Dataset load_dataset(const std::filesystem::path& path,
                     BoxFormat format = BoxFormat::kCenter);

// Always writes center form.
std::string dataset_to_json(const Dataset& d, int indent = 2);
void save_dataset(const Dataset& d, const std::filesystem::path& path);

// Uniform draw in [0, n) keyed on (seed, image_id, category); independent of
// iteration order.
std::size_t keep1_choice(std::uint64_t seed, std::int64_t image_id, int category,
                         std::size_t n);

// Keeps one annotation per (image, category) present. Survivors keep their
// relative order within the image.
Dataset keep1_transform(const Dataset& d, std::uint64_t seed);

struct ReductionReport {
  std::size_t full_instances = 0;
  std::size_t kept_instances = 0;
  double reduction_ratio = 0.0;
  std::vector<std::size_t> full_per_category;
  std::vector<std::size_t> kept_per_category;
};

// Throws DatasetMismatch unless both datasets list the same image ids in the
// same order with the same category table.
ReductionReport reduction_report(const Dataset& full, const Dataset& kept);

}  // namespace dminer
