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

#include "dminer/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "dminer/error.hpp"

namespace dminer {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

[[noreturn]] void malformed(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kMalformedAnnotations, where + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) malformed(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) malformed(where, std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number()) malformed(where + "." + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) malformed(where + "." + key, "not finite");
  return d;
}

std::int64_t integer(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number_integer()) malformed(where + "." + key, "expected an integer");
  return v.get<std::int64_t>();
}

BBox read_box(const json& a, BoxFormat format, const std::string& where) {
  if (format == BoxFormat::kCenter) {
    return {number(a, "cx", where), number(a, "cy", where), number(a, "w", where),
            number(a, "h", where)};
  }
  const json& b = field(a, "bbox", where);
  if (!b.is_array() || b.size() != 4 ||
      !std::all_of(b.begin(), b.end(), [](const json& e) { return e.is_number(); })) {
    malformed(where + ".bbox", "expected [x, y, w, h]");
  }
  const double x = b[0].get<double>(), y = b[1].get<double>();
  const double w = b[2].get<double>(), h = b[3].get<double>();
  return {x + 0.5 * w, y + 0.5 * h, w, h};
}

}  // namespace

std::size_t Dataset::num_annotations() const noexcept {
  std::size_t n = 0;
  for (const auto& im : images) n += im.annotations.size();
  return n;
}

BoxFormat parse_box_format(std::string_view name) {
  if (name == "cxcywh") return BoxFormat::kCenter;
  if (name == "xywh") return BoxFormat::kCorner;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown box format '" + std::string(name) + "' (expected xywh|cxcywh)");
}

Dataset parse_dataset(std::string_view json_text, BoxFormat format) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    malformed("document", e.what());
  }
  if (!root.is_object()) malformed("document", "expected a top-level object");

  Dataset d;
  const json& cats = field(root, "categories", "document");
  if (!cats.is_array()) malformed("categories", "expected an array");
  std::map<std::int64_t, std::string> by_id;
  for (std::size_t i = 0; i < cats.size(); ++i) {
    const std::string where = "categories[" + std::to_string(i) + "]";
    const auto id = integer(cats[i], "id", where);
    const json& name = field(cats[i], "name", where);
    if (!name.is_string()) malformed(where + ".name", "expected a string");
    if (!by_id.emplace(id, name.get<std::string>()).second) {
      malformed(where + ".id", "duplicate category id " + std::to_string(id));
    }
  }
  // Category ids must be dense 0..C-1.
  std::int64_t expect = 0;
  for (auto& [id, name] : by_id) {
    if (id != expect) {
      malformed("categories", "ids must be dense in [0, C); missing " +
                                  std::to_string(expect));
    }
    d.category_names.push_back(std::move(name));
    ++expect;
  }
  const int num_categories = d.num_categories();

  const json& images = field(root, "images", "document");
  if (!images.is_array()) malformed("images", "expected an array");
  d.images.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = "images[" + std::to_string(i) + "]";
    ImageRecord rec;
    rec.id = integer(images[i], "id", where);
    rec.width = static_cast<int>(integer(images[i], "width", where));
    rec.height = static_cast<int>(integer(images[i], "height", where));
    if (rec.width <= 0 || rec.height <= 0) malformed(where, "image size must be positive");
    const json& anns = field(images[i], "annotations", where);
    if (!anns.is_array()) malformed(where + ".annotations", "expected an array");
    for (std::size_t j = 0; j < anns.size(); ++j) {
      const std::string aw = where + ".annotations[" + std::to_string(j) + "]";
      Annotation a;
      a.bbox = read_box(anns[j], format, aw);
      const auto cat = integer(anns[j], "category_id", aw);
      if (cat < 0 || cat >= num_categories) {
        throw Error(ErrorCode::kCategoryOutOfRange,
                    aw + ".category_id: " + std::to_string(cat) + " not in [0, " +
                        std::to_string(num_categories) + ")");
      }
      a.category = static_cast<int>(cat);
      if (!(a.bbox.w > 0.0) || !(a.bbox.h > 0.0)) malformed(aw, "box size must be positive");
      if (a.bbox.cx < 0.0 || a.bbox.cy < 0.0 || a.bbox.cx >= rec.width ||
          a.bbox.cy >= rec.height) {
        malformed(aw, "box center outside image");
      }
      rec.annotations.push_back(a);
    }
    d.images.push_back(std::move(rec));
  }
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, BoxFormat format) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), format);
}

std::string dataset_to_json(const Dataset& d, int indent) {
  json root;
  root["categories"] = json::array();
  for (std::size_t c = 0; c < d.category_names.size(); ++c) {
    root["categories"].push_back({{"id", c}, {"name", d.category_names[c]}});
  }
  root["images"] = json::array();
  for (const auto& im : d.images) {
    json anns = json::array();
    for (const auto& a : im.annotations) {
      anns.push_back({{"cx", a.bbox.cx},
                      {"cy", a.bbox.cy},
                      {"w", a.bbox.w},
                      {"h", a.bbox.h},
                      {"category_id", a.category}});
    }
    root["images"].push_back({{"id", im.id},
                              {"width", im.width},
                              {"height", im.height},
                              {"annotations", std::move(anns)}});
  }
  return root.dump(indent);
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << dataset_to_json(d) << '\n';
}

std::size_t keep1_choice(std::uint64_t seed, std::int64_t image_id, int category,
                         std::size_t n) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ static_cast<std::uint64_t>(image_id));
  key = splitmix64(key ^ static_cast<std::uint64_t>(category));
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  while (key >= limit) key = splitmix64(key);
  return static_cast<std::size_t>(key % n);
}

Dataset keep1_transform(const Dataset& d, std::uint64_t seed) {
  Dataset out;
  out.category_names = d.category_names;
  out.images.reserve(d.images.size());
  for (const auto& im : d.images) {
    std::map<int, std::vector<std::size_t>> by_cat;
    for (std::size_t i = 0; i < im.annotations.size(); ++i) {
      by_cat[im.annotations[i].category].push_back(i);
    }
    std::vector<bool> keep(im.annotations.size(), false);
    for (const auto& [cat, idx] : by_cat) {
      keep[idx[keep1_choice(seed, im.id, cat, idx.size())]] = true;
    }
    ImageRecord rec{im.id, im.width, im.height, {}};
    for (std::size_t i = 0; i < im.annotations.size(); ++i) {
      if (keep[i]) rec.annotations.push_back(im.annotations[i]);
    }
    out.images.push_back(std::move(rec));
  }
  return out;
}

ReductionReport reduction_report(const Dataset& full, const Dataset& kept) {
  if (full.images.size() != kept.images.size() ||
      full.category_names != kept.category_names) {
    throw Error(ErrorCode::kDatasetMismatch, "image count or category table differs");
  }
  ReductionReport r;
  const auto num_categories = static_cast<std::size_t>(full.num_categories());
  r.full_per_category.assign(num_categories, 0);
  r.kept_per_category.assign(num_categories, 0);
  for (std::size_t i = 0; i < full.images.size(); ++i) {
    if (full.images[i].id != kept.images[i].id) {
      throw Error(ErrorCode::kDatasetMismatch,
                  "image " + std::to_string(i) + " id " + std::to_string(full.images[i].id) +
                      " vs " + std::to_string(kept.images[i].id));
    }
    for (const auto& a : full.images[i].annotations) ++r.full_per_category[a.category];
    for (const auto& a : kept.images[i].annotations) ++r.kept_per_category[a.category];
  }
  r.full_instances = full.num_annotations();
  r.kept_instances = kept.num_annotations();
  r.reduction_ratio =
      r.full_instances == 0
          ? 0.0
          : 1.0 - static_cast<double>(r.kept_instances) / static_cast<double>(r.full_instances);
  return r;
}

}  // namespace dminer
