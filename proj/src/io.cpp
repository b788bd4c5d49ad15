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

#include "dminer/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <sodium.h>

#include "json.hpp"

#include "dminer/error.hpp"

namespace dminer::io {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "dump format assumes little-endian");

namespace {

std::string to_base64(std::span<const double> values) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  const std::size_t n = values.size_bytes();
  std::string out(sodium_base64_encoded_len(n, sodium_base64_VARIANT_ORIGINAL), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes, n, sodium_base64_VARIANT_ORIGINAL);
  out.resize(std::strlen(out.c_str()));
  return out;
}

std::vector<double> from_base64(const std::string& text, std::size_t count) {
  std::vector<double> values(count);
  std::size_t written = 0;
  if (sodium_base642bin(reinterpret_cast<unsigned char*>(values.data()), count * sizeof(double),
                        text.data(), text.size(), nullptr, &written, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      written != count * sizeof(double)) {
    throw Error(ErrorCode::kIo, "base64 payload does not decode to " + std::to_string(count) +
                                    " f64 values");
  }
  return values;
}

json header(const Tensor3& t) {
  return {{"dims", {t.height(), t.width(), t.channels()}}, {"dtype", "f64"}, {"layout", "yxc"}};
}

}  // namespace

std::string tensor_to_json(const Tensor3& t) {
  json j = header(t);
  j["data_b64"] = to_base64(t.data());
  return j.dump();
}

Tensor3 tensor_from_json(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kIo, std::string("tensor header: ") + e.what());
  }
  if (!j.is_object() || !j.contains("dims") || !j["dims"].is_array() || j["dims"].size() != 3) {
    throw Error(ErrorCode::kIo, "tensor header needs dims [H, W, C]");
  }
  if (j.value("dtype", "") != "f64" || j.value("layout", "") != "yxc") {
    throw Error(ErrorCode::kIo, "only dtype f64 with layout yxc is supported");
  }
  const int h = j["dims"][0].get<int>(), w = j["dims"][1].get<int>(), c = j["dims"][2].get<int>();
  if (h < 0 || w < 0 || c < 0) throw Error(ErrorCode::kIo, "negative dims");
  const std::size_t count = static_cast<std::size_t>(h) * w * c;
  std::vector<double> values;
  if (j.contains("data_b64")) {
    values = from_base64(j["data_b64"].get<std::string>(), count);
  } else if (j.contains("data_file")) {
    const auto path = base_dir / j["data_file"].get<std::string>();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open sidecar " + path.string());
    values.resize(count);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double)) {
      throw Error(ErrorCode::kIo, "sidecar " + path.string() + " is truncated");
    }
  } else {
    throw Error(ErrorCode::kIo, "tensor dump has neither data_b64 nor data_file");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kIo, "tensor dump holds non-finite values");
  }
  return Tensor3(h, w, c, std::move(values));
}

void save_tensor(const Tensor3& t, const std::filesystem::path& path, bool sidecar) {
  if (!sidecar) {
    write_file(path, tensor_to_json(t));
    return;
  }
  auto bin = path;
  bin.replace_extension(".bin");
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + bin.string());
  out.write(reinterpret_cast<const char*>(t.data().data()),
            static_cast<std::streamsize>(t.data().size_bytes()));
  json j = header(t);
  j["data_file"] = bin.filename().string();
  write_file(path, j.dump());
}

Tensor3 load_tensor(const std::filesystem::path& path) {
  return tensor_from_json(read_file(path), path.parent_path());
}

std::vector<Detection> parse_detections(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedAnnotations, std::string("detections: ") + e.what());
  }
  if (!j.is_array()) throw Error(ErrorCode::kMalformedAnnotations, "detections: expected an array");
  std::vector<Detection> dets;
  dets.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    try {
      Detection d;
      d.image_id = e.at("image_id").get<std::int64_t>();
      d.bbox = {e.at("cx").get<double>(), e.at("cy").get<double>(), e.at("w").get<double>(),
                e.at("h").get<double>()};
      d.category = e.at("category_id").get<int>();
      d.score = e.at("score").get<double>();
      if (!(d.score >= 0.0 && d.score <= 1.0)) {
        throw Error(ErrorCode::kMalformedAnnotations,
                    "detections[" + std::to_string(i) + "].score outside [0, 1]");
      }
      if (!(d.bbox.w > 0.0 && d.bbox.h > 0.0)) {
        throw Error(ErrorCode::kMalformedAnnotations,
                    "detections[" + std::to_string(i) + "] has non-positive size");
      }
      dets.push_back(d);
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kMalformedAnnotations,
                  "detections[" + std::to_string(i) + "]: " + ex.what());
    }
  }
  return dets;
}

std::vector<Detection> load_detections(const std::filesystem::path& path) {
  return parse_detections(read_file(path));
}

std::string detections_to_json(const std::vector<Detection>& dets) {
  json j = json::array();
  for (const auto& d : dets) {
    j.push_back({{"image_id", d.image_id},
                 {"cx", d.bbox.cx},
                 {"cy", d.bbox.cy},
                 {"w", d.bbox.w},
                 {"h", d.bbox.h},
                 {"category_id", d.category},
                 {"score", d.score}});
  }
  return j.dump(2);
}

std::string eval_result_to_json(const EvalResult& r) {
  json j;
  j["iou_thresholds"] = r.iou_thresholds;
  j["score_thresholds"] = r.score_thresholds;
  j["ap_table"] = r.table;
  j["ap_at_s"] = r.ap_at_s;
  j["ap_at_s_mean"] = r.ap_at_s_mean;
  j["evaluated_categories"] = r.evaluated_categories;
  return j.dump(2);
}

std::string eval_result_to_csv(const EvalResult& r) {
  std::ostringstream out;
  out.precision(10);
  out << "t_s,ap\n";
  for (std::size_t i = 0; i < r.ap_at_s.size(); ++i) {
    out << r.score_thresholds[i] << ',' << r.ap_at_s[i] << '\n';
  }
  return out.str();
}

std::string trajectory_to_json(const TrajectoryReport& r) {
  json j;
  j["steps"] = r.l_total.empty() ? 0 : r.l_total.size() - 1;
  j["l_total"] = r.l_total;
  j["l_splg"] = r.l_splg;
  j["l_pgcl"] = r.l_pgcl;
  j["l_off"] = r.l_off;
  j["l_size"] = r.l_size;
  j["pseudo_recall"] = r.recall;
  j["pseudo_precision"] = r.precision;
  j["ap_at_s"] = r.ap_at_s;
  j["lr"] = r.lr;
  return j.dump(2);
}

std::string trajectory_to_csv(const TrajectoryReport& r) {
  std::ostringstream out;
  out.precision(12);
  out << "step,l_total,l_splg,l_pgcl,l_off,l_size,pseudo_recall,pseudo_precision,ap_at_s,lr\n";
  for (std::size_t i = 0; i < r.l_total.size(); ++i) {
    out << i << ',' << r.l_total[i] << ',' << r.l_splg[i] << ',' << r.l_pgcl[i] << ','
        << r.l_off[i] << ',' << r.l_size[i] << ',' << r.recall[i] << ',' << r.precision[i] << ','
        << r.ap_at_s[i] << ',' << r.lr[i] << '\n';
  }
  return out.str();
}

std::string gradcheck_to_json(const std::vector<GradcheckResult>& results) {
  json j = json::array();
  for (const auto& r : results) {
    j.push_back({{"name", r.name},
                 {"instances", r.instances},
                 {"max_rel_error", r.max_rel_error},
                 {"max_abs_error", r.max_abs_error},
                 {"passed", r.passed}});
  }
  return j.dump(2);
}

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::vector<Series>& series) {
  constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 150, kTop = 40, kBottom = 50;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                            "#ff7f0e", "#9467bd", "#8c564b"};
  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.x) x_lo = std::min(x_lo, v), x_hi = std::max(x_hi, v);
    for (double v : s.y) {
      if (std::isfinite(v)) y_lo = std::min(y_lo, v), y_hi = std::max(y_hi, v);
    }
  }
  if (!(x_hi > x_lo)) x_lo -= 0.5, x_hi += 0.5;
  if (!(y_hi > y_lo)) y_lo -= 0.5, y_hi += 0.5;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph; };

  std::ostringstream o;
  o.precision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n"
    << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#444\"/>\n"
    << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">"
    << x_label << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double yv = y_lo + (y_hi - y_lo) * t / 4.0;
    const double xv = x_lo + (x_hi - x_lo) * t / 4.0;
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yv
      << "</text>\n"
      << "<text x=\"" << px(xv) << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">"
      << xv << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % std::size(kColors)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (std::isfinite(s.y[i])) o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    o << "\"/>\n"
      << "<text x=\"" << kW - kRight + 10 << "\" y=\"" << kTop + 16 * (k + 1) << "\" fill=\""
      << color << "\">" << s.label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << contents;
}

}  // namespace dminer::io
