#include "layerbokeh/oracle/scene.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <system_error>

#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/image_io.hpp"

namespace layerbokeh::oracle {

using nlohmann::json;

PlaneCoefficients PlaneCoefficients::constant(double disparity) {
  if (!(disparity > 0.0)) {
    throw InvalidArgument("constant plane needs disparity > 0");
  }
  return PlaneCoefficients{0.0, 0.0, 1.0 / disparity};
}

namespace {

constexpr double kDisparityTolerance = 1e-9;

std::string layer_name(std::size_t i) {
  return "layer " + std::to_string(i);
}

// Plane disparity at the four corners of the rectangle [x0,x1]x[y0,y1]; the
// extremes of a linear function over a rectangle are at its corners.
std::pair<double, double> plane_range(const PlaneCoefficients& p, double x0,
                                      double y0, double x1, double y1) {
  const double v[4] = {p.disparity_at(x0, y0), p.disparity_at(x1, y0),
                       p.disparity_at(x0, y1), p.disparity_at(x1, y1)};
  return {std::min({v[0], v[1], v[2], v[3]}),
          std::max({v[0], v[1], v[2], v[3]})};
}

}  // namespace

void SceneSpec::validate() const {
  if (width < 1 || height < 1) {
    throw InvalidArgument("scene canvas must be at least 1x1");
  }
  if (layers.empty()) throw InvalidArgument("scene has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const PlanarLayer& layer = layers[i];
    if (layer.rgba.channels() != 4) {
      throw InvalidArgument(layer_name(i) + " must be RGBA");
    }
    if (!(layer.plane.c > 0.0) || !std::isfinite(layer.plane.a) ||
        !std::isfinite(layer.plane.b) || !std::isfinite(layer.plane.c)) {
      throw InvalidArgument(layer_name(i) + " needs finite coefficients, c > 0");
    }
    const double x0 = layer.offset_x;
    const double y0 = layer.offset_y;
    const double x1 = x0 + layer.rgba.width() - 1;
    const double y1 = y0 + layer.rgba.height() - 1;
    const auto [lo, hi] = plane_range(layer.plane, x0, y0, x1, y1);
    if (lo < -kDisparityTolerance || hi > 1.0 + kDisparityTolerance) {
      throw InvalidArgument(layer_name(i) +
                            " disparity leaves [0,1] over its footprint");
    }
  }
  const PlanarLayer& back = layers.front();
  if (!back.full_frame || back.offset_x != 0 || back.offset_y != 0 ||
      back.rgba.width() != width || back.rgba.height() != height) {
    throw InvalidArgument("back layer must be full-frame and cover the canvas");
  }
  for (std::size_t p = 0; p < back.rgba.pixel_count(); ++p) {
    if (back.rgba.data()[p * 4 + 3] < 1.0f) {
      throw InvalidArgument("back layer must be opaque (alpha == 1)");
    }
  }
  // Where footprints overlap, a later (nearer) layer must be strictly nearer.
  for (std::size_t j = 1; j < layers.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const PlanarLayer& back_layer = layers[i];
      const PlanarLayer& front_layer = layers[j];
      const double x0 = std::max(back_layer.offset_x, front_layer.offset_x);
      const double y0 = std::max(back_layer.offset_y, front_layer.offset_y);
      const double x1 =
          std::min(back_layer.offset_x + back_layer.rgba.width(),
                   front_layer.offset_x + front_layer.rgba.width()) - 1.0;
      const double y1 =
          std::min(back_layer.offset_y + back_layer.rgba.height(),
                   front_layer.offset_y + front_layer.rgba.height()) - 1.0;
      if (x1 < x0 || y1 < y0) continue;
      // front - back is linear, so checking the overlap corners suffices.
      const double corners[4][2] = {{x0, y0}, {x1, y0}, {x0, y1}, {x1, y1}};
      for (const auto& c : corners) {
        if (front_layer.plane.disparity_at(c[0], c[1]) <=
            back_layer.plane.disparity_at(c[0], c[1])) {
          throw InvalidArgument(layer_name(j) + " is not strictly in front of " +
                                layer_name(i) + " where they overlap");
        }
      }
    }
  }
}

double SceneSpec::layer_center_disparity(std::size_t layer) const {
  const PlanarLayer& l = layers.at(layer);
  return l.plane.disparity_at(l.offset_x + (l.rgba.width() - 1) * 0.5,
                              l.offset_y + (l.rgba.height() - 1) * 0.5);
}

std::string format_exact(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_exact(const std::string& text) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ParseError("not a decimal number: \"" + text + "\"");
  }
  return value;
}

json scene_to_json(const SceneSpec& scene,
                   const std::vector<std::string>& image_paths) {
  if (image_paths.size() != scene.layers.size()) {
    throw InvalidArgument("one image path per layer required");
  }
  json layers = json::array();
  for (std::size_t i = 0; i < scene.layers.size(); ++i) {
    const PlanarLayer& l = scene.layers[i];
    layers.push_back({
        {"image", image_paths[i]},
        {"plane",
         {{"a", format_exact(l.plane.a)},
          {"b", format_exact(l.plane.b)},
          {"c", format_exact(l.plane.c)}}},
        {"offset", {{"x", l.offset_x}, {"y", l.offset_y}}},
        {"full_frame", l.full_frame},
    });
  }
  return json{{"version", 1},
              {"canvas", {{"width", scene.width}, {"height", scene.height}}},
              {"layers", layers}};
}

namespace {

const json& require(const json& obj, const std::string& key,
                    const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError((where.empty() ? key : where + "." + key) + ": missing");
  }
  return *it;
}

int require_int(const json& obj, const std::string& key,
                const std::string& where) {
  const json& v = require(obj, key, where);
  const std::string field = where.empty() ? key : where + "." + key;
  if (!v.is_number_integer()) throw ParseError(field + ": expected an integer");
  return v.get<int>();
}

double require_coefficient(const json& obj, const std::string& key,
                           const std::string& where) {
  const json& v = require(obj, key, where);
  const std::string field = where + "." + key;
  if (v.is_string()) {
    try {
      return parse_exact(v.get<std::string>());
    } catch (const ParseError& e) {
      throw ParseError(field + ": " + e.what());
    }
  }
  if (v.is_number()) return v.get<double>();
  throw ParseError(field + ": expected a decimal string");
}

}  // namespace

SceneSpec scene_from_json(const json& doc,
                          const std::filesystem::path& base_dir) {
  SceneSpec scene;
  const json& canvas = require(doc, "canvas", "");
  scene.width = require_int(canvas, "width", "canvas");
  scene.height = require_int(canvas, "height", "canvas");
  const json& layers = require(doc, "layers", "");
  if (!layers.is_array()) throw ParseError("layers: expected an array");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string where = "layers[" + std::to_string(i) + "]";
    const json& entry = layers[i];
    const json& image = require(entry, "image", where);
    if (!image.is_string()) {
      throw ParseError(where + ".image: expected a path string");
    }
    const json& plane = require(entry, "plane", where);
    PlaneCoefficients coeffs{require_coefficient(plane, "a", where + ".plane"),
                             require_coefficient(plane, "b", where + ".plane"),
                             require_coefficient(plane, "c", where + ".plane")};
    int ox = 0;
    int oy = 0;
    if (entry.contains("offset")) {
      ox = require_int(entry["offset"], "x", where + ".offset");
      oy = require_int(entry["offset"], "y", where + ".offset");
    }
    bool full_frame = false;
    if (entry.contains("full_frame")) {
      if (!entry["full_frame"].is_boolean()) {
        throw ParseError(where + ".full_frame: expected a boolean");
      }
      full_frame = entry["full_frame"].get<bool>();
    }
    ImageBuffer rgba = load_image(base_dir / image.get<std::string>());
    if (rgba.channels() != 4) {
      // Opaque RGB/gray inputs get a unit alpha channel.
      std::vector<float> data(rgba.pixel_count() * 4, 1.0f);
      for (std::size_t p = 0; p < rgba.pixel_count(); ++p) {
        for (int c = 0; c < 3; ++c) {
          const int src = rgba.color_channels() == 1 ? 0 : c;
          data[p * 4 + c] = rgba.data()[p * rgba.channels() + src];
        }
        if (rgba.has_alpha()) {
          data[p * 4 + 3] = rgba.data()[p * rgba.channels() + 1];
        }
      }
      rgba = ImageBuffer(rgba.width(), rgba.height(), 4, ColorSpace::kEncoded,
                         std::move(data));
    }
    scene.layers.push_back(
        PlanarLayer{std::move(rgba), coeffs, ox, oy, full_frame});
  }
  return scene;
}

SceneSpec load_scene(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open " + json_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(json_path.string() + ": " + e.what());
  }
  return scene_from_json(doc, json_path.parent_path());
}

void save_scene(const SceneSpec& scene,
                const std::filesystem::path& json_path) {
  const std::filesystem::path dir = json_path.parent_path();
  std::vector<std::string> names;
  for (std::size_t i = 0; i < scene.layers.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "layer_%02zu.png", i);
    names.emplace_back(name);
    save_image(scene.layers[i].rgba, dir / names.back(), 8);
  }
  const std::string text = scene_to_json(scene, names).dump(2) + "\n";
  write_file_atomic(json_path,
                    std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                              text.size()));
}

}  // namespace layerbokeh::oracle
