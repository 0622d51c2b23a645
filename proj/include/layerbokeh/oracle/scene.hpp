#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "layerbokeh/core/image.hpp"

namespace layerbokeh::oracle {

/// Planar disparity d(x, y) = (1 - a*x - b*y) / c over canvas pixel
/// coordinates. c must be positive.
struct PlaneCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 1.0;

  double disparity_at(double x, double y) const {
    return (1.0 - a * x - b * y) / c;
  }

  /// Fronto-parallel plane at disparity d > 0.
  static PlaneCoefficients constant(double disparity);
};

/// One RGBA object placed in the canvas at (offset_x, offset_y).
struct PlanarLayer {
  ImageBuffer rgba;  // 4 channels, encoded
  PlaneCoefficients plane;
  int offset_x = 0;
  int offset_y = 0;
  bool full_frame = false;
};

/// Layered scene, back-to-front. The first layer is the full-frame opaque
/// background.
struct SceneSpec {
  int width = 0;
  int height = 0;
  std::vector<PlanarLayer> layers;

  /// Throws InvalidArgument describing the first violated invariant.
  void validate() const;

  /// Disparity of the layer's plane at its footprint center.
  double layer_center_disparity(std::size_t layer) const;
};

/// Scene JSON document. Layer images are referenced by path relative to the
/// document; plane coefficients are decimal strings that round-trip doubles.
///
///   {"version": 1,
///    "canvas": {"width": W, "height": H},
///    "layers": [{"image": "layer_00.png",
///                "plane": {"a": "0", "b": "0", "c": "2.5"},
///                "offset": {"x": 0, "y": 0},
///                "full_frame": true}, ...]}
nlohmann::json scene_to_json(const SceneSpec& scene,
                             const std::vector<std::string>& image_paths);

/// Parses the document, loading layer images relative to base_dir. Errors
/// are ParseError naming the field (e.g. "layers[1].plane.c").
SceneSpec scene_from_json(const nlohmann::json& doc,
                          const std::filesystem::path& base_dir);

SceneSpec load_scene(const std::filesystem::path& json_path);

/// Writes layer PNGs (8-bit RGBA, "layer_XX.png") beside the JSON document.
void save_scene(const SceneSpec& scene, const std::filesystem::path& json_path);

/// Shortest decimal string that parses back to exactly the same double.
std::string format_exact(double value);
double parse_exact(const std::string& text);

}  // namespace layerbokeh::oracle
