#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "layerbokeh/core/image.hpp"
#include "layerbokeh/core/params.hpp"
#include "layerbokeh/oracle/scene.hpp"

namespace layerbokeh::oracle {

/// A ray with |denominator| below this is treated as parallel to the plane.
inline constexpr double kParallelEpsilon = 1e-6;
/// Ray walks stop once the remaining energy drops below this.
inline constexpr double kEnergyEpsilon = 1e-3;
inline constexpr int kDefaultRayCount = 2500;

/// Point on the unit aperture disk.
struct ApertureSample {
  double u = 0.0;
  double v = 0.0;
};

/// n points in the unit disk: the center first, then concentric-mapped
/// jittered strata (with any remainder drawn uniformly). Deterministic in
/// (n, seed).
std::vector<ApertureSample> aperture_samples(int n, std::uint64_t seed);

struct SensorPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Where the ray through pixel (x, y) and aperture point (u, v) meets the
/// given plane, projected back to the sensor. Empty when the ray is
/// (nearly) parallel to the plane.
std::optional<SensorPoint> project_sample(double x, double y,
                                          const PlaneCoefficients& plane,
                                          double blur_amount,
                                          double refocus_disparity, double u,
                                          double v);

/// Result of walking one ray through the layers front to back.
struct RayResult {
  double rgb[3] = {0.0, 0.0, 0.0};  // sum of weight * alpha * linear color
  double coverage = 0.0;            // sum of weight * alpha
  double disparity = 0.0;           // sum of weight * alpha * plane disparity
  double residual = 1.0;            // energy left when the walk stopped
};

/// Scene with layers pre-converted to linear premultiplied RGBA for lookups.
class PreparedScene {
 public:
  PreparedScene(const SceneSpec& scene, double gamma);

  int width() const { return width_; }
  int height() const { return height_; }

  RayResult walk_ray(double x, double y, double blur_amount,
                     double refocus_disparity, double u, double v) const;

 private:
  struct Layer {
    std::vector<float> premultiplied;  // linear r*a, g*a, b*a, a
    int width;
    int height;
    int offset_x;
    int offset_y;
    PlaneCoefficients plane;
  };

  // Bilinear lookup with zero outside the footprint.
  void sample(const Layer& layer, double x, double y, float out[4]) const;

  int width_;
  int height_;
  std::vector<Layer> layers_;  // back to front
};

/// Ground-truth bokeh by backward ray tracing with alpha energy splitting.
/// Output is gamma-encoded.
ImageBuffer trace_bokeh(const SceneSpec& scene, const RenderParams& params,
                        int n_samples = kDefaultRayCount,
                        std::uint64_t seed = 0);

/// Same estimate before gamma encoding.
ImageBuffer trace_bokeh_linear(const SceneSpec& scene,
                               const RenderParams& params,
                               int n_samples = kDefaultRayCount,
                               std::uint64_t seed = 0);

struct AllInFocus {
  ImageBuffer image;  // 3 channels
  DisparityMap disparity;
};

/// Sharp composite of the scene and its visibility-weighted disparity.
/// image is gamma-encoded with `gamma`.
AllInFocus composite_all_in_focus(const SceneSpec& scene,
                                  double gamma = kDefaultGamma);
AllInFocus composite_all_in_focus_linear(const SceneSpec& scene,
                                         double gamma = kDefaultGamma);

}  // namespace layerbokeh::oracle
