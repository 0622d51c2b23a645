#include "layerbokeh/oracle/ray_tracer.hpp"

#include <cmath>
#include <numbers>

#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/gamma.hpp"
#include "layerbokeh/core/parallel.hpp"
#include "layerbokeh/core/random.hpp"

namespace layerbokeh::oracle {

namespace {

// Shirley-Chiu concentric map from the unit square to the unit disk.
ApertureSample concentric(double sx, double sy) {
  const double a = 2.0 * sx - 1.0;
  const double b = 2.0 * sy - 1.0;
  if (a == 0.0 && b == 0.0) return {0.0, 0.0};
  double r;
  double phi;
  if (std::abs(a) > std::abs(b)) {
    r = a;
    phi = (std::numbers::pi / 4.0) * (b / a);
  } else {
    r = b;
    phi = std::numbers::pi / 2.0 - (std::numbers::pi / 4.0) * (a / b);
  }
  ApertureSample s{r * std::cos(phi), r * std::sin(phi)};
  const double norm2 = s.u * s.u + s.v * s.v;
  if (norm2 > 1.0) {
    const double k = 1.0 / std::sqrt(norm2);
    s.u *= k;
    s.v *= k;
  }
  return s;
}

}  // namespace

std::vector<ApertureSample> aperture_samples(int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("aperture sample count must be >= 1");
  std::vector<ApertureSample> out;
  out.reserve(n);
  out.push_back({0.0, 0.0});
  const int rest = n - 1;
  if (rest == 0) return out;
  SplitMix64 rng(seed);
  const int m = static_cast<int>(std::floor(std::sqrt(static_cast<double>(rest))));
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const double sx = (i + rng.uniform()) / m;
      const double sy = (j + rng.uniform()) / m;
      out.push_back(concentric(sx, sy));
    }
  }
  while (static_cast<int>(out.size()) < n) {
    const double sx = rng.uniform();
    const double sy = rng.uniform();
    out.push_back(concentric(sx, sy));
  }
  return out;
}

std::optional<SensorPoint> project_sample(double x, double y,
                                          const PlaneCoefficients& plane,
                                          double blur_amount,
                                          double refocus_disparity, double u,
                                          double v) {
  const double au = blur_amount * u;
  const double av = blur_amount * v;
  const double den = plane.a * au + plane.b * av + plane.c;
  if (std::abs(den) < kParallelEpsilon) return std::nullopt;
  const double t =
      (1.0 - plane.a * x - plane.b * y - plane.c * refocus_disparity) / den;
  return SensorPoint{x + t * au, y + t * av};
}

PreparedScene::PreparedScene(const SceneSpec& scene, double gamma)
    : width_(scene.width), height_(scene.height) {
  scene.validate();
  check_gamma(gamma);
  layers_.reserve(scene.layers.size());
  for (const PlanarLayer& src : scene.layers) {
    const ImageBuffer linear = gamma_decode(src.rgba, gamma);
    std::vector<float> pm = linear.to_vector();
    for (std::size_t p = 0; p < linear.pixel_count(); ++p) {
      const float a = pm[p * 4 + 3];
      pm[p * 4 + 0] *= a;
      pm[p * 4 + 1] *= a;
      pm[p * 4 + 2] *= a;
    }
    layers_.push_back(Layer{std::move(pm), src.rgba.width(), src.rgba.height(),
                            src.offset_x, src.offset_y, src.plane});
  }
}

void PreparedScene::sample(const Layer& layer, double x, double y,
                           float out[4]) const {
  out[0] = out[1] = out[2] = out[3] = 0.0f;
  const double lx = x - layer.offset_x;
  const double ly = y - layer.offset_y;
  if (lx <= -1.0 || ly <= -1.0 || lx >= layer.width || ly >= layer.height) {
    return;
  }
  const int x0 = static_cast<int>(std::floor(lx));
  const int y0 = static_cast<int>(std::floor(ly));
  const float fx = static_cast<float>(lx - x0);
  const float fy = static_cast<float>(ly - y0);
  const float weights[4] = {(1.0f - fx) * (1.0f - fy), fx * (1.0f - fy),
                            (1.0f - fx) * fy, fx * fy};
  const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
  const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
  for (int k = 0; k < 4; ++k) {
    if (weights[k] == 0.0f) continue;
    if (xs[k] < 0 || ys[k] < 0 || xs[k] >= layer.width ||
        ys[k] >= layer.height) {
      continue;
    }
    const float* texel =
        layer.premultiplied.data() +
        (static_cast<std::size_t>(ys[k]) * layer.width + xs[k]) * 4;
    out[0] += weights[k] * texel[0];
    out[1] += weights[k] * texel[1];
    out[2] += weights[k] * texel[2];
    out[3] += weights[k] * texel[3];
  }
}

RayResult PreparedScene::walk_ray(double x, double y, double blur_amount,
                                  double refocus_disparity, double u,
                                  double v) const {
  RayResult result;
  double energy = 1.0;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    const auto hit =
        project_sample(x, y, it->plane, blur_amount, refocus_disparity, u, v);
    if (!hit) continue;
    float texel[4];
    sample(*it, hit->x, hit->y, texel);
    const double alpha = std::min(1.0f, texel[3]);
    if (alpha <= 0.0) continue;
    result.rgb[0] += energy * texel[0];
    result.rgb[1] += energy * texel[1];
    result.rgb[2] += energy * texel[2];
    result.coverage += energy * alpha;
    result.disparity += energy * alpha * it->plane.disparity_at(hit->x, hit->y);
    energy *= 1.0 - alpha;
    if (energy < kEnergyEpsilon) break;
  }
  result.residual = energy;
  return result;
}

ImageBuffer trace_bokeh_linear(const SceneSpec& scene,
                               const RenderParams& params, int n_samples,
                               std::uint64_t seed) {
  params.validate();
  if (n_samples < 1) throw InvalidArgument("ray count must be >= 1");
  const PreparedScene prepared(scene, params.gamma);
  const int w = scene.width;
  const int h = scene.height;
  // With A = 0 every aperture ray lands on the pixel itself.
  const int rays = params.blur_amount == 0.0 ? 1 : n_samples;
  const std::vector<ApertureSample> pattern = aperture_samples(rays, seed);
  std::vector<float> out(static_cast<std::size_t>(w) * h * 3, 0.0f);

  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      // Per-pixel rotation of the shared stratified pattern; derived only
      // from (seed, x, y) so any schedule gives the same bytes.
      SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(x),
                              static_cast<std::uint64_t>(y)));
      const double theta = 2.0 * std::numbers::pi * rng.uniform();
      const double cs = std::cos(theta);
      const double sn = std::sin(theta);
      double rgb[3] = {0.0, 0.0, 0.0};
      double coverage = 0.0;
      for (const ApertureSample& s : pattern) {
        const double u = cs * s.u - sn * s.v;
        const double v = sn * s.u + cs * s.v;
        const RayResult r = prepared.walk_ray(x, y, params.blur_amount,
                                              params.refocus_disparity, u, v);
        rgb[0] += r.rgb[0];
        rgb[1] += r.rgb[1];
        rgb[2] += r.rgb[2];
        coverage += r.coverage;
      }
      float* px = out.data() + (static_cast<std::size_t>(y) * w + x) * 3;
      if (coverage > 0.0) {
        for (int c = 0; c < 3; ++c) {
          px[c] = static_cast<float>(rgb[c] / coverage);
        }
      }
    }
  });
  return ImageBuffer(w, h, 3, ColorSpace::kLinear, std::move(out));
}

ImageBuffer trace_bokeh(const SceneSpec& scene, const RenderParams& params,
                        int n_samples, std::uint64_t seed) {
  return gamma_encode(trace_bokeh_linear(scene, params, n_samples, seed),
                      params.gamma);
}

AllInFocus composite_all_in_focus_linear(const SceneSpec& scene,
                                         double gamma) {
  const PreparedScene prepared(scene, gamma);
  const int w = scene.width;
  const int h = scene.height;
  std::vector<float> color(static_cast<std::size_t>(w) * h * 3, 0.0f);
  std::vector<float> disparity(static_cast<std::size_t>(w) * h, 0.0f);
  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const RayResult r = prepared.walk_ray(x, y, 0.0, 0.0, 0.0, 0.0);
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      if (r.coverage > 0.0) {
        for (int c = 0; c < 3; ++c) {
          color[p * 3 + c] = static_cast<float>(r.rgb[c] / r.coverage);
        }
        disparity[p] = static_cast<float>(r.disparity / r.coverage);
      }
    }
  });
  return AllInFocus{ImageBuffer(w, h, 3, ColorSpace::kLinear, std::move(color)),
                    DisparityMap(w, h, std::move(disparity))};
}

AllInFocus composite_all_in_focus(const SceneSpec& scene, double gamma) {
  AllInFocus linear = composite_all_in_focus_linear(scene, gamma);
  return AllInFocus{gamma_encode(linear.image, gamma),
                    std::move(linear.disparity)};
}

}  // namespace layerbokeh::oracle
