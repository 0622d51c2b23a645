#include "layerbokeh/occlusion/occlusion.hpp"

#include <algorithm>
#include <cmath>

#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/filters.hpp"

namespace layerbokeh::occlusion {

namespace {
constexpr float kNormalizeFloor = 1e-8f;
}

void OcclusionConfig::validate() const {
  if (!(grad_threshold > 0.0)) {
    throw InvalidArgument("gradient threshold must be > 0");
  }
  if (min_segment < 0) throw InvalidArgument("min_segment must be >= 0");
  if (extend_iters < 0) throw InvalidArgument("extend_iters must be >= 0");
  if (dilate_px < 0) throw InvalidArgument("dilate_px must be >= 0");
}

GradientField disparity_gradient(const DisparityMap& disparity) {
  const int w = disparity.width();
  const int h = disparity.height();
  auto at = [&](int x, int y) {
    return disparity.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
  };
  std::vector<float> gx(disparity.pixel_count());
  std::vector<float> gy(disparity.pixel_count());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float sx = (at(x + 1, y - 1) + 2.0f * at(x + 1, y) + at(x + 1, y + 1)) -
                       (at(x - 1, y - 1) + 2.0f * at(x - 1, y) + at(x - 1, y + 1));
      const float sy = (at(x - 1, y + 1) + 2.0f * at(x, y + 1) + at(x + 1, y + 1)) -
                       (at(x - 1, y - 1) + 2.0f * at(x, y - 1) + at(x + 1, y - 1));
      gx[disparity.index(x, y)] = 0.25f * sx;
      gy[disparity.index(x, y)] = 0.25f * sy;
    }
  }
  return GradientField(w, h, std::move(gx), std::move(gy));
}

Mask initial_mask(const GradientField& gradient, double threshold) {
  if (!(threshold > 0.0)) throw InvalidArgument("threshold must be > 0");
  std::vector<float> mag = gradient.magnitude();
  for (float& v : mag) v = v > threshold ? 1.0f : 0.0f;
  return Mask(gradient.width(), gradient.height(), std::move(mag));
}

Components label_components(const Mask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  Components out;
  out.labels.assign(mask.pixel_count(), 0);
  out.areas.push_back(0);
  std::vector<int> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t start = mask.index(x, y);
      if (mask.at(x, y) <= 0.5f || out.labels[start] != 0) continue;
      const int label = ++out.count;
      int area = 0;
      out.labels[start] = label;
      stack.assign(1, static_cast<int>(start));
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        ++area;
        const int px = p % w;
        const int py = p / w;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = px + dx;
            const int ny = py + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t q = mask.index(nx, ny);
            if (mask.at(nx, ny) > 0.5f && out.labels[q] == 0) {
              out.labels[q] = label;
              stack.push_back(static_cast<int>(q));
            }
          }
        }
      }
      out.areas.push_back(area);
    }
  }
  return out;
}

CleanedEdges remove_short_segments(const Mask& mask,
                                   const GradientField& gradient,
                                   int min_segment) {
  if (min_segment < 0) throw InvalidArgument("min_segment must be >= 0");
  const Components comps = label_components(mask);
  std::vector<float> m = mask.to_vector();
  std::vector<float> gx(gradient.gx().begin(), gradient.gx().end());
  std::vector<float> gy(gradient.gy().begin(), gradient.gy().end());
  for (std::size_t p = 0; p < m.size(); ++p) {
    const int label = comps.labels[p];
    if (label != 0 && comps.areas[label] < min_segment) {
      m[p] = 0.0f;
      gx[p] = 0.0f;
      gy[p] = 0.0f;
    }
  }
  return CleanedEdges{Mask(mask.width(), mask.height(), std::move(m)),
                      GradientField(gradient.width(), gradient.height(),
                                    std::move(gx), std::move(gy))};
}

namespace {

GradientField normalize(const GradientField& g) {
  std::vector<float> gx(g.gx().begin(), g.gx().end());
  std::vector<float> gy(g.gy().begin(), g.gy().end());
  for (std::size_t p = 0; p < gx.size(); ++p) {
    const float len = std::sqrt(gx[p] * gx[p] + gy[p] * gy[p]);
    if (len < kNormalizeFloor) {
      gx[p] = gy[p] = 0.0f;
    } else {
      gx[p] /= len;
      gy[p] /= len;
    }
  }
  return GradientField(g.width(), g.height(), std::move(gx), std::move(gy));
}

Mask support(const GradientField& g) {
  std::vector<float> m(g.gx().size());
  for (std::size_t p = 0; p < m.size(); ++p) {
    const float len2 = g.gx()[p] * g.gx()[p] + g.gy()[p] * g.gy()[p];
    m[p] = len2 >= kNormalizeFloor * kNormalizeFloor ? 1.0f : 0.0f;
  }
  return Mask(g.width(), g.height(), std::move(m));
}

}  // namespace

GradientField forward_warp_normals(const GradientField& normals,
                                   const Mask& mask) {
  const int w = normals.width();
  const int h = normals.height();
  std::vector<double> ax(static_cast<std::size_t>(w) * h, 0.0);
  std::vector<double> ay(ax.size(), 0.0);
  // Raster-order accumulation keeps the result schedule-independent.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y) <= 0.5f) continue;
      const double vx = normals.gx(x, y);
      const double vy = normals.gy(x, y);
      if (vx == 0.0 && vy == 0.0) continue;
      const double tx = x + vx;
      const double ty = y + vy;
      const int x0 = static_cast<int>(std::floor(tx));
      const int y0 = static_cast<int>(std::floor(ty));
      const double fx = tx - x0;
      const double fy = ty - y0;
      const double weights[4] = {(1 - fx) * (1 - fy), fx * (1 - fy),
                                 (1 - fx) * fy, fx * fy};
      const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
      for (int k = 0; k < 4; ++k) {
        if (weights[k] <= 0.0) continue;
        if (xs[k] < 0 || ys[k] < 0 || xs[k] >= w || ys[k] >= h) continue;
        const std::size_t q = static_cast<std::size_t>(ys[k]) * w + xs[k];
        ax[q] += weights[k] * vx;
        ay[q] += weights[k] * vy;
      }
    }
  }
  std::vector<float> gx(ax.size(), 0.0f);
  std::vector<float> gy(ax.size(), 0.0f);
  for (std::size_t q = 0; q < ax.size(); ++q) {
    const double len = std::hypot(ax[q], ay[q]);
    if (len < kNormalizeFloor) continue;
    gx[q] = static_cast<float>(ax[q] / len);
    gy[q] = static_cast<float>(ay[q] / len);
  }
  return GradientField(w, h, std::move(gx), std::move(gy));
}

Mask extend_mask(const Mask& mask, const GradientField& gradient, int iters) {
  if (iters < 0) throw InvalidArgument("iteration count must be >= 0");
  Mask m = binarize(mask);
  GradientField g = gradient;
  for (int it = 0; it < iters; ++it) {
    const GradientField normals = normalize(g);
    const GradientField warped = forward_warp_normals(normals, support(g));
    std::vector<float> gx(normals.gx().size());
    std::vector<float> gy(gx.size());
    for (std::size_t p = 0; p < gx.size(); ++p) {
      const float k = m.data()[p];
      gx[p] = k * normals.gx()[p] + (1.0f - k) * warped.gx()[p];
      gy[p] = k * normals.gy()[p] + (1.0f - k) * warped.gy()[p];
    }
    g = GradientField(g.width(), g.height(), std::move(gx), std::move(gy));
    m = support(g);
  }
  return m;
}

OcclusionStages occlusion_stages(const DisparityMap& disparity,
                                 const OcclusionConfig& config) {
  config.validate();
  const GradientField gradient = disparity_gradient(disparity);
  Mask initial = initial_mask(gradient, config.grad_threshold);
  // Only edge pixels carry a direction into the extension.
  std::vector<float> gx(gradient.gx().begin(), gradient.gx().end());
  std::vector<float> gy(gradient.gy().begin(), gradient.gy().end());
  for (std::size_t p = 0; p < gx.size(); ++p) {
    if (initial.data()[p] <= 0.5f) gx[p] = gy[p] = 0.0f;
  }
  const GradientField edge_gradient(gradient.width(), gradient.height(),
                                    std::move(gx), std::move(gy));
  CleanedEdges cleaned =
      remove_short_segments(initial, edge_gradient, config.min_segment);
  Mask extended =
      extend_mask(cleaned.mask, cleaned.gradient, config.extend_iters);
  Mask dilated = dilate_mask(extended, config.dilate_px);
  return OcclusionStages{std::move(initial), std::move(cleaned.mask),
                         std::move(extended), std::move(dilated)};
}

Mask occlusion_mask(const DisparityMap& disparity,
                    const OcclusionConfig& config) {
  return occlusion_stages(disparity, config).dilated;
}

std::vector<float> local_step(const DisparityMap& disparity) {
  const auto hi = grey_dilate(disparity.data(), disparity.width(),
                              disparity.height(), 1);
  const auto lo = grey_erode(disparity.data(), disparity.width(),
                             disparity.height(), 1);
  std::vector<float> out(hi.size());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = hi[p] - lo[p];
  return out;
}

int extend_iters_for_blur(double blur_amount, const DisparityMap& disparity,
                          const OcclusionConfig& base) {
  base.validate();
  const GradientField gradient = disparity_gradient(disparity);
  const Mask initial = initial_mask(gradient, base.grad_threshold);
  const CleanedEdges cleaned =
      remove_short_segments(initial, gradient, base.min_segment);
  const std::vector<float> step = local_step(disparity);
  double largest = 0.0;
  for (std::size_t p = 0; p < step.size(); ++p) {
    if (cleaned.mask.data()[p] > 0.5f) largest = std::max(largest, double{step[p]});
  }
  return std::max(8, static_cast<int>(std::ceil(blur_amount * largest)));
}

}  // namespace layerbokeh::occlusion
