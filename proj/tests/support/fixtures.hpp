#pragma once

// Scene builders and reference computations shared by the unit and
// acceptance tests. The references here are deliberately naive (fine
// supersampling, plain loops in double) so they stay independent of the
// library code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "layerbokeh/core/gamma.hpp"
#include "layerbokeh/core/image.hpp"
#include "layerbokeh/core/random.hpp"
#include "layerbokeh/oracle/scene.hpp"
#include "layerbokeh/synth/assets.hpp"

namespace fixtures {

using layerbokeh::ColorSpace;
using layerbokeh::DisparityMap;
using layerbokeh::ImageBuffer;
using layerbokeh::Mask;

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("layerbokeh_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Appends an alpha channel computed per pixel to an RGB image.
inline ImageBuffer with_alpha(const ImageBuffer& rgb,
                              const std::function<float(int, int)>& alpha) {
  std::vector<float> out(rgb.pixel_count() * 4);
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * rgb.width() + x;
      for (int c = 0; c < 3; ++c) out[p * 4 + c] = rgb.at(x, y, c);
      out[p * 4 + 3] = alpha(x, y);
    }
  }
  return ImageBuffer(rgb.width(), rgb.height(), 4, ColorSpace::kEncoded, std::move(out));
}

inline ImageBuffer solid_rgb(int w, int h, float r, float g, float b) {
  std::vector<float> v(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t p = 0; p < v.size() / 3; ++p) {
    v[p * 3] = r;
    v[p * 3 + 1] = g;
    v[p * 3 + 2] = b;
  }
  return ImageBuffer(w, h, 3, ColorSpace::kEncoded, std::move(v));
}

/// Single full-frame opaque textured layer at constant disparity.
inline layerbokeh::oracle::SceneSpec single_layer_scene(std::uint64_t seed, int w, int h,
                                                        double d) {
  layerbokeh::oracle::SceneSpec s;
  s.width = w;
  s.height = h;
  auto bg = layerbokeh::synth::procedural_background(seed, w, h);
  s.layers.push_back({with_alpha(bg, [](int, int) { return 1.0f; }),
                      layerbokeh::oracle::PlaneCoefficients::constant(d), 0, 0, true});
  return s;
}

/// Two fronto-parallel planes: textured background and a textured
/// foreground object. With hard_edge the foreground alpha is binarized.
inline layerbokeh::oracle::SceneSpec two_plane_scene(std::uint64_t seed, int size, double d_bg,
                                                     double d_fg, bool hard_edge = false) {
  layerbokeh::SplitMix64 rng(seed);
  auto s = single_layer_scene(layerbokeh::mix_seed(seed, 1), size, size, d_bg);
  const int fg_size = size / 2;
  ImageBuffer fg = layerbokeh::synth::procedural_foreground(layerbokeh::mix_seed(seed, 2), fg_size);
  if (hard_edge) {
    fg = with_alpha(fg, [&](int x, int y) { return fg.at(x, y, 3) > 0.5f ? 1.0f : 0.0f; });
  }
  const int ox = size / 4 + rng.uniform_int(-size / 8, size / 8);
  const int oy = size / 4 + rng.uniform_int(-size / 8, size / 8);
  s.layers.push_back({fg, layerbokeh::oracle::PlaneCoefficients::constant(d_fg), ox, oy, false});
  return s;
}

/// Disparity with a straight step: `hi` on the side where
/// nx*(x - cx) + ny*(y - cy) > 0, `lo` elsewhere.
inline DisparityMap step_map(int w, int h, double angle, double cx, double cy, float lo, float hi) {
  const double nx = std::cos(angle), ny = std::sin(angle);
  std::vector<float> v(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      v[static_cast<std::size_t>(y) * w + x] = nx * (x - cx) + ny * (y - cy) > 0 ? hi : lo;
    }
  }
  return DisparityMap(w, h, std::move(v));
}

/// Area of the radius-r disc inside the unit texel centered at (dx, dy),
/// by n x n point sampling.
inline double disc_texel_area_sampled(double r, int dx, int dy, int n = 64) {
  int inside = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double x = dx - 0.5 + (i + 0.5) / n;
      const double y = dy - 0.5 + (j + 0.5) / n;
      if (x * x + y * y <= r * r) ++inside;
    }
  }
  return static_cast<double>(inside) / (n * n);
}

/// Normalized supersampled disc kernel on a (2*half+1)^2 grid.
struct RefKernel {
  int half;
  std::vector<double> w;
  double at(int dx, int dy) const { return w[(dy + half) * (2 * half + 1) + dx + half]; }
};

inline RefKernel reference_disc(double r) {
  RefKernel k;
  k.half = static_cast<int>(std::ceil(r));
  const int n = 2 * k.half + 1;
  k.w.assign(static_cast<std::size_t>(n) * n, 0.0);
  if (r <= 0.0) {
    k.w[0] = 1.0;
    return k;
  }
  double sum = 0.0;
  for (int dy = -k.half; dy <= k.half; ++dy) {
    for (int dx = -k.half; dx <= k.half; ++dx) {
      const double a = disc_texel_area_sampled(r, dx, dy);
      k.w[(dy + k.half) * n + dx + k.half] = a;
      sum += a;
    }
  }
  for (double& v : k.w) v /= sum;
  return k;
}

/// Disc blur of a linear RGB image. With renormalize, taps falling outside
/// the image are dropped and the rest reweighted; otherwise zero padding.
inline std::vector<double> reference_blur(const ImageBuffer& rgb, double r, bool renormalize) {
  const RefKernel k = reference_disc(r);
  const int w = rgb.width(), h = rgb.height();
  std::vector<double> out(static_cast<std::size_t>(w) * h * 3, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0, 0, 0};
      double wsum = 0.0;
      for (int dy = -k.half; dy <= k.half; ++dy) {
        for (int dx = -k.half; dx <= k.half; ++dx) {
          const int sx = x + dx, sy = y + dy;
          if (sx < 0 || sy < 0 || sx >= w || sy >= h) continue;
          const double kw = k.at(dx, dy);
          if (kw == 0.0) continue;
          wsum += kw;
          for (int c = 0; c < 3; ++c) acc[c] += kw * rgb.at(sx, sy, c);
        }
      }
      const double norm = renormalize && wsum > 0 ? wsum : 1.0;
      for (int c = 0; c < 3; ++c) out[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc[c] / norm;
    }
  }
  return out;
}

/// Mean squared error over the first three channels, optionally restricted
/// to pixels where `select` returns true.
inline double mse(const ImageBuffer& a, const ImageBuffer& b,
                  const std::function<bool(int, int)>& select = {}) {
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (select && !select(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
        sum += d * d;
      }
      n += 3;
    }
  }
  return n ? sum / n : 0.0;
}

inline double psnr_from_mse(double m) { return 10.0 * std::log10(1.0 / m); }

inline double mse_vs(const ImageBuffer& a, const std::vector<double>& ref,
                     const std::function<bool(int, int)>& select = {}) {
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (select && !select(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        const double d = a.at(x, y, c) - ref[(static_cast<std::size_t>(y) * a.width() + x) * 3 + c];
        sum += d * d;
      }
      n += 3;
    }
  }
  return n ? sum / n : 0.0;
}

inline double max_abs_diff(std::span<const float> a, std::span<const float> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

inline int count_set(const Mask& m) {
  int n = 0;
  for (float v : m.data()) n += v > 0.5f;
  return n;
}

}  // namespace fixtures
