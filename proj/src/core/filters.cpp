#include "layerbokeh/core/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace layerbokeh {

std::vector<std::pair<int, int>> disc_offsets(int radius) {
  std::vector<std::pair<int, int>> out;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) out.emplace_back(dx, dy);
    }
  }
  return out;
}

Mask binarize(const Mask& mask) {
  std::vector<float> out = mask.to_vector();
  for (float& v : out) v = v > 0.5f ? 1.0f : 0.0f;
  return Mask(mask.width(), mask.height(), std::move(out));
}

Mask dilate_mask(const Mask& mask, int radius) {
  if (radius <= 0) return binarize(mask);
  const int w = mask.width();
  const int h = mask.height();
  constexpr int kFar = std::numeric_limits<int>::max() / 4;
  // Horizontal distance to the nearest set pixel in the same row.
  std::vector<int> hdist(static_cast<std::size_t>(w) * h, kFar);
  for (int y = 0; y < h; ++y) {
    int* row = hdist.data() + static_cast<std::size_t>(y) * w;
    int last = -kFar;
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y) > 0.5f) last = x;
      row[x] = std::min(row[x], x - last);
    }
    last = kFar;
    for (int x = w - 1; x >= 0; --x) {
      if (mask.at(x, y) > 0.5f) last = x;
      row[x] = std::min(row[x], last - x);
    }
  }
  std::vector<int> half_width(2 * radius + 1);
  for (int dy = -radius; dy <= radius; ++dy) {
    half_width[dy + radius] = static_cast<int>(
        std::floor(std::sqrt(static_cast<double>(radius * radius - dy * dy))));
  }
  std::vector<float> out(static_cast<std::size_t>(w) * h, 0.0f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        if (hdist[static_cast<std::size_t>(yy) * w + x] <=
            half_width[dy + radius]) {
          out[static_cast<std::size_t>(y) * w + x] = 1.0f;
          break;
        }
      }
    }
  }
  return Mask(w, h, std::move(out));
}

namespace {

template <typename Pick>
std::vector<float> morph(std::span<const float> values, int width, int height,
                         int radius, Pick pick) {
  std::vector<float> out(values.begin(), values.end());
  if (radius <= 0) return out;
  const auto offsets = disc_offsets(radius);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      float best = values[static_cast<std::size_t>(y) * width + x];
      for (const auto& [dx, dy] : offsets) {
        const int xx = std::clamp(x + dx, 0, width - 1);
        const int yy = std::clamp(y + dy, 0, height - 1);
        best = pick(best, values[static_cast<std::size_t>(yy) * width + xx]);
      }
      out[static_cast<std::size_t>(y) * width + x] = best;
    }
  }
  return out;
}

}  // namespace

std::vector<float> grey_dilate(std::span<const float> values, int width,
                               int height, int radius) {
  return morph(values, width, height, radius,
               [](float a, float b) { return std::max(a, b); });
}

std::vector<float> grey_erode(std::span<const float> values, int width,
                              int height, int radius) {
  return morph(values, width, height, radius,
               [](float a, float b) { return std::min(a, b); });
}

std::vector<float> gaussian_blur(std::span<const float> values, int width,
                                 int height, double sigma) {
  std::vector<float> src(values.begin(), values.end());
  if (!(sigma > 0.0)) return src;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += taps[i + radius];
  }
  for (double& t : taps) t /= sum;

  std::vector<float> tmp(src.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int xx = std::clamp(x + i, 0, width - 1);
        acc += taps[i + radius] * src[static_cast<std::size_t>(y) * width + xx];
      }
      tmp[static_cast<std::size_t>(y) * width + x] = static_cast<float>(acc);
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int yy = std::clamp(y + i, 0, height - 1);
        acc += taps[i + radius] * tmp[static_cast<std::size_t>(yy) * width + x];
      }
      src[static_cast<std::size_t>(y) * width + x] = static_cast<float>(acc);
    }
  }
  return src;
}

}  // namespace layerbokeh
