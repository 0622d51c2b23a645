#include "layerbokeh/compositor/kernel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>

#include "layerbokeh/core/error.hpp"

namespace layerbokeh::compositor {

namespace {

// Area of {0 <= u <= x, 0 <= v <= y, u^2 + v^2 <= r^2} for x, y >= 0.
double quadrant_area(double r, double x, double y) {
  x = std::min(x, r);
  y = std::min(y, r);
  if (x * x + y * y <= r * r) return x * y;
  const double xa = std::sqrt(std::max(0.0, r * r - y * y));
  auto primitive = [r](double u) {
    const double s = std::sqrt(std::max(0.0, r * r - u * u));
    return 0.5 * (u * s + r * r * std::asin(std::clamp(u / r, -1.0, 1.0)));
  };
  return xa * y + primitive(x) - primitive(xa);
}

double signed_area(double r, double x, double y) {
  const double s = (x < 0.0 ? -1.0 : 1.0) * (y < 0.0 ? -1.0 : 1.0);
  return s * quadrant_area(r, std::abs(x), std::abs(y));
}

}  // namespace

double disc_rect_area(double radius, double x0, double x1, double y0,
                      double y1) {
  if (radius <= 0.0) return 0.0;
  return signed_area(radius, x1, y1) - signed_area(radius, x0, y1) -
         signed_area(radius, x1, y0) + signed_area(radius, x0, y0);
}

Kernel disc_kernel(double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw InvalidArgument("kernel radius must be finite and >= 0");
  }
  Kernel k;
  k.radius = radius;
  k.half = static_cast<int>(std::ceil(radius));
  // A disc that fits inside the center texel is the identity.
  if (radius <= 0.5) {
    k.half = 0;
    k.weights = {1.0};
    return k;
  }
  const int size = k.size();
  k.weights.assign(static_cast<std::size_t>(size) * size, 0.0);
  double total = 0.0;
  for (int dy = -k.half; dy <= k.half; ++dy) {
    for (int dx = -k.half; dx <= k.half; ++dx) {
      const double a =
          disc_rect_area(radius, dx - 0.5, dx + 0.5, dy - 0.5, dy + 0.5);
      k.weights[static_cast<std::size_t>(dy + k.half) * size + dx + k.half] = a;
      total += a;
    }
  }
  for (double& w : k.weights) w /= total;
  return k;
}

Rect nonzero_bounds(std::span<const float> values, int width, int height) {
  Rect r{width, height, -1, -1};
  for (int y = 0; y < height; ++y) {
    const float* row = values.data() + static_cast<std::size_t>(y) * width;
    int first = -1;
    int last = -1;
    for (int x = 0; x < width; ++x) {
      if (row[x] != 0.0f) {
        if (first < 0) first = x;
        last = x;
      }
    }
    if (first < 0) continue;
    r.x0 = std::min(r.x0, first);
    r.x1 = std::max(r.x1, last);
    r.y0 = std::min(r.y0, y);
    r.y1 = std::max(r.y1, y);
  }
  if (r.x1 < 0) return Rect{};
  return r;
}

std::vector<float> convolve_direct(std::span<const float> values, int width,
                                   int height, const Kernel& kernel) {
  std::vector<float> out(values.size(), 0.0f);
  const int h = kernel.half;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int dy = -h; dy <= h; ++dy) {
        const int sy = y - dy;
        if (sy < 0 || sy >= height) continue;
        for (int dx = -h; dx <= h; ++dx) {
          const int sx = x - dx;
          if (sx < 0 || sx >= width) continue;
          const double w = kernel.at(dx, dy);
          if (w == 0.0) continue;
          acc += w * values[static_cast<std::size_t>(sy) * width + sx];
        }
      }
      out[static_cast<std::size_t>(y) * width + x] = static_cast<float>(acc);
    }
  }
  return out;
}

namespace {

constexpr int kDirectMaxHalf = 3;

int next_fast_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int k = m;
    for (int p : {2, 3, 5, 7}) {
      while (k % p == 0) k /= p;
    }
    if (k == 1) return m;
  }
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) throw Error("fftw_malloc failed");
  return FftwBuffer<T>(p);
}

// FFTW's planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (forward != nullptr) fftw_destroy_plan(forward);
    if (inverse != nullptr) fftw_destroy_plan(inverse);
  }
};

std::vector<std::vector<float>> convolve_fft(
    const std::vector<std::span<const float>>& channels, int width, int height,
    const Kernel& kernel, Rect support) {
  const int h = kernel.half;
  // Linear convolution of the support box with the kernel, no wrap-around.
  const int rows = next_fast_size(support.height() + 2 * h);
  const int cols = next_fast_size(support.width() + 2 * h);
  const int ccols = cols / 2 + 1;
  const std::size_t real_n = static_cast<std::size_t>(rows) * cols;
  const std::size_t cplx_n = static_cast<std::size_t>(rows) * ccols;

  auto real = fftw_buffer<double>(real_n);
  auto spec = fftw_buffer<fftw_complex>(cplx_n);
  auto kspec = fftw_buffer<fftw_complex>(cplx_n);

  Plans plans;
  {
    std::lock_guard lock(planner_mutex());
    plans.forward = fftw_plan_dft_r2c_2d(rows, cols, real.get(), spec.get(),
                                         FFTW_ESTIMATE);
    plans.inverse = fftw_plan_dft_c2r_2d(rows, cols, spec.get(), real.get(),
                                         FFTW_ESTIMATE);
  }
  if (plans.forward == nullptr || plans.inverse == nullptr) {
    throw Error("FFTW planning failed");
  }

  // Kernel placed with its center at the origin (wrapped), so output index
  // (i, j) holds the convolution at support-local position (i - h, j - h).
  std::fill(real.get(), real.get() + real_n, 0.0);
  for (int dy = -h; dy <= h; ++dy) {
    for (int dx = -h; dx <= h; ++dx) {
      const int r = (dy + h) % rows;
      const int c = (dx + h) % cols;
      real[static_cast<std::size_t>(r) * cols + c] = kernel.at(dx, dy);
    }
  }
  fftw_execute_dft_r2c(plans.forward, real.get(), kspec.get());

  const Rect out_rect{std::max(0, support.x0 - h), std::max(0, support.y0 - h),
                      std::min(width - 1, support.x1 + h),
                      std::min(height - 1, support.y1 + h)};
  const double scale = 1.0 / static_cast<double>(real_n);
  std::vector<std::vector<float>> outputs;
  outputs.reserve(channels.size());
  for (const auto& channel : channels) {
    std::fill(real.get(), real.get() + real_n, 0.0);
    for (int y = support.y0; y <= support.y1; ++y) {
      for (int x = support.x0; x <= support.x1; ++x) {
        real[static_cast<std::size_t>(y - support.y0) * cols + (x - support.x0)] =
            channel[static_cast<std::size_t>(y) * width + x];
      }
    }
    fftw_execute_dft_r2c(plans.forward, real.get(), spec.get());
    for (std::size_t i = 0; i < cplx_n; ++i) {
      const double re = spec[i][0] * kspec[i][0] - spec[i][1] * kspec[i][1];
      const double im = spec[i][0] * kspec[i][1] + spec[i][1] * kspec[i][0];
      spec[i][0] = re;
      spec[i][1] = im;
    }
    fftw_execute_dft_c2r(plans.inverse, spec.get(), real.get());

    std::vector<float> out(static_cast<std::size_t>(width) * height, 0.0f);
    for (int y = out_rect.y0; y <= out_rect.y1; ++y) {
      const int ly = y - support.y0 + h;
      for (int x = out_rect.x0; x <= out_rect.x1; ++x) {
        const int lx = x - support.x0 + h;
        const double v = real[static_cast<std::size_t>(ly) * cols + lx] * scale;
        // Round-off can leave tiny negatives where the exact sum is 0.
        out[static_cast<std::size_t>(y) * width + x] =
            static_cast<float>(std::abs(v) < 1e-12 ? 0.0 : v);
      }
    }
    outputs.push_back(std::move(out));
  }
  return outputs;
}

std::vector<std::vector<float>> convolve_small(
    const std::vector<std::span<const float>>& channels, int width, int height,
    const Kernel& kernel, Rect support) {
  const int h = kernel.half;
  const Rect out_rect{std::max(0, support.x0 - h), std::max(0, support.y0 - h),
                      std::min(width - 1, support.x1 + h),
                      std::min(height - 1, support.y1 + h)};
  std::vector<std::vector<float>> outputs;
  for (const auto& channel : channels) {
    std::vector<float> out(static_cast<std::size_t>(width) * height, 0.0f);
    for (int y = out_rect.y0; y <= out_rect.y1; ++y) {
      for (int x = out_rect.x0; x <= out_rect.x1; ++x) {
        double acc = 0.0;
        for (int dy = -h; dy <= h; ++dy) {
          const int sy = y - dy;
          if (sy < support.y0 || sy > support.y1) continue;
          for (int dx = -h; dx <= h; ++dx) {
            const int sx = x - dx;
            if (sx < support.x0 || sx > support.x1) continue;
            acc += kernel.at(dx, dy) *
                   channel[static_cast<std::size_t>(sy) * width + sx];
          }
        }
        out[static_cast<std::size_t>(y) * width + x] = static_cast<float>(acc);
      }
    }
    outputs.push_back(std::move(out));
  }
  return outputs;
}

}  // namespace

std::vector<std::vector<float>> convolve_channels(
    const std::vector<std::span<const float>>& channels, int width, int height,
    const Kernel& kernel, Rect support) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  for (const auto& c : channels) {
    if (c.size() != n) throw InvalidArgument("channel size mismatch");
  }
  if (support.empty()) {
    return std::vector<std::vector<float>>(channels.size(),
                                           std::vector<float>(n, 0.0f));
  }
  if (kernel.half == 0) {
    std::vector<std::vector<float>> out;
    for (const auto& c : channels) out.emplace_back(c.begin(), c.end());
    return out;
  }
  if (kernel.half <= kDirectMaxHalf) {
    return convolve_small(channels, width, height, kernel, support);
  }
  return convolve_fft(channels, width, height, kernel, support);
}

}  // namespace layerbokeh::compositor
