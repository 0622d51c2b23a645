#pragma once

#include <span>
#include <vector>

namespace layerbokeh::compositor {

/// Normalized disc point-spread function on a (2*half+1)^2 grid. Each texel
/// is weighted by the exact area of the disc inside it, so real-valued radii
/// change the kernel smoothly.
struct Kernel {
  double radius = 0.0;
  int half = 0;
  std::vector<double> weights;  // row-major, weights[(dy+half)*size + dx+half]

  int size() const { return 2 * half + 1; }
  double at(int dx, int dy) const {
    return weights[static_cast<std::size_t>(dy + half) * size() + dx + half];
  }
};

Kernel disc_kernel(double radius);

/// Area of the disc of the given radius centered at the origin that lies
/// inside the rectangle [x0,x1] x [y0,y1].
double disc_rect_area(double radius, double x0, double x1, double y0,
                      double y1);

/// Inclusive pixel rectangle.
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;

  bool empty() const { return x1 < x0 || y1 < y0; }
  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
};

/// Bounding box of samples above zero; empty when all are zero.
Rect nonzero_bounds(std::span<const float> values, int width, int height);

/// Zero-padded 2-D convolution of several same-sized channels with one
/// kernel. Only `support` (the nonzero bounding box of the inputs) is read;
/// outputs are full-size with zeros outside support grown by the kernel.
/// Large kernels go through an FFT, small ones are applied directly; both
/// compute the same sum.
std::vector<std::vector<float>> convolve_channels(
    const std::vector<std::span<const float>>& channels, int width, int height,
    const Kernel& kernel, Rect support);

/// Direct-sum reference used for small kernels (and by tests).
std::vector<float> convolve_direct(std::span<const float> values, int width,
                                   int height, const Kernel& kernel);

}  // namespace layerbokeh::compositor
