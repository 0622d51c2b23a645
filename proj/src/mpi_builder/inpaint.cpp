#include "layerbokeh/mpi_builder/inpaint.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "layerbokeh/core/error.hpp"

namespace layerbokeh::mpi_builder {

namespace {

constexpr double kRelaxation = 1.8;
constexpr double kRelativeTolerance = 1e-4;
constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

std::vector<std::uint8_t> hole_from(const Mask& mask) {
  std::vector<std::uint8_t> hole(mask.pixel_count());
  for (std::size_t p = 0; p < hole.size(); ++p) hole[p] = mask.data()[p] > 0.5f;
  return hole;
}

}  // namespace

void inpaint_channel(std::span<float> values, int width, int height,
                     std::span<const std::uint8_t> hole, int iters) {
  if (iters < 0) throw InvalidArgument("iteration count must be >= 0");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (values.size() != n || hole.size() != n) {
    throw InvalidArgument("inpaint: buffer size mismatch");
  }
  std::vector<int> unknown;
  for (std::size_t p = 0; p < n; ++p) {
    if (hole[p]) unknown.push_back(static_cast<int>(p));
  }
  if (unknown.empty() || unknown.size() == n) return;

  std::vector<double> v(values.begin(), values.end());

  // Onion peel: each ring takes the mean of already-known 4-neighbors.
  std::vector<std::uint8_t> known(n);
  for (std::size_t p = 0; p < n; ++p) known[p] = !hole[p];
  std::vector<int> pending = unknown;
  std::vector<std::pair<int, double>> ring;
  while (!pending.empty()) {
    ring.clear();
    std::vector<int> rest;
    for (int p : pending) {
      const int x = p % width;
      const int y = p / width;
      double sum = 0.0;
      int count = 0;
      for (int k = 0; k < 4; ++k) {
        const int nx = x + kDx[k];
        const int ny = y + kDy[k];
        if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
        const int q = ny * width + nx;
        if (known[q]) {
          sum += v[q];
          ++count;
        }
      }
      if (count > 0) {
        ring.emplace_back(p, sum / count);
      } else {
        rest.push_back(p);
      }
    }
    if (ring.empty()) break;  // unreachable for a non-full hole
    for (const auto& [p, value] : ring) {
      v[p] = value;
      known[p] = 1;
    }
    pending.swap(rest);
  }

  std::vector<int> parity[2];
  for (int p : unknown) parity[((p % width) + (p / width)) & 1].push_back(p);
  for (int it = 0; it < iters; ++it) {
    double max_delta = 0.0;
    double max_value = 0.0;
    for (const auto& cells : parity) {
      for (int p : cells) {
        const int x = p % width;
        const int y = p / width;
        double sum = 0.0;
        int count = 0;
        for (int k = 0; k < 4; ++k) {
          const int nx = x + kDx[k];
          const int ny = y + kDy[k];
          if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
          sum += v[ny * width + nx];
          ++count;
        }
        const double delta = kRelaxation * (sum / count - v[p]);
        v[p] += delta;
        max_delta = std::max(max_delta, std::abs(delta));
        max_value = std::max(max_value, std::abs(v[p]));
      }
    }
    if (max_delta <= kRelativeTolerance * std::max(max_value, 1e-12)) break;
  }
  for (int p : unknown) values[p] = static_cast<float>(std::clamp(v[p], 0.0, 1.0));
}

ImageBuffer inpaint(const ImageBuffer& image, const Mask& mask, int iters) {
  if (!mask.same_size(image)) throw InvalidArgument("inpaint: size mismatch");
  const std::vector<std::uint8_t> hole = hole_from(mask);
  const int w = image.width();
  const int h = image.height();
  const int ch = image.channels();
  std::vector<float> data = image.to_vector();
  std::vector<float> plane(image.pixel_count());
  for (int c = 0; c < ch; ++c) {
    for (std::size_t p = 0; p < plane.size(); ++p) plane[p] = data[p * ch + c];
    inpaint_channel(plane, w, h, hole, iters);
    for (std::size_t p = 0; p < plane.size(); ++p) data[p * ch + c] = plane[p];
  }
  return ImageBuffer(w, h, ch, image.space(), std::move(data));
}

DisparityMap inpaint(const DisparityMap& map, const Mask& mask, int iters) {
  if (!mask.same_size(map)) throw InvalidArgument("inpaint: size mismatch");
  std::vector<float> data = map.to_vector();
  inpaint_channel(data, map.width(), map.height(), hole_from(mask), iters);
  return DisparityMap(map.width(), map.height(), std::move(data));
}

}  // namespace layerbokeh::mpi_builder
