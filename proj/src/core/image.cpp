#include "layerbokeh/core/image.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "layerbokeh/core/error.hpp"

namespace layerbokeh {

namespace {
std::atomic<std::uint64_t> g_clamp_events{0};
}

std::uint64_t clamp_event_count() { return g_clamp_events.load(); }

namespace detail {

void clamp_unit(std::span<float> values) {
  std::uint64_t events = 0;
  for (float& v : values) {
    if (!(v >= 0.0f)) {  // also catches NaN
      if (v != 0.0f) ++events;
      v = 0.0f;
    } else if (v > 1.0f) {
      ++events;
      v = 1.0f;
    }
  }
  if (events != 0) g_clamp_events.fetch_add(events);
}

void check_dimensions(int width, int height) {
  if (width < 1 || height < 1) {
    throw InvalidArgument("image dimensions must be >= 1, got " +
                          std::to_string(width) + "x" + std::to_string(height));
  }
}

}  // namespace detail

ImageBuffer::ImageBuffer(int width, int height, int channels, ColorSpace space,
                         std::vector<float> data)
    : width_(width),
      height_(height),
      channels_(channels),
      space_(space),
      data_(std::move(data)) {
  detail::check_dimensions(width, height);
  if (channels < 1 || channels > 4) {
    throw InvalidArgument("channel count must be 1..4, got " +
                          std::to_string(channels));
  }
  if (data_.size() != pixel_count() * channels_) {
    throw InvalidArgument("image data size " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(width) + "x" +
                          std::to_string(height) + "x" +
                          std::to_string(channels));
  }
  detail::clamp_unit(data_);
}

ImageBuffer ImageBuffer::filled(int width, int height, int channels,
                                ColorSpace space, float value) {
  detail::check_dimensions(width, height);
  return ImageBuffer(
      width, height, channels, space,
      std::vector<float>(static_cast<std::size_t>(width) * height * channels,
                         value));
}

ImageBuffer ImageBuffer::with_space(ColorSpace space) const {
  ImageBuffer copy = *this;
  copy.space_ = space;
  return copy;
}

template <typename Tag>
void ScalarMap<Tag>::check_size() const {
  if (data_.size() != pixel_count()) {
    throw InvalidArgument("map data size " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(width_) + "x" +
                          std::to_string(height_));
  }
}

template <typename Tag>
double ScalarMap<Tag>::sample_bilinear(double x, double y) const {
  x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
  y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
  const double bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

template class ScalarMap<DisparityTag>;
template class ScalarMap<MaskTag>;

std::size_t mask_area(const Mask& mask) {
  return static_cast<std::size_t>(std::count_if(
      mask.data().begin(), mask.data().end(), [](float v) { return v > 0.5f; }));
}

GradientField::GradientField(int width, int height, std::vector<float> gx,
                             std::vector<float> gy)
    : width_(width), height_(height), gx_(std::move(gx)), gy_(std::move(gy)) {
  detail::check_dimensions(width, height);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (gx_.size() != n || gy_.size() != n) {
    throw InvalidArgument("gradient field size mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(gx_[i])) gx_[i] = 0.0f;
    if (!std::isfinite(gy_[i])) gy_[i] = 0.0f;
  }
}

GradientField GradientField::zeros(int width, int height) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  return GradientField(width, height, std::vector<float>(n, 0.0f),
                       std::vector<float>(n, 0.0f));
}

std::vector<float> GradientField::magnitude() const {
  std::vector<float> out(gx_.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::sqrt(gx_[i] * gx_[i] + gy_[i] * gy_[i]);
  }
  return out;
}

}  // namespace layerbokeh
