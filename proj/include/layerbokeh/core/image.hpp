#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace layerbokeh {

enum class ColorSpace { kEncoded, kLinear };

/// Number of float samples that were clamped into [0,1] (or replaced because
/// they were not finite) while constructing images and maps. Process-wide.
std::uint64_t clamp_event_count();

namespace detail {
/// Clamps every sample into [0,1], mapping NaN to 0, and bumps the counter.
void clamp_unit(std::span<float> values);
void check_dimensions(int width, int height);
}  // namespace detail

/// H x W x C float image with interleaved channels. Samples are in [0,1].
///
/// Channel layouts: 1 = gray, 2 = gray+alpha, 3 = RGB, 4 = RGBA. The color
/// space tag says whether samples are display-encoded or linear irradiance;
/// the tag is informational and only checked by the gamma transforms.
class ImageBuffer {
 public:
  ImageBuffer(int width, int height, int channels, ColorSpace space,
              std::vector<float> data);

  static ImageBuffer filled(int width, int height, int channels,
                            ColorSpace space, float value);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  ColorSpace space() const { return space_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * height_;
  }

  bool has_alpha() const { return channels_ == 2 || channels_ == 4; }
  /// Number of leading non-alpha channels.
  int color_channels() const { return has_alpha() ? channels_ - 1 : channels_; }

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  float at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  std::span<const float> data() const { return data_; }
  std::vector<float> to_vector() const { return data_; }

  ImageBuffer with_space(ColorSpace space) const;

  bool same_size(int width, int height) const {
    return width_ == width && height_ == height;
  }

 private:
  int width_;
  int height_;
  int channels_;
  ColorSpace space_;
  std::vector<float> data_;
};

/// Single-channel W x H map with values in [0,1]. The tag makes disparity
/// maps and masks distinct types.
template <typename Tag>
class ScalarMap {
 public:
  ScalarMap(int width, int height, std::vector<float> data)
      : width_(width), height_(height), data_(std::move(data)) {
    detail::check_dimensions(width, height);
    check_size();
    detail::clamp_unit(data_);
  }

  static ScalarMap filled(int width, int height, float value) {
    return ScalarMap(width, height,
                     std::vector<float>(static_cast<std::size_t>(width) * height,
                                        value));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * height_;
  }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  float at(int x, int y) const { return data_[index(x, y)]; }

  std::span<const float> data() const { return data_; }
  std::vector<float> to_vector() const { return data_; }

  /// Bilinear sample at a real position, clamping to the edge texels.
  double sample_bilinear(double x, double y) const;

  template <typename Other>
  bool same_size(const Other& other) const {
    return width_ == other.width() && height_ == other.height();
  }

 private:
  void check_size() const;

  int width_;
  int height_;
  std::vector<float> data_;
};

struct DisparityTag {};
struct MaskTag {};

/// Disparity in [0,1]; larger means closer to the camera.
using DisparityMap = ScalarMap<DisparityTag>;
/// Selection weights in [0,1]; 0 keeps, 1 selects.
using Mask = ScalarMap<MaskTag>;

extern template class ScalarMap<DisparityTag>;
extern template class ScalarMap<MaskTag>;

/// Number of mask samples above 0.5.
std::size_t mask_area(const Mask& mask);

/// Per-pixel 2-vector field in disparity units per pixel.
class GradientField {
 public:
  GradientField(int width, int height, std::vector<float> gx,
                std::vector<float> gy);
  static GradientField zeros(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  float gx(int x, int y) const { return gx_[index(x, y)]; }
  float gy(int x, int y) const { return gy_[index(x, y)]; }
  std::span<const float> gx() const { return gx_; }
  std::span<const float> gy() const { return gy_; }

  /// sqrt(gx^2 + gy^2) per pixel.
  std::vector<float> magnitude() const;

 private:
  int width_;
  int height_;
  std::vector<float> gx_;
  std::vector<float> gy_;
};

}  // namespace layerbokeh
