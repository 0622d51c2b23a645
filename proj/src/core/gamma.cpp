#include "layerbokeh/core/gamma.hpp"

#include <cmath>

#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/params.hpp"

namespace layerbokeh {

namespace {

ImageBuffer apply_power(const ImageBuffer& image, double exponent,
                        ColorSpace out_space) {
  std::vector<float> data = image.to_vector();
  const int channels = image.channels();
  const int color = image.color_channels();
  if (exponent != 1.0) {
    for (std::size_t p = 0; p < image.pixel_count(); ++p) {
      for (int c = 0; c < color; ++c) {
        float& v = data[p * channels + c];
        v = static_cast<float>(std::pow(static_cast<double>(v), exponent));
      }
    }
  }
  return ImageBuffer(image.width(), image.height(), channels, out_space,
                     std::move(data));
}

}  // namespace

ImageBuffer gamma_decode(const ImageBuffer& image, double gamma) {
  check_gamma(gamma);
  if (image.space() != ColorSpace::kEncoded) {
    throw InvalidArgument("gamma_decode expects an encoded image");
  }
  return apply_power(image, gamma, ColorSpace::kLinear);
}

ImageBuffer gamma_encode(const ImageBuffer& image, double gamma) {
  check_gamma(gamma);
  if (image.space() != ColorSpace::kLinear) {
    throw InvalidArgument("gamma_encode expects a linear image");
  }
  return apply_power(image, 1.0 / gamma, ColorSpace::kEncoded);
}

}  // namespace layerbokeh
