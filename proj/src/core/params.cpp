#include "layerbokeh/core/params.hpp"

#include <cmath>
#include <string>

#include "layerbokeh/core/error.hpp"

namespace layerbokeh {

double blur_radius(double blur_amount, double disparity,
                   double refocus_disparity) {
  return blur_amount * std::abs(disparity - refocus_disparity);
}

void check_gamma(double gamma) {
  if (!(gamma >= 1.0 && gamma <= 4.0)) {
    throw InvalidArgument("gamma must be in [1,4], got " +
                          std::to_string(gamma));
  }
}

void RenderParams::validate() const {
  if (!(blur_amount >= 0.0) || !std::isfinite(blur_amount)) {
    throw InvalidArgument("blur amount must be finite and >= 0");
  }
  if (!(refocus_disparity >= 0.0 && refocus_disparity <= 1.0)) {
    throw InvalidArgument("refocus disparity must be in [0,1]");
  }
  check_gamma(gamma);
  if (plane_count < 2) {
    throw InvalidArgument("plane count must be >= 2");
  }
}

}  // namespace layerbokeh
