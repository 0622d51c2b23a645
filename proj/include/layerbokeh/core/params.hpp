#pragma once

namespace layerbokeh {

inline constexpr int kDefaultPlaneCount = 32;
inline constexpr double kDefaultGamma = 2.2;

/// Controls for one bokeh rendering.
struct RenderParams {
  /// Blur radius in pixels per unit of disparity difference (A >= 0).
  double blur_amount = 0.0;
  /// Disparity rendered perfectly sharp, in [0,1].
  double refocus_disparity = 0.0;
  /// Display gamma in [1,4].
  double gamma = kDefaultGamma;
  /// Number of MPI planes, >= 2.
  int plane_count = kDefaultPlaneCount;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

/// Circle-of-confusion radius in pixels: A * |d - d_f|.
double blur_radius(double blur_amount, double disparity,
                   double refocus_disparity);

/// Throws InvalidArgument unless gamma is in [1,4].
void check_gamma(double gamma);

}  // namespace layerbokeh
