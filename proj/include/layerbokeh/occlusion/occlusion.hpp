#pragma once

#include <vector>

#include "layerbokeh/core/image.hpp"

namespace layerbokeh::occlusion {

/// Parameters of the occlusion-mask generator.
struct OcclusionConfig {
  /// Gradient magnitude (disparity per pixel) above which a pixel is an edge.
  double grad_threshold = 0.05;
  /// 8-connected edge segments smaller than this many pixels are dropped.
  int min_segment = 20;
  /// Number of one-pixel growth steps toward larger disparity.
  int extend_iters = 16;
  /// Final dilation radius.
  int dilate_px = 5;

  void validate() const;
};

/// Extension steps needed to cover what a blurred occluder reveals:
/// max(8, ceil(A * largest edge step)). The step is the 3x3 disparity range
/// over the cleaned edge mask.
int extend_iters_for_blur(double blur_amount, const DisparityMap& disparity,
                          const OcclusionConfig& base);

/// max - min of D over the radius-1 neighborhood of each pixel.
std::vector<float> local_step(const DisparityMap& disparity);

/// 3x3 Sobel with replicated borders, scaled by 1/4 so that a step edge of
/// height h gives |G| = h on both columns adjacent to the edge. (A linear
/// ramp of slope s therefore reads 2s.)
GradientField disparity_gradient(const DisparityMap& disparity);

/// 1 where |G| > threshold.
Mask initial_mask(const GradientField& gradient, double threshold);

struct CleanedEdges {
  Mask mask;
  GradientField gradient;
};

/// Drops 8-connected components of the mask smaller than min_segment from
/// both the mask and the gradient.
CleanedEdges remove_short_segments(const Mask& mask,
                                   const GradientField& gradient,
                                   int min_segment);

/// Splats each masked unit vector one step along itself (bilinear weights)
/// and renormalizes the sums. Cancelled sums stay zero.
GradientField forward_warp_normals(const GradientField& normals,
                                   const Mask& mask);

/// Grows the mask toward increasing disparity by about one pixel per
/// iteration using G <- M*Gn + (1-M)*Gw.
Mask extend_mask(const Mask& mask, const GradientField& gradient, int iters);

/// Intermediate masks of the generator, each binary.
struct OcclusionStages {
  Mask initial;
  Mask cleaned;
  Mask extended;
  Mask dilated;  // final mask
};

OcclusionStages occlusion_stages(const DisparityMap& disparity,
                                 const OcclusionConfig& config);

/// Region on the near side of depth edges whose hidden background must be
/// synthesized.
Mask occlusion_mask(const DisparityMap& disparity,
                    const OcclusionConfig& config);

/// 8-connected component labels of mask pixels above 0.5; 0 is background,
/// components are numbered from 1 in raster order of their first pixel.
struct Components {
  std::vector<int> labels;
  int count = 0;
  std::vector<int> areas;  // areas[k] for label k (areas[0] unused)
};
Components label_components(const Mask& mask);

}  // namespace layerbokeh::occlusion
