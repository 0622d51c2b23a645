#pragma once

#include <cstddef>
#include <vector>

#include "layerbokeh/compositor/mpi.hpp"
#include "layerbokeh/core/image.hpp"
#include "layerbokeh/core/params.hpp"

namespace layerbokeh::compositor {

/// Pixels whose composited coverage falls below this keep the
/// unnormalized value.
inline constexpr double kNormalizationEpsilon = 1e-4;

/// Back-to-front "over" composite of the sharp planes. Result is linear.
ImageBuffer compose_sharp(const MpiStack& stack);

/// Over-composite of plane disparities d_i.
DisparityMap reconstruct_disparity(const MpiStack& stack);

/// Per-pixel total coverage 1 - prod(1 - alpha_i) of the sharp stack.
Mask total_coverage(const MpiStack& stack);

/// Statistics of the normalization denominator (composited blurred alpha).
struct DenominatorStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::size_t fallback_pixels = 0;  // denominator below kNormalizationEpsilon
};

struct RenderOptions {
  bool normalize = true;
  /// Planes whose per-pixel share of the final value should be returned.
  std::vector<int> contribution_planes;
};

struct RenderResult {
  ImageBuffer image;   // encoded with params.gamma
  ImageBuffer linear;  // before encoding
  DenominatorStats denominator;
  /// One map per requested plane: (alpha_i*K_i) * prod_{j>i}(1 - alpha_j*K_j)
  /// divided by the denominator when normalizing.
  std::vector<Mask> contributions;
};

/// Blurs each plane with a disc of radius A*|d_i - d_f| and composites back
/// to front; with normalize, divides by the composited blurred alpha.
ImageBuffer render_mpi(const MpiStack& stack, const RenderParams& params,
                       bool normalize = true);

RenderResult render_mpi_detailed(const MpiStack& stack,
                                 const RenderParams& params,
                                 const RenderOptions& options = {});

/// Copy of the stack with plane colors re-linearized for a different gamma:
/// c -> c^(to/from). Exact when colors came from gamma_decode(from).
MpiStack regamma(const MpiStack& stack, double from_gamma, double to_gamma);

}  // namespace layerbokeh::compositor
