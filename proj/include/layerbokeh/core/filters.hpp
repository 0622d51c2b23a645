#pragma once

#include <span>
#include <utility>
#include <vector>

#include "layerbokeh/core/image.hpp"

namespace layerbokeh {

/// Integer offsets (dx, dy) with dx^2 + dy^2 <= radius^2.
std::vector<std::pair<int, int>> disc_offsets(int radius);

/// Binary dilation by a disc structuring element. Input pixels above 0.5 count
/// as set; the output is exactly 0 or 1.
Mask dilate_mask(const Mask& mask, int radius);

/// Binarizes at 0.5.
Mask binarize(const Mask& mask);

/// Gray-level dilation (max filter) and erosion (min filter) over a disc with
/// replicated borders.
std::vector<float> grey_dilate(std::span<const float> values, int width,
                               int height, int radius);
std::vector<float> grey_erode(std::span<const float> values, int width,
                              int height, int radius);

/// Separable Gaussian blur with replicated borders; sigma <= 0 is identity.
std::vector<float> gaussian_blur(std::span<const float> values, int width,
                                 int height, double sigma);

}  // namespace layerbokeh
