#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "layerbokeh/core/image.hpp"

namespace layerbokeh::mpi_builder {

inline constexpr int kDefaultInpaintIterations = 2000;

/// Fills pixels with mask > 0.5 by harmonic interpolation of their unmasked
/// surroundings: onion-peel initialization, then red-black SOR sweeps until
/// the largest update falls below 1e-4 of the largest value or `iters`
/// sweeps have run. Unmasked pixels are returned bit-exact.
ImageBuffer inpaint(const ImageBuffer& image, const Mask& mask,
                    int iters = kDefaultInpaintIterations);
DisparityMap inpaint(const DisparityMap& map, const Mask& mask,
                     int iters = kDefaultInpaintIterations);

/// Planar single-channel variant; `hole` is nonzero where values are unknown.
void inpaint_channel(std::span<float> values, int width, int height,
                     std::span<const std::uint8_t> hole, int iters);

}  // namespace layerbokeh::mpi_builder
