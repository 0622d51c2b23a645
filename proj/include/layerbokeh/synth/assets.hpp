#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "layerbokeh/core/image.hpp"

namespace layerbokeh::synth {

/// Backgrounds are encoded RGB, foregrounds encoded RGBA.
struct AssetLibrary {
  std::vector<ImageBuffer> backgrounds;
  std::vector<ImageBuffer> foregrounds;
};

/// Textured value-noise background with a color gradient and some
/// high-frequency detail so that defocus is measurable.
ImageBuffer procedural_background(std::uint64_t seed, int width, int height);

/// Anti-aliased textured shape (ellipse, rounded box or lobed blob) on a
/// transparent square canvas of the given size. Alpha is quantized to 8 bits.
ImageBuffer procedural_foreground(std::uint64_t seed, int size);

AssetLibrary procedural_assets(std::uint64_t seed, int backgrounds,
                               int foregrounds, int width, int height);

/// Loads every *.png of each directory in name order. Foregrounds without an
/// alpha channel are rejected with InvalidArgument naming the file.
AssetLibrary load_assets(const std::filesystem::path& background_dir,
                         const std::filesystem::path& foreground_dir);

/// Bilinear resampling, edge-clamped, keeping channels and color space.
ImageBuffer resize_bilinear(const ImageBuffer& image, int width, int height);

}  // namespace layerbokeh::synth
