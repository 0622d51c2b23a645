#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "layerbokeh/core/image.hpp"

namespace layerbokeh {

/// PNG codec for images, disparity maps and masks. Loaded images are tagged
/// encoded; no gamma chunk is ever applied. 8- and 16-bit files are
/// supported; palette and low-bit-depth files are expanded to 8 bits.

ImageBuffer load_image(const std::filesystem::path& path);
ImageBuffer decode_image(std::span<const std::uint8_t> bytes);

/// bit_depth is 8 or 16. Samples are rounded to the nearest code value.
void save_image(const ImageBuffer& image, const std::filesystem::path& path,
                int bit_depth = 8);
std::vector<std::uint8_t> encode_png(const ImageBuffer& image,
                                     int bit_depth = 8);

/// Disparity is read from the first channel of any PNG, normalized by the
/// file's maximum code value.
DisparityMap load_disparity(const std::filesystem::path& path);
DisparityMap decode_disparity(std::span<const std::uint8_t> bytes);
/// Always written as 16-bit grayscale.
void save_disparity(const DisparityMap& map, const std::filesystem::path& path);

Mask load_mask(const std::filesystem::path& path);
void save_mask(const Mask& mask, const std::filesystem::path& path);

/// Original (metric or model-output) range of a normalized disparity map,
/// kept in a text sidecar "<png>.range" as "min max".
struct DisparityRange {
  double min = 0.0;
  double max = 1.0;
};
void write_disparity_range(const std::filesystem::path& png_path,
                           DisparityRange range);
std::optional<DisparityRange> read_disparity_range(
    const std::filesystem::path& png_path);

/// Loads an image and its disparity map and checks that their sizes agree.
std::pair<ImageBuffer, DisparityMap> load_image_with_disparity(
    const std::filesystem::path& image_path,
    const std::filesystem::path& disparity_path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Writes to a temporary sibling then renames over the destination.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);

}  // namespace layerbokeh
