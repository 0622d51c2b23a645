#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "layerbokeh/core/image.hpp"
#include "layerbokeh/oracle/scene.hpp"
#include "layerbokeh/synth/assets.hpp"

namespace layerbokeh::synth {

enum class DisparityMode { kConstant, kPlanar };
enum class RefocusMode { kObjectDisparities, kExplicit };

struct DatasetConfig {
  int n_scenes = 10;
  int width = 256;
  int height = 256;
  int n_foregrounds = 3;
  DisparityMode disparity_mode = DisparityMode::kConstant;
  std::vector<double> blur_params = {20.0, 40.0, 60.0, 80.0};
  RefocusMode refocus_mode = RefocusMode::kObjectDisparities;
  std::vector<double> refocus_list;  // used with kExplicit
  double gamma = 2.2;
  int rays = 256;
  std::uint64_t seed = 0;
  /// Empty paths select the built-in procedural assets.
  std::filesystem::path background_dir;
  std::filesystem::path foreground_dir;

  void validate() const;
};

nlohmann::json config_to_json(const DatasetConfig& cfg);
/// Missing keys keep their defaults; wrong types raise ParseError.
DatasetConfig config_from_json(const nlohmann::json& doc);

/// Assets for a config: the directories when given, otherwise procedural
/// ones derived from cfg.seed.
AssetLibrary assets_for(const DatasetConfig& cfg);

/// Background at the far end, foregrounds in disjoint disparity bands that
/// increase toward the camera. Throws InvalidArgument when the library is
/// short of assets.
oracle::SceneSpec random_scene(std::uint64_t seed, const AssetLibrary& assets,
                               const DatasetConfig& cfg);

/// Disparity of each layer at its footprint center, back to front.
std::vector<double> object_disparities(const oracle::SceneSpec& scene);

/// "bokeh_A20_f0.4375.png"
std::string bokeh_file_name(double blur_amount, double refocus_disparity);

struct DatasetSummary {
  nlohmann::json manifest;
  double seconds = 0.0;
};

/// Writes scene_%04d/ directories plus manifest.json (deterministic) and
/// timing.json (wall-clock only). Each scene directory appears atomically.
DatasetSummary generate_dataset(const DatasetConfig& cfg,
                                const std::filesystem::path& outdir);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Upper bounds on the random augmentation strengths.
struct AugmentLimits {
  double noise_sigma = 0.02;
  double blur_sigma = 2.0;
  int morph_radius = 3;
};

struct AugmentMagnitudes {
  double noise_sigma = 0.0;
  double blur_sigma = 0.0;
  int morph_radius = 0;
  bool dilate = true;  // false erodes
};

AugmentMagnitudes sample_augmentation(std::uint64_t seed,
                                      const AugmentLimits& limits = {});

/// Blur, then gray morphology, then additive noise, clamped to [0,1].
DisparityMap apply_augmentation(const DisparityMap& disparity,
                                const AugmentMagnitudes& magnitudes,
                                std::uint64_t seed);

DisparityMap augment_disparity(const DisparityMap& disparity,
                               std::uint64_t seed);

}  // namespace layerbokeh::synth
