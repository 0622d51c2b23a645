#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "layerbokeh/core/image.hpp"
#include "layerbokeh/core/params.hpp"
#include "layerbokeh/occlusion/occlusion.hpp"

namespace layerbokeh::metrics {

/// Returned by psnr for identical inputs; serialized as "inf".
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10*log10(1/MSE) over the color channels, peak 1. With a mask, only pixels
/// whose mask value exceeds 0.5 count. Throws on size mismatch or an empty
/// selection.
double psnr(const ImageBuffer& a, const ImageBuffer& b, const Mask* mask = nullptr);

/// Mean SSIM (11x11 Gaussian window, sigma 1.5, K1 = 0.01, K2 = 0.03) over
/// the color channels, averaged per channel. Only windows lying fully inside
/// the image are used; a mask selects windows by their center pixel.
double ssim(const ImageBuffer& a, const ImageBuffer& b, const Mask* mask = nullptr);

/// Rounds every sample to the nearest multiple of 1/255.
ImageBuffer quantize8(const ImageBuffer& image);

/// Edge pixels of D (|G| > tau) grown by max(8, ceil(A * step)) per
/// 8-connected edge component, step being its largest 3x3 disparity range.
/// `dilate_override` replaces the per-component radius.
Mask boundary_band(const DisparityMap& disparity, const RenderParams& params,
                   const occlusion::OcclusionConfig& config = {},
                   std::optional<int> dilate_override = std::nullopt);

/// Tag stored in reports so band-restricted numbers are only compared
/// between runs that used the same band construction.
inline constexpr const char* kBandVersion = "edge-components-v1";

struct ImageScores {
  std::string file;  // manifest-relative path
  std::string scene;
  double blur_amount = 0.0;
  double refocus_disparity = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  std::optional<double> psnr_ob;  // empty band -> undefined
  std::optional<double> ssim_ob;
  double band_fraction = 0.0;
};

struct EvalReport {
  std::string label;
  std::vector<ImageScores> images;
  std::vector<std::string> missing;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  std::optional<double> mean_psnr_ob;
  std::optional<double> mean_ssim_ob;
  double mean_band_fraction = 0.0;
};

struct EvalOptions {
  std::string label = "prediction";
  std::optional<int> band_dilate;
  occlusion::OcclusionConfig occlusion;
};

/// Scores predictions in pred_dir (same relative names as the manifest)
/// against the ground-truth bokeh files. Absent predictions are listed in
/// `missing`.
EvalReport evaluate(const std::filesystem::path& pred_dir,
                    const std::filesystem::path& manifest_path,
                    const EvalOptions& options = {});

/// Fills the means from `images`.
void summarize(EvalReport& report);

nlohmann::json report_to_json(const EvalReport& report);
std::string report_table(const EvalReport& report);

/// Number or the string "inf" for the identical-image sentinel.
nlohmann::json score_to_json(double value);

}  // namespace layerbokeh::metrics
