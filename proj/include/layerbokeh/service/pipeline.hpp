#pragma once

#include <optional>

#include <json.hpp>

#include "layerbokeh/compositor/mpi.hpp"
#include "layerbokeh/core/image.hpp"
#include "layerbokeh/core/params.hpp"
#include "layerbokeh/mpi_builder/builder.hpp"
#include "layerbokeh/occlusion/occlusion.hpp"

namespace layerbokeh::service {

/// Everything that shapes the stack built from an image and its disparity.
struct PipelineConfig {
  int plane_count = kDefaultPlaneCount;
  double gamma = kDefaultGamma;
  occlusion::OcclusionConfig occlusion;
  /// Derive extend_iters from this blur amount instead of occlusion.extend_iters.
  std::optional<double> extend_for_blur;
  int background_count = 1;
  int inpaint_iters = mpi_builder::kDefaultInpaintIterations;
  mpi_builder::HeuristicOptions heuristic;
  std::optional<ImageBuffer> external_background;

  void validate() const;
};

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);

/// Occlusion-config overrides from a JSON object with any of the keys
/// grad_threshold, min_segment, extend_iters, dilate_px.
void apply_occlusion_json(const nlohmann::json& doc,
                          occlusion::OcclusionConfig& cfg);

struct BuiltScene {
  compositor::MpiStack stack;
  mpi_builder::BackgroundSet background;
  occlusion::OcclusionStages stages;
  double gamma;
};

/// occlusion mask -> background synthesis -> heuristic MPI.
BuiltScene build_scene(const ImageBuffer& image, const DisparityMap& disparity,
                       const PipelineConfig& config);

/// Renders a built scene, re-linearizing plane colors when params.gamma
/// differs from the gamma the stack was built with.
ImageBuffer render_scene(const BuiltScene& scene, const RenderParams& params,
                         bool normalize = true);

/// Bilinear disparity at (x, y); with snap, the nearest plane center.
double focus_disparity(const DisparityMap& disparity, double x, double y,
                       int plane_count, bool snap);

}  // namespace layerbokeh::service
