#include "layerbokeh/service/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "layerbokeh/compositor/render.hpp"
#include "layerbokeh/core/error.hpp"

namespace layerbokeh::service {

using nlohmann::json;

void PipelineConfig::validate() const {
  if (plane_count < 2) throw InvalidArgument("plane count must be >= 2");
  check_gamma(gamma);
  occlusion.validate();
  if (extend_for_blur && !(*extend_for_blur >= 0.0)) {
    throw InvalidArgument("blur amount must be >= 0");
  }
  if (background_count < 1) throw InvalidArgument("background count must be >= 1");
  if (inpaint_iters < 0) throw InvalidArgument("inpaint iterations must be >= 0");
}

json pipeline_config_to_json(const PipelineConfig& cfg) {
  json doc{{"plane_count", cfg.plane_count},
           {"gamma", cfg.gamma},
           {"occlusion",
            {{"grad_threshold", cfg.occlusion.grad_threshold},
             {"min_segment", cfg.occlusion.min_segment},
             {"extend_iters", cfg.occlusion.extend_iters},
             {"dilate_px", cfg.occlusion.dilate_px}}},
           {"background_count", cfg.background_count},
           {"inpaint_iters", cfg.inpaint_iters},
           {"soft_zones", cfg.heuristic.soft_zones},
           {"blend_dilate_px", cfg.heuristic.blend_dilate_px},
           {"visible_only", cfg.heuristic.visible_only},
           {"external_background", cfg.external_background.has_value()}};
  if (cfg.extend_for_blur) doc["extend_for_blur"] = *cfg.extend_for_blur;
  return doc;
}

void apply_occlusion_json(const json& doc, occlusion::OcclusionConfig& cfg) {
  if (!doc.is_object()) throw ParseError("occlusion: expected an object");
  auto read = [&](const char* key, auto& out) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_number()) {
      throw ParseError(std::string("occlusion.") + key + ": expected a number");
    }
    doc[key].get_to(out);
  };
  read("grad_threshold", cfg.grad_threshold);
  read("min_segment", cfg.min_segment);
  read("extend_iters", cfg.extend_iters);
  read("dilate_px", cfg.dilate_px);
  cfg.validate();
}

BuiltScene build_scene(const ImageBuffer& image, const DisparityMap& disparity,
                       const PipelineConfig& config) {
  config.validate();
  if (!disparity.same_size(image)) {
    throw InvalidArgument("image is " + std::to_string(image.width()) + "x" +
                          std::to_string(image.height()) + " but disparity is " +
                          std::to_string(disparity.width()) + "x" +
                          std::to_string(disparity.height()));
  }
  mpi_builder::BackgroundOptions options;
  options.occlusion = config.occlusion;
  if (config.extend_for_blur) {
    options.occlusion.extend_iters = occlusion::extend_iters_for_blur(
        *config.extend_for_blur, disparity, config.occlusion);
  }
  options.count = config.background_count;
  options.inpaint_iters = config.inpaint_iters;
  options.external_image = config.external_background;
  mpi_builder::BackgroundResult bg =
      config.heuristic.visible_only
          ? mpi_builder::BackgroundResult{{}, occlusion::occlusion_stages(
                                                  disparity, options.occlusion)}
          : mpi_builder::build_background_set(image, disparity, options);
  compositor::MpiStack stack = mpi_builder::build_mpi_heuristic(
      image, disparity, bg.set, config.plane_count, config.gamma,
      config.heuristic);
  return BuiltScene{std::move(stack), std::move(bg.set), std::move(bg.stages),
                    config.gamma};
}

ImageBuffer render_scene(const BuiltScene& scene, const RenderParams& params,
                         bool normalize) {
  params.validate();
  if (params.gamma == scene.gamma) {
    return compositor::render_mpi(scene.stack, params, normalize);
  }
  return compositor::render_mpi(
      compositor::regamma(scene.stack, scene.gamma, params.gamma), params,
      normalize);
}

double focus_disparity(const DisparityMap& disparity, double x, double y,
                       int plane_count, bool snap) {
  if (!(x >= 0.0 && y >= 0.0 && x <= disparity.width() - 1.0 &&
        y <= disparity.height() - 1.0)) {
    throw InvalidArgument("focus point outside the image");
  }
  const double d = disparity.sample_bilinear(x, y);
  if (!snap) return d;
  if (plane_count < 2) throw InvalidArgument("plane count must be >= 2");
  const int i = std::clamp(static_cast<int>(std::floor(d * plane_count)), 0,
                           plane_count - 1);
  return (i + 0.5) / plane_count;
}

}  // namespace layerbokeh::service
