#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "layerbokeh/compositor/mpi.hpp"
#include "layerbokeh/core/image.hpp"
#include "layerbokeh/mpi_builder/inpaint.hpp"
#include "layerbokeh/occlusion/occlusion.hpp"
#include "layerbokeh/oracle/scene.hpp"

namespace layerbokeh::mpi_builder {

/// Plane membership of one disparity value: at most two planes with
/// weights summing to 1. `lower` <= `upper`; with one plane they coincide.
struct ZoneWeights {
  int lower = 0;
  int upper = 0;
  double lower_weight = 1.0;
  double upper_weight = 0.0;
};

/// Soft mode: triangular hat of width 2/N around each plane center (planes
/// at the ends absorb everything beyond their centers). Hard mode: bin
/// floor(d*N), with d = 1 in the last bin.
ZoneWeights zone_weights(double disparity, int plane_count, bool soft);

std::vector<Mask> zone_masks(const DisparityMap& disparity, int plane_count,
                             bool soft = true);

/// Stack from a layered scene with known hidden content: every texel goes to
/// the bin of its own planar disparity and is over-composited there.
compositor::MpiStack build_mpi_ideal(const oracle::SceneSpec& scene,
                                     int plane_count, double gamma);

/// Synthesized content behind one occluder level. Arrays are full-frame;
/// only pixels inside `mask` differ from the visible input.
struct BackgroundLayer {
  ImageBuffer image;  // encoded, aligned with the base image
  DisparityMap disparity;
  Mask mask;
};

/// An empty set builds the visible-surface-only stack.
struct BackgroundSet {
  std::vector<BackgroundLayer> layers;
};

struct HeuristicOptions {
  bool soft_zones = true;
  /// Dilation of the background blend weights.
  int blend_dilate_px = 2;
  /// Ignore the background set (w_i = 0 everywhere).
  bool visible_only = false;
};

/// Stack from one image and its disparity. Visible planes slice the input
/// by zone weight; behind them, inside each background mask, hidden planes
/// carry the background image at its own disparity. Throws InvalidArgument
/// when a background disparity lies in front of the visible surface by more
/// than 1/N.
compositor::MpiStack build_mpi_heuristic(const ImageBuffer& image,
                                         const DisparityMap& disparity,
                                         const BackgroundSet& background,
                                         int plane_count, double gamma,
                                         const HeuristicOptions& options = {});

struct BackgroundOptions {
  occlusion::OcclusionConfig occlusion;
  /// Number of occluder disparity levels the mask is split into.
  int count = 1;
  int inpaint_iters = kDefaultInpaintIterations;
  /// Pre-inpainted background used instead of the built-in inpainter.
  std::optional<ImageBuffer> external_image;
};

struct BackgroundResult {
  BackgroundSet set;
  occlusion::OcclusionStages stages;
};

/// Occlusion mask, split by occluder level, then filled from context that
/// lies behind the occluder. Background disparity is clamped to <= D.
BackgroundResult build_background_set(const ImageBuffer& image,
                                      const DisparityMap& disparity,
                                      const BackgroundOptions& options = {});

/// {"version": 1, "backgrounds": [{"image": ..., "disparity": ...,
/// "mask": ...}]} with PNG paths relative to the document.
void save_background_set(const BackgroundSet& set,
                         const std::filesystem::path& json_path);
BackgroundSet load_background_set(const std::filesystem::path& json_path);

}  // namespace layerbokeh::mpi_builder
