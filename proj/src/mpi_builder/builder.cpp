#include "layerbokeh/mpi_builder/builder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include <json.hpp>

#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/filters.hpp"
#include "layerbokeh/core/gamma.hpp"
#include "layerbokeh/core/image_io.hpp"
#include "layerbokeh/core/params.hpp"

namespace layerbokeh::mpi_builder {

using compositor::MpiPlane;
using compositor::MpiStack;
using nlohmann::json;

namespace {

// Float disparities at plane centers land a few ulps off; snap them.
constexpr double kSnap = 1e-5;

void check_plane_count(int n) {
  if (n < 2) throw InvalidArgument("plane count must be >= 2");
}

ImageBuffer rgb_of(const ImageBuffer& image) {
  if (image.channels() == 3) return image;
  if (image.channels() != 4) {
    throw InvalidArgument("expected an RGB or RGBA image");
  }
  std::vector<float> out(image.pixel_count() * 3);
  for (std::size_t p = 0; p < image.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) out[p * 3 + c] = image.data()[p * 4 + c];
  }
  return ImageBuffer(image.width(), image.height(), 3, image.space(),
                     std::move(out));
}

/// Over-alphas for a group of plane weights given front first, so
/// that compositing the group reproduces the weights; the back-most plane
/// closes coverage.
void weights_to_alphas(const double weights[2], int count, double alphas[2]) {
  double remaining = 1.0;
  for (int k = 0; k < count; ++k) {
    if (k == count - 1) {
      alphas[k] = 1.0;
    } else {
      alphas[k] = remaining > 0.0 ? std::min(1.0, weights[k] / remaining) : 0.0;
      remaining -= weights[k];
    }
  }
}

}  // namespace

ZoneWeights zone_weights(double disparity, int plane_count, bool soft) {
  check_plane_count(plane_count);
  const double d = std::clamp(disparity, 0.0, 1.0);
  ZoneWeights z;
  if (!soft) {
    int bin = static_cast<int>(std::floor(d * plane_count));
    bin = std::clamp(bin, 0, plane_count - 1);
    z.lower = z.upper = bin;
    return z;
  }
  const double t =
      std::clamp(d * plane_count - 0.5, 0.0, static_cast<double>(plane_count - 1));
  int i0 = static_cast<int>(std::floor(t));
  double f = t - i0;
  if (f < kSnap) {
    f = 0.0;
  } else if (f > 1.0 - kSnap) {
    ++i0;
    f = 0.0;
  }
  if (i0 >= plane_count - 1 || f == 0.0) {
    z.lower = z.upper = std::min(i0, plane_count - 1);
    return z;
  }
  z.lower = i0;
  z.upper = i0 + 1;
  z.lower_weight = 1.0 - f;
  z.upper_weight = f;
  return z;
}

std::vector<Mask> zone_masks(const DisparityMap& disparity, int plane_count,
                             bool soft) {
  check_plane_count(plane_count);
  const std::size_t n = disparity.pixel_count();
  std::vector<std::vector<float>> w(plane_count, std::vector<float>(n, 0.0f));
  for (std::size_t p = 0; p < n; ++p) {
    const ZoneWeights z = zone_weights(disparity.data()[p], plane_count, soft);
    w[z.lower][p] += static_cast<float>(z.lower_weight);
    if (z.upper != z.lower) w[z.upper][p] += static_cast<float>(z.upper_weight);
  }
  std::vector<Mask> out;
  out.reserve(plane_count);
  for (auto& v : w) out.emplace_back(disparity.width(), disparity.height(), std::move(v));
  return out;
}

MpiStack build_mpi_ideal(const oracle::SceneSpec& scene, int plane_count,
                         double gamma) {
  check_plane_count(plane_count);
  scene.validate();
  check_gamma(gamma);
  const int w = scene.width;
  const int h = scene.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  // Premultiplied accumulators, allocated for occupied bins only.
  std::vector<std::vector<float>> color(plane_count);
  std::vector<std::vector<float>> alpha(plane_count);

  for (const oracle::PlanarLayer& layer : scene.layers) {  // back to front
    const ImageBuffer linear = gamma_decode(layer.rgba, gamma);
    const int lw = linear.width();
    const int lh = linear.height();
    for (int ly = 0; ly < lh; ++ly) {
      const int y = ly + layer.offset_y;
      if (y < 0 || y >= h) continue;
      for (int lx = 0; lx < lw; ++lx) {
        const int x = lx + layer.offset_x;
        if (x < 0 || x >= w) continue;
        const float a = linear.at(lx, ly, 3);
        if (a <= 0.0f) continue;
        const int bin =
            zone_weights(layer.plane.disparity_at(x, y), plane_count, false).lower;
        if (alpha[bin].empty()) {
          alpha[bin].assign(n, 0.0f);
          color[bin].assign(n * 3, 0.0f);
        }
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        for (int c = 0; c < 3; ++c) {
          color[bin][p * 3 + c] =
              linear.at(lx, ly, c) * a + color[bin][p * 3 + c] * (1.0f - a);
        }
        alpha[bin][p] = a + alpha[bin][p] * (1.0f - a);
      }
    }
  }

  std::vector<MpiPlane> planes;
  planes.reserve(plane_count);
  for (int i = 0; i < plane_count; ++i) {
    std::vector<float> c(n * 3, 0.0f);
    std::vector<float> a(n, 0.0f);
    if (!alpha[i].empty()) {
      for (std::size_t p = 0; p < n; ++p) {
        a[p] = alpha[i][p];
        if (a[p] <= 0.0f) continue;
        for (int k = 0; k < 3; ++k) c[p * 3 + k] = color[i][p * 3 + k] / a[p];
      }
    }
    planes.push_back(MpiPlane{ImageBuffer(w, h, 3, ColorSpace::kLinear, std::move(c)),
                              Mask(w, h, std::move(a)), std::nullopt,
                              compositor::plane_disparity(i, plane_count)});
  }
  return MpiStack(std::move(planes));
}

MpiStack build_mpi_heuristic(const ImageBuffer& image,
                             const DisparityMap& disparity,
                             const BackgroundSet& background, int plane_count,
                             double gamma, const HeuristicOptions& options) {
  check_plane_count(plane_count);
  check_gamma(gamma);
  if (options.blend_dilate_px < 0) {
    throw InvalidArgument("blend dilation must be >= 0");
  }
  const int w = image.width();
  const int h = image.height();
  if (!disparity.same_size(image)) {
    throw InvalidArgument("image and disparity sizes differ");
  }
  const std::size_t n = image.pixel_count();
  const double tolerance = 1.0 / plane_count;
  const bool use_bg = !options.visible_only && !background.layers.empty();

  std::vector<ImageBuffer> bg_linear;
  if (use_bg) {
    for (std::size_t k = 0; k < background.layers.size(); ++k) {
      const BackgroundLayer& b = background.layers[k];
      const std::string where = "background " + std::to_string(k);
      if (!b.image.same_size(w, h) || !b.disparity.same_size(image) ||
          !b.mask.same_size(image)) {
        throw InvalidArgument(where + ": size differs from the image");
      }
      for (std::size_t p = 0; p < n; ++p) {
        if (b.mask.data()[p] > 0.5f &&
            b.disparity.data()[p] > disparity.data()[p] + tolerance) {
          throw InvalidArgument(where +
                                ": background disparity in front of the "
                                "visible surface");
        }
      }
      bg_linear.push_back(gamma_decode(rgb_of(b.image), gamma));
    }
  }
  const ImageBuffer visible = gamma_decode(rgb_of(image), gamma);

  std::vector<std::vector<float>> alpha(plane_count, std::vector<float>(n, 0.0f));
  std::vector<std::vector<std::uint8_t>> visible_on(plane_count);
  std::vector<std::vector<float>> hidden(plane_count);
  std::vector<int> bg_index(n, -1);

  for (std::size_t p = 0; p < n; ++p) {
    const ZoneWeights z =
        zone_weights(disparity.data()[p], plane_count, options.soft_zones);
    int planes[2];
    double weights[2];
    double alphas[2];
    int count = 0;
    if (z.upper != z.lower && z.upper_weight > 0.0) {
      planes[count] = z.upper;
      weights[count++] = z.upper_weight;
    }
    planes[count] = z.lower;
    weights[count++] = z.lower_weight;
    weights_to_alphas(weights, count, alphas);
    for (int k = 0; k < count; ++k) {
      alpha[planes[k]][p] = static_cast<float>(alphas[k]);
      if (visible_on[planes[k]].empty()) visible_on[planes[k]].assign(n, 0);
      visible_on[planes[k]][p] = 1;
    }
    if (!use_bg) continue;
    const int lowest_visible = z.lower;

    for (std::size_t k = 0; k < background.layers.size(); ++k) {
      if (background.layers[k].mask.data()[p] > 0.5f) {
        bg_index[p] = static_cast<int>(k);
        break;
      }
    }
    if (bg_index[p] < 0) continue;
    const ZoneWeights zb = zone_weights(
        background.layers[bg_index[p]].disparity.data()[p], plane_count,
        options.soft_zones);
    count = 0;
    double total = 0.0;
    if (zb.upper != zb.lower && zb.upper < lowest_visible && zb.upper_weight > 0.0) {
      planes[count] = zb.upper;
      weights[count++] = zb.upper_weight;
      total += zb.upper_weight;
    }
    if (zb.lower < lowest_visible && zb.lower_weight > 0.0) {
      planes[count] = zb.lower;
      weights[count++] = zb.lower_weight;
      total += zb.lower_weight;
    }
    if (count == 0) continue;
    for (int k = 0; k < count; ++k) weights[k] /= total;
    weights_to_alphas(weights, count, alphas);
    for (int k = 0; k < count; ++k) {
      alpha[planes[k]][p] = static_cast<float>(alphas[k]);
      if (hidden[planes[k]].empty()) hidden[planes[k]].assign(n, 0.0f);
      hidden[planes[k]][p] = 1.0f;
    }
  }

  std::vector<MpiPlane> planes;
  planes.reserve(plane_count);
  for (int i = 0; i < plane_count; ++i) {
    std::vector<float> color = visible.to_vector();
    std::optional<Mask> blend;
    if (!hidden[i].empty()) {
      std::vector<float> weight =
          dilate_mask(Mask(w, h, std::move(hidden[i])), options.blend_dilate_px)
              .to_vector();
      for (std::size_t p = 0; p < n; ++p) {
        // Pixels where this plane shows the visible surface keep w = 0.
        if (!visible_on[i].empty() && visible_on[i][p]) weight[p] = 0.0f;
        if (weight[p] <= 0.0f || bg_index[p] < 0) {
          weight[p] = 0.0f;
          continue;
        }
        const auto src = bg_linear[bg_index[p]].data();
        for (int c = 0; c < 3; ++c) color[p * 3 + c] = src[p * 3 + c];
      }
      blend = Mask(w, h, std::move(weight));
    }
    planes.push_back(MpiPlane{
        ImageBuffer(w, h, 3, ColorSpace::kLinear, std::move(color)),
        Mask(w, h, std::move(alpha[i])), std::move(blend),
        compositor::plane_disparity(i, plane_count)});
  }
  return MpiStack(std::move(planes));
}

BackgroundResult build_background_set(const ImageBuffer& image,
                                      const DisparityMap& disparity,
                                      const BackgroundOptions& options) {
  if (options.count < 1) throw InvalidArgument("background count must be >= 1");
  if (!disparity.same_size(image)) {
    throw InvalidArgument("image and disparity sizes differ");
  }
  if (options.external_image && !options.external_image->same_size(
                                    image.width(), image.height())) {
    throw InvalidArgument("external background size differs from the image");
  }
  const int w = image.width();
  const int h = image.height();
  const std::size_t n = image.pixel_count();
  BackgroundResult result{{}, occlusion::occlusion_stages(disparity, options.occlusion)};
  const Mask& mask = result.stages.dilated;

  // Disparity of the nearest occluder around each pixel.
  const std::vector<float> occluder =
      grey_dilate(disparity.data(), w, h, options.occlusion.dilate_px + 2);
  std::vector<float> levels;
  for (std::size_t p = 0; p < n; ++p) {
    if (mask.data()[p] > 0.5f) levels.push_back(occluder[p]);
  }
  if (levels.empty()) {
    result.set.layers.push_back(
        BackgroundLayer{image, disparity, Mask::filled(w, h, 0.0f)});
    return result;
  }
  std::sort(levels.begin(), levels.end());
  std::vector<float> bounds;  // group g covers [bounds[g], bounds[g+1])
  for (int g = 0; g < options.count; ++g) {
    bounds.push_back(levels[levels.size() * g / options.count]);
  }
  bounds.push_back(std::numeric_limits<float>::infinity());

  const double margin = 0.5 * options.occlusion.grad_threshold;
  const ImageBuffer rgb = rgb_of(image);
  for (int g = 0; g < options.count; ++g) {
    std::vector<float> group(n, 0.0f);
    float split = std::numeric_limits<float>::infinity();
    bool any = false;
    for (std::size_t p = 0; p < n; ++p) {
      if (mask.data()[p] <= 0.5f) continue;
      if (occluder[p] < bounds[g] || occluder[p] >= bounds[g + 1]) continue;
      group[p] = 1.0f;
      split = std::min(split, occluder[p]);
      any = true;
    }
    if (!any) continue;
    // Only content behind the occluder may serve as context.
    std::vector<float> hole(n, 0.0f);
    std::size_t hole_area = 0;
    for (std::size_t p = 0; p < n; ++p) {
      if (disparity.data()[p] >= split - margin) {
        hole[p] = 1.0f;
        ++hole_area;
      }
    }
    if (hole_area == n) hole = group;
    std::vector<float> fill(n, 0.0f);
    for (std::size_t p = 0; p < n; ++p) fill[p] = group[p] * hole[p];
    const Mask hole_mask(w, h, std::move(hole));
    const Mask fill_mask(w, h, std::move(fill));

    ImageBuffer filled_image =
        options.external_image ? rgb_of(*options.external_image)
                               : inpaint(rgb, hole_mask, options.inpaint_iters);
    const DisparityMap filled_disp =
        inpaint(disparity, hole_mask, options.inpaint_iters);
    std::vector<float> bg_rgb = rgb.to_vector();
    std::vector<float> bg_disp = disparity.to_vector();
    for (std::size_t p = 0; p < n; ++p) {
      if (fill_mask.data()[p] <= 0.5f) continue;
      for (int c = 0; c < 3; ++c) {
        bg_rgb[p * 3 + c] = filled_image.data()[p * 3 + c];
      }
      bg_disp[p] = std::min(filled_disp.data()[p], disparity.data()[p]);
    }
    result.set.layers.push_back(BackgroundLayer{
        ImageBuffer(w, h, 3, ColorSpace::kEncoded, std::move(bg_rgb)),
        DisparityMap(w, h, std::move(bg_disp)), Mask(w, h, std::move(group))});
  }
  return result;
}

void save_background_set(const BackgroundSet& set,
                         const std::filesystem::path& json_path) {
  const std::filesystem::path dir = json_path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  json entries = json::array();
  for (std::size_t k = 0; k < set.layers.size(); ++k) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "background_%02zu", k);
    const std::string base(stem);
    save_image(set.layers[k].image, dir / (base + ".png"), 8);
    save_disparity(set.layers[k].disparity, dir / (base + "_disparity.png"));
    save_mask(set.layers[k].mask, dir / (base + "_mask.png"));
    entries.push_back({{"image", base + ".png"},
                       {"disparity", base + "_disparity.png"},
                       {"mask", base + "_mask.png"}});
  }
  const std::string text =
      json{{"version", 1}, {"backgrounds", entries}}.dump(2) + "\n";
  write_file_atomic(json_path,
                    std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                              text.size()));
}

BackgroundSet load_background_set(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open " + json_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(json_path.string() + ": " + e.what());
  }
  if (!doc.contains("backgrounds") || !doc["backgrounds"].is_array()) {
    throw ParseError("backgrounds: expected an array");
  }
  const std::filesystem::path dir = json_path.parent_path();
  BackgroundSet set;
  const json& entries = doc["backgrounds"];
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const std::string where = "backgrounds[" + std::to_string(k) + "]";
    for (const char* key : {"image", "disparity", "mask"}) {
      if (!entries[k].contains(key) || !entries[k][key].is_string()) {
        throw ParseError(where + "." + key + ": expected a path");
      }
    }
    set.layers.push_back(BackgroundLayer{
        load_image(dir / entries[k]["image"].get<std::string>()),
        load_disparity(dir / entries[k]["disparity"].get<std::string>()),
        load_mask(dir / entries[k]["mask"].get<std::string>())});
  }
  return set;
}

}  // namespace layerbokeh::mpi_builder
