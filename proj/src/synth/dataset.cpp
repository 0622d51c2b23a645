#include "layerbokeh/synth/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/image_io.hpp"
#include "layerbokeh/core/params.hpp"
#include "layerbokeh/core/random.hpp"
#include "layerbokeh/oracle/ray_tracer.hpp"

namespace layerbokeh::synth {

using nlohmann::json;
namespace fs = std::filesystem;

void DatasetConfig::validate() const {
  if (n_scenes < 0) throw InvalidArgument("n_scenes must be >= 0");
  if (width < 64 || height < 64) throw InvalidArgument("resolution must be >= 64");
  if (n_foregrounds < 0) throw InvalidArgument("n_foregrounds must be >= 0");
  if (blur_params.empty()) throw InvalidArgument("blur_params must be nonempty");
  for (double a : blur_params) {
    if (!(a >= 0.0) || !std::isfinite(a)) {
      throw InvalidArgument("blur_params must be finite and >= 0");
    }
  }
  if (refocus_mode == RefocusMode::kExplicit) {
    if (refocus_list.empty()) throw InvalidArgument("refocus list is empty");
    for (double d : refocus_list) {
      if (!(d >= 0.0 && d <= 1.0)) throw InvalidArgument("refocus disparity outside [0,1]");
    }
  }
  check_gamma(gamma);
  if (rays < 1) throw InvalidArgument("rays must be >= 1");
}

json config_to_json(const DatasetConfig& cfg) {
  return json{
      {"n_scenes", cfg.n_scenes},
      {"resolution", {cfg.width, cfg.height}},
      {"n_foregrounds", cfg.n_foregrounds},
      {"disparity_mode",
       cfg.disparity_mode == DisparityMode::kConstant ? "constant" : "planar"},
      {"blur_params", cfg.blur_params},
      {"refocus_mode", cfg.refocus_mode == RefocusMode::kObjectDisparities
                           ? "object-disparities"
                           : "explicit"},
      {"refocus_list", cfg.refocus_list},
      {"gamma", cfg.gamma},
      {"rays", cfg.rays},
      {"seed", cfg.seed},
      {"asset_dirs",
       {{"backgrounds", cfg.background_dir.generic_string()},
        {"foregrounds", cfg.foreground_dir.generic_string()}}}};
}

DatasetConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("config: expected an object");
  DatasetConfig cfg;
  auto field = [&](const char* key, auto& out) {
    if (!doc.contains(key)) return;
    try {
      doc.at(key).get_to(out);
    } catch (const json::exception&) {
      throw ParseError(std::string("config.") + key + ": wrong type");
    }
  };
  field("n_scenes", cfg.n_scenes);
  field("n_foregrounds", cfg.n_foregrounds);
  field("blur_params", cfg.blur_params);
  field("refocus_list", cfg.refocus_list);
  field("gamma", cfg.gamma);
  field("rays", cfg.rays);
  field("seed", cfg.seed);
  if (doc.contains("resolution")) {
    const json& r = doc["resolution"];
    if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() ||
        !r[1].is_number_integer()) {
      throw ParseError("config.resolution: expected [width, height]");
    }
    cfg.width = r[0].get<int>();
    cfg.height = r[1].get<int>();
  }
  if (doc.contains("disparity_mode")) {
    const std::string mode = doc["disparity_mode"].is_string()
                                 ? doc["disparity_mode"].get<std::string>()
                                 : "";
    if (mode == "constant") {
      cfg.disparity_mode = DisparityMode::kConstant;
    } else if (mode == "planar") {
      cfg.disparity_mode = DisparityMode::kPlanar;
    } else {
      throw ParseError("config.disparity_mode: expected constant or planar");
    }
  }
  if (doc.contains("refocus_mode")) {
    const std::string mode = doc["refocus_mode"].is_string()
                                 ? doc["refocus_mode"].get<std::string>()
                                 : "";
    if (mode == "object-disparities") {
      cfg.refocus_mode = RefocusMode::kObjectDisparities;
    } else if (mode == "explicit") {
      cfg.refocus_mode = RefocusMode::kExplicit;
    } else {
      throw ParseError("config.refocus_mode: expected object-disparities or explicit");
    }
  }
  if (doc.contains("asset_dirs")) {
    const json& a = doc["asset_dirs"];
    if (!a.is_object()) throw ParseError("config.asset_dirs: expected an object");
    if (a.contains("backgrounds")) cfg.background_dir = a["backgrounds"].get<std::string>();
    if (a.contains("foregrounds")) cfg.foreground_dir = a["foregrounds"].get<std::string>();
  }
  return cfg;
}

AssetLibrary assets_for(const DatasetConfig& cfg) {
  if (!cfg.background_dir.empty() || !cfg.foreground_dir.empty()) {
    return load_assets(cfg.background_dir, cfg.foreground_dir);
  }
  return procedural_assets(mix_seed(cfg.seed, 0x617373657473ULL), 4,
                           std::max(6, cfg.n_foregrounds * 2), cfg.width,
                           cfg.height);
}

namespace {

// Fraction of each band kept clear at either end.
constexpr double kBandMargin = 0.15;

ImageBuffer with_unit_alpha(const ImageBuffer& rgb) {
  std::vector<float> out(rgb.pixel_count() * 4);
  for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) out[p * 4 + c] = rgb.data()[p * 3 + c];
    out[p * 4 + 3] = 1.0f;
  }
  return ImageBuffer(rgb.width(), rgb.height(), 4, ColorSpace::kEncoded,
                     std::move(out));
}

/// Plane whose disparity stays within [lo, hi] over the box [x0,x1]x[y0,y1].
oracle::PlaneCoefficients sample_plane(SplitMix64& rng, DisparityMode mode,
                                       double lo, double hi, double x0, double y0,
                                       double x1, double y1) {
  if (mode == DisparityMode::kConstant) {
    return oracle::PlaneCoefficients::constant(rng.uniform(lo, hi));
  }
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double cx = 0.5 * (x0 + x1);
  const double cy = 0.5 * (y0 + y1);
  const double ex = 0.5 * (x1 - x0);
  const double ey = 0.5 * (y1 - y0);
  // |sx|*ex + |sy|*ey <= 0.9*half keeps every corner inside the band.
  const double share = rng.uniform();
  const double sx = (rng.uniform() < 0.5 ? -1 : 1) * 0.9 * half * share / std::max(ex, 1.0);
  const double sy =
      (rng.uniform() < 0.5 ? -1 : 1) * 0.9 * half * (1 - share) / std::max(ey, 1.0);
  const double d0 = center + rng.uniform(-0.05, 0.05) * half;
  // d(x,y) = p + sx*x + sy*y  <=>  c = 1/p, a = -sx*c, b = -sy*c
  const double p = d0 - sx * cx - sy * cy;
  if (!(p > 0.0)) throw InvalidArgument("disparity band infeasible");
  oracle::PlaneCoefficients plane;
  plane.c = 1.0 / p;
  plane.a = -sx * plane.c;
  plane.b = -sy * plane.c;
  return plane;
}

}  // namespace

oracle::SceneSpec random_scene(std::uint64_t seed, const AssetLibrary& assets,
                               const DatasetConfig& cfg) {
  cfg.validate();
  if (assets.backgrounds.empty()) throw InvalidArgument("no background assets");
  if (static_cast<int>(assets.foregrounds.size()) < cfg.n_foregrounds) {
    throw InvalidArgument("need " + std::to_string(cfg.n_foregrounds) +
                          " foreground assets, have " +
                          std::to_string(assets.foregrounds.size()));
  }
  for (const ImageBuffer& fg : assets.foregrounds) {
    if (fg.channels() != 4) {
      throw InvalidArgument("foreground asset missing alpha channel");
    }
  }
  SplitMix64 rng(seed);
  const int w = cfg.width;
  const int h = cfg.height;
  const int layers = cfg.n_foregrounds + 1;
  const double band = 1.0 / layers;
  auto band_lo = [&](int k) { return k * band + kBandMargin * band; };
  auto band_hi = [&](int k) { return (k + 1) * band - kBandMargin * band; };

  oracle::SceneSpec scene;
  scene.width = w;
  scene.height = h;

  const ImageBuffer& bg_asset =
      assets.backgrounds[rng.uniform_int(0, static_cast<int>(assets.backgrounds.size()) - 1)];
  oracle::PlanarLayer background{with_unit_alpha(resize_bilinear(bg_asset, w, h)),
                                 sample_plane(rng, cfg.disparity_mode, band_lo(0),
                                              band_hi(0), 0, 0, w - 1, h - 1),
                                 0, 0, true};
  scene.layers.push_back(std::move(background));

  // Distinct assets per scene, drawn without replacement.
  std::vector<int> order(assets.foregrounds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
    std::swap(order[i], order[rng.uniform_int(0, i)]);
  }
  for (int k = 1; k < layers; ++k) {
    const ImageBuffer& asset = assets.foregrounds[order[k - 1]];
    const double scale = rng.uniform(0.3, 0.55) * std::min(w, h) /
                         std::max(asset.width(), asset.height());
    const int fw = std::max(8, static_cast<int>(std::lround(asset.width() * scale)));
    const int fh = std::max(8, static_cast<int>(std::lround(asset.height() * scale)));
    const int ox = rng.uniform_int(-fw / 4, w - 3 * fw / 4);
    const int oy = rng.uniform_int(-fh / 4, h - 3 * fh / 4);
    const double x0 = std::min(0, ox);
    const double y0 = std::min(0, oy);
    const double x1 = std::max(w - 1, ox + fw - 1);
    const double y1 = std::max(h - 1, oy + fh - 1);
    scene.layers.push_back(oracle::PlanarLayer{
        resize_bilinear(asset, fw, fh),
        sample_plane(rng, cfg.disparity_mode, band_lo(k), band_hi(k), x0, y0, x1, y1),
        ox, oy, false});
  }
  scene.validate();
  return scene;
}

std::vector<double> object_disparities(const oracle::SceneSpec& scene) {
  std::vector<double> out;
  for (std::size_t i = 0; i < scene.layers.size(); ++i) {
    out.push_back(std::clamp(scene.layer_center_disparity(i), 0.0, 1.0));
  }
  return out;
}

std::string bokeh_file_name(double blur_amount, double refocus_disparity) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "bokeh_A%s_f%.4f.png",
                oracle::format_exact(blur_amount).c_str(), refocus_disparity);
  return buf;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  return sha256_hex(read_file_bytes(path));
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                    text.size()));
}

json file_entry(const fs::path& root, const fs::path& path) {
  return json{{"path", fs::relative(path, root).generic_string()},
              {"sha256", sha256_file(path)}};
}

}  // namespace

DatasetSummary generate_dataset(const DatasetConfig& cfg, const fs::path& outdir) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  try {
    fs::create_directories(outdir);
  } catch (const fs::filesystem_error& e) {
    throw IoError("cannot create " + outdir.string() + ": " + e.what());
  }
  const AssetLibrary assets = assets_for(cfg);
  json scenes = json::array();

  for (int i = 0; i < cfg.n_scenes; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04d", i);
    const fs::path final_dir = outdir / name;
    const fs::path temp_dir = outdir / ("." + std::string(name) + ".tmp");
    fs::remove_all(temp_dir);
    fs::create_directories(temp_dir);

    const std::uint64_t scene_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(i));
    const oracle::SceneSpec scene = random_scene(scene_seed, assets, cfg);
    oracle::save_scene(scene, temp_dir / "scene.json");
    const oracle::AllInFocus aif = oracle::composite_all_in_focus(scene, cfg.gamma);
    save_image(aif.image, temp_dir / "all_in_focus.png", 8);
    save_disparity(aif.disparity, temp_dir / "disparity.png");

    const std::vector<double> objects = object_disparities(scene);
    const std::vector<double>& refocus =
        cfg.refocus_mode == RefocusMode::kObjectDisparities ? objects : cfg.refocus_list;
    struct Render {
      std::string file;
      double blur;
      double focus;
    };
    std::vector<Render> renders;
    for (double a : cfg.blur_params) {
      for (double df : refocus) {
        const std::string file = bokeh_file_name(a, df);
        if (std::any_of(renders.begin(), renders.end(),
                        [&](const Render& r) { return r.file == file; })) {
          continue;  // identical after rounding the name
        }
        RenderParams params;
        params.blur_amount = a;
        params.refocus_disparity = df;
        params.gamma = cfg.gamma;
        const ImageBuffer bokeh = oracle::trace_bokeh(
            scene, params, cfg.rays, mix_seed(scene_seed, renders.size() + 1));
        save_image(bokeh, temp_dir / file, 8);
        renders.push_back({file, a, df});
      }
    }

    if (fs::exists(final_dir)) fs::remove_all(final_dir);
    fs::rename(temp_dir, final_dir);

    json files{{"all_in_focus", file_entry(outdir, final_dir / "all_in_focus.png")},
               {"disparity", file_entry(outdir, final_dir / "disparity.png")},
               {"scene", file_entry(outdir, final_dir / "scene.json")}};
    json layers = json::array();
    for (std::size_t k = 0; k < scene.layers.size(); ++k) {
      char layer[32];
      std::snprintf(layer, sizeof(layer), "layer_%02zu.png", k);
      layers.push_back(file_entry(outdir, final_dir / layer));
    }
    files["layers"] = layers;
    json bokeh = json::array();
    for (const Render& r : renders) {
      json entry = file_entry(outdir, final_dir / r.file);
      entry["blur_amount"] = r.blur;
      entry["refocus_disparity"] = r.focus;
      bokeh.push_back(std::move(entry));
    }
    scenes.push_back(json{{"name", name},
                          {"seed", scene_seed},
                          {"object_disparities", objects},
                          {"files", files},
                          {"bokeh", bokeh}});
  }

  DatasetSummary summary;
  summary.manifest = json{{"version", 1}, {"config", config_to_json(cfg)}, {"scenes", scenes}};
  write_text(outdir / "manifest.json", summary.manifest.dump(2) + "\n");
  summary.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_text(outdir / "timing.json",
             json{{"seconds", summary.seconds}, {"n_scenes", cfg.n_scenes}}.dump(2) + "\n");
  return summary;
}

}  // namespace layerbokeh::synth
