// Command-line front end: render, oracle, synth, eval, mask, mpi-dump, serve.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "layerbokeh/compositor/mpi.hpp"
#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/image_io.hpp"
#include "layerbokeh/core/params.hpp"
#include "layerbokeh/metrics/metrics.hpp"
#include "layerbokeh/occlusion/occlusion.hpp"
#include "layerbokeh/oracle/ray_tracer.hpp"
#include "layerbokeh/oracle/scene.hpp"
#include "layerbokeh/service/pipeline.hpp"
#include "layerbokeh/service/server.hpp"
#include "layerbokeh/synth/dataset.hpp"

namespace fs = std::filesystem;
using namespace layerbokeh;

namespace {

/// Reported as "error: <stage>: <message>" with exit status 1.
struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what) {}
};

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

struct OcclusionFlags {
  double tau = occlusion::OcclusionConfig{}.grad_threshold;
  int min_segment = occlusion::OcclusionConfig{}.min_segment;
  std::optional<int> extend_iters;
  int dilate = occlusion::OcclusionConfig{}.dilate_px;

  void add(CLI::App* app) {
    app->add_option("--tau", tau, "Gradient threshold (disparity per pixel)");
    app->add_option("--min-segment", min_segment, "Smallest kept edge segment (pixels)");
    app->add_option("--extend-iters", extend_iters,
                    "Mask extension steps (default: derived from --blur, else 16)");
    app->add_option("--dilate", dilate, "Final mask dilation radius");
  }
  occlusion::OcclusionConfig config() const {
    occlusion::OcclusionConfig cfg;
    cfg.grad_threshold = tau;
    cfg.min_segment = min_segment;
    if (extend_iters) cfg.extend_iters = *extend_iters;
    cfg.dilate_px = dilate;
    return cfg;
  }
};

struct FocusFlags {
  std::optional<double> focus;
  std::vector<double> focus_xy;
  bool snap = false;

  void add(CLI::App* app) {
    auto* f = app->add_option("--focus", focus, "Refocused disparity d_f in [0,1]");
    auto* xy = app->add_option("--focus-xy", focus_xy, "Pixel whose disparity becomes d_f")
                   ->expected(2);
    f->excludes(xy);
    app->add_flag("--focus-snap", snap, "Snap d_f from --focus-xy to the nearest plane center");
  }
  double resolve(const DisparityMap& disparity, int planes) const {
    if (focus) return *focus;
    if (focus_xy.size() == 2) {
      return service::focus_disparity(disparity, focus_xy[0], focus_xy[1], planes, snap);
    }
    throw InvalidArgument("one of --focus or --focus-xy is required");
  }
};

int cmd_render(const fs::path& image_path, const fs::path& disparity_path,
               double blur, const FocusFlags& focus, double gamma, int planes,
               const OcclusionFlags& occ, int n_bg, const std::string& background,
               bool visible_only, bool hard_zones, bool no_normalize,
               const fs::path& out) {
  auto [image, disparity] = stage("loading inputs", [&] {
    return load_image_with_disparity(image_path, disparity_path);
  });
  service::PipelineConfig cfg;
  cfg.plane_count = planes;
  cfg.gamma = gamma;
  cfg.occlusion = occ.config();
  if (!occ.extend_iters) cfg.extend_for_blur = blur;
  cfg.background_count = n_bg;
  cfg.heuristic.visible_only = visible_only;
  cfg.heuristic.soft_zones = !hard_zones;
  if (!background.empty()) {
    cfg.external_background = stage("loading background", [&] { return load_image(background); });
  }
  RenderParams params;
  params.blur_amount = blur;
  params.gamma = gamma;
  params.plane_count = planes;
  params.refocus_disparity =
      stage("resolving focus", [&] { return focus.resolve(disparity, planes); });
  stage("validating parameters", [&] {
    params.validate();
    return 0;
  });
  const service::BuiltScene built =
      stage("building MPI", [&] { return service::build_scene(image, disparity, cfg); });
  const ImageBuffer result =
      stage("rendering", [&] { return service::render_scene(built, params, !no_normalize); });
  stage("writing output", [&] {
    save_image(result, out, 8);
    return 0;
  });
  std::fprintf(stderr, "d_f = %.6f, wrote %s\n", params.refocus_disparity, out.string().c_str());
  return 0;
}

int cmd_oracle(const fs::path& scene_path, double blur, double focus, double gamma,
               int rays, std::uint64_t seed, const fs::path& out) {
  const oracle::SceneSpec scene = stage("loading scene", [&] { return oracle::load_scene(scene_path); });
  RenderParams params;
  params.blur_amount = blur;
  params.refocus_disparity = focus;
  params.gamma = gamma;
  const ImageBuffer result =
      stage("tracing", [&] { return oracle::trace_bokeh(scene, params, rays, seed); });
  stage("writing output", [&] {
    save_image(result, out, 8);
    return 0;
  });
  return 0;
}

int cmd_mask(const fs::path& disparity_path, const OcclusionFlags& occ,
             std::optional<double> blur, bool debug, const fs::path& out) {
  const DisparityMap disparity =
      stage("loading disparity", [&] { return load_disparity(disparity_path); });
  occlusion::OcclusionConfig cfg = occ.config();
  if (!occ.extend_iters && blur) {
    cfg.extend_iters = occlusion::extend_iters_for_blur(*blur, disparity, cfg);
  }
  const occlusion::OcclusionStages stages =
      stage("computing mask", [&] { return occlusion::occlusion_stages(disparity, cfg); });
  stage("writing output", [&] {
    save_mask(stages.dilated, out);
    if (debug) {
      const fs::path stem = out.parent_path() / out.stem();
      save_mask(stages.initial, stem.string() + "_initial.png");
      save_mask(stages.cleaned, stem.string() + "_cleaned.png");
      save_mask(stages.extended, stem.string() + "_extended.png");
    }
    return 0;
  });
  std::fprintf(stderr, "extend_iters = %d, mask area = %zu px\n", cfg.extend_iters,
               mask_area(stages.dilated));
  return 0;
}

int cmd_mpi_dump(const fs::path& image_path, const fs::path& disparity_path,
                 int planes, double gamma, const OcclusionFlags& occ,
                 std::optional<double> blur, bool visible_only, const fs::path& out_dir) {
  auto [image, disparity] = stage("loading inputs", [&] {
    return load_image_with_disparity(image_path, disparity_path);
  });
  service::PipelineConfig cfg;
  cfg.plane_count = planes;
  cfg.gamma = gamma;
  cfg.occlusion = occ.config();
  if (!occ.extend_iters && blur) cfg.extend_for_blur = blur;
  cfg.heuristic.visible_only = visible_only;
  const service::BuiltScene built =
      stage("building MPI", [&] { return service::build_scene(image, disparity, cfg); });
  stage("writing output", [&] {
    compositor::save_stack(built.stack, out_dir);
    if (!built.background.layers.empty()) {
      mpi_builder::save_background_set(built.background, out_dir / "background.json");
    }
    save_mask(built.stages.dilated, out_dir / "occlusion_mask.png");
    return 0;
  });
  return 0;
}

int cmd_synth(synth::DatasetConfig cfg, const std::string& json_config,
              const std::string& resolution, const std::string& disparity_mode,
              const std::vector<double>& refocus, const fs::path& out) {
  if (!json_config.empty()) {
    cfg = stage("reading dataset config", [&] {
      std::ifstream in(json_config);
      if (!in) throw IoError("cannot open " + json_config);
      return synth::config_from_json(nlohmann::json::parse(in));
    });
  }
  if (!resolution.empty()) {
    int w = 0, h = 0;
    char x = 0;
    std::istringstream in(resolution);
    if (!(in >> w >> x >> h) || (x != 'x' && x != 'X')) {
      throw StageError("parsing flags", "--resolution expects WxH");
    }
    cfg.width = w;
    cfg.height = h;
  }
  if (!disparity_mode.empty()) {
    cfg.disparity_mode = disparity_mode == "planar" ? synth::DisparityMode::kPlanar
                                                    : synth::DisparityMode::kConstant;
  }
  if (!refocus.empty()) {
    cfg.refocus_mode = synth::RefocusMode::kExplicit;
    cfg.refocus_list = refocus;
  }
  const synth::DatasetSummary summary =
      stage("generating dataset", [&] { return synth::generate_dataset(cfg, out); });
  std::fprintf(stderr, "%d scenes in %.1f s -> %s\n", cfg.n_scenes, summary.seconds,
               (out / "manifest.json").string().c_str());
  return 0;
}

int cmd_eval(const fs::path& pred, const fs::path& gt, const fs::path& out,
             std::optional<int> band_dilate, const std::string& label) {
  metrics::EvalOptions options;
  options.band_dilate = band_dilate;
  options.label = label;
  const metrics::EvalReport report =
      stage("evaluating", [&] { return metrics::evaluate(pred, gt, options); });
  std::cout << metrics::report_table(report);
  if (!out.empty()) {
    stage("writing report", [&] {
      const std::string text = metrics::report_to_json(report).dump(2) + "\n";
      write_file_atomic(out, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                       text.size()));
      return 0;
    });
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layered bokeh rendering with partial occlusion"};
  app.set_config("--config", "", "TOML file supplying any flag; command line wins");
  app.require_subcommand(1);

  // render
  auto* render = app.add_subcommand("render", "Render bokeh from an image and its disparity");
  std::string r_image, r_disp, r_out, r_bg;
  double r_blur = 0.0, r_gamma = kDefaultGamma;
  int r_planes = kDefaultPlaneCount, r_nbg = 1;
  bool r_visible_only = false, r_hard = false, r_no_norm = false;
  FocusFlags r_focus;
  OcclusionFlags r_occ;
  render->add_option("--image", r_image, "All-in-focus image (PNG)")->required()->check(CLI::ExistingFile);
  render->add_option("--disparity", r_disp, "Disparity map (PNG, larger = closer)")->required()->check(CLI::ExistingFile);
  render->add_option("--blur,-A", r_blur, "Blur amount A (pixels per unit disparity)")->check(CLI::NonNegativeNumber);
  r_focus.add(render);
  render->add_option("--gamma", r_gamma, "Display gamma");
  render->add_option("--planes,-N", r_planes, "Number of MPI planes");
  render->add_option("--n-bg", r_nbg, "Background layers (occluder levels)");
  render->add_option("--background", r_bg, "Pre-inpainted background image replacing the built-in inpainter");
  render->add_flag("--visible-only", r_visible_only, "Skip hidden-background planes (baseline)");
  render->add_flag("--hard-zones", r_hard, "Hard plane bins instead of soft hat weights");
  render->add_flag("--no-normalize", r_no_norm, "Disable weight normalization");
  r_occ.add(render);
  render->add_option("--out,-o", r_out, "Output PNG")->required();

  // oracle
  auto* orc = app.add_subcommand("oracle", "Ground-truth bokeh of a layered scene by ray tracing");
  std::string o_scene, o_out;
  double o_blur = 0.0, o_focus = 0.0, o_gamma = kDefaultGamma;
  int o_rays = oracle::kDefaultRayCount;
  std::uint64_t o_seed = 0;
  orc->add_option("--scene", o_scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  orc->add_option("--blur,-A", o_blur, "Blur amount A")->check(CLI::NonNegativeNumber);
  orc->add_option("--focus", o_focus, "Refocused disparity d_f")->required();
  orc->add_option("--gamma", o_gamma, "Display gamma");
  orc->add_option("--rays", o_rays, "Aperture samples per pixel")->check(CLI::PositiveNumber);
  orc->add_option("--seed", o_seed, "Sampling seed");
  orc->add_option("--out,-o", o_out, "Output PNG")->required();

  // synth
  auto* syn = app.add_subcommand("synth", "Generate a synthetic layered-scene dataset");
  synth::DatasetConfig s_cfg;
  std::string s_json, s_res, s_mode, s_out;
  std::vector<double> s_refocus;
  std::string s_bg, s_fg;
  syn->add_option("--dataset-config", s_json, "Dataset config JSON (as echoed in a manifest)");
  syn->add_option("--n-scenes", s_cfg.n_scenes, "Number of scenes");
  syn->add_option("--resolution", s_res, "Canvas size WxH");
  syn->add_option("--n-foregrounds", s_cfg.n_foregrounds, "Foreground objects per scene");
  syn->add_option("--disparity-mode", s_mode, "constant or planar")
      ->check(CLI::IsMember({"constant", "planar"}));
  syn->add_option("--blur", s_cfg.blur_params, "Blur amounts A");
  syn->add_option("--refocus", s_refocus, "Explicit refocus disparities (default: object disparities)");
  syn->add_option("--gamma", s_cfg.gamma, "Display gamma");
  syn->add_option("--rays", s_cfg.rays, "Aperture samples per pixel");
  syn->add_option("--seed", s_cfg.seed, "Dataset seed");
  syn->add_option("--bg-dir", s_bg, "Directory of RGB background PNGs");
  syn->add_option("--fg-dir", s_fg, "Directory of RGBA foreground PNGs");
  syn->add_option("--out,-o", s_out, "Output directory")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "Score predictions against a dataset manifest");
  std::string e_pred, e_gt, e_out, e_label = "prediction";
  std::optional<int> e_band;
  ev->add_option("--pred", e_pred, "Prediction directory mirroring the dataset layout")->required();
  ev->add_option("--gt", e_gt, "Ground-truth manifest.json")->required()->check(CLI::ExistingFile);
  ev->add_option("--out,-o", e_out, "Report JSON");
  ev->add_option("--band-dilate", e_band, "Fixed boundary-band radius");
  ev->add_option("--label", e_label, "Method label in the report");

  // mask
  auto* msk = app.add_subcommand("mask", "Occlusion mask of a disparity map");
  std::string m_disp, m_out;
  std::optional<double> m_blur;
  bool m_debug = false;
  OcclusionFlags m_occ;
  msk->add_option("--disparity", m_disp, "Disparity map")->required()->check(CLI::ExistingFile);
  msk->add_option("--blur,-A", m_blur, "Blur amount used to size the extension");
  m_occ.add(msk);
  msk->add_flag("--debug", m_debug, "Also write the initial, cleaned and extended masks");
  msk->add_option("--out,-o", m_out, "Output PNG")->required();

  // mpi-dump
  auto* dump = app.add_subcommand("mpi-dump", "Build and save the MPI planes");
  std::string d_image, d_disp, d_out;
  int d_planes = kDefaultPlaneCount;
  double d_gamma = kDefaultGamma;
  std::optional<double> d_blur;
  bool d_visible_only = false;
  OcclusionFlags d_occ;
  dump->add_option("--image", d_image, "All-in-focus image")->required()->check(CLI::ExistingFile);
  dump->add_option("--disparity", d_disp, "Disparity map")->required()->check(CLI::ExistingFile);
  dump->add_option("--planes,-N", d_planes, "Number of planes");
  dump->add_option("--gamma", d_gamma, "Display gamma");
  dump->add_option("--blur,-A", d_blur, "Blur amount used to size the mask extension");
  dump->add_flag("--visible-only", d_visible_only, "Skip hidden-background planes");
  d_occ.add(dump);
  dump->add_option("--out,-o", d_out, "Output directory")->required();

  // serve
  auto* srv = app.add_subcommand("serve", "Run the HTTP render service");
  service::ServiceConfig v_cfg;
  std::string v_ui;
  std::size_t v_payload_mb = 32;
  srv->add_option("--host", v_cfg.host, "Bind address");
  srv->add_option("--port", v_cfg.port, "Port");
  srv->add_option("--max-sessions", v_cfg.max_sessions, "Session cache size (LRU)")->check(CLI::PositiveNumber);
  srv->add_option("--max-payload-mb", v_payload_mb, "Upload limit in MB");
  srv->add_option("--workers", v_cfg.workers, "Concurrent render computations (0 = all cores)");
  srv->add_option("--ui-dir", v_ui, "Static web client to serve at /")->check(CLI::ExistingDirectory);
  srv->add_option("--planes,-N", v_cfg.pipeline.plane_count, "Default plane count");
  srv->add_option("--gamma", v_cfg.pipeline.gamma, "Default gamma");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*render) {
      return cmd_render(r_image, r_disp, r_blur, r_focus, r_gamma, r_planes, r_occ,
                        r_nbg, r_bg, r_visible_only, r_hard, r_no_norm, r_out);
    }
    if (*orc) return cmd_oracle(o_scene, o_blur, o_focus, o_gamma, o_rays, o_seed, o_out);
    if (*syn) {
      s_cfg.background_dir = s_bg;
      s_cfg.foreground_dir = s_fg;
      return cmd_synth(s_cfg, s_json, s_res, s_mode, s_refocus, s_out);
    }
    if (*ev) return cmd_eval(e_pred, e_gt, e_out, e_band, e_label);
    if (*msk) return cmd_mask(m_disp, m_occ, m_blur, m_debug, m_out);
    if (*dump) {
      return cmd_mpi_dump(d_image, d_disp, d_planes, d_gamma, d_occ, d_blur,
                          d_visible_only, d_out);
    }
    if (*srv) {
      v_cfg.ui_dir = v_ui;
      v_cfg.max_payload_bytes = v_payload_mb << 20;
      if (!service::run_server(v_cfg)) {
        std::fprintf(stderr, "error: cannot bind %s:%d\n", v_cfg.host.c_str(), v_cfg.port);
        return 1;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
