#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "layerbokeh/compositor/mpi.hpp"
#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/image_io.hpp"
#include "layerbokeh/metrics/metrics.hpp"
#include "layerbokeh/occlusion/occlusion.hpp"
#include "layerbokeh/oracle/ray_tracer.hpp"
#include "layerbokeh/oracle/scene.hpp"
#include "layerbokeh/service/pipeline.hpp"
#include "layerbokeh/synth/dataset.hpp"

namespace py = pybind11;
using namespace layerbokeh;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

ImageBuffer to_image(const FloatArray& a, ColorSpace space = ColorSpace::kEncoded) {
  if (a.ndim() != 3 || a.shape(2) < 1 || a.shape(2) > 4) {
    throw InvalidArgument("image must be an H x W x C array with 1 to 4 channels");
  }
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  const auto c = static_cast<int>(a.shape(2));
  return ImageBuffer(w, h, c, space, std::vector<float>(a.data(), a.data() + a.size()));
}

template <typename Map>
Map to_map(const FloatArray& a, const char* what) {
  if (a.ndim() != 2) throw InvalidArgument(std::string(what) + " must be an H x W array");
  return Map(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
             std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray from_image(const ImageBuffer& img) {
  FloatArray out({img.height(), img.width(), img.channels()});
  std::memcpy(out.mutable_data(), img.data().data(), img.data().size_bytes());
  return out;
}

template <typename Map>
FloatArray from_map(const Map& m) {
  FloatArray out({m.height(), m.width()});
  std::memcpy(out.mutable_data(), m.data().data(), m.data().size_bytes());
  return out;
}

RenderParams make_params(double blur, double focus, double gamma, int planes) {
  RenderParams p;
  p.blur_amount = blur;
  p.refocus_disparity = focus;
  p.gamma = gamma;
  p.plane_count = planes;
  p.validate();
  return p;
}

// Built MPI kept alive between renders, like a server session.
class Scene {
 public:
  Scene(const FloatArray& image, const FloatArray& disparity, int planes, double gamma,
        std::optional<double> extend_for_blur, bool visible_only, int dilate)
      : image_(to_image(image)), disparity_(to_map<DisparityMap>(disparity, "disparity")) {
    service::PipelineConfig cfg;
    cfg.plane_count = planes;
    cfg.gamma = gamma;
    cfg.extend_for_blur = extend_for_blur;
    cfg.heuristic.visible_only = visible_only;
    cfg.occlusion.dilate_px = dilate;
    py::gil_scoped_release release;
    built_ = std::make_unique<service::BuiltScene>(service::build_scene(image_, disparity_, cfg));
    planes_ = planes;
  }

  FloatArray render(double blur, double focus, bool normalize) const {
    const RenderParams p = make_params(blur, focus, built_->gamma, planes_);
    ImageBuffer out = [&] {
      py::gil_scoped_release release;
      return service::render_scene(*built_, p, normalize);
    }();
    return from_image(out);
  }

  double focus_at(double x, double y, bool snap) const {
    return service::focus_disparity(disparity_, x, y, planes_, snap);
  }

  FloatArray occlusion_mask() const { return from_map(built_->stages.dilated); }
  int plane_count() const { return planes_; }

 private:
  ImageBuffer image_;
  DisparityMap disparity_;
  std::unique_ptr<service::BuiltScene> built_;
  int planes_ = kDefaultPlaneCount;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Layered bokeh rendering with partial occlusion";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("blur_radius", &blur_radius, py::arg("blur_amount"), py::arg("disparity"),
        py::arg("refocus_disparity"));
  m.def("plane_disparity", &compositor::plane_disparity, py::arg("index"), py::arg("plane_count"));

  m.def("load_image", [](const std::filesystem::path& p) { return from_image(load_image(p)); });
  m.def("load_disparity", [](const std::filesystem::path& p) { return from_map(load_disparity(p)); });

  py::class_<Scene>(m, "Scene")
      .def(py::init<const FloatArray&, const FloatArray&, int, double, std::optional<double>, bool, int>(),
           py::arg("image"), py::arg("disparity"), py::arg("planes") = kDefaultPlaneCount,
           py::arg("gamma") = kDefaultGamma, py::arg("extend_for_blur") = py::none(),
           py::arg("visible_only") = false, py::arg("dilate") = occlusion::OcclusionConfig{}.dilate_px)
      .def("render", &Scene::render, py::arg("blur"), py::arg("focus"), py::arg("normalize") = true)
      .def("focus_at", &Scene::focus_at, py::arg("x"), py::arg("y"), py::arg("snap") = false)
      .def_property_readonly("occlusion_mask", &Scene::occlusion_mask)
      .def_property_readonly("plane_count", &Scene::plane_count);

  m.def(
      "trace_bokeh",
      [](const std::filesystem::path& scene_json, double blur, double focus, int rays,
         std::uint64_t seed, double gamma) {
        const oracle::SceneSpec scene = oracle::load_scene(scene_json);
        const RenderParams p = make_params(blur, focus, gamma, kDefaultPlaneCount);
        ImageBuffer out = [&] {
          py::gil_scoped_release release;
          return oracle::trace_bokeh(scene, p, rays, seed);
        }();
        return from_image(out);
      },
      py::arg("scene"), py::arg("blur"), py::arg("focus"), py::arg("rays") = oracle::kDefaultRayCount,
      py::arg("seed") = 0, py::arg("gamma") = kDefaultGamma);

  m.def(
      "occlusion_mask",
      [](const FloatArray& disparity, std::optional<double> blur, double tau, int min_segment,
         std::optional<int> extend_iters, int dilate) {
        const auto d = to_map<DisparityMap>(disparity, "disparity");
        occlusion::OcclusionConfig cfg;
        cfg.grad_threshold = tau;
        cfg.min_segment = min_segment;
        cfg.dilate_px = dilate;
        if (extend_iters) {
          cfg.extend_iters = *extend_iters;
        } else if (blur) {
          cfg.extend_iters = occlusion::extend_iters_for_blur(*blur, d, cfg);
        }
        return from_map(occlusion::occlusion_mask(d, cfg));
      },
      py::arg("disparity"), py::arg("blur") = py::none(),
      py::arg("tau") = occlusion::OcclusionConfig{}.grad_threshold,
      py::arg("min_segment") = occlusion::OcclusionConfig{}.min_segment,
      py::arg("extend_iters") = py::none(), py::arg("dilate") = occlusion::OcclusionConfig{}.dilate_px);

  m.def(
      "psnr",
      [](const FloatArray& a, const FloatArray& b, std::optional<FloatArray> mask) {
        if (!mask) return metrics::psnr(to_image(a), to_image(b));
        const Mask sel = to_map<Mask>(*mask, "mask");
        return metrics::psnr(to_image(a), to_image(b), &sel);
      },
      py::arg("a"), py::arg("b"), py::arg("mask") = py::none());
  m.def(
      "ssim",
      [](const FloatArray& a, const FloatArray& b, std::optional<FloatArray> mask) {
        if (!mask) return metrics::ssim(to_image(a), to_image(b));
        const Mask sel = to_map<Mask>(*mask, "mask");
        return metrics::ssim(to_image(a), to_image(b), &sel);
      },
      py::arg("a"), py::arg("b"), py::arg("mask") = py::none());

  // Config and manifest cross the boundary as JSON text.
  m.def(
      "generate_dataset",
      [](const std::string& config_json, const std::filesystem::path& outdir) {
        const synth::DatasetConfig cfg = synth::config_from_json(nlohmann::json::parse(config_json));
        py::gil_scoped_release release;
        return synth::generate_dataset(cfg, outdir).manifest.dump();
      },
      py::arg("config_json"), py::arg("outdir"));
  m.def(
      "evaluate",
      [](const std::filesystem::path& pred, const std::filesystem::path& manifest, const std::string& label) {
        metrics::EvalOptions o;
        o.label = label;
        return metrics::report_to_json(metrics::evaluate(pred, manifest, o)).dump();
      },
      py::arg("pred_dir"), py::arg("manifest"), py::arg("label") = "prediction");
}
