#include "layerbokeh/metrics/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/filters.hpp"
#include "layerbokeh/core/image_io.hpp"

namespace layerbokeh::metrics {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_pair(const ImageBuffer& a, const ImageBuffer& b, const Mask* mask) {
  if (!a.same_size(b.width(), b.height()) ||
      a.color_channels() != b.color_channels()) {
    throw InvalidArgument("metric inputs differ in size or channels");
  }
  if (mask && !mask->same_size(a)) {
    throw InvalidArgument("metric mask differs in size from the images");
  }
}

constexpr int kWindow = 11;
constexpr int kHalf = kWindow / 2;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kHalf;
    taps[i] = std::exp(-d * d / (2 * kSigma * kSigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

/// Separable "valid" filtering: output is (w-10) x (h-10).
std::vector<double> filter_valid(const std::vector<double>& in, int w, int h) {
  static const auto taps = gaussian_taps();
  const int ow = w - 2 * kHalf;
  const int oh = h - 2 * kHalf;
  std::vector<double> rows(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += taps[k] * in[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += taps[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b, const Mask* mask) {
  check_pair(a, b, mask);
  const int channels = a.color_channels();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < a.pixel_count(); ++p) {
    if (mask && mask->data()[p] <= 0.5f) continue;
    for (int c = 0; c < channels; ++c) {
      const double d = static_cast<double>(a.data()[p * a.channels() + c]) -
                       static_cast<double>(b.data()[p * b.channels() + c]);
      sum += d * d;
    }
    count += channels;
  }
  if (count == 0) throw InvalidArgument("psnr: mask selects no pixels");
  const double mse = sum / static_cast<double>(count);
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImageBuffer& a, const ImageBuffer& b, const Mask* mask) {
  check_pair(a, b, mask);
  const int w = a.width();
  const int h = a.height();
  if (std::min(w, h) < kWindow) throw InvalidArgument("ssim: image side < 11");
  const int ow = w - 2 * kHalf;
  const int oh = h - 2 * kHalf;
  std::vector<std::uint8_t> select(static_cast<std::size_t>(ow) * oh, 1);
  std::size_t selected = select.size();
  if (mask) {
    selected = 0;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const bool on = mask->at(x + kHalf, y + kHalf) > 0.5f;
        select[static_cast<std::size_t>(y) * ow + x] = on;
        selected += on;
      }
    }
  }
  if (selected == 0) throw InvalidArgument("ssim: mask selects no windows");

  const int channels = a.color_channels();
  const std::size_t n = a.pixel_count();
  double total = 0.0;
  for (int c = 0; c < channels; ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t p = 0; p < n; ++p) {
      x[p] = a.data()[p * a.channels() + c];
      y[p] = b.data()[p * b.channels() + c];
      xx[p] = x[p] * x[p];
      yy[p] = y[p] * y[p];
      xy[p] = x[p] * y[p];
    }
    const auto mx = filter_valid(x, w, h);
    const auto my = filter_valid(y, w, h);
    const auto sxx = filter_valid(xx, w, h);
    const auto syy = filter_valid(yy, w, h);
    const auto sxy = filter_valid(xy, w, h);
    double sum = 0.0;
    for (std::size_t q = 0; q < select.size(); ++q) {
      if (!select[q]) continue;
      const double vx = std::max(0.0, sxx[q] - mx[q] * mx[q]);
      const double vy = std::max(0.0, syy[q] - my[q] * my[q]);
      const double cov = sxy[q] - mx[q] * my[q];
      sum += ((2 * mx[q] * my[q] + kC1) * (2 * cov + kC2)) /
             ((mx[q] * mx[q] + my[q] * my[q] + kC1) * (vx + vy + kC2));
    }
    total += sum / static_cast<double>(selected);
  }
  return std::clamp(total / channels, -1.0, 1.0);
}

ImageBuffer quantize8(const ImageBuffer& image) {
  std::vector<float> data = image.to_vector();
  for (float& v : data) v = static_cast<float>(std::round(v * 255.0) / 255.0);
  return ImageBuffer(image.width(), image.height(), image.channels(),
                     image.space(), std::move(data));
}

Mask boundary_band(const DisparityMap& disparity, const RenderParams& params,
                   const occlusion::OcclusionConfig& config,
                   std::optional<int> dilate_override) {
  params.validate();
  config.validate();
  if (dilate_override && *dilate_override < 0) {
    throw InvalidArgument("band dilation must be >= 0");
  }
  const Mask edges = occlusion::initial_mask(
      occlusion::disparity_gradient(disparity), config.grad_threshold);
  const occlusion::Components comps = occlusion::label_components(edges);
  const std::vector<float> step = occlusion::local_step(disparity);
  std::vector<double> largest(comps.count + 1, 0.0);
  for (std::size_t p = 0; p < step.size(); ++p) {
    const int label = comps.labels[p];
    if (label) largest[label] = std::max(largest[label], double{step[p]});
  }
  // Components sharing a radius are dilated together.
  std::map<int, std::vector<int>> by_radius;
  for (int k = 1; k <= comps.count; ++k) {
    const int r = dilate_override
                      ? *dilate_override
                      : std::max(8, static_cast<int>(std::ceil(
                                        params.blur_amount * largest[k])));
    by_radius[r].push_back(k);
  }
  std::vector<float> band(disparity.pixel_count(), 0.0f);
  std::vector<int> radius_of(comps.count + 1, 0);
  for (const auto& [r, labels] : by_radius) {
    for (int k : labels) radius_of[k] = r;
  }
  for (const auto& [r, labels] : by_radius) {
    std::vector<float> seed(disparity.pixel_count(), 0.0f);
    for (std::size_t p = 0; p < seed.size(); ++p) {
      const int label = comps.labels[p];
      if (label && radius_of[label] == r) seed[p] = 1.0f;
    }
    const Mask grown = dilate_mask(
        Mask(disparity.width(), disparity.height(), std::move(seed)), r);
    for (std::size_t p = 0; p < band.size(); ++p) {
      band[p] = std::max(band[p], grown.data()[p]);
    }
  }
  return Mask(disparity.width(), disparity.height(), std::move(band));
}

json score_to_json(double value) {
  if (std::isinf(value) && value > 0) return "inf";
  return value;
}

void summarize(EvalReport& report) {
  double psnr_sum = 0.0, ssim_sum = 0.0, band_sum = 0.0;
  double psnr_ob_sum = 0.0, ssim_ob_sum = 0.0;
  std::size_t ob_count = 0, ssim_ob_count = 0;
  for (const ImageScores& s : report.images) {
    psnr_sum += s.psnr;
    ssim_sum += s.ssim;
    band_sum += s.band_fraction;
    if (s.psnr_ob) {
      psnr_ob_sum += *s.psnr_ob;
      ++ob_count;
    }
    if (s.ssim_ob) {
      ssim_ob_sum += *s.ssim_ob;
      ++ssim_ob_count;
    }
  }
  const double n = static_cast<double>(report.images.size());
  report.mean_psnr = n > 0 ? psnr_sum / n : 0.0;
  report.mean_ssim = n > 0 ? ssim_sum / n : 0.0;
  report.mean_band_fraction = n > 0 ? band_sum / n : 0.0;
  report.mean_psnr_ob.reset();
  report.mean_ssim_ob.reset();
  if (ob_count) report.mean_psnr_ob = psnr_ob_sum / static_cast<double>(ob_count);
  if (ssim_ob_count) report.mean_ssim_ob = ssim_ob_sum / static_cast<double>(ssim_ob_count);
}

EvalReport evaluate(const fs::path& pred_dir, const fs::path& manifest_path,
                    const EvalOptions& options) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
  if (!manifest.contains("scenes") || !manifest["scenes"].is_array()) {
    throw ParseError("manifest.scenes: expected an array");
  }
  const fs::path root = manifest_path.parent_path();
  double gamma = kDefaultGamma;
  if (manifest.contains("config") && manifest["config"].contains("gamma")) {
    gamma = manifest["config"]["gamma"].get<double>();
  }

  EvalReport report;
  report.label = options.label;
  for (const json& scene : manifest["scenes"]) {
    const std::string name = scene.value("name", "");
    const DisparityMap gt_disparity =
        load_disparity(root / scene["files"]["disparity"]["path"].get<std::string>());
    for (const json& entry : scene["bokeh"]) {
      const std::string rel = entry["path"].get<std::string>();
      const fs::path pred_path = pred_dir / rel;
      if (!fs::exists(pred_path)) {
        report.missing.push_back(rel);
        continue;
      }
      ImageScores s;
      s.file = rel;
      s.scene = name;
      s.blur_amount = entry["blur_amount"].get<double>();
      s.refocus_disparity = entry["refocus_disparity"].get<double>();
      const ImageBuffer gt = quantize8(load_image(root / rel));
      const ImageBuffer pred = quantize8(load_image(pred_path));
      s.psnr = psnr(pred, gt);
      s.ssim = ssim(pred, gt);
      RenderParams params;
      params.blur_amount = s.blur_amount;
      params.refocus_disparity = s.refocus_disparity;
      params.gamma = gamma;
      const Mask band =
          boundary_band(gt_disparity, params, options.occlusion, options.band_dilate);
      const std::size_t area = mask_area(band);
      s.band_fraction = static_cast<double>(area) / static_cast<double>(band.pixel_count());
      if (area > 0) {
        s.psnr_ob = psnr(pred, gt, &band);
        try {
          s.ssim_ob = ssim(pred, gt, &band);
        } catch (const InvalidArgument&) {
          // Band lies entirely in the border strip without full windows.
        }
      }
      report.images.push_back(std::move(s));
    }
  }
  summarize(report);
  return report;
}

json report_to_json(const EvalReport& report) {
  auto optional_score = [](const std::optional<double>& v) -> json {
    return v ? score_to_json(*v) : json(nullptr);
  };
  json images = json::array();
  for (const ImageScores& s : report.images) {
    images.push_back({{"file", s.file},
                      {"scene", s.scene},
                      {"blur_amount", s.blur_amount},
                      {"refocus_disparity", s.refocus_disparity},
                      {"psnr", score_to_json(s.psnr)},
                      {"ssim", s.ssim},
                      {"psnr_ob", optional_score(s.psnr_ob)},
                      {"ssim_ob", optional_score(s.ssim_ob)},
                      {"band_fraction", s.band_fraction}});
  }
  return json{{"label", report.label},
              {"band_version", kBandVersion},
              {"images", images},
              {"missing", report.missing},
              {"aggregate",
               {{"psnr", score_to_json(report.mean_psnr)},
                {"ssim", report.mean_ssim},
                {"psnr_ob", optional_score(report.mean_psnr_ob)},
                {"ssim_ob", optional_score(report.mean_ssim_ob)},
                {"band_fraction", report.mean_band_fraction}}}};
}

std::string report_table(const EvalReport& report) {
  auto fmt = [](double v, const char* spec) {
    if (std::isinf(v)) return std::string("inf");
    char buf[32];
    std::snprintf(buf, sizeof(buf), spec, v);
    return std::string(buf);
  };
  auto opt = [&](const std::optional<double>& v, const char* spec) {
    return v ? fmt(*v, spec) : std::string("-");
  };
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-44s %6s %7s %8s %7s %8s %7s\n", "image",
                "A", "d_f", "PSNR", "SSIM", "PSNR_ob", "SSIM_ob");
  out << line;
  for (const ImageScores& s : report.images) {
    std::snprintf(line, sizeof(line), "%-44s %6g %7.4f %8s %7s %8s %7s\n",
                  s.file.c_str(), s.blur_amount, s.refocus_disparity,
                  fmt(s.psnr, "%.2f").c_str(), fmt(s.ssim, "%.4f").c_str(),
                  opt(s.psnr_ob, "%.2f").c_str(), opt(s.ssim_ob, "%.4f").c_str());
    out << line;
  }
  std::snprintf(line, sizeof(line), "%-44s %6s %7s %8s %7s %8s %7s\n",
                ("mean (" + report.label + ")").c_str(), "", "",
                fmt(report.mean_psnr, "%.2f").c_str(),
                fmt(report.mean_ssim, "%.4f").c_str(),
                opt(report.mean_psnr_ob, "%.2f").c_str(),
                opt(report.mean_ssim_ob, "%.4f").c_str());
  out << line;
  if (!report.missing.empty()) {
    out << "missing predictions (" << report.missing.size() << "):\n";
    for (const std::string& m : report.missing) out << "  " << m << "\n";
  }
  return out.str();
}

}  // namespace layerbokeh::metrics
