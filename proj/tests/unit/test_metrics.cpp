#include <doctest.h>

#include <cmath>
#include <map>

#include "fixtures.hpp"
#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/image_io.hpp"
#include "layerbokeh/metrics/metrics.hpp"
#include "layerbokeh/synth/dataset.hpp"

using namespace layerbokeh;
using namespace layerbokeh::metrics;

namespace {

ImageBuffer noise_image(std::uint64_t seed, int w, int h, double lo = 0.0, double hi = 1.0) {
  SplitMix64 rng(seed);
  std::vector<float> v(w * h * 3);
  for (float& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return ImageBuffer(w, h, 3, ColorSpace::kEncoded, v);
}

ImageBuffer offset(const ImageBuffer& a, float delta) {
  std::vector<float> v = a.to_vector();
  for (float& x : v) x += delta;
  return ImageBuffer(a.width(), a.height(), 3, ColorSpace::kEncoded, v);
}

// Windowed SSIM evaluated window by window in double.
double reference_ssim(const ImageBuffer& a, const ImageBuffer& b) {
  const int r = 5;
  double g[11][11], gs = 0;
  for (int j = -r; j <= r; ++j)
    for (int i = -r; i <= r; ++i) gs += g[j + r][i + r] = std::exp(-(i * i + j * j) / (2 * 1.5 * 1.5));
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0;
  for (int c = 0; c < 3; ++c) {
    double sum = 0;
    int n = 0;
    for (int y = r; y < a.height() - r; ++y)
      for (int x = r; x < a.width() - r; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int j = -r; j <= r; ++j)
          for (int i = -r; i <= r; ++i) {
            const double w = g[j + r][i + r] / gs;
            const double va = a.at(x + i, y + j, c), vb = b.at(x + i, y + j, c);
            ma += w * va;
            mb += w * vb;
            saa += w * va * va;
            sbb += w * vb * vb;
            sab += w * va * vb;
          }
        saa -= ma * ma;
        sbb -= mb * mb;
        sab -= ma * mb;
        sum += (2 * ma * mb + c1) * (2 * sab + c2) / ((ma * ma + mb * mb + c1) * (saa + sbb + c2));
        ++n;
      }
    total += sum / n;
  }
  return total / 3;
}

}  // namespace

TEST_CASE("PSNR examples") {
  const ImageBuffer a = noise_image(1, 32, 24, 0.2, 0.8);
  CHECK(psnr(a, a) == kPsnrIdentical);
  CHECK(std::isinf(psnr(a, a)));
  CHECK(score_to_json(psnr(a, a)) == "inf");

  const ImageBuffer b = offset(a, 0.1f);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-6));
  CHECK(psnr(a, b) == psnr(b, a));

  // Half the pixels off by 0.1.
  std::vector<float> v = a.to_vector();
  std::vector<float> sel(32 * 24, 0.0f);
  for (int p = 0; p < 32 * 24; p += 2) {
    sel[p] = 1.0f;
    for (int c = 0; c < 3; ++c) v[p * 3 + c] += 0.1f;
  }
  const ImageBuffer half(32, 24, 3, ColorSpace::kEncoded, v);
  const Mask m(32, 24, sel);
  CHECK(psnr(a, half, &m) == doctest::Approx(20.0).epsilon(1e-6));
  CHECK(psnr(a, half) == doctest::Approx(10 * std::log10(1 / 0.005)).epsilon(1e-6));

  const Mask full = Mask::filled(32, 24, 1.0f);
  const ImageBuffer c = noise_image(2, 32, 24);
  CHECK(std::abs(psnr(a, c, &full) - psnr(a, c)) <= 1e-9);
  CHECK(psnr(a, c) == doctest::Approx(fixtures::psnr_from_mse(fixtures::mse(a, c))).epsilon(1e-9));

  const Mask none = Mask::filled(32, 24, 0.0f);
  CHECK_THROWS_AS(psnr(a, c, &none), InvalidArgument);
  CHECK_THROWS_AS(psnr(a, noise_image(3, 30, 24)), InvalidArgument);
}

TEST_CASE("SSIM examples") {
  const ImageBuffer a = noise_image(4, 40, 30);
  CHECK(ssim(a, a) == 1.0);

  const ImageBuffer flat = fixtures::solid_rgb(30, 30, 0.5f, 0.5f, 0.5f);
  const ImageBuffer brighter = fixtures::solid_rgb(30, 30, 0.6f, 0.6f, 0.6f);
  // Zero variances leave the luminance term (2*0.5*0.6 + C1) / (0.5^2 + 0.6^2 + C1).
  CHECK(ssim(flat, brighter) == doctest::Approx(0.6001 / 0.6101).epsilon(1e-6));

  std::vector<float> bin(40 * 30 * 3), neg(40 * 30 * 3);
  SplitMix64 rng(5);
  for (int p = 0; p < 40 * 30; ++p) {
    const float v = rng.uniform() < 0.5 ? 0.0f : 1.0f;
    for (int c = 0; c < 3; ++c) {
      bin[p * 3 + c] = v;
      neg[p * 3 + c] = 1.0f - v;
    }
  }
  const ImageBuffer pb(40, 30, 3, ColorSpace::kEncoded, bin), nb(40, 30, 3, ColorSpace::kEncoded, neg);
  const double anti = ssim(pb, nb);
  CHECK(anti < -0.9);
  CHECK(anti == doctest::Approx(reference_ssim(pb, nb)).epsilon(1e-6));

  const ImageBuffer b = noise_image(6, 40, 30);
  CHECK(ssim(a, b) == doctest::Approx(reference_ssim(a, b)).epsilon(1e-6));
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));

  const Mask full = Mask::filled(40, 30, 1.0f);
  CHECK(ssim(a, b, &full) == doctest::Approx(ssim(a, b)).epsilon(1e-12));
}

TEST_CASE("SSIM falls as noise grows") {
  const ImageBuffer clean = synth::procedural_background(8, 64, 64);
  double prev = 1.0;
  for (double sigma : {0.01, 0.03, 0.08, 0.2}) {
    double mean = 0;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      SplitMix64 rng(seed);
      std::vector<float> v = clean.to_vector();
      for (float& x : v) x += static_cast<float>(sigma * rng.normal());
      mean += ssim(clean, ImageBuffer(64, 64, 3, ColorSpace::kEncoded, v)) / 4;
    }
    CHECK(mean < prev);
    prev = mean;
  }
}

TEST_CASE("quantization to 8 bits") {
  const ImageBuffer q = quantize8(ImageBuffer(3, 1, 1, ColorSpace::kEncoded, {0.0f, 0.5f, 0.9999f}));
  CHECK(q.at(0, 0, 0) == 0.0f);
  CHECK(q.at(1, 0, 0) * 255.0f == doctest::Approx(128.0));
  CHECK(q.at(2, 0, 0) == 1.0f);
}

TEST_CASE("boundary band") {
  RenderParams p;
  p.blur_amount = 32;
  CHECK(fixtures::count_set(boundary_band(DisparityMap::filled(40, 40, 0.5f), p)) == 0);

  const int w = 100, h = 40, k = 50;
  std::vector<float> v(w * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) v[y * w + x] = x < k ? 0.2f : 0.7f;
  const DisparityMap step(w, h, v);
  const Mask band = boundary_band(step, p);
  // Edge columns k-1 and k grown by ceil(32 * 0.5) = 16.
  for (int x = 0; x < w; ++x) CHECK((band.at(x, h / 2) > 0.5f) == (x >= k - 1 - 16 && x <= k + 16));

  int prev = 0;
  for (double A : {0.0, 10.0, 20.0, 40.0, 80.0}) {
    p.blur_amount = A;
    const int n = fixtures::count_set(boundary_band(step, p));
    CHECK(n >= prev);
    prev = n;
  }
  const Mask fixed = boundary_band(step, p, {}, 3);
  CHECK(fixtures::count_set(fixed) == 8 * h);
}

TEST_CASE("dataset evaluation") {
  const auto dir = fixtures::scratch_dir("metrics_eval");
  synth::DatasetConfig cfg;
  cfg.n_scenes = 1;
  cfg.width = cfg.height = 64;
  cfg.blur_params = {20, 80};
  cfg.rays = 16;
  const auto summary = synth::generate_dataset(cfg, dir / "gt");
  const auto& scene = summary.manifest["scenes"][0];

  // Ground truth as prediction.
  for (const auto& b : scene["bokeh"]) {
    const auto rel = b["path"].get<std::string>();
    std::filesystem::create_directories((dir / "same" / rel).parent_path());
    std::filesystem::copy_file(dir / "gt" / rel, dir / "same" / rel);
  }
  EvalOptions o;
  const EvalReport same = evaluate(dir / "same", dir / "gt" / "manifest.json", o);
  REQUIRE(same.images.size() == scene["bokeh"].size());
  for (const auto& s : same.images) {
    CHECK(std::isinf(s.psnr));
    CHECK(s.ssim == doctest::Approx(1.0));
  }
  CHECK(report_to_json(same)["band_version"] == kBandVersion);

  // All-in-focus as prediction: error grows with A for each focus.
  const auto aif = load_image(dir / "gt" / scene["files"]["all_in_focus"]["path"].get<std::string>());
  bool first = true;
  for (const auto& b : scene["bokeh"]) {
    const auto rel = b["path"].get<std::string>();
    if (first) {
      first = false;  // leave one out
      continue;
    }
    std::filesystem::create_directories((dir / "aif" / rel).parent_path());
    save_image(aif, dir / "aif" / rel);
  }
  const EvalReport r = evaluate(dir / "aif", dir / "gt" / "manifest.json", o);
  CHECK(r.missing.size() == 1);
  CHECK(r.images.size() == scene["bokeh"].size() - 1);
  std::map<double, std::map<double, double>> by_focus;
  for (const auto& s : r.images) {
    CHECK(std::isfinite(s.psnr));
    by_focus[s.refocus_disparity][s.blur_amount] = s.psnr;
  }
  for (const auto& [df, row] : by_focus)
    if (row.count(20) && row.count(80)) CHECK(row.at(80) < row.at(20));
  CHECK(report_table(r).find("missing") != std::string::npos);
}
