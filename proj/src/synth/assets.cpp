#include "layerbokeh/synth/assets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/image_io.hpp"
#include "layerbokeh/core/random.hpp"

namespace layerbokeh::synth {

namespace {

float quantize8(double v) {
  return static_cast<float>(std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0);
}

/// Lattice value noise with smoothstep interpolation.
class ValueNoise {
 public:
  ValueNoise(std::uint64_t seed, int cells) : cells_(cells) {
    SplitMix64 rng(seed);
    lattice_.resize(static_cast<std::size_t>(cells + 1) * (cells + 1));
    for (double& v : lattice_) v = rng.uniform();
  }

  double at(double u, double v) const {  // u, v in [0,1]
    const double x = u * cells_;
    const double y = v * cells_;
    const int x0 = std::clamp(static_cast<int>(x), 0, cells_ - 1);
    const int y0 = std::clamp(static_cast<int>(y), 0, cells_ - 1);
    const double fx = smooth(x - x0);
    const double fy = smooth(y - y0);
    const double a = node(x0, y0), b = node(x0 + 1, y0);
    const double c = node(x0, y0 + 1), d = node(x0 + 1, y0 + 1);
    return (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy;
  }

 private:
  static double smooth(double t) { return t * t * (3 - 2 * t); }
  double node(int x, int y) const {
    return lattice_[static_cast<std::size_t>(y) * (cells_ + 1) + x];
  }
  int cells_;
  std::vector<double> lattice_;
};

struct Rgb {
  double r, g, b;
};

Rgb random_color(SplitMix64& rng) {
  return {rng.uniform(0.1, 0.95), rng.uniform(0.1, 0.95), rng.uniform(0.1, 0.95)};
}

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

}  // namespace

ImageBuffer procedural_background(std::uint64_t seed, int width, int height) {
  SplitMix64 rng(seed);
  const Rgb c0 = random_color(rng);
  const Rgb c1 = random_color(rng);
  const Rgb c2 = random_color(rng);
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double freq = rng.uniform(10.0, 30.0);
  ValueNoise coarse(rng.next(), 4);
  ValueNoise mid(rng.next(), 12);
  ValueNoise fine(rng.next(), 48);
  std::vector<float> data(static_cast<std::size_t>(width) * height * 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = (x + 0.5) / width;
      const double v = (y + 0.5) / height;
      const double g = 0.5 + 0.5 * (std::cos(angle) * (u - 0.5) + std::sin(angle) * (v - 0.5));
      const double n = 0.6 * coarse.at(u, v) + 0.3 * mid.at(u, v) + 0.1 * fine.at(u, v);
      Rgb c = mix(mix(c0, c1, g), c2, n);
      // Thin bright lines give the blur something to spread.
      const double stripe =
          std::sin(freq * 2.0 * std::numbers::pi * (u * std::sin(angle) + v * std::cos(angle)));
      const double detail = 0.15 * (stripe > 0.85 ? 1.0 : 0.0) + 0.1 * (fine.at(v, u) - 0.5);
      c = {c.r + detail, c.g + detail, c.b + detail};
      float* px = data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
      px[0] = quantize8(c.r);
      px[1] = quantize8(c.g);
      px[2] = quantize8(c.b);
    }
  }
  return ImageBuffer(width, height, 3, ColorSpace::kEncoded, std::move(data));
}

ImageBuffer procedural_foreground(std::uint64_t seed, int size) {
  if (size < 8) throw InvalidArgument("foreground size must be >= 8");
  SplitMix64 rng(seed);
  const int shape = rng.uniform_int(0, 2);
  const double rx = rng.uniform(0.3, 0.48) * size;
  const double ry = rng.uniform(0.3, 0.48) * size;
  const int lobes = rng.uniform_int(3, 7);
  const double lobe_depth = rng.uniform(0.1, 0.25);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double corner = rng.uniform(0.1, 0.4) * std::min(rx, ry);
  const Rgb base = random_color(rng);
  const Rgb accent = random_color(rng);
  const double stripes = rng.uniform(4.0, 12.0);
  ValueNoise texture(rng.next(), 8);
  const double cx = 0.5 * (size - 1);
  const double cy = 0.5 * (size - 1);

  auto inside = [&](double px, double py) {
    const double dx = px - cx;
    const double dy = py - cy;
    switch (shape) {
      case 0:
        return (dx * dx) / (rx * rx) + (dy * dy) / (ry * ry) <= 1.0;
      case 1: {
        const double qx = std::max(std::abs(dx) - (rx - corner), 0.0);
        const double qy = std::max(std::abs(dy) - (ry - corner), 0.0);
        return qx * qx + qy * qy <= corner * corner;
      }
      default: {
        const double r = std::hypot(dx / rx, dy / ry);
        const double theta = std::atan2(dy, dx);
        return r <= (1.0 - lobe_depth) + lobe_depth * std::cos(lobes * theta + phase);
      }
    }
  };

  constexpr int kSuper = 4;
  std::vector<float> data(static_cast<std::size_t>(size) * size * 4);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          hits += inside(x - 0.5 + (sx + 0.5) / kSuper, y - 0.5 + (sy + 0.5) / kSuper);
        }
      }
      const double u = static_cast<double>(x) / size;
      const double v = static_cast<double>(y) / size;
      const double band = 0.5 + 0.5 * std::sin(stripes * 2.0 * std::numbers::pi * (u + 0.5 * v));
      const Rgb c = mix(base, accent, 0.6 * band * texture.at(u, v) + 0.2 * texture.at(v, u));
      float* px = data.data() + (static_cast<std::size_t>(y) * size + x) * 4;
      px[0] = quantize8(c.r);
      px[1] = quantize8(c.g);
      px[2] = quantize8(c.b);
      px[3] = quantize8(static_cast<double>(hits) / (kSuper * kSuper));
    }
  }
  return ImageBuffer(size, size, 4, ColorSpace::kEncoded, std::move(data));
}

AssetLibrary procedural_assets(std::uint64_t seed, int backgrounds,
                               int foregrounds, int width, int height) {
  AssetLibrary lib;
  for (int i = 0; i < backgrounds; ++i) {
    lib.backgrounds.push_back(
        procedural_background(mix_seed(seed, 1, i), width, height));
  }
  const int size = std::max(8, std::min(width, height) / 2);
  for (int i = 0; i < foregrounds; ++i) {
    lib.foregrounds.push_back(procedural_foreground(mix_seed(seed, 2, i), size));
  }
  return lib;
}

namespace {

std::vector<std::filesystem::path> png_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("asset directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

AssetLibrary load_assets(const std::filesystem::path& background_dir,
                         const std::filesystem::path& foreground_dir) {
  AssetLibrary lib;
  for (const auto& path : png_files(background_dir)) {
    const ImageBuffer img = load_image(path);
    if (img.color_channels() != 3) {
      throw InvalidArgument(path.string() + ": background must be RGB");
    }
    if (img.channels() == 3) {
      lib.backgrounds.push_back(img);
    } else {
      std::vector<float> rgb(img.pixel_count() * 3);
      for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        for (int c = 0; c < 3; ++c) rgb[p * 3 + c] = img.data()[p * 4 + c];
      }
      lib.backgrounds.emplace_back(img.width(), img.height(), 3,
                                   ColorSpace::kEncoded, std::move(rgb));
    }
  }
  for (const auto& path : png_files(foreground_dir)) {
    ImageBuffer img = load_image(path);
    if (img.channels() != 4) {
      throw InvalidArgument(path.string() + ": foreground asset has no alpha channel");
    }
    lib.foregrounds.push_back(std::move(img));
  }
  return lib;
}

ImageBuffer resize_bilinear(const ImageBuffer& image, int width, int height) {
  if (image.same_size(width, height)) return image;
  const int ch = image.channels();
  std::vector<float> out(static_cast<std::size_t>(width) * height * ch);
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double tx = fx - x0;
      for (int c = 0; c < ch; ++c) {
        const double top = image.at(x0, y0, c) * (1 - tx) + image.at(x1, y0, c) * tx;
        const double bottom = image.at(x0, y1, c) * (1 - tx) + image.at(x1, y1, c) * tx;
        out[(static_cast<std::size_t>(y) * width + x) * ch + c] =
            static_cast<float>(top * (1 - ty) + bottom * ty);
      }
    }
  }
  return ImageBuffer(width, height, ch, image.space(), std::move(out));
}

}  // namespace layerbokeh::synth
