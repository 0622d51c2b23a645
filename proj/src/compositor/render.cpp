#include "layerbokeh/compositor/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "layerbokeh/compositor/kernel.hpp"
#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/gamma.hpp"

namespace layerbokeh::compositor {

ImageBuffer compose_sharp(const MpiStack& stack) {
  const std::size_t n = static_cast<std::size_t>(stack.width()) * stack.height();
  std::vector<double> acc(n * 3, 0.0);
  for (const MpiPlane& plane : stack.planes()) {  // back to front
    const auto color = plane.color.data();
    const auto alpha = plane.alpha.data();
    for (std::size_t p = 0; p < n; ++p) {
      const double a = alpha[p];
      if (a == 0.0) continue;
      for (int c = 0; c < 3; ++c) {
        acc[p * 3 + c] = color[p * 3 + c] * a + acc[p * 3 + c] * (1.0 - a);
      }
    }
  }
  std::vector<float> out(acc.begin(), acc.end());
  return ImageBuffer(stack.width(), stack.height(), 3, ColorSpace::kLinear,
                     std::move(out));
}

DisparityMap reconstruct_disparity(const MpiStack& stack) {
  const std::size_t n = static_cast<std::size_t>(stack.width()) * stack.height();
  std::vector<double> acc(n, 0.0);
  for (const MpiPlane& plane : stack.planes()) {
    const auto alpha = plane.alpha.data();
    for (std::size_t p = 0; p < n; ++p) {
      const double a = alpha[p];
      acc[p] = plane.disparity * a + acc[p] * (1.0 - a);
    }
  }
  return DisparityMap(stack.width(), stack.height(),
                      std::vector<float>(acc.begin(), acc.end()));
}

Mask total_coverage(const MpiStack& stack) {
  const std::size_t n = static_cast<std::size_t>(stack.width()) * stack.height();
  std::vector<double> transmit(n, 1.0);
  for (const MpiPlane& plane : stack.planes()) {
    const auto alpha = plane.alpha.data();
    for (std::size_t p = 0; p < n; ++p) transmit[p] *= 1.0 - alpha[p];
  }
  std::vector<float> out(n);
  for (std::size_t p = 0; p < n; ++p) {
    out[p] = static_cast<float>(1.0 - transmit[p]);
  }
  return Mask(stack.width(), stack.height(), std::move(out));
}

RenderResult render_mpi_detailed(const MpiStack& stack,
                                 const RenderParams& params,
                                 const RenderOptions& options) {
  params.validate();
  const int w = stack.width();
  const int h = stack.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;

  std::vector<double> numerator(n * 3, 0.0);
  std::vector<double> denominator(n, 0.0);
  std::vector<double> transmit(n, 1.0);
  std::vector<std::vector<double>> contributions(
      options.contribution_planes.size());
  for (auto& c : contributions) c.assign(n, 0.0);

  // Front to back: each plane is attenuated by the blurred alphas in front.
  for (int i = stack.size() - 1; i >= 0; --i) {
    const MpiPlane& plane = stack.plane(i);
    const auto alpha = plane.alpha.data();
    const Rect support = nonzero_bounds(alpha, w, h);
    if (support.empty()) continue;

    std::vector<float> pr(n), pg(n), pb(n);
    const auto color = plane.color.data();
    for (std::size_t p = 0; p < n; ++p) {
      pr[p] = color[p * 3 + 0] * alpha[p];
      pg[p] = color[p * 3 + 1] * alpha[p];
      pb[p] = color[p * 3 + 2] * alpha[p];
    }
    const Kernel kernel = disc_kernel(
        blur_radius(params.blur_amount, plane.disparity,
                    params.refocus_disparity));
    const auto blurred =
        convolve_channels({pr, pg, pb, alpha}, w, h, kernel, support);

    const int tracked = static_cast<int>(
        std::find(options.contribution_planes.begin(),
                  options.contribution_planes.end(), i) -
        options.contribution_planes.begin());
    const Rect out_rect{std::max(0, support.x0 - kernel.half),
                        std::max(0, support.y0 - kernel.half),
                        std::min(w - 1, support.x1 + kernel.half),
                        std::min(h - 1, support.y1 + kernel.half)};
    for (int y = out_rect.y0; y <= out_rect.y1; ++y) {
      for (int x = out_rect.x0; x <= out_rect.x1; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        const double a = std::clamp(static_cast<double>(blurred[3][p]), 0.0, 1.0);
        const double t = transmit[p];
        numerator[p * 3 + 0] += t * std::max(0.0f, blurred[0][p]);
        numerator[p * 3 + 1] += t * std::max(0.0f, blurred[1][p]);
        numerator[p * 3 + 2] += t * std::max(0.0f, blurred[2][p]);
        denominator[p] += t * a;
        if (tracked < static_cast<int>(contributions.size())) {
          contributions[tracked][p] = t * a;
        }
        transmit[p] = t * (1.0 - a);
      }
    }
  }

  DenominatorStats stats;
  stats.min = std::numeric_limits<double>::infinity();
  stats.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::vector<float> linear(n * 3);
  for (std::size_t p = 0; p < n; ++p) {
    const double den = denominator[p];
    stats.min = std::min(stats.min, den);
    stats.max = std::max(stats.max, den);
    sum += den;
    const bool divide = options.normalize && den >= kNormalizationEpsilon;
    if (options.normalize && !divide) ++stats.fallback_pixels;
    for (int c = 0; c < 3; ++c) {
      const double v = divide ? numerator[p * 3 + c] / den : numerator[p * 3 + c];
      linear[p * 3 + c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    for (auto& contribution : contributions) {
      if (divide) contribution[p] /= den;
    }
  }
  stats.mean = sum / static_cast<double>(n);

  RenderResult result{
      ImageBuffer::filled(w, h, 3, ColorSpace::kEncoded, 0.0f),
      ImageBuffer(w, h, 3, ColorSpace::kLinear, std::move(linear)), stats, {}};
  result.image = gamma_encode(result.linear, params.gamma);
  for (const auto& c : contributions) {
    result.contributions.emplace_back(w, h, std::vector<float>(c.begin(), c.end()));
  }
  return result;
}

ImageBuffer render_mpi(const MpiStack& stack, const RenderParams& params,
                       bool normalize) {
  RenderOptions options;
  options.normalize = normalize;
  return render_mpi_detailed(stack, params, options).image;
}

MpiStack regamma(const MpiStack& stack, double from_gamma, double to_gamma) {
  check_gamma(from_gamma);
  check_gamma(to_gamma);
  std::vector<MpiPlane> planes = stack.planes();
  if (from_gamma == to_gamma) return MpiStack(std::move(planes));
  const double exponent = to_gamma / from_gamma;
  for (MpiPlane& plane : planes) {
    std::vector<float> data = plane.color.to_vector();
    for (float& v : data) {
      v = static_cast<float>(std::pow(static_cast<double>(v), exponent));
    }
    plane.color = ImageBuffer(plane.color.width(), plane.color.height(), 3,
                              ColorSpace::kLinear, std::move(data));
  }
  return MpiStack(std::move(planes));
}

}  // namespace layerbokeh::compositor
