#include <algorithm>

#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/filters.hpp"
#include "layerbokeh/core/random.hpp"
#include "layerbokeh/synth/dataset.hpp"

namespace layerbokeh::synth {

AugmentMagnitudes sample_augmentation(std::uint64_t seed,
                                      const AugmentLimits& limits) {
  if (limits.noise_sigma < 0 || limits.blur_sigma < 0 || limits.morph_radius < 0) {
    throw InvalidArgument("augmentation limits must be >= 0");
  }
  SplitMix64 rng(mix_seed(seed, 0x61756721ULL));
  AugmentMagnitudes m;
  m.noise_sigma = rng.uniform(0.0, limits.noise_sigma);
  m.blur_sigma = rng.uniform(0.0, limits.blur_sigma);
  m.morph_radius = rng.uniform_int(0, limits.morph_radius);
  m.dilate = rng.uniform() < 0.5;
  return m;
}

DisparityMap apply_augmentation(const DisparityMap& disparity,
                                const AugmentMagnitudes& m, std::uint64_t seed) {
  const int w = disparity.width();
  const int h = disparity.height();
  std::vector<float> v = disparity.to_vector();
  if (m.blur_sigma > 0.0) v = gaussian_blur(v, w, h, m.blur_sigma);
  if (m.morph_radius > 0) {
    v = m.dilate ? grey_dilate(v, w, h, m.morph_radius)
                 : grey_erode(v, w, h, m.morph_radius);
  }
  if (m.noise_sigma > 0.0) {
    SplitMix64 rng(mix_seed(seed, 0x6e6f697365ULL));
    for (float& x : v) x += static_cast<float>(m.noise_sigma * rng.normal());
  }
  for (float& x : v) x = std::clamp(x, 0.0f, 1.0f);
  return DisparityMap(w, h, std::move(v));
}

DisparityMap augment_disparity(const DisparityMap& disparity, std::uint64_t seed) {
  return apply_augmentation(disparity, sample_augmentation(seed), seed);
}

}  // namespace layerbokeh::synth
