#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/filters.hpp"
#include "layerbokeh/occlusion/occlusion.hpp"

using namespace layerbokeh;
using namespace layerbokeh::occlusion;

namespace {

DisparityMap vertical_step(int w, int h, int k, float left, float right) {
  std::vector<float> v(w * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) v[y * w + x] = x < k ? left : right;
  return DisparityMap(w, h, v);
}

Mask from_pixels(int w, int h, const std::vector<std::pair<int, int>>& px) {
  std::vector<float> v(w * h, 0.0f);
  for (auto [x, y] : px) v[y * w + x] = 1.0f;
  return Mask(w, h, v);
}

GradientField single_vector(int w, int h, int x, int y, float gx, float gy) {
  std::vector<float> vx(w * h, 0.0f), vy(w * h, 0.0f);
  vx[y * w + x] = gx;
  vy[y * w + x] = gy;
  return GradientField(w, h, vx, vy);
}

bool subset(const Mask& a, const Mask& b) {
  for (std::size_t i = 0; i < a.data().size(); ++i)
    if (a.data()[i] > 0.5f && b.data()[i] <= 0.5f) return false;
  return true;
}

}  // namespace

TEST_CASE("Sobel gradient examples") {
  const GradientField flat = disparity_gradient(DisparityMap::filled(12, 10, 0.4f));
  for (float v : flat.gx()) CHECK(v == 0.0f);
  for (float v : flat.gy()) CHECK(v == 0.0f);

  const int k = 10;
  const GradientField step = disparity_gradient(vertical_step(24, 16, k, 0.2f, 0.8f));
  for (int y = 0; y < 16; ++y) {
    CHECK(step.gx(k - 1, y) == doctest::Approx(0.6).epsilon(1e-5));
    CHECK(step.gx(k, y) == doctest::Approx(0.6).epsilon(1e-5));
    CHECK(step.gx(k - 2, y) == 0.0f);
    CHECK(step.gx(k + 1, y) == 0.0f);
    CHECK(std::abs(step.gy(k, y)) < 1e-6);
  }

  // A ramp reads twice its slope with this scaling (see the header).
  std::vector<float> ramp(32 * 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 32; ++x) ramp[y * 32 + x] = 0.1f + 0.01f * x;
  const GradientField g = disparity_gradient(DisparityMap(32, 8, ramp));
  for (int y = 0; y < 8; ++y)
    for (int x = 1; x < 31; ++x) CHECK(g.gx(x, y) == doctest::Approx(0.02).epsilon(1e-3));
}

TEST_CASE("initial mask examples") {
  CHECK(fixtures::count_set(initial_mask(GradientField::zeros(8, 8), 0.05)) == 0);
  const int k = 10;
  const Mask m = initial_mask(disparity_gradient(vertical_step(24, 16, k, 0.2f, 0.8f)), 0.05);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 24; ++x) CHECK((m.at(x, y) > 0.5f) == (x == k - 1 || x == k));

  std::vector<float> ramp(32 * 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 32; ++x) ramp[y * 32 + x] = 0.1f + 0.01f * x;
  CHECK(fixtures::count_set(initial_mask(disparity_gradient(DisparityMap(32, 8, ramp)), 0.05)) == 0);
}

TEST_CASE("short segment removal examples") {
  const int w = 40, h = 30;
  const Mask blob = from_pixels(w, h, {{5, 5}, {6, 5}, {5, 6}, {6, 6}, {7, 7}});
  const GradientField g = single_vector(w, h, 5, 5, 0.3f, 0.0f);
  const CleanedEdges gone = remove_short_segments(blob, g, 20);
  CHECK(fixtures::count_set(gone.mask) == 0);
  CHECK(gone.gradient.gx(5, 5) == 0.0f);

  std::vector<std::pair<int, int>> band;
  for (int y = 0; y < 25; ++y)
    for (int x = 20; x < 24; ++x) band.push_back({x, y});
  const Mask edge = from_pixels(w, h, band);
  const CleanedEdges kept = remove_short_segments(edge, GradientField::zeros(w, h), 20);
  CHECK(fixtures::count_set(kept.mask) == 100);

  const GradientField any = single_vector(w, h, 3, 4, 0.5f, -0.2f);
  const CleanedEdges empty = remove_short_segments(Mask::filled(w, h, 0), any, 20);
  CHECK(fixtures::count_set(empty.mask) == 0);
  CHECK(empty.gradient.gx(3, 4) == 0.5f);
  CHECK(empty.gradient.gy(3, 4) == -0.2f);
}

TEST_CASE("forward warp examples") {
  const int w = 20, h = 20;
  const Mask at = from_pixels(w, h, {{10, 10}});
  const GradientField moved = forward_warp_normals(single_vector(w, h, 10, 10, 1, 0), at);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool target = x == 11 && y == 10;
      CHECK(moved.gx(x, y) == doctest::Approx(target ? 1.0 : 0.0));
      CHECK(moved.gy(x, y) == doctest::Approx(0.0));
    }

  const GradientField diag = forward_warp_normals(single_vector(w, h, 10, 10, 0.6f, 0.8f), at);
  int nonzero = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (diag.gx(x, y) == 0 && diag.gy(x, y) == 0) continue;
      ++nonzero;
      CHECK((x == 10 || x == 11));
      CHECK((y == 10 || y == 11));
      CHECK(diag.gx(x, y) == doctest::Approx(0.6).epsilon(1e-5));
      CHECK(diag.gy(x, y) == doctest::Approx(0.8).epsilon(1e-5));
    }
  CHECK(nonzero == 4);

  // (9,10) pushes right and (11,10) pushes left: both land on (10,10).
  std::vector<float> gx(w * h, 0.0f), gy(w * h, 0.0f);
  gx[10 * w + 9] = 1.0f;
  gx[10 * w + 11] = -1.0f;
  const GradientField cancel = forward_warp_normals(GradientField(w, h, gx, gy),
                                                    from_pixels(w, h, {{9, 10}, {11, 10}}));
  CHECK(cancel.gx(10, 10) == 0.0f);
  CHECK(cancel.gy(10, 10) == 0.0f);
}

TEST_CASE("extension examples") {
  const int w = 60, h = 40, k = 30;
  const DisparityMap step = vertical_step(w, h, k, 0.2f, 0.8f);
  const GradientField g = disparity_gradient(step);
  const Mask m0 = initial_mask(g, 0.05);
  const Mask same = extend_mask(m0, g, 0);
  CHECK(fixtures::max_abs_diff(same.data(), m0.data()) == 0.0);

  const Mask grown = extend_mask(m0, g, 10);
  const int y = h / 2;
  int right = 0, left = 0;
  for (int x = k; x < w; ++x) right += grown.at(x, y) > 0.5f;
  for (int x = 0; x < k; ++x) left += grown.at(x, y) > 0.5f;
  CHECK(right >= 9);
  CHECK(right <= 12);
  CHECK(left <= 2);

  const DisparityMap flat = DisparityMap::filled(w, h, 0.5f);
  const GradientField gf = disparity_gradient(flat);
  CHECK(fixtures::count_set(extend_mask(initial_mask(gf, 0.05), gf, 25)) == 0);
}

TEST_CASE("extension grows monotonically") {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 3; ++trial) {
    const DisparityMap d = fixtures::step_map(64, 64, rng.uniform(0, 2 * std::numbers::pi), 32, 32,
                                              0.1f, 0.7f);
    const GradientField g = disparity_gradient(d);
    const Mask m0 = initial_mask(g, 0.05);
    Mask prev = m0;
    for (int t = 1; t <= 12; ++t) {
      const Mask next = extend_mask(m0, g, t);
      CHECK(subset(prev, next));
      prev = next;
    }
  }
}

TEST_CASE("occlusion mask on constant and nested maps") {
  CHECK(fixtures::count_set(occlusion_mask(DisparityMap::filled(50, 40, 0.3f), {})) == 0);

  const int size = 160;
  std::vector<float> v(size * size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double r = std::hypot(x - 80.0, y - 80.0);
      v[y * size + x] = r < 25 ? 0.9f : (r < 60 ? 0.5f : 0.1f);
    }
  const DisparityMap d(size, size, v);
  const Mask m = occlusion_mask(d, {});
  int on_far = 0, on_mid = 0, on_near = 0;
  for (int i = 0; i < size * size; ++i) {
    if (m.data()[i] <= 0.5f) continue;
    (v[i] < 0.3f ? on_far : (v[i] < 0.7f ? on_mid : on_near))++;
  }
  CHECK(on_mid > 3 * on_far);
  CHECK(on_near > 0);
  // Around the inner silhouette the extended mask lies inside the near disc.
  // The window stops short of where the outer edge's extension reaches.
  const Mask extended = occlusion_stages(d, {}).extended;
  int inner_near = 0, inner_mid = 0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double r = std::hypot(x - 80.0, y - 80.0);
      if (r > 33 || extended.at(x, y) <= 0.5f) continue;
      (r < 25 ? inner_near : inner_mid)++;
    }
  CHECK(inner_near > 5 * inner_mid);
}

TEST_CASE("final dilation composes with an external dilation") {
  const DisparityMap d = fixtures::step_map(80, 80, 0.4, 40, 40, 0.2f, 0.8f);
  OcclusionConfig a;
  a.dilate_px = 2;
  OcclusionConfig ab = a;
  ab.dilate_px = 5;
  const Mask composed = dilate_mask(occlusion_mask(d, a), 3);
  const Mask direct = occlusion_mask(d, ab);
  int diff = 0;
  for (std::size_t i = 0; i < composed.data().size(); ++i)
    diff += (composed.data()[i] > 0.5f) != (direct.data()[i] > 0.5f);
  CHECK(diff <= 0.03 * fixtures::count_set(direct));
}

TEST_CASE("extension length follows the blur amount") {
  const DisparityMap d = vertical_step(64, 32, 30, 0.3f, 0.8f);
  OcclusionConfig cfg;
  CHECK(extend_iters_for_blur(32, d, cfg) == 16);
  CHECK(extend_iters_for_blur(4, d, cfg) == 8);
  CHECK(extend_iters_for_blur(80, DisparityMap::filled(16, 16, 0.5f), cfg) == 8);
  const auto step = local_step(d);
  CHECK(step[5 * 64 + 29] == doctest::Approx(0.5));
  CHECK(step[5 * 64 + 10] == 0.0f);
}

TEST_CASE("component labels") {
  const Mask m = from_pixels(10, 6, {{1, 1}, {2, 2}, {7, 1}, {8, 1}, {8, 4}});
  const Components c = label_components(m);
  CHECK(c.count == 3);
  CHECK(c.labels[1 * 10 + 1] == 1);
  CHECK(c.labels[2 * 10 + 2] == 1);
  CHECK(c.labels[1 * 10 + 7] == 2);
  CHECK(c.labels[4 * 10 + 8] == 3);
  CHECK(c.areas[1] == 2);
  CHECK(c.areas[2] == 2);
  CHECK(c.areas[3] == 1);
}

TEST_CASE("config validation") {
  OcclusionConfig c;
  c.grad_threshold = -1;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.extend_iters = -2;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}
