#include <doctest.h>

#include <cmath>
#include <fstream>

#include "fixtures.hpp"
#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/gamma.hpp"
#include "layerbokeh/oracle/ray_tracer.hpp"
#include "layerbokeh/oracle/scene.hpp"

using namespace layerbokeh;
using namespace layerbokeh::oracle;

namespace {

// Thin-lens intersection written out directly.
SensorPoint eq8(double x, double y, double a, double b, double c, double A, double df, double mu,
                double nu) {
  const double t = (1 - a * x - b * y - c * df) / (a * A * mu + b * A * nu + c);
  return {x + t * A * mu, y + t * A * nu};
}

SceneSpec boxed_scene(float front_alpha, float back_value, float front_value) {
  SceneSpec s;
  s.width = s.height = 8;
  s.layers.push_back({fixtures::with_alpha(fixtures::solid_rgb(8, 8, back_value, back_value, back_value),
                                           [](int, int) { return 1.0f; }),
                      PlaneCoefficients::constant(0.25), 0, 0, true});
  s.layers.push_back({fixtures::with_alpha(fixtures::solid_rgb(4, 4, front_value, front_value, front_value),
                                           [&](int, int) { return front_alpha; }),
                      PlaneCoefficients::constant(0.75), 2, 2, false});
  return s;
}

}  // namespace

TEST_CASE("aperture samples") {
  const auto one = aperture_samples(1, 0);
  REQUIRE(one.size() == 1);
  CHECK(one[0].u == 0.0);
  CHECK(one[0].v == 0.0);

  const auto s = aperture_samples(2500, 7);
  REQUIRE(s.size() == 2500);
  double mu = 0, mv = 0;
  for (const auto& p : s) {
    CHECK(p.u * p.u + p.v * p.v <= 1.0 + 1e-12);
    mu += p.u;
    mv += p.v;
  }
  mu /= s.size();
  mv /= s.size();
  CHECK(std::abs(mu) <= 0.05);
  CHECK(std::abs(mv) <= 0.05);

  const auto again = aperture_samples(2500, 7);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].u == again[i].u);
    CHECK(s[i].v == again[i].v);
  }
  CHECK(aperture_samples(2500, 8)[1].u != s[1].u);
}

TEST_CASE("projection matches the thin-lens intersection formula") {
  const auto p = project_sample(10, 10, {0, 0, 2}, 16, 0.25, 1, 0);
  REQUIRE(p);
  CHECK(p->x == doctest::Approx(14));
  CHECK(p->y == doctest::Approx(10));

  const auto focus = project_sample(37.5, 12.25, PlaneCoefficients::constant(0.4), 50, 0.4, 0.3, -0.8);
  REQUIRE(focus);
  CHECK(focus->x == doctest::Approx(37.5));
  CHECK(focus->y == doctest::Approx(12.25));

  const auto tilted = project_sample(100, 50, {0.001, 0, 1}, 10, 0, 0.5, 0);
  REQUIRE(tilted);
  CHECK(tilted->x == doctest::Approx(100 + 0.9 / 1.005 * 5).epsilon(1e-12));
  CHECK(tilted->x == doctest::Approx(104.478).epsilon(1e-5));

  SplitMix64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(-1e-3, 1e-3), b = rng.uniform(-1e-3, 1e-3);
    const double c = rng.uniform(1, 5), A = rng.uniform(0, 80), df = rng.uniform();
    const double mu = rng.uniform(-0.7, 0.7), nu = rng.uniform(-0.7, 0.7);
    const double x = rng.uniform(0, 255), y = rng.uniform(0, 255);
    const auto got = project_sample(x, y, {a, b, c}, A, df, mu, nu);
    const auto want = eq8(x, y, a, b, c, A, df, mu, nu);
    REQUIRE(got);
    CHECK(got->x == doctest::Approx(want.x).epsilon(1e-12));
    CHECK(got->y == doctest::Approx(want.y).epsilon(1e-12));
  }

  // a*A*mu + c == 0: the ray runs parallel to the plane.
  CHECK_FALSE(project_sample(5, 5, {-0.1, 0, 1}, 10, 0, 1, 0).has_value());
}

TEST_CASE("fronto-parallel offsets trace the scaled aperture disc") {
  const double d = 0.6, df = 0.1, A = 24;
  for (const auto& s : aperture_samples(300, 4)) {
    const auto p = project_sample(50, 60, PlaneCoefficients::constant(d), A, df, s.u, s.v);
    REQUIRE(p);
    CHECK(p->x - 50 == doctest::Approx(A * (d - df) * s.u).epsilon(1e-9));
    CHECK(p->y - 60 == doctest::Approx(A * (d - df) * s.v).epsilon(1e-9));
  }
}

TEST_CASE("all-in-focus composite examples") {
  const auto single = fixtures::single_layer_scene(1, 12, 10, 0.3);
  const auto aif = composite_all_in_focus_linear(single, 2.2);
  const ImageBuffer lin = gamma_decode(single.layers[0].rgba, 2.2);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 12; ++x) {
      for (int c = 0; c < 3; ++c) CHECK(aif.image.at(x, y, c) == doctest::Approx(lin.at(x, y, c)).epsilon(1e-6));
      CHECK(aif.disparity.at(x, y) == doctest::Approx(0.3).epsilon(1e-6));
    }
  }

  const auto boxed = composite_all_in_focus_linear(boxed_scene(1.0f, 0.2f, 0.9f), 2.2);
  CHECK(boxed.disparity.at(3, 3) == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(boxed.disparity.at(0, 0) == doctest::Approx(0.25).epsilon(1e-6));

  const auto half = composite_all_in_focus_linear(boxed_scene(0.5f, 0.0f, 1.0f), 2.2);
  CHECK(half.image.at(3, 3, 0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(half.image.at(0, 0, 0) == 0.0f);
}

TEST_CASE("A = 0 and a single ray reproduce the all-in-focus image exactly") {
  const auto scene = fixtures::two_plane_scene(21, 40, 0.2, 0.7);
  const auto aif = composite_all_in_focus(scene, 2.2);
  RenderParams p;
  p.blur_amount = 0;
  p.refocus_disparity = 0.3;
  const auto zero = trace_bokeh(scene, p, 64, 3);
  CHECK(fixtures::max_abs_diff(zero.data(), aif.image.data()) == 0.0);
  p.blur_amount = 40;
  const auto one = trace_bokeh(scene, p, 1, 3);
  CHECK(fixtures::max_abs_diff(one.data(), aif.image.data()) == 0.0);
}

TEST_CASE("tracing is deterministic in its seed") {
  const auto scene = fixtures::two_plane_scene(5, 32, 0.2, 0.8);
  RenderParams p;
  p.blur_amount = 20;
  p.refocus_disparity = 0.2;
  const auto a = trace_bokeh(scene, p, 32, 1);
  const auto b = trace_bokeh(scene, p, 32, 1);
  CHECK(fixtures::max_abs_diff(a.data(), b.data()) == 0.0);
  const auto c = trace_bokeh(scene, p, 32, 2);
  CHECK(fixtures::max_abs_diff(a.data(), c.data()) > 0.0);
}

TEST_CASE("ray energy is conserved where the opaque back layer is hit") {
  const auto scene = fixtures::two_plane_scene(8, 64, 0.15, 0.75);
  const PreparedScene prep(scene, 2.2);
  for (const auto& s : aperture_samples(200, 2)) {
    for (int y = 20; y < 44; y += 3) {
      for (int x = 20; x < 44; x += 3) {
        const RayResult r = prep.walk_ray(x, y, 16, 0.5, s.u, s.v);
        CHECK(r.coverage + r.residual == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(r.residual <= kEnergyEpsilon);
      }
    }
  }
}

TEST_CASE("constant layer blurs like a direct disc convolution") {
  const auto scene = fixtures::single_layer_scene(17, 64, 64, 1.0);
  RenderParams p;
  p.blur_amount = 8;
  p.refocus_disparity = 0.0;
  p.gamma = 2.2;
  const ImageBuffer traced = trace_bokeh_linear(scene, p, 512, 0);
  const ImageBuffer lin = gamma_decode(
      composite_all_in_focus(scene, 2.2).image, 2.2);
  const auto ref = fixtures::reference_blur(lin, 8.0, true);
  const double psnr = fixtures::psnr_from_mse(fixtures::mse_vs(traced, ref));
  MESSAGE("oracle vs direct convolution: " << psnr << " dB");
  CHECK(psnr >= 40.0);
}

TEST_CASE("estimates converge as the ray count grows") {
  const auto scene = fixtures::two_plane_scene(13, 40, 0.1, 0.9);
  RenderParams p;
  p.blur_amount = 24;
  p.refocus_disparity = 0.1;
  const ImageBuffer ref = trace_bokeh_linear(scene, p, 2048, 99);
  double prev = 1e9;
  for (int n : {4, 32, 256}) {
    const double err = fixtures::mse(trace_bokeh_linear(scene, p, n, 1), ref);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("scene JSON round trip and field-level errors") {
  const auto dir = fixtures::scratch_dir("oracle_json");
  SceneSpec s = fixtures::two_plane_scene(4, 24, 0.2, 0.6);
  s.layers[1].plane = {1e-3 / 3, -2e-4, 1.0 / 0.6};
  save_scene(s, dir / "scene.json");
  const SceneSpec back = load_scene(dir / "scene.json");
  REQUIRE(back.layers.size() == 2);
  CHECK(back.layers[1].plane.a == s.layers[1].plane.a);
  CHECK(back.layers[1].plane.b == s.layers[1].plane.b);
  CHECK(back.layers[1].plane.c == s.layers[1].plane.c);
  CHECK(back.layers[1].offset_x == s.layers[1].offset_x);
  CHECK(back.layers[0].full_frame);

  SplitMix64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform_int(-12, 12));
    CHECK(parse_exact(format_exact(v)) == v);
  }

  auto doc = nlohmann::json::parse(std::ifstream(dir / "scene.json"));
  doc["layers"][1]["plane"].erase("c");
  try {
    scene_from_json(doc, dir);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("layers[1].plane.c") != std::string::npos);
  }
}

TEST_CASE("scene validation") {
  SceneSpec s = fixtures::two_plane_scene(4, 24, 0.2, 0.6);
  CHECK_NOTHROW(s.validate());
  SceneSpec no_bg = s;
  no_bg.layers[0].full_frame = false;
  CHECK_THROWS_AS(no_bg.validate(), InvalidArgument);
  SceneSpec bad_c = s;
  bad_c.layers[1].plane.c = 0;
  CHECK_THROWS_AS(bad_c.validate(), InvalidArgument);
}
