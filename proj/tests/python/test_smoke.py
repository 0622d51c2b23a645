import json
import math

import numpy as np
import pytest

import layerbokeh as lb


def two_plane(size=64, d_bg=0.2, d_fg=0.8):
    rng = np.random.default_rng(0)
    image = rng.uniform(0.1, 0.9, (size, size, 3)).astype(np.float32)
    disparity = np.full((size, size), d_bg, np.float32)
    disparity[size // 4 : 3 * size // 4, size // 4 : 3 * size // 4] = d_fg
    return image, disparity


def test_blur_radius_and_planes():
    assert lb.blur_radius(20.0, 0.9, 0.4) == pytest.approx(10.0)
    assert lb.plane_disparity(16, 32) == pytest.approx(0.515625)


def test_zero_blur_returns_input():
    image, disparity = two_plane()
    out = lb.render(image, disparity, blur=0.0, focus=0.5)
    assert out.shape == image.shape
    assert out.dtype == np.float32
    assert np.abs(out - image).max() <= 1e-5


def test_scene_reuse_is_deterministic():
    image, disparity = two_plane()
    scene = lb.Scene(image, disparity, extend_for_blur=40)
    a = scene.render(40.0, 0.2)
    b = scene.render(40.0, 0.2)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, scene.render(40.0, 0.8))
    assert scene.focus_at(32, 32) == pytest.approx(0.8)
    assert scene.focus_at(2, 2, snap=True) == pytest.approx(lb.plane_disparity(6, 32))
    assert scene.occlusion_mask.shape == disparity.shape


def test_occlusion_mask_sits_on_the_near_side():
    _, disparity = two_plane(96)
    mask = lb.occlusion_mask(disparity, blur=40, dilate=5) > 0.5
    near = disparity > 0.5
    # Extension fills the 48 px square. Outside it there is only the edge
    # column next to the step plus the 5 px final dilation.
    assert mask[near].all()
    ring = np.zeros_like(near)
    ring[24 - 6 : 72 + 6, 24 - 6 : 72 + 6] = True
    assert not (mask & ~ring).any()
    assert lb.occlusion_mask(np.full((32, 32), 0.4, np.float32)).sum() == 0


def test_metrics():
    rng = np.random.default_rng(1)
    a = rng.uniform(0.0, 0.8, (32, 40, 3)).astype(np.float32)
    b = a + np.float32(0.1)
    assert lb.psnr(a, b) == pytest.approx(20.0, abs=1e-5)
    assert math.isinf(lb.psnr(a, a))
    assert lb.ssim(a, a) == 1.0
    full = np.ones((32, 40), np.float32)
    assert lb.psnr(a, b, full) == pytest.approx(lb.psnr(a, b), abs=1e-9)


def test_errors_map_to_python_exceptions(tmp_path):
    image, disparity = two_plane()
    with pytest.raises(ValueError):
        lb.render(image, disparity, blur=10.0, focus=1.5)
    with pytest.raises(ValueError):
        lb.render(image, disparity[:10], blur=10.0, focus=0.5)
    with pytest.raises(OSError):
        lb.load_image(tmp_path / "missing.png")
    bad = tmp_path / "scene.json"
    bad.write_text(json.dumps({"canvas": {"width": 8}}))
    with pytest.raises(ValueError):
        lb.trace_bokeh(bad, blur=10.0, focus=0.5)


def test_dataset_roundtrip(tmp_path):
    config = {"n_scenes": 1, "resolution": [64, 64], "blur_params": [20.0], "rays": 8, "seed": 5}
    manifest = lb.generate_dataset(config, tmp_path / "a")
    again = lb.generate_dataset(config, tmp_path / "b")
    assert manifest == again
    scene = manifest["scenes"][0]
    root = tmp_path / "a"
    image = lb.load_image(root / scene["files"]["all_in_focus"]["path"])
    disparity = lb.load_disparity(root / scene["files"]["disparity"]["path"])
    assert image.shape[:2] == disparity.shape == (64, 64)

    traced = lb.trace_bokeh(root / scene["files"]["scene"]["path"], blur=0.0, focus=0.5, rays=4)
    quantized = np.round(traced * 255) / 255
    assert np.abs(quantized - image).max() <= 1.0 / 255 + 1e-6

    report = lb.evaluate(root, root / "manifest.json")
    assert report["aggregate"]["psnr"] == "inf"
