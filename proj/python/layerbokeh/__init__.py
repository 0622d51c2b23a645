"""Layered bokeh rendering with partial occlusion.

Images are float32 arrays of shape (H, W, C) holding display-encoded values
in [0, 1]; disparity maps are (H, W) with larger values closer to the camera.
"""

import json
from pathlib import Path

import numpy as np

from ._core import (
    InvalidArgument,
    IoError,
    ParseError,
    Scene,
    blur_radius,
    load_disparity,
    load_image,
    occlusion_mask,
    plane_disparity,
    psnr,
    ssim,
    trace_bokeh,
)
from . import _core

__all__ = [
    "InvalidArgument",
    "IoError",
    "ParseError",
    "Scene",
    "blur_radius",
    "evaluate",
    "generate_dataset",
    "load_disparity",
    "load_image",
    "occlusion_mask",
    "plane_disparity",
    "psnr",
    "render",
    "ssim",
    "trace_bokeh",
]


def render(image, disparity, blur, focus, *, planes=32, gamma=2.2, visible_only=False,
           normalize=True):
    """One-shot render. Build a Scene instead when refocusing repeatedly."""
    scene = Scene(np.asarray(image, dtype=np.float32), np.asarray(disparity, dtype=np.float32),
                  planes=planes, gamma=gamma, extend_for_blur=blur, visible_only=visible_only)
    return scene.render(blur, focus, normalize)


def generate_dataset(config, outdir):
    """Writes a synthetic dataset; returns the manifest as a dict."""
    return json.loads(_core.generate_dataset(json.dumps(config), Path(outdir)))


def evaluate(pred_dir, manifest, label="prediction"):
    return json.loads(_core.evaluate(Path(pred_dir), Path(manifest), label))
