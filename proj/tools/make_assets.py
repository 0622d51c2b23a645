"""Regenerates the bundled CC0 test assets in assets/.

Backgrounds are RGB textures, foregrounds RGBA shapes with anti-aliased
alpha. Output is deterministic for a given seed.
"""

import argparse
from pathlib import Path

import numpy as np
from PIL import Image

BG_SIZE = 160
FG_SIZE = 96


def smooth_noise(rng, size, cells):
    coarse = rng.uniform(0, 1, (cells + 1, cells + 1))
    t = np.linspace(0, cells, size, endpoint=False)
    i = t.astype(int)
    f = t - i
    f = f * f * (3 - 2 * f)
    a = coarse[i][:, i] * (1 - f)[None, :] + coarse[i][:, i + 1] * f[None, :]
    b = coarse[i + 1][:, i] * (1 - f)[None, :] + coarse[i + 1][:, i + 1] * f[None, :]
    return a * (1 - f)[:, None] + b * f[:, None]


def background(rng):
    y, x = np.mgrid[0:BG_SIZE, 0:BG_SIZE] / BG_SIZE
    base = rng.uniform(0.2, 0.8, 3)
    tint = rng.uniform(-0.3, 0.3, 3)
    angle = rng.uniform(0, np.pi)
    freq = rng.uniform(6, 18)
    stripes = 0.5 + 0.5 * np.sin(freq * (x * np.cos(angle) + y * np.sin(angle)) * 2 * np.pi)
    detail = sum(smooth_noise(rng, BG_SIZE, c) / k for k, c in ((1, 4), (2, 12), (4, 40)))
    detail = (detail - detail.min()) / np.ptp(detail)
    img = base + tint * (0.6 * detail[..., None] + 0.4 * stripes[..., None] - 0.5)
    return np.clip(img, 0, 1)


def shape_alpha(rng, kind):
    n = 4  # supersampling per axis
    s = FG_SIZE * n
    y, x = (np.mgrid[0:s, 0:s] + 0.5) / s * 2 - 1
    if kind == "ellipse":
        ax, ay = rng.uniform(0.55, 0.9, 2)
        inside = (x / ax) ** 2 + (y / ay) ** 2 <= 1
    elif kind == "box":
        hx, hy, r = *rng.uniform(0.5, 0.8, 2), rng.uniform(0.1, 0.3)
        qx, qy = np.maximum(np.abs(x) - hx + r, 0), np.maximum(np.abs(y) - hy + r, 0)
        inside = (qx**2 + qy**2 <= r * r) & (np.abs(x) <= hx) & (np.abs(y) <= hy)
    else:
        lobes = rng.integers(3, 7)
        phase = rng.uniform(0, 2 * np.pi)
        radius = 0.6 + 0.25 * np.cos(lobes * np.arctan2(y, x) + phase)
        inside = np.hypot(x, y) <= radius
    return inside.reshape(FG_SIZE, n, FG_SIZE, n).mean(axis=(1, 3))


def foreground(rng, kind):
    alpha = shape_alpha(rng, kind)
    color = rng.uniform(0.1, 0.9, 3)
    shade = smooth_noise(rng, FG_SIZE, 6)
    rgb = np.clip(color + 0.35 * (shade[..., None] - 0.5), 0, 1)
    return np.dstack([rgb, alpha])


def save(array, path):
    Image.fromarray(np.round(array * 255).astype(np.uint8)).save(path, optimize=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "assets")
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    (args.out / "backgrounds").mkdir(parents=True, exist_ok=True)
    (args.out / "foregrounds").mkdir(parents=True, exist_ok=True)
    for k in range(4):
        save(background(rng), args.out / "backgrounds" / f"bg_{k:02d}.png")
    for k, kind in enumerate(["ellipse", "box", "blob", "ellipse", "blob", "box"]):
        save(foreground(rng, kind), args.out / "foregrounds" / f"fg_{k:02d}_{kind}.png")


if __name__ == "__main__":
    main()
