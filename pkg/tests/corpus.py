"""Randomized image corpus shared by the round-trip tests.

Mostly small images (edge effects, tiny patches) with a tail of larger ones
up to 256x256; a third each noise, constant and gradients (plus noisy
gradients). Seeded, so every run sees the same 1000 images.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from lprcodec import ImagePlane, read_image

DATA = Path(__file__).parent / "data"
KINDS = ("noise", "constant", "gradient", "noisy_gradient")


def _side(rng, big: bool) -> int:
    if big:
        return int(np.exp(rng.uniform(np.log(33), np.log(256))))
    return int(rng.integers(1, 33))


def random_image(rng, kind: str, h: int, w: int, c: int) -> np.ndarray:
    if kind == "noise":
        lo = int(rng.integers(0, 256))
        hi = int(rng.integers(lo, 256))
        return rng.integers(lo, hi + 1, (h, w, c)).astype(np.uint8)
    if kind == "constant":
        return np.full((h, w, c), rng.integers(0, 256, c), np.uint8)
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    a, b = rng.uniform(-4, 4, (2, c))
    g = rng.uniform(0, 255, c) + a * yy[..., None] + b * xx[..., None]
    if kind == "noisy_gradient":
        g = g + rng.normal(0, rng.uniform(0.5, 8), g.shape)
    return np.clip(np.rint(g), 0, 255).astype(np.uint8)


def random_corpus(n: int = 1000, seed: int = 2024, n_big: int = 30) -> list[tuple[str, ImagePlane]]:
    rng = np.random.default_rng(seed)
    out = [("noise-1x1", ImagePlane(np.array([[[7, 200, 13]]], np.uint8))),
           ("noise-256x256", ImagePlane(rng.integers(0, 256, (256, 256, 3)).astype(np.uint8)))]
    for i in range(n - len(out)):
        big = i < n_big
        kind = KINDS[i % len(KINDS)]
        h, w = _side(rng, big), _side(rng, big)
        c = 3 if rng.random() < 0.5 else 1
        out.append((f"{kind}-{h}x{w}x{c}-{i}", ImagePlane(random_image(rng, kind, h, w, c))))
    return out


def natural_images() -> list[tuple[str, ImagePlane]]:
    return [(p.stem, read_image(p)) for p in sorted(DATA.glob("*.p[pg]m"))]
