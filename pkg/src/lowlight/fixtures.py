"""Deterministic synthetic images used by the test suite and benchmarks.

Everything here is generated procedurally from fixed Philox seeds, so the
fixtures are reproducible, license-free and never stored as binaries.
"""

from __future__ import annotations

import numpy as np

from .image import clamp01
from .ops import gaussian_convolve


def step_sine_field(size: int = 16, edge: int | None = None,
                    step_amplitude: float = 0.5,
                    texture_amplitude: float = 0.02) -> np.ndarray:
    """A vertical step edge with a low-amplitude sine texture on top.

    The structure/texture separation tests measure how much of the sine
    gradient energy survives refinement while the step must stay put.
    """
    edge = size // 2 if edge is None else edge
    cols = np.arange(size)
    rows = np.arange(size)
    base = np.where(cols >= edge, 0.25 + step_amplitude, 0.25)
    texture = texture_amplitude * np.sin(
        2.0 * np.pi * (3.0 * cols[None, :] + 2.0 * rows[:, None]) / size)
    return np.clip(base[None, :] + texture, 0.0, 1.0)


def _unit_noise(shape: tuple[int, ...], seed: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    return gen.random(shape, dtype=np.float64)


def _smooth_noise(shape: tuple[int, int], seed: int, scale: float) -> np.ndarray:
    """Zero-mean smooth field with roughly unit peak amplitude."""
    noise = _unit_noise(shape, seed) - 0.5
    smooth = gaussian_convolve(noise, scale)
    peak = np.abs(smooth).max()
    return smooth / peak if peak > 0 else smooth


def scene_image(seed: int, size: int = 192) -> np.ndarray:
    """One synthetic outdoor-like scene: sky, horizon, water, soft objects.

    Bright enough (mean luminance around 0.5 to 0.6) that darkening with a
    0.1 coefficient lands in the low-single-digit dB range against the
    original.
    """
    h = w = size
    gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    rows = np.linspace(0.0, 1.0, h)[:, None] * np.ones((1, w))
    cols = np.ones((h, 1)) * np.linspace(0.0, 1.0, w)[None, :]

    horizon = 0.45 + 0.15 * gen.random()
    sky_top = np.array([0.55, 0.65, 0.85]) + 0.1 * (gen.random(3) - 0.5)
    sky_bottom = np.array([0.85, 0.75, 0.65]) + 0.1 * (gen.random(3) - 0.5)
    water = np.array([0.25, 0.4, 0.55]) + 0.1 * (gen.random(3) - 0.5)

    img = np.zeros((h, w, 3))
    t = np.clip(rows / horizon, 0.0, 1.0)
    above = rows < horizon
    for c in range(3):
        sky = sky_top[c] + (sky_bottom[c] - sky_top[c]) * t
        depth = np.clip((rows - horizon) / max(1e-6, 1.0 - horizon), 0.0, 1.0)
        sea = water[c] * (0.7 + 0.5 * depth)
        img[:, :, c] = np.where(above, sky, sea)

    # Water shimmer: fine horizontal ripples below the horizon.
    ripple = 0.04 * np.sin(2 * np.pi * (rows * h / 3.0 + 2.0 * cols)) * ~above
    img += ripple[:, :, None]

    # A handful of soft elliptical blobs (clouds above, hulls below).
    for _ in range(5):
        cy, cx = gen.random() * 0.9, gen.random() * 0.9
        ry = 0.03 + 0.08 * gen.random()
        rx = 0.06 + 0.2 * gen.random()
        tint = 0.25 + 0.7 * gen.random(3)
        d2 = ((rows - cy) / ry) ** 2 + ((cols - cx) / rx) ** 2
        mask = np.exp(-0.5 * d2)
        weight = 0.35 + 0.45 * gen.random()
        img = img * (1 - weight * mask[:, :, None]) \
            + weight * mask[:, :, None] * tint[None, None, :]

    # Gentle large-scale lighting variation plus mild grain.
    img += 0.06 * _smooth_noise((h, w), seed * 7919 + 13, scale=size / 8)[:, :, None]
    img += 0.015 * (_unit_noise((h, w, 3), seed * 104729 + 3) - 0.5)
    return clamp01(img)


def synthetic_corpus(count: int = 6, size: int = 192) -> list[np.ndarray]:
    """The bundled clean-image corpus used by the end-to-end acceptance run."""
    return [scene_image(seed=1000 + k, size=size) for k in range(count)]


def texture_field(size: int, seed: int = 42) -> np.ndarray:
    """Benchmark field whose per-pixel statistics do not depend on size.

    The sine period and the smoothing scale are fixed in pixel units, so
    refinement cost per pixel stays comparable across resolutions.
    """
    rows = np.arange(size)[:, None]
    cols = np.arange(size)[None, :]
    base = 0.5 + 0.25 * _smooth_noise((size, size), seed, scale=8.0)
    texture = 0.05 * np.sin(2 * np.pi * (rows / 6.0 + cols / 5.0))
    return np.clip(base + texture, 0.0, 1.0)
