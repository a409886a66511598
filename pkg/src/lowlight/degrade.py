"""Synthetic low-light degradation: V-channel darkening plus Gaussian noise.

Noise is drawn from a Philox counter-based stream (keyed by the seed) and
shaped with the Box-Muller transform, so outputs are bit-identical across
runs and platforms and independent streams exist per pixel position.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import clamp01, hsv_to_rgb, rgb_to_hsv, validate_rgb

NOISE_STAGES = ("before_darken", "after_darken")


@dataclass
class DegradeSpec:
    darken: float = 0.1        # V-channel multiplier, in (0, 1]
    noise_var: float = 25.0    # Gaussian variance on the 0-255 intensity scale
    seed: int = 0
    noise_stage: str = "before_darken"

    def __post_init__(self):
        if not 0 < self.darken <= 1:
            raise ValueError(f"darken must lie in (0, 1], got {self.darken}")
        if self.noise_var < 0:
            raise ValueError(f"noise_var must be non-negative, got {self.noise_var}")
        if self.noise_stage not in NOISE_STAGES:
            raise ValueError(f"noise_stage must be one of {NOISE_STAGES}")

    def describe(self) -> str:
        return (f"darken={self.darken} noise_var={self.noise_var} "
                f"seed={self.seed} noise_stage={self.noise_stage}")


def gaussian_samples(shape: tuple[int, ...], seed: int) -> np.ndarray:
    """Standard normal samples via Box-Muller on a Philox uniform stream."""
    gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    u1 = gen.random(shape, dtype=np.float64)
    u2 = gen.random(shape, dtype=np.float64)
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


def darken(image: np.ndarray, c: float) -> np.ndarray:
    """Scale the HSV value channel by c, preserving hue and saturation."""
    if not 0 < c <= 1:
        raise ValueError(f"darkening coefficient must lie in (0, 1], got {c}")
    h, s, v = rgb_to_hsv(validate_rgb(image))
    return hsv_to_rgb(h, s, c * v)


def add_gaussian_noise(image: np.ndarray, var: float, seed: int) -> np.ndarray:
    """Add white Gaussian noise of the given 0-255-scale variance, then clamp.

    var = 25 means per-channel standard deviation sqrt(25)/255 in unit scale.
    """
    if var < 0:
        raise ValueError(f"variance must be non-negative, got {var}")
    image = validate_rgb(image)
    if var == 0:
        return image.copy()
    sigma = np.sqrt(var) / 255.0
    return clamp01(image + sigma * gaussian_samples(image.shape, seed))


def synthesize(image: np.ndarray, spec: DegradeSpec) -> np.ndarray:
    """Produce the noisy low-light version of a clean image.

    Default order adds noise first and darkens second; the alternative
    stage darkens first for ablations.
    """
    image = validate_rgb(image)
    if spec.noise_stage == "before_darken":
        out = add_gaussian_noise(image, spec.noise_var, spec.seed)
        out = darken(out, spec.darken)
    else:
        out = darken(image, spec.darken)
        out = add_gaussian_noise(out, spec.noise_var, spec.seed)
    return clamp01(out)
