"""Discrete differential and smoothing operators shared by the whole pipeline.

Conventions used everywhere in this package:

* scalar fields are 2-D float64 arrays of shape (H, W),
* gradients are forward differences with replicate (Neumann) boundary,
  so the trailing row/column gradient is exactly zero,
* the gradient transpose is the exact algebraic adjoint of that stencil,
* smoothing kernels are normalized, so constant fields are fixed points.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate1d

REPLICATE = "replicate"

_AXES = {"h": 1, "v": 0}


def _check_mode(mode: str) -> None:
    if mode != REPLICATE:
        raise ValueError(f"unsupported boundary mode: {mode!r}")


def gradient(field: np.ndarray, axis: str, mode: str = REPLICATE) -> np.ndarray:
    """Forward difference along ``axis`` ("h" = columns, "v" = rows).

    The replicated border makes the last column (or row) gradient zero.
    """
    _check_mode(mode)
    f = np.asarray(field, dtype=np.float64)
    out = np.zeros_like(f)
    if axis == "h":
        out[:, :-1] = f[:, 1:] - f[:, :-1]
    elif axis == "v":
        out[:-1, :] = f[1:, :] - f[:-1, :]
    else:
        raise ValueError(f"axis must be 'h' or 'v', got {axis!r}")
    return out


def gradient_transpose(field: np.ndarray, axis: str, mode: str = REPLICATE) -> np.ndarray:
    """Adjoint of :func:`gradient`: <grad(f), g> == <f, gradient_transpose(g)>.

    This is the divergence-style operator used to assemble the smoothing
    systems; the boundary terms follow from the forward-difference stencil.
    """
    _check_mode(mode)
    g = np.asarray(field, dtype=np.float64)
    out = np.zeros_like(g)
    if axis == "h":
        out[:, 0] = -g[:, 0]
        out[:, 1:-1] = g[:, :-2] - g[:, 1:-1]
        out[:, -1] = g[:, -2]
    elif axis == "v":
        out[0, :] = -g[0, :]
        out[1:-1, :] = g[:-2, :] - g[1:-1, :]
        out[-1, :] = g[-2, :]
    else:
        raise ValueError(f"axis must be 'h' or 'v', got {axis!r}")
    return out


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian truncated at radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_convolve(field: np.ndarray, sigma: float, mode: str = REPLICATE) -> np.ndarray:
    """Separable Gaussian smoothing with replicate padding.

    The kernel is renormalized after truncation, so smoothing preserves
    constants exactly and total mass for interior-supported inputs.
    """
    _check_mode(mode)
    k = gaussian_kernel1d(sigma)
    f = np.asarray(field, dtype=np.float64)
    out = correlate1d(f, k, axis=0, mode="nearest")
    out = correlate1d(out, k, axis=1, mode="nearest")
    return out


def box_mean(field: np.ndarray, radius: int, mode: str = REPLICATE) -> np.ndarray:
    """Mean over the (2r+1)^2 replicate-padded window, O(1) per pixel.

    Implemented with a padded integral image, so the per-pixel cost does
    not depend on the radius.
    """
    _check_mode(mode)
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    f = np.asarray(field, dtype=np.float64)
    if radius == 0:
        return f.copy()
    r = radius
    padded = np.pad(f, r, mode="edge")
    # Integral image with a zero first row/column so window sums are
    # four-corner differences.
    s = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.float64)
    np.cumsum(padded, axis=0, out=s[1:, 1:])
    np.cumsum(s[1:, 1:], axis=1, out=s[1:, 1:])
    w = 2 * r + 1
    h, wd = f.shape
    total = (
        s[w : w + h, w : w + wd]
        - s[0:h, w : w + wd]
        - s[w : w + h, 0:wd]
        + s[0:h, 0:wd]
    )
    return total / float(w * w)
