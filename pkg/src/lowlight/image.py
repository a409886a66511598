"""Image containers, color conversion and bit-exact file I/O.

Images are float64 arrays in [0, 1]: RGB images have shape (H, W, 3) and
scalar fields (illumination maps, gradients, weights) have shape (H, W).
PNG is the interchange format for images (8- or 16-bit RGB); float maps
persist as little-endian PFM for debugging dumps.
"""

from __future__ import annotations

import struct
from pathlib import Path

import cv2
import numpy as np


def clamp01(a: np.ndarray) -> np.ndarray:
    return np.clip(a, 0.0, 1.0)


def validate_rgb(image: np.ndarray, name: str = "image") -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {image.shape}")
    if image.shape[0] < 1 or image.shape[1] < 1:
        raise ValueError(f"{name} must be at least 1x1, got {image.shape}")
    return image


def luminance(image: np.ndarray) -> np.ndarray:
    """Per-pixel channel maximum, the lightness used across the pipeline."""
    return validate_rgb(image).max(axis=2)


def load_png(path: str | Path) -> np.ndarray:
    """Load an 8- or 16-bit RGB(A) PNG as a float64 array in [0, 1].

    Alpha is discarded. Grayscale or palette-expanded single-channel files
    are rejected: the pipeline is defined on RGB input.
    """
    path = Path(path)
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise IOError(f"cannot read PNG {path}: missing or undecodable file")
    if raw.ndim != 3 or raw.shape[2] not in (3, 4):
        raise IOError(f"cannot read PNG {path}: unsupported color type (need RGB or RGBA)")
    if raw.dtype == np.uint8:
        maxval = 255.0
    elif raw.dtype == np.uint16:
        maxval = 65535.0
    else:
        raise IOError(f"cannot read PNG {path}: unsupported bit depth {raw.dtype}")
    bgr = raw[:, :, :3]
    rgb = bgr[:, :, ::-1].astype(np.float64) / maxval
    return rgb


def save_png(image: np.ndarray, path: str | Path, depth: int = 8) -> None:
    """Write an RGB image as PNG with round-half-up quantization.

    Channel value v is stored as floor(v * (2^depth - 1) + 0.5), so a
    save/load round trip moves each channel by at most 0.5 / (2^depth - 1).
    """
    image = validate_rgb(image)
    if depth == 8:
        maxval, dtype = 255, np.uint8
    elif depth == 16:
        maxval, dtype = 65535, np.uint16
    else:
        raise ValueError(f"depth must be 8 or 16, got {depth}")
    q = np.floor(image * maxval + 0.5)
    q = np.clip(q, 0, maxval).astype(dtype)
    bgr = q[:, :, ::-1]
    path = Path(path)
    if not cv2.imwrite(str(path), bgr):
        raise IOError(f"cannot write PNG {path}")


def save_pfm(field: np.ndarray, path: str | Path) -> None:
    """Write a scalar field or RGB image as little-endian PFM (scale -1.0)."""
    a = np.asarray(field, dtype=np.float32)
    if a.ndim == 2:
        header = b"Pf"
    elif a.ndim == 3 and a.shape[2] == 3:
        header = b"PF"
    else:
        raise ValueError(f"PFM needs (H, W) or (H, W, 3) data, got {a.shape}")
    h, w = a.shape[:2]
    with open(path, "wb") as fh:
        fh.write(header + b"\n")
        fh.write(f"{w} {h}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(np.flipud(a).astype("<f4").tobytes())


def load_pfm(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        kind = fh.readline().strip()
        if kind not in (b"Pf", b"PF"):
            raise IOError(f"cannot read PFM {path}: bad magic {kind!r}")
        w, h = (int(t) for t in fh.readline().split())
        scale = float(fh.readline())
        channels = 3 if kind == b"PF" else 1
        count = w * h * channels
        fmt = "<" if scale < 0 else ">"
        data = np.frombuffer(fh.read(count * 4), dtype=fmt + "f4", count=count)
    shape = (h, w, 3) if channels == 3 else (h, w)
    return np.flipud(data.reshape(shape)).astype(np.float64)


def rgb_to_hsv(image: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Standard hexcone HSV. Hue is scaled to [0, 1); achromatic hue is 0."""
    image = validate_rgb(image)
    r, g, b = image[:, :, 0], image[:, :, 1], image[:, :, 2]
    v = image.max(axis=2)
    delta = v - image.min(axis=2)
    chromatic = delta > 0
    safe = np.where(chromatic, delta, 1.0)

    h = np.zeros_like(v)
    rmax = chromatic & (v == r)
    gmax = chromatic & ~rmax & (v == g)
    bmax = chromatic & ~rmax & ~gmax
    h[rmax] = np.mod((g - b)[rmax] / safe[rmax], 6.0)
    h[gmax] = (b - r)[gmax] / safe[gmax] + 2.0
    h[bmax] = (r - g)[bmax] / safe[bmax] + 4.0
    h /= 6.0

    s = np.where(v > 0, delta / np.where(v > 0, v, 1.0), 0.0)
    return h, s, v


def hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rgb_to_hsv` on the hexcone."""
    h = np.asarray(h, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    i = i.astype(np.int64) % 6

    out = np.empty(h.shape + (3,), dtype=np.float64)
    for idx, (rr, gg, bb) in enumerate(
        [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)]
    ):
        m = i == idx
        out[m, 0] = rr[m]
        out[m, 1] = gg[m]
        out[m, 2] = bb[m]
    return out
