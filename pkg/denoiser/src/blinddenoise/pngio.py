"""Minimal 8/16-bit RGB PNG I/O matching the bridge contract."""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np


def read_png(path: str | Path) -> np.ndarray:
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise IOError(f"cannot read PNG {path}")
    if raw.ndim != 3 or raw.shape[2] not in (3, 4):
        raise IOError(f"cannot read PNG {path}: need an RGB or RGBA image")
    if raw.dtype == np.uint8:
        maxval = 255.0
    elif raw.dtype == np.uint16:
        maxval = 65535.0
    else:
        raise IOError(f"cannot read PNG {path}: unsupported dtype {raw.dtype}")
    return raw[:, :, :3][:, :, ::-1].astype(np.float64) / maxval


def write_png(image: np.ndarray, path: str | Path, depth: int = 16) -> None:
    if depth == 8:
        maxval, dtype = 255, np.uint8
    elif depth == 16:
        maxval, dtype = 65535, np.uint16
    else:
        raise ValueError(f"depth must be 8 or 16, got {depth}")
    q = np.clip(np.floor(image * maxval + 0.5), 0, maxval).astype(dtype)
    if not cv2.imwrite(str(path), q[:, :, ::-1]):
        raise IOError(f"cannot write PNG {path}")
