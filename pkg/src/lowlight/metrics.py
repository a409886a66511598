"""Full-reference quality metrics and corpus-level aggregation.

PSNR is computed in unit dynamic range over all pixels and channels.
SSIM uses local Gaussian statistics (sigma 1.5, 11x11 support) on the
channel-mean luminance with the usual stabilizers c1 = 0.01^2 and
c2 = 0.03^2. The lightness-order error counts, per pixel, how many other
pixels changed their lightness ordering relative to that pixel; images are
nearest-neighbor downsampled so the longer side is at most 100 before the
pairwise comparison.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .image import load_png, luminance
from .ops import gaussian_convolve

PSNR_CAP_DB = 99.0
METRIC_NAMES = ("psnr", "ssim", "loe")


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB; identical images report the 99 cap."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_shape(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, float(10.0 * np.log10(1.0 / mse)))


def ssim(a: np.ndarray, b: np.ndarray, sigma: float = 1.5,
         c1: float = 0.01 ** 2, c2: float = 0.03 ** 2) -> float:
    """Mean structural similarity on the channel-mean luminance."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_shape(a, b)
    x = a.mean(axis=2) if a.ndim == 3 else a
    y = b.mean(axis=2) if b.ndim == 3 else b

    mu_x = gaussian_convolve(x, sigma)
    mu_y = gaussian_convolve(y, sigma)
    var_x = gaussian_convolve(x * x, sigma) - mu_x * mu_x
    var_y = gaussian_convolve(y * y, sigma) - mu_y * mu_y
    cov = gaussian_convolve(x * y, sigma) - mu_x * mu_y

    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def _lightness_grid(image: np.ndarray, max_side: int) -> np.ndarray:
    light = luminance(image) if image.ndim == 3 else np.asarray(image, dtype=np.float64)
    if max_side <= 0:
        return light
    stride = int(np.ceil(max(light.shape) / max_side))
    return light[::stride, ::stride] if stride > 1 else light


def loe(enhanced: np.ndarray, reference: np.ndarray, max_side: int = 100) -> float:
    """Lightness-order error: mean count of flipped pairwise orderings.

    ``max_side`` bounds the downsampled grid; pass 0 to compare every
    pixel pair exactly (test-scale inputs only, the cost is quadratic).
    """
    enhanced = np.asarray(enhanced, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    _check_same_shape(enhanced, reference)
    le = _lightness_grid(enhanced, max_side).ravel()
    lr = _lightness_grid(reference, max_side).ravel()
    m = le.size
    total = 0
    chunk = max(1, 2 ** 22 // m)
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        order_e = le[start:stop, None] >= le[None, :]
        order_r = lr[start:stop, None] >= lr[None, :]
        total += int(np.count_nonzero(order_e != order_r))
    return total / m


@dataclass
class ManifestRow:
    image_id: str
    test_path: Path
    reference_path: Path
    input_path: Path | None = None


def read_manifest(path: str | Path) -> list[ManifestRow]:
    """Parse a corpus manifest: tab-separated id, test, reference[, input].

    Lines starting with '#' carry the echoed configuration and are skipped.
    """
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) < 3:
            raise ValueError(f"{path}:{lineno}: need at least id, test, reference")
        rows.append(ManifestRow(
            image_id=parts[0],
            test_path=Path(parts[1]),
            reference_path=Path(parts[2]),
            input_path=Path(parts[3]) if len(parts) > 3 else None,
        ))
    return rows


@dataclass
class QualityReport:
    metrics: tuple[str, ...]
    loe_reference: str = "input"
    per_image: list[tuple[str, dict[str, float]]] = field(default_factory=list)
    errors: list[tuple[str, str]] = field(default_factory=list)

    def aggregate(self) -> tuple[dict[str, float], dict[str, float]]:
        """Mean and sample (n-1) standard deviation; a singleton has std 0."""
        mean: dict[str, float] = {}
        std: dict[str, float] = {}
        for m in self.metrics:
            values = np.array([vals[m] for _, vals in self.per_image], dtype=np.float64)
            if values.size == 0:
                mean[m] = float("nan")
                std[m] = float("nan")
            else:
                mean[m] = float(values.mean())
                std[m] = float(values.std(ddof=1)) if values.size > 1 else 0.0
        return mean, std

    def write_csv(self, path: str | Path) -> None:
        mean, std = self.aggregate()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id"] + [_csv_column(m) for m in self.metrics])
            for image_id, vals in self.per_image:
                writer.writerow([image_id] + [f"{vals[m]:.6f}" for m in self.metrics])
            writer.writerow(["mean"] + [f"{mean[m]:.6f}" for m in self.metrics])
            writer.writerow(["std"] + [f"{std[m]:.6f}" for m in self.metrics])

    def format_table(self) -> str:
        mean, std = self.aggregate()
        width = 18
        lines = [f"# loe reference: {self.loe_reference}",
                 f"{'id':<24}" + "".join(f"{m:>{width}}" for m in self.metrics)]
        for image_id, vals in self.per_image:
            lines.append(f"{image_id:<24}"
                         + "".join(f"{vals[m]:>{width}.4f}" for m in self.metrics))
        lines.append(f"{'mean±std':<24}" + "".join(
            f"{mean[m]:.4f}±{std[m]:.4f}".rjust(width) for m in self.metrics))
        for image_id, message in self.errors:
            lines.append(f"error: {image_id}: {message}")
        return "\n".join(lines) + "\n"


def _csv_column(metric: str) -> str:
    return {"psnr": "psnr_db"}.get(metric, metric)


def evaluate_corpus(manifest: str | Path, metrics: tuple[str, ...] = METRIC_NAMES,
                    loe_reference: str = "input", max_side: int = 100) -> QualityReport:
    """Compute the requested metrics for every manifest pair.

    ``loe_reference`` selects the image whose lightness order LOE is
    compared against: the manifest's input column when present ("input",
    the default) or the reference column ("reference"). Rows whose files
    are missing or unreadable are recorded as errors and excluded.
    """
    for m in metrics:
        if m not in METRIC_NAMES:
            raise ValueError(f"unknown metric {m!r}")
    if loe_reference not in ("input", "reference"):
        raise ValueError("loe_reference must be 'input' or 'reference'")

    report = QualityReport(metrics=tuple(metrics), loe_reference=loe_reference)
    for row in read_manifest(manifest):
        try:
            test = load_png(row.test_path)
            reference = load_png(row.reference_path)
            values: dict[str, float] = {}
            if "psnr" in metrics:
                values["psnr"] = psnr(test, reference)
            if "ssim" in metrics:
                values["ssim"] = ssim(test, reference)
            if "loe" in metrics:
                if loe_reference == "input" and row.input_path is not None:
                    order_ref = load_png(row.input_path)
                else:
                    order_ref = reference
                values["loe"] = loe(test, order_ref, max_side=max_side)
            report.per_image.append((row.image_id, values))
        except (IOError, ValueError) as exc:
            report.errors.append((row.image_id, str(exc)))
    return report
