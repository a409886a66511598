"""Training on synthetic Gaussian noise with a per-patch noise level.

Each step crops a random patch from a random clean image, draws a noise
standard deviation uniformly from (0, noise_max) on the 0-255 scale, adds
white Gaussian noise, and records the constant per-patch level as the
ground-truth noise map. The learning rate starts at 1e-3 and drops tenfold
at the midpoint of the epoch schedule.
"""

from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .losses import LossWeights, total_loss
from .models import DOWNSAMPLE_FACTOR, BlindDenoiser
from .pngio import read_png


@dataclass
class TrainSpec:
    epochs: int = 80
    patches_per_epoch: int = 34000
    patch_size: int = 256
    batch_size: int = 8
    noise_max: float = 50.0       # sigma upper bound, 0-255 scale
    lr_high: float = 1e-3
    lr_low: float = 1e-4
    base_channels: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.patches_per_epoch < 1:
            raise ValueError("epochs and patches_per_epoch must be >= 1")
        if self.patch_size % DOWNSAMPLE_FACTOR:
            raise ValueError(
                f"patch_size must be divisible by {DOWNSAMPLE_FACTOR}")
        if self.noise_max <= 0:
            raise ValueError("noise_max must be positive")

    @classmethod
    def desk(cls, **overrides) -> "TrainSpec":
        """Desk-scale defaults: small enough to train on one workstation."""
        base = dict(epochs=20, patches_per_epoch=2000, patch_size=128)
        base.update(overrides)
        return cls(**base)

    def lr_at_epoch(self, epoch: int) -> float:
        """Tenfold drop right after the first half (epoch is 1-based)."""
        return self.lr_high if epoch <= self.epochs // 2 else self.lr_low


def load_clean_images(data_dir: str | Path, limit: int | None = None) -> list[np.ndarray]:
    paths = sorted(Path(data_dir).glob("*.png"))
    if limit is not None:
        paths = paths[:limit]
    if not paths:
        raise ValueError(f"no PNG images found in {data_dir}")
    return [read_png(p) for p in paths]


def sample_batch(images: list[np.ndarray], spec: TrainSpec,
                 gen: torch.Generator) -> tuple[torch.Tensor, ...]:
    """Random crops + per-patch noise; returns (noisy, clean, noise map)."""
    ps = spec.patch_size
    clean = torch.empty(spec.batch_size, 3, ps, ps)
    sigma = torch.empty(spec.batch_size)
    for b in range(spec.batch_size):
        idx = int(torch.randint(len(images), (1,), generator=gen))
        img = images[idx]
        h, w = img.shape[:2]
        if h < ps or w < ps:
            pad_h, pad_w = max(0, ps - h), max(0, ps - w)
            img = np.pad(img, ((0, pad_h), (0, pad_w), (0, 0)), mode="reflect")
            h, w = img.shape[:2]
        top = int(torch.randint(h - ps + 1, (1,), generator=gen))
        left = int(torch.randint(w - ps + 1, (1,), generator=gen))
        patch = img[top:top + ps, left:left + ps]
        clean[b] = torch.from_numpy(patch.transpose(2, 0, 1).copy()).float()
        sigma[b] = torch.rand(1, generator=gen) * spec.noise_max / 255.0
    noise = torch.randn(clean.shape, generator=gen) * sigma.view(-1, 1, 1, 1)
    noisy = (clean + noise).clamp(0.0, 1.0)
    noise_truth = sigma.view(-1, 1, 1, 1).expand_as(clean).contiguous()
    return noisy, clean, noise_truth


def save_checkpoint(model: BlindDenoiser, spec: TrainSpec, path: str | Path) -> None:
    torch.save({
        "format": "blind-denoiser-v1",
        "base_channels": model.base_channels,
        "state": model.state_dict(),
        "train_spec": asdict(spec),
    }, path)


def load_checkpoint(path: str | Path) -> BlindDenoiser:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if not isinstance(payload, dict) or payload.get("format") != "blind-denoiser-v1":
        raise ValueError(f"not a blind-denoiser checkpoint: {path}")
    model = BlindDenoiser(base_channels=payload["base_channels"])
    model.load_state_dict(payload["state"])
    model.eval()
    return model


def train(data_dir: str | Path, out_checkpoint: str | Path,
          spec: TrainSpec | None = None, weights: LossWeights | None = None,
          log_path: str | Path | None = None, image_limit: int | None = 50,
          quiet: bool = False) -> BlindDenoiser:
    """Train from a directory of clean PNGs; writes checkpoint + CSV log."""
    spec = spec or TrainSpec.desk()
    weights = weights or LossWeights()
    images = load_clean_images(data_dir, limit=image_limit)

    # zero-initialized output layers emit denormal gradients early in
    # training, which cripple single-core throughput
    torch.set_flush_denormal(True)
    torch.manual_seed(spec.seed)
    gen = torch.Generator().manual_seed(spec.seed)
    model = BlindDenoiser(base_channels=spec.base_channels)
    model.train()
    optimizer = torch.optim.Adam(model.parameters(), lr=spec.lr_high)

    log_path = Path(log_path) if log_path else Path(out_checkpoint).with_suffix(".log.csv")
    steps = max(1, spec.patches_per_epoch // spec.batch_size)
    with open(log_path, "w", newline="") as fh:
        log = csv.writer(fh)
        log.writerow(["epoch", "loss_total", "loss_ssim", "loss_asymm",
                      "loss_tv", "lr"])
        for epoch in range(1, spec.epochs + 1):
            lr = spec.lr_at_epoch(epoch)
            for group in optimizer.param_groups:
                group["lr"] = lr
            sums = {"total": 0.0, "ssim": 0.0, "asymm": 0.0, "tv": 0.0}
            started = time.time()
            for _ in range(steps):
                noisy, clean, noise_truth = sample_batch(images, spec, gen)
                estimated = model.estimator(noisy)
                output = model.denoiser(noisy, estimated)
                parts = total_loss(output, clean, estimated, noise_truth, weights)
                optimizer.zero_grad()
                parts["total"].backward()
                optimizer.step()
                for key in sums:
                    sums[key] += float(parts[key].detach())
            means = {key: value / steps for key, value in sums.items()}
            log.writerow([epoch, f"{means['total']:.6f}", f"{means['ssim']:.6f}",
                          f"{means['asymm']:.6f}", f"{means['tv']:.6f}", lr])
            fh.flush()
            if not quiet:
                print(f"epoch {epoch}/{spec.epochs} loss {means['total']:.4f} "
                      f"(ssim {means['ssim']:.4f} asymm {means['asymm']:.4f} "
                      f"tv {means['tv']:.4f}) lr {lr:g} "
                      f"[{time.time() - started:.0f}s]", flush=True)
            save_checkpoint(model, spec, out_checkpoint)
    model.eval()
    return model


def evaluate_denoising(model: BlindDenoiser, images: list[np.ndarray],
                       sigma255: float, seed: int = 1234,
                       patch_size: int = 128) -> dict[str, float]:
    """Held-out PSNR gain and noise-estimate accuracy at one noise level."""
    gen = torch.Generator().manual_seed(seed)
    sigma = sigma255 / 255.0
    gains, est_means = [], []
    model.eval()
    with torch.no_grad():
        for img in images:
            h, w = img.shape[:2]
            ps = min(patch_size, h, w)
            clean = torch.from_numpy(
                img[:ps, :ps].transpose(2, 0, 1).copy()).float().unsqueeze(0)
            noisy = (clean + sigma * torch.randn(clean.shape, generator=gen))
            noisy = noisy.clamp(0.0, 1.0)
            output, estimated = model(noisy)
            output = output.clamp(0.0, 1.0)

            def psnr(x, y):
                mse = float(((x - y) ** 2).mean())
                return 99.0 if mse == 0 else 10.0 * np.log10(1.0 / mse)

            gains.append(psnr(output, clean) - psnr(noisy, clean))
            est_means.append(float(estimated.mean()))
    return {
        "psnr_gain_db": float(np.mean(gains)),
        "noise_estimate_mean": float(np.mean(est_means)),
        "noise_true": sigma,
    }
