"""Training losses: asymmetric noise-map error, smoothness, structural term.

Gradient and SSIM conventions deliberately mirror the enhancement toolkit
(forward differences with a replicated border, channel-mean luminance,
Gaussian window sigma 1.5 truncated at radius 5) so values computed on
shared fixtures agree across the two packages.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F


@dataclass
class LossWeights:
    alpha: float = 0.3
    lambda_asymm: float = 0.5
    lambda_tv: float = 0.005

    def __post_init__(self):
        if not 0 < self.alpha < 0.5:
            raise ValueError(f"alpha must lie in (0, 0.5), got {self.alpha}")
        if self.lambda_asymm < 0 or self.lambda_tv < 0:
            raise ValueError("loss weights must be non-negative")


def loss_asymm(estimated: torch.Tensor, truth: torch.Tensor,
               alpha: float = 0.3) -> torch.Tensor:
    """Squared error weighted (1 - alpha) under-, alpha over-estimation."""
    diff = estimated - truth
    weight = torch.abs(alpha - (diff < 0).to(diff.dtype))
    return (weight * diff * diff).sum()


def _forward_diff(x: torch.Tensor, axis: int) -> torch.Tensor:
    out = torch.zeros_like(x)
    if axis == -1:
        out[..., :-1] = x[..., 1:] - x[..., :-1]
    else:
        out[..., :-1, :] = x[..., 1:, :] - x[..., :-1, :]
    return out


def loss_tv(noise_map: torch.Tensor) -> torch.Tensor:
    """Sum of squared forward-difference gradients, replicate boundary."""
    gh = _forward_diff(noise_map, -1)
    gv = _forward_diff(noise_map, -2)
    return (gh * gh + gv * gv).sum()


def _gaussian_kernel1d(sigma: float, dtype, device) -> torch.Tensor:
    radius = int(torch.ceil(torch.tensor(3.0 * sigma)).item())
    x = torch.arange(-radius, radius + 1, dtype=dtype, device=device)
    k = torch.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def ssim_map(a: torch.Tensor, b: torch.Tensor, sigma: float = 1.5,
             c1: float = 0.01 ** 2, c2: float = 0.03 ** 2) -> torch.Tensor:
    """Per-pixel structural similarity of two NCHW batches (luminance)."""
    x = a.mean(dim=1, keepdim=True)
    y = b.mean(dim=1, keepdim=True)
    k = _gaussian_kernel1d(sigma, a.dtype, a.device)
    radius = k.numel() // 2
    kh = k.view(1, 1, 1, -1)
    kv = k.view(1, 1, -1, 1)

    def blur(t):
        t = F.pad(t, (radius, radius, radius, radius), mode="replicate")
        return F.conv2d(F.conv2d(t, kv), kh)

    mu_x, mu_y = blur(x), blur(y)
    var_x = blur(x * x) - mu_x * mu_x
    var_y = blur(y * y) - mu_y * mu_y
    cov = blur(x * y) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2)
    return num / den


def loss_ssim(output: torch.Tensor, truth: torch.Tensor) -> torch.Tensor:
    """Mean over pixels of 1 - SSIM (averaged, so the weight is size-free)."""
    return (1.0 - ssim_map(output, truth)).mean()


def total_loss(output: torch.Tensor, truth: torch.Tensor,
               estimated: torch.Tensor, noise_truth: torch.Tensor,
               weights: LossWeights | None = None) -> dict[str, torch.Tensor]:
    """Composite objective; returns every part so logs can decompose it."""
    weights = weights or LossWeights()
    parts = {
        "ssim": loss_ssim(output, truth),
        "asymm": loss_asymm(estimated, noise_truth, weights.alpha),
        "tv": loss_tv(estimated),
    }
    parts["total"] = (parts["ssim"]
                      + weights.lambda_asymm * parts["asymm"]
                      + weights.lambda_tv * parts["tv"])
    return parts
