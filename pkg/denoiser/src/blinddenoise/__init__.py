"""Blind denoising companion: noise-level estimation plus residual U-Net."""

from .losses import (LossWeights, loss_asymm, loss_ssim, loss_tv, ssim_map,
                     total_loss)
from .models import BlindDenoiser, NoiseEstimator, ResidualDenoiser
from .train import (TrainSpec, evaluate_denoising, load_checkpoint,
                    save_checkpoint, train)

__all__ = [
    "LossWeights", "loss_asymm", "loss_ssim", "loss_tv", "ssim_map",
    "total_loss", "BlindDenoiser", "NoiseEstimator", "ResidualDenoiser",
    "TrainSpec", "evaluate_denoising", "load_checkpoint", "save_checkpoint",
    "train",
]

__version__ = "0.1.0"
