"""Retinex low-light image enhancement toolkit.

Pipeline: coarse illumination by per-pixel channel maximum, refinement by
a hybrid gradient-sparsity + structure-aware variational model, adaptive
gamma adjustment, guided-filter reflection boosting, and recombination.
Ships with a synthetic degradation generator, PSNR/SSIM/LOE metrics, and
a CLI able to call an external denoiser over a PNG bridge.
"""

from .config import EnhanceConfig
from .degrade import DegradeSpec, add_gaussian_noise, darken, synthesize
from .enhancement import (BoostConfig, GammaConfig, adaptive_gamma_map,
                          adjust_illumination, detail_boost, enhance,
                          guided_filter)
from .illumination import (IlluminationProblem, SolverError, SolverTrace,
                           coarse_illumination, hard_threshold, objective,
                           pfbs_step, refine_illumination, rtv_prox)
from .image import (hsv_to_rgb, load_pfm, load_png, luminance, rgb_to_hsv,
                    save_pfm, save_png)
from .metrics import QualityReport, evaluate_corpus, loe, psnr, ssim
from .ops import box_mean, gaussian_convolve, gradient, gradient_transpose

__all__ = [
    "EnhanceConfig", "DegradeSpec", "add_gaussian_noise", "darken",
    "synthesize", "BoostConfig", "GammaConfig", "adaptive_gamma_map",
    "adjust_illumination", "detail_boost", "enhance", "guided_filter",
    "IlluminationProblem", "SolverError", "SolverTrace",
    "coarse_illumination", "hard_threshold", "objective", "pfbs_step",
    "refine_illumination", "rtv_prox", "hsv_to_rgb", "load_pfm", "load_png",
    "luminance", "rgb_to_hsv", "save_pfm", "save_png", "QualityReport",
    "evaluate_corpus", "loe", "psnr", "ssim", "box_mean",
    "gaussian_convolve", "gradient", "gradient_transpose",
]

__version__ = "0.1.0"
