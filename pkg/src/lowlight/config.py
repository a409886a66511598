"""Pipeline configuration and the flat key=value config-file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

DENOISE_MODES = ("none", "pre", "reflection", "post")


@dataclass
class EnhanceConfig:
    """Every tunable of the enhancement pipeline, with working defaults."""

    lambda1: float = 3.0
    lambda2: float = 1.0
    beta1: float = 1.0
    beta2: float = 1.0
    t: float = 0.5
    gamma0: float = 1.429
    kappa: float = 1.3
    sigma: float = 3.0
    eps_rtv: float = 1e-3
    eps_s: float = 1e-3
    outer_iters: int = 4
    inner_iters: int = 1
    tol: float = 1e-3
    floor: float = 1e-4
    local_radius: int = 7
    guide_radius: int = 15
    guide_eps: float = 1e-5
    denoise_mode: str = "post"
    denoiser_cmd: str | None = None

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "beta1", "beta2", "t", "sigma",
                     "eps_rtv", "eps_s", "kappa", "guide_eps", "floor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.gamma0 <= 1:
            raise ValueError("gamma0 must exceed 1")
        if self.local_radius < 0 or self.guide_radius < 0:
            raise ValueError("radii must be non-negative")
        if self.outer_iters < 1 or self.inner_iters < 1:
            raise ValueError("iteration counts must be >= 1")
        if self.denoise_mode not in DENOISE_MODES:
            raise ValueError(
                f"denoise_mode must be one of {DENOISE_MODES}, got {self.denoise_mode!r}")

    def replace(self, **kwargs) -> "EnhanceConfig":
        return dataclasses.replace(self, **kwargs)

    def to_items(self) -> list[tuple[str, str]]:
        items = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            items.append((f.name, "" if value is None else str(value)))
        return items


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read a flat key=value file; '#' starts a comment, blank lines skipped."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def config_from_mapping(values: dict[str, str],
                        base: EnhanceConfig | None = None) -> EnhanceConfig:
    """Build a config from string values, converting by field type."""
    base = base or EnhanceConfig()
    types = {f.name: f.type for f in dataclasses.fields(EnhanceConfig)}
    kwargs = {}
    for key, raw in values.items():
        if key not in types:
            raise ValueError(f"unknown config key {key!r}")
        t = types[key]
        if key == "denoiser_cmd":
            kwargs[key] = raw or None
        elif t == "int":
            kwargs[key] = int(raw)
        elif t == "float":
            kwargs[key] = float(raw)
        else:
            kwargs[key] = raw
    return base.replace(**kwargs)
