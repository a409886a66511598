"""Command-line entry point: enhance, degrade and evaluate subcommands.

Exit status is 0 on success, 1 for usage errors and 2 for runtime failures.
An external denoiser can be attached through a subprocess bridge whose
contract is a 16-bit PNG in, a 16-bit PNG of identical size out.
"""

from __future__ import annotations

import argparse
import os
import shlex
import subprocess
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import DENOISE_MODES, EnhanceConfig, config_from_mapping, parse_config_file
from .degrade import DegradeSpec, synthesize
from .enhancement import enhance
from .image import clamp01, load_png, save_pfm, save_png
from .metrics import METRIC_NAMES, evaluate_corpus

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

BRIDGE_TIMEOUT_S = 300.0


class UsageError(Exception):
    pass


class BridgeError(RuntimeError):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; the contract reserves 2 for
    # runtime failures, so route usage problems through status 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def denoiser_bridge(image: np.ndarray, cmd_template: str,
                    timeout: float = BRIDGE_TIMEOUT_S) -> np.ndarray:
    """Round-trip an image through an external denoiser command.

    The template must contain {in} and {out} placeholders; the image is
    handed over as a 16-bit PNG and the result must come back as a 16-bit
    PNG with identical dimensions.
    """
    if "{in}" not in cmd_template or "{out}" not in cmd_template:
        raise BridgeError("denoiser command must contain {in} and {out} placeholders")
    with tempfile.TemporaryDirectory(prefix="lowlight-bridge-") as tmp:
        in_path = Path(tmp) / "in.png"
        out_path = Path(tmp) / "out.png"
        save_png(clamp01(image), in_path, depth=16)
        cmd = cmd_template.replace("{in}", str(in_path)).replace("{out}", str(out_path))
        try:
            proc = subprocess.run(shlex.split(cmd), capture_output=True,
                                  timeout=timeout)
        except subprocess.TimeoutExpired as exc:
            raise BridgeError(f"denoiser timed out after {timeout:.0f}s: {cmd}") from exc
        if proc.returncode != 0:
            tail = proc.stderr.decode(errors="replace").strip()[-500:]
            raise BridgeError(
                f"denoiser exited with status {proc.returncode}: {tail}",
                status=proc.returncode)
        try:
            result = load_png(out_path)
        except IOError as exc:
            raise BridgeError(f"denoiser produced no readable output: {exc}") from exc
    if result.shape != image.shape:
        raise BridgeError(
            f"denoiser changed dimensions: {image.shape} -> {result.shape}")
    return result


def _dump_intermediates(inter, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    maps = {
        "L_coarse": inter.coarse,
        "L_refined": inter.refined,
        "L_gamma": inter.adjusted,
        "R": inter.reflection,
        "R_boost": inter.boosted,
    }
    for name, data in maps.items():
        save_pfm(data, directory / f"{name}.pfm")
        preview = data if data.ndim == 3 else np.repeat(data[:, :, None], 3, axis=2)
        save_png(clamp01(preview), directory / f"{name}.png", depth=8)
    with open(directory / "objective.txt", "w") as fh:
        for value in inter.trace.objective_per_iter:
            fh.write(f"{value!r}\n")


def _enhance_one(in_path: Path, out_path: Path, cfg: EnhanceConfig,
                 dump_dir: Path | None,
                 bridge_timeout: float = BRIDGE_TIMEOUT_S) -> None:
    image = load_png(in_path)
    use_bridge = cfg.denoise_mode != "none" and cfg.denoiser_cmd
    if use_bridge and cfg.denoise_mode == "pre":
        image = denoiser_bridge(image, cfg.denoiser_cmd, timeout=bridge_timeout)
    hook = None
    if use_bridge and cfg.denoise_mode == "reflection":
        def hook(stack):
            return denoiser_bridge(clamp01(stack), cfg.denoiser_cmd,
                                   timeout=bridge_timeout)
    out, inter = enhance(image, cfg, reflection_hook=hook)
    if use_bridge and cfg.denoise_mode == "post":
        out = denoiser_bridge(out, cfg.denoiser_cmd, timeout=bridge_timeout)
    save_png(out, out_path, depth=8)
    if dump_dir is not None:
        _dump_intermediates(inter, dump_dir)


def _config_echo_lines(cfg: EnhanceConfig) -> list[str]:
    return [f"# config: {key}={value}" for key, value in cfg.to_items()]


def _build_config(args) -> EnhanceConfig:
    values: dict[str, str] = {}
    if args.config:
        values.update(parse_config_file(args.config))
    # Command-line flags win over the config file.
    for key in ("lambda1", "lambda2", "beta1", "beta2", "t", "gamma0", "kappa",
                "sigma", "outer_iters", "local_radius", "guide_radius",
                "guide_eps", "denoise_mode", "denoiser_cmd"):
        value = getattr(args, key, None)
        if value is not None:
            values[key] = str(value)
    try:
        return config_from_mapping(values)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _cmd_enhance(args) -> int:
    cfg = _build_config(args)
    dump_dir = Path(args.dump_intermediates) if args.dump_intermediates else None
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        inputs = [Path(p) for p in args.paths]
        jobs = max(1, args.jobs)
        tasks = [(p, out_dir / p.name) for p in inputs]
        # intermediates are per-image, so only a single-input batch dumps them
        batch_dump = dump_dir if len(tasks) == 1 else None
        if jobs == 1 or len(tasks) == 1:
            for src, dst in tasks:
                _enhance_one(src, dst, cfg, batch_dump, args.bridge_timeout)
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_enhance_one, src, dst, cfg, None,
                                       args.bridge_timeout)
                           for src, dst in tasks]
                for f in futures:
                    f.result()
        manifest = out_dir / "manifest.txt"
        with open(manifest, "w") as fh:
            fh.write("\n".join(_config_echo_lines(cfg)) + "\n")
            for src, dst in tasks:
                fh.write(f"{src.stem}\t{dst}\t{src}\n")
        return EXIT_OK
    if len(args.paths) != 2:
        raise UsageError("expected INPUT and OUTPUT paths (or --out-dir with inputs)")
    _enhance_one(Path(args.paths[0]), Path(args.paths[1]), cfg, dump_dir,
                 args.bridge_timeout)
    return EXIT_OK


def _cmd_degrade(args) -> int:
    spec = DegradeSpec(darken=args.darken, noise_var=args.noise_var,
                       seed=args.seed, noise_stage=args.noise_stage)
    src = Path(args.input)
    dst = Path(args.output)
    if src.is_dir():
        dst.mkdir(parents=True, exist_ok=True)
        rows = []
        for path in sorted(src.glob("*.png")):
            out_path = dst / path.name
            save_png(synthesize(load_png(path), spec), out_path, depth=8)
            rows.append(f"{path.stem}\t{out_path}\t{path}\t{path}")
        if not rows:
            raise UsageError(f"no PNG files found in {src}")
        with open(dst / "manifest.txt", "w") as fh:
            fh.write(f"# config: {spec.describe()}\n")
            fh.write("\n".join(rows) + "\n")
        return EXIT_OK
    save_png(synthesize(load_png(src), spec), dst, depth=8)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    metrics = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    for m in metrics:
        if m not in METRIC_NAMES:
            raise UsageError(f"unknown metric {m!r} (choose from {METRIC_NAMES})")
    if not metrics:
        raise UsageError("no metrics requested")
    manifest = Path(args.manifest)
    if not manifest.is_file():
        raise UsageError(f"manifest not found: {manifest}")
    report = evaluate_corpus(manifest, metrics, loe_reference=args.loe_reference)
    if not report.per_image and not report.errors:
        raise UsageError(f"manifest {manifest} lists no image pairs")
    sys.stdout.write(report.format_table())
    if args.out:
        report.write_csv(args.out)
    return EXIT_RUNTIME if report.errors else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lowlight",
                     description="Retinex low-light enhancement toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--seed", type=int, default=0, help="RNG seed")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="parallel workers for batch runs (default: CPU count)")
    common.add_argument("--dump-intermediates", metavar="DIR",
                        help="write pipeline intermediates (PFM + PNG previews)")

    p_enh = sub.add_parser("enhance", parents=[common],
                           help="enhance one image or a batch")
    p_enh.add_argument("paths", nargs="+",
                       help="INPUT OUTPUT, or inputs with --out-dir")
    p_enh.add_argument("--out-dir", help="write outputs (and manifest) here")
    for name in ("lambda1", "lambda2", "beta1", "beta2", "t", "gamma0",
                 "kappa", "sigma", "guide_eps"):
        p_enh.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    for name in ("outer_iters", "local_radius", "guide_radius"):
        p_enh.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int)
    p_enh.add_argument("--denoise-mode", dest="denoise_mode", choices=DENOISE_MODES)
    p_enh.add_argument("--denoiser-cmd", dest="denoiser_cmd",
                       help="command template with {in} and {out} placeholders")
    p_enh.add_argument("--bridge-timeout", dest="bridge_timeout", type=float,
                       default=BRIDGE_TIMEOUT_S,
                       help="denoiser bridge timeout in seconds")
    p_enh.set_defaults(func=_cmd_enhance)

    p_deg = sub.add_parser("degrade", parents=[common],
                           help="synthesize noisy low-light versions")
    p_deg.add_argument("input", help="clean PNG or directory of PNGs")
    p_deg.add_argument("output", help="output PNG or directory")
    p_deg.add_argument("--darken", type=float, default=0.1)
    p_deg.add_argument("--noise-var", dest="noise_var", type=float, default=25.0)
    p_deg.add_argument("--noise-stage", dest="noise_stage",
                       choices=("before_darken", "after_darken"),
                       default="before_darken")
    p_deg.set_defaults(func=_cmd_degrade)

    p_eval = sub.add_parser("evaluate", parents=[common],
                            help="score a manifest of image pairs")
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--metrics", default="psnr,ssim,loe")
    p_eval.add_argument("--out", help="CSV output path")
    p_eval.add_argument("--loe-reference", dest="loe_reference",
                        choices=("input", "reference"), default="input")
    p_eval.set_defaults(func=_cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BridgeError, IOError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
