"""Command line: denoise one PNG (bridge contract) or train a checkpoint.

`denoise` reads a 16-bit (or 8-bit) RGB PNG, runs the blind denoiser, and
writes a 16-bit PNG of identical dimensions. Exit status 0 on success, 2 on
any failure (missing checkpoint, unreadable image, bad arguments at runtime).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import torch

from .pngio import read_png, write_png
from .train import TrainSpec, load_checkpoint, train


def _cmd_denoise(args) -> int:
    ckpt = Path(args.checkpoint)
    if not ckpt.is_file():
        print(f"error: checkpoint not found: {ckpt}", file=sys.stderr)
        return 2
    try:
        model = load_checkpoint(ckpt)
        image = read_png(args.input)
        tensor = torch.from_numpy(image.transpose(2, 0, 1)).float().unsqueeze(0)
        with torch.no_grad():
            output, _ = model(tensor)
        result = output.squeeze(0).clamp(0.0, 1.0).numpy().transpose(1, 2, 0)
        write_png(result.astype(np.float64), args.output, depth=16)
    except (IOError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def _cmd_train(args) -> int:
    spec = TrainSpec.desk(
        epochs=args.epochs,
        patches_per_epoch=args.patches_per_epoch,
        patch_size=args.patch,
        batch_size=args.batch,
        base_channels=args.base_channels,
        seed=args.seed,
    )
    try:
        train(args.data, args.out, spec=spec, image_limit=args.images)
    except (IOError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="blinddenoise")
    sub = parser.add_subparsers(dest="command", required=True)

    p_den = sub.add_parser("denoise", help="denoise one PNG (bridge contract)")
    p_den.add_argument("--checkpoint", required=True)
    p_den.add_argument("input")
    p_den.add_argument("output")
    p_den.set_defaults(func=_cmd_denoise)

    p_tr = sub.add_parser("train", help="train on a directory of clean PNGs")
    p_tr.add_argument("--data", required=True)
    p_tr.add_argument("--out", required=True)
    p_tr.add_argument("--epochs", type=int, default=20)
    p_tr.add_argument("--patches-per-epoch", type=int, default=2000)
    p_tr.add_argument("--patch", type=int, default=128)
    p_tr.add_argument("--batch", type=int, default=8)
    p_tr.add_argument("--images", type=int, default=50,
                      help="cap on the number of clean images used")
    p_tr.add_argument("--base-channels", type=int, default=32)
    p_tr.add_argument("--seed", type=int, default=0)
    p_tr.set_defaults(func=_cmd_train)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
