"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 numerical failure.
Errors go to stderr as a single line starting with ``error:``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from tnle.errors import NumericalError, ParseError
from tnle.io import (
    decode_image,
    encode_image,
    read_bank,
    read_manifest,
    write_bank,
    write_metrics,
    write_results,
)
from tnle.model import GdConfig
from tnle.patching import TextureSelector, covariance_set, extract_patches
from tnle.pipeline import EstimationParams, benchmark, estimate_noise, train_bank
from tnle.spectral import bdiag_spectrum
from tnle.stats import NoiseSpec, awgn

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _sigma_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not vals or any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("noise levels must be a non-empty list of values >= 0")
    return vals


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _selector(args) -> TextureSelector:
    if getattr(args, "weak_texture", False):
        return TextureSelector(delta=args.delta, policy="weak-texture")
    return TextureSelector()


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tnle", description="Color image noise level estimation from T-product covariance spectra.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="fit a coefficient bank on a manifest of clean images")
    t.add_argument("--manifest", required=True)
    t.add_argument("--sigmas", required=True, type=_sigma_list)
    t.add_argument("--out", required=True)
    t.add_argument("--window", type=int, default=7)
    t.add_argument("--n-eigs", type=int, default=8)
    t.add_argument("--alpha", type=float, default=GdConfig.alpha)
    t.add_argument("--epsilon", type=float, default=GdConfig.epsilon)
    t.add_argument("--max-iters", type=int, default=GdConfig.max_iters)
    t.add_argument("--seed", type=_seed, default=0)
    t.add_argument("--pooled", action="store_true")
    t.add_argument("--weak-texture", action="store_true")
    t.add_argument("--delta", type=float, default=0.99)

    e = sub.add_parser("estimate", help="estimate the noise level of one image")
    e.add_argument("image")
    e.add_argument("--bank", required=True)
    e.add_argument("--mode", choices=("nearest", "pooled"), default="nearest")
    e.add_argument("--json", action="store_true")
    e.add_argument("--weak-texture", action="store_true")
    e.add_argument("--delta", type=float, default=0.99)

    i = sub.add_parser("inject-noise", help="add seeded white Gaussian noise and write a PPM")
    i.add_argument("image")
    i.add_argument("--sigma", required=True, type=float)
    i.add_argument("--seed", required=True, type=_seed)
    i.add_argument("--out", required=True)

    s = sub.add_parser("spectrum", help="dump the bdiag covariance spectrum, one value per line")
    s.add_argument("image")
    s.add_argument("--window", type=int, default=7)
    s.add_argument("--out", required=True)

    b = sub.add_parser("benchmark", help="noise-injection benchmark against the min-eigenvalue baseline")
    b.add_argument("--manifest", required=True)
    b.add_argument("--sigmas", required=True, type=_sigma_list)
    b.add_argument("--bank", required=True)
    b.add_argument("--seed", required=True, type=_seed)
    b.add_argument("--out", required=True)
    b.add_argument("--metrics")
    b.add_argument("--mode", choices=("nearest", "pooled"), default="nearest")
    return p


def _load_images(manifest_path):
    manifest = read_manifest(manifest_path)
    if not manifest.entries:
        raise ParseError("manifest lists no images", manifest_path)
    return list(manifest.entries), [decode_image(p) for p in manifest.paths()]


def cmd_train(args) -> int:
    _, images = _load_images(args.manifest)
    params = EstimationParams(M1=args.window, n=args.n_eigs, selection=_selector(args))
    cfg = GdConfig(alpha=args.alpha, epsilon=args.epsilon, max_iters=args.max_iters)
    bank = train_bank(images, args.sigmas, params, cfg, seed=args.seed, pooled=args.pooled)
    write_bank(bank, args.out, comment=f"trained on {len(images)} images from {Path(args.manifest).name}, seed {args.seed}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    bank = read_bank(args.bank)
    img = decode_image(args.image)
    params = EstimationParams(M1=bank.M1, n=bank.n, selection=_selector(args), mode=args.mode)
    rep = estimate_noise(img, bank, params)
    if args.json:
        print(json.dumps(rep.to_json(), sort_keys=True))
    else:
        print(f"sigma_hat={rep.sigma_hat:.10g}")
    return EXIT_OK


def cmd_inject(args) -> int:
    img = decode_image(args.image)
    encode_image(awgn(img, NoiseSpec(args.sigma, args.seed)), args.out)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    img = decode_image(args.image)
    sp = bdiag_spectrum(covariance_set(extract_patches(img, args.window)))
    Path(args.out).write_text("".join(f"{v!r}\n" for v in map(float, sp.values)), encoding="utf-8")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    ids, images = _load_images(args.manifest)
    bank = read_bank(args.bank)
    params = EstimationParams(M1=bank.M1, n=bank.n, mode=args.mode)
    result = benchmark(images, args.sigmas, bank, params, seed=args.seed, image_ids=ids)
    write_results(result.rows, args.out)
    if args.metrics:
        write_metrics(result.metrics, args.metrics)
    for err in result.errors:
        print(f"warning: {err}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "estimate": cmd_estimate,
    "inject-noise": cmd_inject,
    "spectrum": cmd_spectrum,
    "benchmark": cmd_benchmark,
}


def _one_line(exc: BaseException) -> str:
    return " ".join(str(exc).split()) or type(exc).__name__


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: usage: {_one_line(exc)}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"error: numerical: {_one_line(exc)}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParseError, OSError, ValueError, IndexError) as exc:
        print(f"error: input: {_one_line(exc)}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
