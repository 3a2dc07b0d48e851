"""Command line entry point: ``specaug {augment,eval,inspect,replay}``.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .corruption import METHODS, AugmentSpec
from .dct import dct2_forward, dct2_inverse
from .dwt import BASES, dwt2_forward, dwt2_inverse, max_levels
from .image import FormatError, load_image, save_image, save_labels
from .pipeline import Manifest, PolicyConfig, replay_output, run_augment, run_eval

LOGGER = logging.getLogger("specaug")

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2


def _pair(text: str, sep: str = ":", cast=float) -> tuple:
    parts = text.split(sep)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two values separated by {sep!r}, got {text!r}")
    try:
        return cast(parts[0]), cast(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _grid(text: str) -> tuple[int, int]:
    return _pair(text.lower(), "x", int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specaug", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    aug = sub.add_parser("augment", help="augment every image listed in a manifest")
    aug.add_argument("manifest", type=Path)
    aug.add_argument("--out", type=Path, required=True, help="output directory")
    aug.add_argument(
        "--method",
        default="dwt",
        help=f"stage or '+'-joined stages, e.g. dwt+affine+elastic; methods: {', '.join(METHODS)}",
    )
    aug.add_argument("--policy", type=Path, help="JSON policy file (overrides the stage flags)")
    aug.add_argument("--replications", "-R", type=int, default=5)
    aug.add_argument("--eta", type=float, default=0.005, help="maximum noise fraction")
    aug.add_argument("--seed", type=int, default=0)
    aug.add_argument("--diseased-only", action="store_true", help="only augment images with diseased patches")
    aug.add_argument("--wavelet", choices=sorted(BASES), default="haar")
    aug.add_argument("--levels", type=int, default=2)
    aug.add_argument("--dwt-details-only", action="store_true", help="leave the approximation band uncorrupted")
    aug.add_argument("--gamma-range", type=_pair, default=(0.8, 1.2), metavar="LO:HI")
    aug.add_argument("--rotation-max", type=float, default=10.0, metavar="DEG")
    aug.add_argument("--scale-range", type=_pair, default=(0.95, 1.05), metavar="LO:HI")
    aug.add_argument("--grid", type=_grid, default=(4, 4), metavar="RxC")
    aug.add_argument("--disp-range", type=_pair, default=(1.0, 20.0), metavar="MIN:MAX")
    aug.add_argument("--window", type=_pair, default=None, metavar="LO:HI", help="use --window=LO:HI for negative LO")
    aug.add_argument("--workers", type=int, default=1)

    ev = sub.add_parser("eval", help="score pixelwise predictions against patch labels")
    ev.add_argument("pred_manifest", type=Path)
    ev.add_argument("truth_manifest", type=Path)
    ev.add_argument("--hole-fill", action="store_true")
    ev.add_argument("--hole-fill-method", choices=("closing", "flood"), default="closing")
    ev.add_argument("--patch-threshold", type=float, default=0.5)
    ev.add_argument("--out", type=Path, help="CSV report path")

    ins = sub.add_parser("inspect", help="transform round-trip errors and coefficient statistics")
    ins.add_argument("image", type=Path)
    ins.add_argument("--wavelet", choices=sorted(BASES), default="haar")
    ins.add_argument("--levels", type=int, default=2)

    rep = sub.add_parser("replay", help="rebuild one output from an audit log")
    rep.add_argument("audit", type=Path)
    rep.add_argument("output", help="output file name as listed in the audit log")
    rep.add_argument("--out", type=Path, required=True)
    return parser


def policy_from_args(args) -> PolicyConfig:
    if args.policy is not None:
        return PolicyConfig.from_dict(json.loads(args.policy.read_text()))
    stages = []
    for method in args.method.split("+"):
        stages.append(
            AugmentSpec(
                method=method.strip(),
                replications=args.replications,
                eta=args.eta,
                seed=args.seed,
                wavelet=args.wavelet,
                levels=args.levels,
                details_only=args.dwt_details_only,
                gamma_range=args.gamma_range,
                window=args.window,
                rotation_max=args.rotation_max,
                scale_range=args.scale_range,
                grid=args.grid,
                disp_range=args.disp_range,
            )
        )
    return PolicyConfig(tuple(stages), "diseased_only" if args.diseased_only else "all", args.seed)


def cmd_augment(args) -> int:
    policy = policy_from_args(args)
    manifest = Manifest.load(args.manifest)
    summary = run_augment(manifest, policy, args.out, workers=args.workers)
    counts = summary["counts"]
    print(
        f"{counts['outputs']} outputs from {counts['eligible']}/{counts['images']} images "
        f"-> {args.out} (policy {summary['policy_hash']})"
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    report = run_eval(
        Manifest.load(args.pred_manifest),
        Manifest.load(args.truth_manifest),
        use_hole_fill=args.hole_fill,
        threshold=args.patch_threshold,
        hole_fill_method=args.hole_fill_method,
        out_csv=args.out,
    )
    for image_id, c in report.rows:
        print(f"{image_id}\ttp={c.tp} fp={c.fp} fn={c.fn} tn={c.tn} f1={c.f1:.5f}")
    print(f"mean F1 (diseased): {report.mean_f1:.5f}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    img = load_image(args.image)
    scale = max(1.0, float(np.abs(img).max()))
    comps = dct2_forward(img)
    energy = float(np.sum(img**2))
    print(f"image {img.shape[0]}x{img.shape[1]}  min={img.min():.6g} max={img.max():.6g} energy={energy:.6g}")
    err = float(np.abs(dct2_inverse(comps) - img).max())
    dc_share = comps[0, 0] ** 2 / energy if energy else 0.0
    print(f"dct  round-trip max|err|={err:.3e} (rel {err / scale:.3e})  DC energy share={dc_share:.4f}")
    if 2**args.levels <= min(img.shape):
        pyr = dwt2_forward(img, args.wavelet, args.levels)
        err = float(np.abs(dwt2_inverse(pyr) - img).max())
        print(f"dwt  {args.wavelet} L={args.levels} round-trip max|err|={err:.3e} (rel {err / scale:.3e})")
        names = ["approx"] + [f"L{pyr.levels - i}{k}" for i in range(pyr.levels) for k in "HVD"]
        for name, band in zip(names, pyr.bands()):
            share = float(np.sum(band**2)) / energy if energy else 0.0
            print(f"  {name:>7} {band.shape[0]:>4}x{band.shape[1]:<4} mean|c|={np.abs(band).mean():.4g} energy share={share:.4f}")
    else:
        print(f"dwt  skipped: at most {max_levels(img.shape)} levels fit this image")
    return EXIT_OK


def cmd_replay(args) -> int:
    img, labels = replay_output(args.audit, args.output)
    save_image(img, args.out, "rawf64")
    if labels is not None:
        save_labels(labels, args.out.with_suffix(".csv"))
    print(f"wrote {args.out}")
    return EXIT_OK


COMMANDS = {"augment": cmd_augment, "eval": cmd_eval, "inspect": cmd_inspect, "replay": cmd_replay}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (FormatError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
