"""Command-line entry point.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import ImageIOError, InvalidInput, InvalidParameter, PixelveilError
from .image import load_image, save_image
from .metrics import mse, ssim_full
from .pixel import PixelMechanismConfig, allocate_budget, exponential_obfuscate, laplace_pixel_obfuscate, laplace_scale


class UsageError(Exception):
    pass


def _emit(obj):
    print(json.dumps(obj, sort_keys=True))


def _positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise UsageError(f"{name} must be > 0, got {value}")


def _seed(value):
    if value < 0 or value >= 2**64:
        raise UsageError(f"--seed must be in [0, 2**64), got {value}")


def _canonical_mechanism(name):
    return {"exp": "exponential", "exponential": "exponential", "laplace": "laplace"}[name]


# --- obfuscate -------------------------------------------------------------------


def cmd_obfuscate(args):
    _positive("--epsilon", args.epsilon)
    _seed(args.seed)
    if args.pixelize < 1:
        raise UsageError(f"--pixelize must be >= 1, got {args.pixelize}")
    if args.window < 1:
        raise UsageError(f"--window must be >= 1, got {args.window}")
    if args.levels < 2 or args.levels > 256:
        raise UsageError(f"--levels must be in [2, 256], got {args.levels}")
    if args.sensitive_pixels is not None and args.sensitive_pixels < 1:
        raise UsageError(f"--sensitive-pixels must be >= 1, got {args.sensitive_pixels}")
    try:
        cfg = PixelMechanismConfig(
            epsilon=args.epsilon, b=args.pixelize, p=args.window, k_prime=args.levels,
            sensitive_window=args.sensitive_pixels, blur=args.blur, seed=args.seed,
        )
    except InvalidParameter as exc:
        raise UsageError(str(exc)) from None

    img = load_image(args.input)
    mech = _canonical_mechanism(args.mechanism)
    if mech == "exponential":
        out = exponential_obfuscate(img, cfg)
        ledger = allocate_budget(img.width, img.height, img.channels, cfg).to_dict()
    else:
        out = laplace_pixel_obfuscate(img, cfg)
        scale = laplace_scale(cfg, img.channels, img.width * img.height)
        ledger = {
            "epsilon": cfg.epsilon,
            "b": cfg.b,
            "channels": img.channels,
            "sensitive_window": cfg.sensitive_window or img.width * img.height,
            "scale": scale,
            "total": cfg.epsilon,
        }
    save_image(out, args.output)
    ledger["mechanism"] = mech
    ledger["blur"] = cfg.blur
    _emit(ledger)
    return 0


# --- metrics ----------------------------------------------------------------------


def cmd_metrics(args):
    a = load_image(args.a)
    b = load_image(args.b)
    if a.shape != b.shape:
        print(
            f"error: image dimensions differ: {a.width}x{a.height}x{a.channels} vs {b.width}x{b.height}x{b.channels}",
            file=sys.stderr,
        )
        return 1
    want_ssim = args.ssim or not (args.ssim or args.mse)
    want_mse = args.mse or not (args.ssim or args.mse)
    out = {}
    if want_ssim:
        out["ssim"] = ssim_full(a, b)
    if want_mse:
        out["mse"] = mse(a, b)
    _emit(out)
    return 0


# --- sweep ---------------------------------------------------------------------------


def cmd_sweep(args):
    from .sweep import SweepSpec, logspace_epsilons, run_sweep, write_csv

    _seed(args.seed)
    if args.reps < 1:
        raise UsageError(f"--reps must be >= 1, got {args.reps}")
    if args.epsilon and args.eps_logspace:
        raise UsageError("give either --epsilon or --eps-logspace, not both")
    if args.epsilon:
        epsilons = args.epsilon
    elif args.eps_logspace:
        lo, hi, count = args.eps_logspace
        try:
            epsilons = logspace_epsilons(lo, hi, int(count))
        except InvalidParameter as exc:
            raise UsageError(f"--eps-logspace: {exc}") from None
    else:
        raise UsageError("one of --epsilon or --eps-logspace is required")
    for e in epsilons:
        _positive("--epsilon", e)
    for b in args.pixelize:
        if b < 1:
            raise UsageError(f"--pixelize must be >= 1, got {b}")
    blurs = {"off": (False,), "on": (True,), "both": (False, True)}[args.blur]
    images = [(Path(p).stem, load_image(p)) for p in args.images]
    ids = [i for i, _ in images]
    if len(set(ids)) != len(ids):
        images = [(str(p), img) for p, (_, img) in zip(args.images, images)]
    try:
        spec = SweepSpec(
            images=images,
            mechanisms=tuple(sorted({_canonical_mechanism(m) for m in args.mechanism})),
            epsilons=tuple(epsilons),
            bs=tuple(args.pixelize),
            blurs=blurs,
            repetitions=args.reps,
            seed=args.seed,
            p=args.window,
            k_prime=args.levels,
            sensitive_window=args.sensitive_pixels,
        )
    except InvalidParameter as exc:
        raise UsageError(str(exc)) from None
    result = run_sweep(spec, workers=args.workers)
    with open(args.out, "w", newline="") as fh:
        write_csv(result.records, fh, timing=not args.no_timing)
    for err in result.failures:
        print(f"error: {err}", file=sys.stderr)
    print(json.dumps({"rows": len(result.records), "failed_cells": len(result.failures), "out": str(args.out)}))
    return 0 if result.ok else 1


# --- vectors ----------------------------------------------------------------------------


def _read_vectors(path):
    from .vector import read_vector_file

    try:
        return read_vector_file(path)
    except InvalidInput as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_vector_obfuscate(args):
    from .vector import bound_table, laplace_vector_obfuscate, vector_document

    _positive("--epsilon", args.epsilon)
    _seed(args.seed)
    vectors, ids = _read_vectors(args.input)
    # one independent stream per vector
    out = [laplace_vector_obfuscate(v, args.epsilon, [args.seed, i]) for i, v in enumerate(vectors)]
    with open(args.output, "w") as fh:
        json.dump(vector_document(out, ids), fh, indent=1)
        fh.write("\n")
    _emit({"epsilon": args.epsilon, "vectors": len(out), "bounds": bound_table(args.epsilon)})
    return 0


def cmd_vector_ksame(args):
    from .vector import ksame_obfuscate, write_vector_file

    if args.k < 1:
        raise UsageError(f"--k must be >= 1, got {args.k}")
    vectors, ids = _read_vectors(args.input)
    if len(vectors) < args.k:
        raise UsageError(f"--k {args.k} exceeds the number of vectors ({len(vectors)})")
    out = ksame_obfuscate(vectors, args.k)
    write_vector_file(args.output, out, ids)
    _emit({"k": args.k, "vectors": len(out), "distinct": len({tuple(v.values) for v in out})})
    return 0


def cmd_vector_attack(args):
    from .vector import intersection_attack, ksame_cluster

    if args.k < 1:
        raise UsageError(f"--k must be >= 1, got {args.k}")
    va, ids_a = _read_vectors(args.a)
    vb, ids_b = _read_vectors(args.b)
    with open(args.ids) as fh:
        try:
            shared = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.ids}: invalid JSON ({exc})") from None
    if isinstance(shared, dict):
        shared = shared.get("ids")
    if not isinstance(shared, list) or not shared:
        raise UsageError(f"{args.ids}: field 'ids' must be a non-empty list of identities")
    for n, vecs in (("A", va), ("B", vb)):
        if len(vecs) < args.k:
            raise UsageError(f"gallery {n} has fewer than --k {args.k} vectors")
    try:
        ra = ksame_cluster(va, args.k, ids_a)
        rb = ksame_cluster(vb, args.k, ids_b)
        report = intersection_attack(ra, rb, shared, args.k)
    except InvalidInput as exc:
        raise UsageError(str(exc)) from None
    _emit(report.to_dict())
    return 0


def cmd_approx(args):
    from .lad import approximate_identity

    gallery, _ = _read_vectors(args.gallery)
    targets, _ = _read_vectors(args.target)
    if not gallery:
        raise UsageError(f"{args.gallery}: field 'vectors' is empty")
    if len(targets) != 1:
        raise UsageError(f"{args.target}: field 'vectors' must hold exactly one target vector")
    if len(targets[0]) != len(gallery[0]):
        raise UsageError("field 'vectors': target and gallery dimensions differ")
    g = np.stack([v.values for v in gallery])
    weights, synth, objective = approximate_identity(g, targets[0].values)
    doc = {"weights": weights.tolist(), "objective": objective, "status": "optimal", "synthesized": synth.tolist()}
    with open(args.output, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    _emit({"objective": objective, "status": "optimal"})
    return 0


# --- parser ---------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pixelveil", description="Differentially private image obfuscation")
    sub = parser.add_subparsers(dest="command", required=True)

    def mech_flags(p, multi=False):
        kw = dict(nargs="+", default=["exp"]) if multi else dict(default="exp")
        p.add_argument("--mechanism", choices=["exp", "exponential", "laplace"], **kw)
        p.add_argument("--window", type=int, default=3, help="exponential window side p")
        p.add_argument("--levels", type=int, default=4, help="candidate intensity levels k'")
        p.add_argument("--sensitive-pixels", type=int, default=None, help="Laplace adjacency pixel count n")

    p = sub.add_parser("obfuscate", help="obfuscate one image")
    mech_flags(p)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--pixelize", type=int, default=1)
    p.add_argument("--blur", action="store_true")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_obfuscate)

    p = sub.add_parser("metrics", help="SSIM and/or MSE between two images")
    p.add_argument("--ssim", action="store_true")
    p.add_argument("--mse", action="store_true")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sweep", help="utility sweep over a parameter grid, written as CSV")
    mech_flags(p, multi=True)
    p.add_argument("--epsilon", type=float, nargs="+")
    p.add_argument("--eps-logspace", type=float, nargs=3, metavar=("LO", "HI", "N"))
    p.add_argument("--pixelize", type=int, nargs="+", default=[1])
    p.add_argument("--blur", choices=["off", "on", "both"], default="off")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=None, help="cell-level threads (default PIXELVEIL_THREADS or CPU count)")
    p.add_argument("--no-timing", action="store_true", help="leave the ms column empty for byte-stable output")
    p.add_argument("--out", required=True)
    p.add_argument("images", nargs="+")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("vector", help="bounded-vector mechanisms")
    vsub = p.add_subparsers(dest="vector_command", required=True)
    q = vsub.add_parser("obfuscate", help="Laplace mechanism on every vector")
    q.add_argument("--epsilon", type=float, required=True)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("input")
    q.add_argument("output")
    q.set_defaults(func=cmd_vector_obfuscate)
    q = vsub.add_parser("ksame", help="k-same cluster averaging")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("input")
    q.add_argument("output")
    q.set_defaults(func=cmd_vector_ksame)
    q = vsub.add_parser("attack", help="intersection attack across two k-same releases")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("a")
    q.add_argument("b")
    q.add_argument("ids")
    q.set_defaults(func=cmd_vector_attack)

    p = sub.add_parser("approx", help="LAD approximation of a target from a gallery")
    p.add_argument("--gallery", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("output")
    p.set_defaults(func=cmd_approx)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (ImageIOError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PixelveilError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
